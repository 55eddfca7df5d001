"""Galerkin integration over pairs of straight panels.

All panel bases are affine in the panel parameter ``s in [0, 1]`` and are
passed as coefficient rows ``(c0, c1)`` meaning ``c0 + c1 s``.

Three cases are distinguished:

* disjoint panels: tensor Gauss-Legendre, bisecting both panels (up to four
  levels) while their distance is below twice the longer length;
* panels sharing one vertex: the square is split along its diagonal and each
  triangle is mapped by a Duffy substitution.  Every ``log s`` term is
  integrated in closed form and the remaining smooth integrand by Gauss in
  the angular variable;
* identical panels: closed-form moments of ``log|s - t|`` and of the
  principal value ``1/(t - s)``.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "P0_BASIS",
    "P1_BASIS",
    "LOG_MOMENTS",
    "PV_MOMENTS",
    "gauss01",
    "panel_integrals",
    "singular_edge_quadrature",
    "brute_force_pair",
]

P0_BASIS = np.array([[1.0, 0.0]])
P1_BASIS = np.array([[1.0, -1.0], [0.0, 1.0]])

#: ``int_0^1 int_0^1 s^a t^b log|s - t| ds dt``
LOG_MOMENTS = np.array([[-1.5, -0.75], [-0.75, -7.0 / 16.0]])
#: principal value of ``int_0^1 int_0^1 s^a t^b / (t - s) ds dt``
PV_MOMENTS = np.array([[0.0, 0.5], [-0.5, 0.0]])
#: ``int_0^1 int_0^1 s^a t^b ds dt``
_PLAIN_MOMENTS = np.array([[1.0, 0.5], [0.5, 0.25]])

FAR_RATIO = 2.0
MAX_LEVEL = 4
REGULAR_ORDER = 8
DUFFY_ORDER = 20


@lru_cache(maxsize=None)
def gauss01(n: int):
    """Gauss-Legendre nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = 0.5 * (x + 1), 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _outward_normals(d):
    L = np.linalg.norm(d, axis=1)
    return np.stack([d[:, 1], -d[:, 0]], axis=1) / L[:, None], L


def _basis_values(basis, s):
    # basis (nb, 2), s (..., q) -> (..., nb, q)
    return basis[:, 0, None] + basis[:, 1, None] * s[..., None, :]


def _segment_distance(p0, p1, q0, q1):
    def point_seg(p, a, b):
        ab = b - a
        t = np.clip(np.einsum("ni,ni->n", p - a, ab) / np.einsum("ni,ni->n", ab, ab), 0, 1)
        return np.linalg.norm(a + t[:, None] * ab - p, axis=1)

    return np.minimum.reduce([point_seg(p0, q0, q1), point_seg(p1, q0, q1),
                              point_seg(q0, p0, p1), point_seg(q1, p0, p1)])


def _gauss_block(kernel, X0, Xd, Y0, Yd, ny, s0, s1, t0, t1, test, trial, order):
    g, w = gauss01(order)
    s = s0[:, None] + (s1 - s0)[:, None] * g
    t = t0[:, None] + (t1 - t0)[:, None] * g
    x = X0[:, None, :] + s[..., None] * Xd[:, None, :]
    y = Y0[:, None, :] + t[..., None] * Yd[:, None, :]
    z = y[:, None, :, :] - x[:, :, None, :]
    P, q = len(X0), order
    n = np.broadcast_to(ny[:, None, None, :], (P, q, q, 2))
    k = kernel(z.reshape(-1, 2), n.reshape(-1, 2)).reshape(P, q, q, kernel.size, kernel.size)
    jac = (s1 - s0) * (t1 - t0) * np.linalg.norm(Xd, axis=1) * np.linalg.norm(Yd, axis=1)
    phi = _basis_values(test, s) * w
    psi = _basis_values(trial, t) * w
    return np.einsum("p,pai,pbj,pijkl->pabkl", jac, phi, psi, k, optimize=True)


def _disjoint(kernel, X0, Xd, Y0, Yd, ny, test, trial):
    P = len(X0)
    out = np.zeros((P, len(test), len(trial), kernel.size, kernel.size))
    idx = np.arange(P)
    s0, s1 = np.zeros(P), np.ones(P)
    t0, t1 = np.zeros(P), np.ones(P)
    for level in range(MAX_LEVEL + 1):
        if not len(idx):
            break
        a0 = X0[idx] + s0[:, None] * Xd[idx]
        a1 = X0[idx] + s1[:, None] * Xd[idx]
        b0 = Y0[idx] + t0[:, None] * Yd[idx]
        b1 = Y0[idx] + t1[:, None] * Yd[idx]
        lmax = np.maximum(np.linalg.norm(a1 - a0, axis=1), np.linalg.norm(b1 - b0, axis=1))
        far = _segment_distance(a0, a1, b0, b1) >= FAR_RATIO * lmax
        if level == MAX_LEVEL:
            far[:] = True
        order = REGULAR_ORDER if level < MAX_LEVEL else 2 * REGULAR_ORDER
        f = np.flatnonzero(far)
        if len(f):
            i = idx[f]
            vals = _gauss_block(kernel, X0[i], Xd[i], Y0[i], Yd[i], ny[i],
                                s0[f], s1[f], t0[f], t1[f], test, trial, order)
            np.add.at(out, i, vals)
        nr = np.flatnonzero(~far)
        if not len(nr):
            break
        sm = 0.5 * (s0[nr] + s1[nr])
        tm = 0.5 * (t0[nr] + t1[nr])
        idx = np.tile(idx[nr], 4)
        s0, s1 = np.concatenate([s0[nr], s0[nr], sm, sm]), np.concatenate([sm, sm, s1[nr], s1[nr]])
        t0, t1 = np.concatenate([t0[nr], tm, t0[nr], tm]), np.concatenate([tm, t1[nr], tm, t1[nr]])
    return out


def _identical(kernel, X0, Xd, ny, test, trial):
    L = np.linalg.norm(Xd, axis=1)
    that = Xd / L[:, None]
    moments = PV_MOMENTS if kernel.degree == -1 else LOG_MOMENTS
    sing = np.einsum("ax,by,xy->ab", test, trial, moments)
    if kernel.degree == -1:
        F = kernel.angular(that, ny)
        return np.einsum("p,ab,pkl->pabkl", L, sing, F)
    plain = np.einsum("ax,by,xy->ab", test, trial, _PLAIN_MOMENTS)
    C = kernel.log_coef
    h = kernel.angular(that, ny)
    val = (np.einsum("ab,kl->abkl", sing, C)[None]
           + np.einsum("p,ab,kl->pabkl", np.log(L), plain, C)
           + np.einsum("ab,pkl->pabkl", plain, h))
    return (L**2)[:, None, None, None, None] * val


def _reorient(basis, flip):
    # c0 + c1 s with s = 1 - s'  ->  (c0 + c1) - c1 s'
    b = np.broadcast_to(basis, flip.shape + basis.shape).copy()
    b[flip, :, 0] = basis[:, 0] + basis[:, 1]
    b[flip, :, 1] = -basis[:, 1]
    return b


def _touching(kernel, a, b, ny, alpha, beta):
    """Panels ``x = P + s a`` and ``y = P + t b`` with per-pair bases ``alpha``, ``beta``."""
    w, wt = gauss01(DUFFY_ORDER)
    a0, a1 = alpha[:, :, None, 0], alpha[:, :, None, 1]  # (P, na, 1)
    b0, b1 = beta[:, None, :, 0], beta[:, None, :, 1]    # (P, 1, nb)
    jac = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
    uI = w[None, :, None] * b[:, None, :] - a[:, None, :]   # (P, q, 2)
    uII = b[:, None, :] - w[None, :, None] * a[:, None, :]
    P, q = len(a), len(w)
    out = 0.0
    for u, region in ((uI, 1), (uII, 2)):
        r = np.linalg.norm(u, axis=2)
        uh = (u / r[..., None]).reshape(-1, 2)
        n = np.broadcast_to(ny[:, None, :], (P, q, 2)).reshape(-1, 2)
        ang = kernel.angular(uh, n).reshape(P, q, kernel.size, kernel.size)
        W = w[None, None, None, :]
        if kernel.degree == -1:
            if region == 1:
                p = (a0 * b0)[..., None] + ((a0 * b1)[..., None] * W + (a1 * b0)[..., None]) / 2 + (a1 * b1)[..., None] * W / 3
            else:
                p = (a0 * b0)[..., None] + ((a0 * b1)[..., None] + (a1 * b0)[..., None] * W) / 2 + (a1 * b1)[..., None] * W / 3
            out = out + np.einsum("pabq,q,pqkl->pabkl", p, wt, ang / r[..., None, None])
        else:
            if region == 1:
                logs = -(a0 * b0 / 4 + (a0 * b1 / 2 + a1 * b0) / 9 + a1 * b1 / 32)
                qw = (a0 * b0 / 2)[..., None] + ((a0 * b1)[..., None] * W + (a1 * b0)[..., None]) / 3 + (a1 * b1)[..., None] * W / 4
            else:
                logs = -(a0 * b0 / 4 + (a1 * b0 / 2 + a0 * b1) / 9 + a1 * b1 / 32)
                qw = (a0 * b0 / 2)[..., None] + ((a0 * b1)[..., None] + (a1 * b0)[..., None] * W) / 3 + (a1 * b1)[..., None] * W / 4
            scal = logs + np.einsum("pabq,q,pq->pab", qw, wt, np.log(r))
            out = (out + np.einsum("pab,kl->pabkl", scal, kernel.log_coef)
                   + np.einsum("pabq,q,pqkl->pabkl", qw, wt, ang))
    return jac[:, None, None, None, None] * out


def panel_integrals(kernel, nodes, ex, ey, test=P0_BASIS, trial=P0_BASIS) -> np.ndarray:
    """Integrate ``phi_a(x) psi_b(y) k(x, y)`` over panel pairs.

    Parameters
    ----------
    kernel : kernel object from :mod:`lamecouple.bem.kernels`
    nodes : ndarray, shape (n, 2)
    ex, ey : int arrays, shape (P, 2)
        Start and end node of the test (x) and trial (y) panels.  Normals of
        the trial panels point to the right of their direction.
    test, trial : ndarray, shape (nb, 2)
        Affine basis coefficients.

    Returns
    -------
    ndarray, shape (P, n_test, n_trial, k, k)
    """
    ex = np.atleast_2d(ex)
    ey = np.atleast_2d(ey)
    X0, Y0 = nodes[ex[:, 0]], nodes[ey[:, 0]]
    Xd, Yd = nodes[ex[:, 1]] - X0, nodes[ey[:, 1]] - Y0
    ny, _ = _outward_normals(Yd)
    P = len(ex)
    out = np.empty((P, len(test), len(trial), kernel.size, kernel.size))

    same = (ex[:, 0] == ey[:, 0]) & (ex[:, 1] == ey[:, 1])
    m = ex[:, :, None] == ey[:, None, :]  # (P, 2, 2) shared-vertex pattern
    shared = m.sum(axis=(1, 2))
    touch = shared == 1
    if np.any((shared > 1) & ~same):
        raise ValueError("distinct panels sharing both endpoints")
    disj = ~(same | touch)

    if np.any(same):
        out[same] = _identical(kernel, X0[same], Xd[same], ny[same], test, trial)
    if np.any(disj):
        out[disj] = _disjoint(kernel, X0[disj], Xd[disj], Y0[disj], Yd[disj], ny[disj], test, trial)
    if np.any(touch):
        t = np.flatnonzero(touch)
        mt = m[t]
        ix = np.argmax(mt.any(axis=2), axis=1)  # local index of shared vertex on x-panel
        iy = np.argmax(mt.any(axis=1), axis=1)
        flipx, flipy = ix == 1, iy == 1
        a = np.where(flipx[:, None], -Xd[t], Xd[t])
        b = np.where(flipy[:, None], -Yd[t], Yd[t])
        out[t] = _touching(kernel, a, b, ny[t], _reorient(test, flipx), _reorient(trial, flipy))
    return out


def singular_edge_quadrature(kernel, edge_a, edge_b, test=P0_BASIS, trial=P0_BASIS, atol=1e-14):
    """Galerkin integral over one pair of straight edges given by their endpoints.

    Shared endpoints are detected geometrically.  Returns an array of shape
    ``(n_test, n_trial, k, k)``; e.g. the scalar log kernel on identical
    unit panels gives ``-3/2`` in entry ``[0, 0, 0, 0]``.
    """
    pts = np.vstack([np.asarray(edge_a, float), np.asarray(edge_b, float)])
    ids = list(range(4))
    for j in (2, 3):
        for i in (0, 1):
            if np.linalg.norm(pts[j] - pts[i]) <= atol:
                ids[j] = i
    return panel_integrals(kernel, pts, np.array([[ids[0], ids[1]]]), np.array([[ids[2], ids[3]]]),
                           test, trial)[0]


def brute_force_pair(kernel, edge_a, edge_b, order: int = 32, test=P0_BASIS, trial=P0_BASIS):
    """Plain tensor Gauss rule on a pair of disjoint edges (reference values)."""
    ea, eb = np.asarray(edge_a, float), np.asarray(edge_b, float)
    Xd, Yd = (ea[1] - ea[0])[None], (eb[1] - eb[0])[None]
    ny, _ = _outward_normals(Yd)
    one, zero = np.ones(1), np.zeros(1)
    return _gauss_block(kernel, ea[:1], Xd, eb[:1], Yd, ny, zero, one, zero, one, test, trial, order)[0]
