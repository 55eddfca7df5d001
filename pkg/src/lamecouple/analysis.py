"""Executable certificates for the coupling theory and convergence studies.

Every check returns a :class:`VerificationReport` with the scalars it
certifies and the tolerances it used, so that reports can be serialized as
CSV rows without further interpretation.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .bem import BoundarySpace, assemble_layer_matrices
from .coupling import METHODS, assemble_system
from .fem import FemSpace, element_strains, rigid_body_basis, triangle_rule
from .material import FROB_WEIGHT
from .mesh import SQUARE, Mesh, build_polygon_mesh, refine_uniform, scale_to_unit
from .solver import SolveOptions, dense_eig, dense_svd, solve
from .surface import SurfaceMesh3

__all__ = [
    "VerificationReport",
    "ContractionEstimate",
    "LevelResult",
    "check_rbm_independence",
    "find_noncollinear_centroids",
    "check_centroids",
    "estimate_contraction_constant",
    "check_jn_condition",
    "check_kernel_identities",
    "check_stabilized_ellipticity",
    "convergence_study",
    "observed_rates",
    "strain_error",
    "write_reports",
]

INDEPENDENCE_RTOL = 1e-12
CENTROID_RTOL = 1e-10


@dataclass
class VerificationReport:
    """Outcome of one check: name, verdict, certified scalars and tolerances."""

    name: str
    passed: bool
    certificates: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    message: str = ""

    def row(self) -> list[str]:
        cells = [self.name, "pass" if self.passed else "fail"]
        cells += [f"{k}={_fmt(v)}" for k, v in self.certificates.items()]
        cells += [f"tol_{k}={_fmt(v)}" for k, v in self.tolerances.items()]
        return cells

    def summary(self) -> str:
        certs = ", ".join(f"{k}={_fmt(v)}" for k, v in self.certificates.items())
        tail = f" ({self.message})" if self.message else ""
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} [{certs}]{tail}"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.15e}"
    return str(v)


def write_reports(path, reports) -> None:
    """One CSV row per report: ``name, pass|fail, key=value, ...``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for r in reports:
            w.writerow(r.row())


# ---------------------------------------------------------------------------
# rigid body projections (2D boundaries and 3D surfaces)
# ---------------------------------------------------------------------------

def _projection_gram(obj):
    """Gram matrix of the piecewise-constant projections of the rigid motions.

    The L2 projection of an affine field onto constants is its value at the
    element centroid, so the Gram matrix is ``sum_E |E| xi_j(c_E) . xi_k(c_E)``.
    """
    if isinstance(obj, Mesh):
        obj = BoundarySpace(obj)
    if isinstance(obj, BoundarySpace):
        centers, weights = obj.midpoints, obj.lengths
        vals = np.stack([r(centers) for r in rigid_body_basis(2)])
    elif isinstance(obj, SurfaceMesh3):
        centers, weights = obj.centroids, obj.areas
        vals = np.stack([r(centers) for r in rigid_body_basis(3)])
    else:
        arr = np.asarray(obj, dtype=float)
        if arr.ndim == 3 and arr.shape[1:] == (2, 2):        # 2D segments
            d = arr[:, 1] - arr[:, 0]
            centers, weights = arr.mean(axis=1), np.linalg.norm(d, axis=1)
            vals = np.stack([r(centers) for r in rigid_body_basis(2)])
        elif arr.ndim == 3 and arr.shape[1:] == (3, 3):      # 3D triangles
            centers = arr.mean(axis=1)
            weights = 0.5 * np.linalg.norm(np.cross(arr[:, 1] - arr[:, 0], arr[:, 2] - arr[:, 0]), axis=1)
            vals = np.stack([r(centers) for r in rigid_body_basis(3)])
        else:
            raise TypeError("expected a BoundarySpace, Mesh, SurfaceMesh3 or an array of segments/triangles")
    if len(weights) == 0 or np.any(weights <= 0):
        raise ValueError("degenerate mesh: empty or zero-measure elements")
    return np.einsum("e,jed,ked->jk", weights, vals, vals)


def check_rbm_independence(obj) -> VerificationReport:
    """Linear independence of the projected rigid motions ``Pi_0(r^j)``.

    Passes iff the smallest singular value of the Gram matrix exceeds
    ``1e-12`` times the largest one.
    """
    gram = _projection_gram(obj)
    sv = dense_svd(gram)
    smin, smax = float(sv.min()), float(sv.max())
    return VerificationReport(
        "rbm_independence", smin > INDEPENDENCE_RTOL * smax,
        {"sigma_min": smin, "sigma_max": smax, "D": gram.shape[0]},
        {"rtol": INDEPENDENCE_RTOL})


def find_noncollinear_centroids(sm: SurfaceMesh3, rtol: float = CENTROID_RTOL):
    """Indices of three triangles with non-collinear centroids, or ``None``.

    Greedy search: start at the first centroid, take the farthest one from it,
    then the one maximizing the triangle area.  The area test is
    ``|(b - a) x (c - a)| > rtol * scale^2``; if this greedy choice fails, no
    triple passes, since it maximizes the area over all choices of ``c``.
    """
    c = sm.centroids
    if len(c) < 3:
        return None
    a = 0
    b = int(np.argmax(np.linalg.norm(c - c[a], axis=1)))
    if b == a:
        return None
    area = np.linalg.norm(np.cross(c[b] - c[a], c - c[a]), axis=1)
    k = int(np.argmax(area))
    if area[k] <= rtol * sm.scale**2:
        return None
    return a, b, k


def check_centroids(sm: SurfaceMesh3, rtol: float = CENTROID_RTOL) -> VerificationReport:
    found = find_noncollinear_centroids(sm, rtol)
    if found is None:
        return VerificationReport("noncollinear_centroids", False, {"n_triangles": len(sm.triangles)},
                                  {"rtol": rtol}, "search exhausted")
    a, b, k = found
    c = sm.centroids
    area = float(np.linalg.norm(np.cross(c[b] - c[a], c[k] - c[a])))
    return VerificationReport("noncollinear_centroids", True,
                              {"A": a, "B": b, "C": k, "cross_norm": area, "scale": sm.scale},
                              {"rtol": rtol})


# ---------------------------------------------------------------------------
# boundary operator certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContractionEstimate:
    """Discrete contraction constant of ``1/2 + K`` in the ``V^{-1}`` norm."""

    c_K_h: float
    h: float
    lam_ext: float
    mu_ext: float
    n_dofs: int = 0


def estimate_contraction_constant(bs: BoundarySpace, lam_ext: float, mu_ext: float,
                                  layers=None, h: float | None = None) -> ContractionEstimate:
    """Largest generalized eigenvalue of ``A x = c^2 B x`` on P1 traces.

    ``A = C^T V^{-1} C`` with ``C = 1/2 M + K`` and ``B = M^T V^{-1} M``, where
    densities are discretized by continuous P1 functions.  With P0 densities
    ``B`` is singular (checkerboard traces lie in the kernel of ``M``), so the
    P1 dual space is used for both Gram matrices.
    """
    L = layers or assemble_layer_matrices(bs, lam_ext, mu_ext)
    p = L.p1_test
    C = 0.5 * p["M11"] + p["K11"]
    fac = sla.cho_factor(L.V11)
    A = C.T @ sla.cho_solve(fac, C)
    B = p["M11"].T @ sla.cho_solve(fac, p["M11"])
    ev = dense_eig(A, B)
    h = float(bs.lengths.max()) if h is None else h
    return ContractionEstimate(float(np.sqrt(max(ev.max(), 0.0))), h, lam_ext, mu_ext, bs.n_p1)


def _trace_rbm(bs: BoundarySpace) -> np.ndarray:
    return np.stack([bs.interpolate_p1(r) for r in rigid_body_basis(2)], axis=1)


def check_kernel_identities(bs: BoundarySpace, lam_ext: float, mu_ext: float,
                            layers=None, tol: float = 1e-8) -> VerificationReport:
    """``(1/2 M + K) r`` and ``W r`` vanish on rigid traces.

    The ``*_floor`` certificates are the forward error bound
    ``n eps max(|A| |r|)`` of the matrix-vector products; residuals below
    them carry no discretization information.
    """
    L = layers or assemble_layer_matrices(bs, lam_ext, mu_ext)
    R = _trace_rbm(bs)
    C = 0.5 * L.M + L.Kmat
    dl = float(np.abs(C @ R).max())
    hs = float(np.abs(L.W @ R).max())
    eps = np.finfo(float).eps
    dl_floor = float(C.shape[1] * eps * (np.abs(C) @ np.abs(R)).max())
    hs_floor = float(L.W.shape[1] * eps * (np.abs(L.W) @ np.abs(R)).max())
    return VerificationReport("kernel_identities", dl <= tol and hs <= tol,
                              {"double_layer_max": dl, "hypersingular_max": hs,
                               "double_layer_floor": dl_floor, "hypersingular_floor": hs_floor},
                              {"tol": tol})


def check_stabilized_ellipticity(unstab, stab, rtol: float = 1e-10) -> VerificationReport:
    """Rigid vectors are isotropic for the plain matrix; the stabilized symmetric part is SPD.

    Uses the tangent at zero, which is the block matrix itself for linear laws.
    """
    A = unstab.tangent()
    As = stab.tangent()
    nA = float(np.linalg.norm(A, 2))
    R = np.zeros((3, unstab.size))
    R[:, :unstab.n_u] = np.stack([np.asarray(r(unstab.sp.mesh.nodes)).reshape(-1)
                                  for r in rigid_body_basis(2)])
    quot = max(abs(x @ A @ x) / (nA * (x @ x)) for x in R)
    lmin = float(dense_eig(0.5 * (As + As.T)).min())
    return VerificationReport("stabilized_ellipticity", quot <= rtol and lmin > 0,
                              {"rigid_quotient": quot, "min_eig_sym": lmin}, {"rtol": rtol})


# ---------------------------------------------------------------------------
# Johnson-Nedelec solvability
# ---------------------------------------------------------------------------

def check_jn_condition(c_A: float | None, lam_ext: float, mu_ext: float, c_K: float,
                       variant: str = "theorem", *, lam_int: float | None = None,
                       mu_int: float | None = None, law=None) -> VerificationReport:
    """Evaluate a sufficient condition for the Johnson-Nedelec coupling.

    ``theorem``: ``2 c_A > c_K (3 lam_ext + 2 mu_ext)``.
    ``linear``: ``eta = min(lam_int/lam_ext, mu_int/mu_ext) > c_K/4``.
    ``hencky``: the same with ``lam_int = K - sup mu_tilde`` and
    ``mu_int = inf mu_tilde`` taken from the Hencky ``law``.

    The inequality is strict.  ``margin`` is the difference of both sides.
    Arithmetic is done in exact rationals of the float inputs, so boundary
    cases are decided without round-off.
    """
    from fractions import Fraction as Fr

    if variant == "theorem":
        if c_A is None:
            raise ValueError("theorem variant needs c_A")
        lhs = 2 * Fr(c_A)
        rhs = Fr(c_K) * (3 * Fr(lam_ext) + 2 * Fr(mu_ext))
        certs = {"lhs": float(lhs), "rhs": float(rhs)}
    elif variant in ("linear", "hencky"):
        if variant == "hencky":
            if law is None:
                raise ValueError("hencky variant needs the Hencky law")
            lo, hi = law.mu_tilde.bounds()
            lam_int, mu_int = law.K - hi, lo
        if lam_int is None or mu_int is None:
            raise ValueError("linear variant needs lam_int and mu_int")
        lhs = min(Fr(lam_int) / Fr(lam_ext), Fr(mu_int) / Fr(mu_ext))
        rhs = Fr(c_K) / 4
        certs = {"eta": float(lhs), "rhs": float(rhs)}
    else:
        raise ValueError(f"unknown JN condition variant {variant!r}")
    certs["margin"] = float(lhs - rhs)
    return VerificationReport(f"jn_condition_{variant}", lhs > rhs, certs, {"strict": True})


# ---------------------------------------------------------------------------
# convergence studies
# ---------------------------------------------------------------------------

@dataclass
class LevelResult:
    level: int
    h: float
    dofs: int
    err_eps: float
    err_phi: float
    iters: int
    solution: object = field(default=None, repr=False)
    system: object = field(default=None, repr=False)
    scale: object = field(default=None, repr=False)


def strain_error(mesh: Mesh, u_coef, grad_exact, degree: int = 5) -> float:
    """``|eps(u) - eps(u_h)|_{L2}`` on the physical mesh, 7-point rule per triangle."""
    sp = FemSpace(mesh)
    eh = element_strains(sp, u_coef)                         # (t, 3)
    bary, w = triangle_rule(degree)
    p = mesh.nodes[mesh.triangles]
    pts = np.einsum("qk,tkd->tqd", bary, p).reshape(-1, 2)
    g = grad_exact(pts)
    ex = np.stack([g[:, 0, 0], g[:, 1, 1], 0.5 * (g[:, 0, 1] + g[:, 1, 0])], axis=1)
    d = ex.reshape(len(p), len(w), 3) - eh[:, None, :]
    val = np.einsum("t,q,tqi,i,tqi->", mesh.areas, w, d, FROB_WEIGHT, d)
    return float(np.sqrt(max(val, 0.0)))


def observed_rates(errors) -> list[float]:
    """``log2(e_l / e_{l+1})`` between consecutive levels; NaN for the first level."""
    out = [math.nan]
    for a, b in zip(errors[:-1], errors[1:]):
        out.append(math.log2(a / b) if a > 0 and b > 0 and np.isfinite(a) and np.isfinite(b) else math.nan)
    return out


def level_meshes(polygon=SQUARE, levels: int = 4, h0: float = 0.25):
    """Nested meshes: the coarsest with ``h <= h0``, then uniform refinements."""
    if levels < 1:
        raise ValueError("levels must be at least 1")
    m = build_polygon_mesh(polygon, h0)
    out = [m]
    for _ in range(levels - 1):
        out.append(refine_uniform(out[-1]))
    return out


def convergence_study(problem, method: str, levels: int = 4, polygon=SQUARE, h0: float = 0.25,
                      opts: SolveOptions | None = None, stabilize: bool = False,
                      xi: str = "p0-projected", keep: bool = False) -> list[LevelResult]:
    """Solve ``problem`` on nested meshes and measure the errors.

    ``err_eps`` is the strain error in physical coordinates.  ``err_phi`` is
    ``<d, V d>^{1/2}`` with ``d`` the difference of the discrete density and
    the midpoint interpolant of the exact one, on the scaled geometry.  Both
    are NaN when the problem has no closed-form solution.
    """
    if method not in METHODS:
        raise ValueError(f"unknown coupling method {method!r}")
    opts = opts or SolveOptions("direct" if getattr(problem.material, "is_linear", False) else "newton")
    base = problem.data()
    phi_ex = problem.phi_exact(method)
    out = []
    for lev, m0 in enumerate(level_meshes(polygon, levels, h0)):
        m, rec = scale_to_unit(m0)
        sp, bs = FemSpace(m), BoundarySpace(m)
        system = assemble_system(method, sp, bs, base.scaled(rec), stabilize=stabilize, xi=xi)
        sol, trace = solve(system, opts)
        if problem.exact:
            err_eps = strain_error(m0, rec.unscale_displacement(sol.u), problem.grad_u)
        else:
            err_eps = math.nan
        if phi_ex is not None:
            ref = np.asarray(phi_ex(rec.inverse(bs.midpoints), bs.normals)).reshape(-1)
            d = sol.phi - ref
            err_phi = float(np.sqrt(max(d @ system.layers.V @ d, 0.0)))
        else:
            err_phi = math.nan
        out.append(LevelResult(lev, m0.h, system.size, err_eps, err_phi, trace.iterations,
                               sol if keep else None, system if keep else None, rec if keep else None))
    return out
