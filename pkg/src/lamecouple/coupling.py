"""Symmetric, Johnson-Nedelec and Bielak-MacCamy FEM-BEM couplings.

Unknowns are stacked as ``x = (u, phi)`` with ``u`` the P1 volume coefficients
and ``phi`` the P0 boundary density.  Writing ``T`` for the trace selection,
``D = M/2 - K`` and ``C = M/2 + K``, the linear boundary blocks are

=============  =========================  ==================
method         displacement row           density row
=============  =========================  ==================
symmetric      ``T^T W T u - T^T D^T phi``  ``D T u + V phi``
jn             ``-T^T M^T phi``             ``D T u + V phi``
bmc            ``T^T D^T phi``              ``-M T u + V phi``
=============  =========================  ==================

and each displacement row also carries the material term
``<A eps(u), eps(v)>``.  All quantities live on the scaled geometry produced
by :func:`lamecouple.mesh.scale_to_unit`.
"""
from __future__ import annotations

import inspect
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np

from .bem import BoundarySpace, LayerMatrices, assemble_layer_matrices
from .fem import (FemSpace, assemble_load, assemble_nonlinear_form, assemble_strain_gram,
                  assemble_tangent_matrix, rigid_body_basis, triangle_rule)
from .mesh import ScaleRecord

__all__ = [
    "METHODS",
    "ProblemData",
    "Stabilization",
    "CoupledSystem",
    "CoupledSolution",
    "project_rbm",
    "rbm_vectors",
    "compatibility_residuals",
    "assemble_system",
    "assemble_rhs",
    "add_stabilization",
    "energy_norm",
    "energy_gram",
]

METHODS = ("symmetric", "jn", "bmc")


def _zero_field(x):
    return np.zeros((len(x), 2))


def _takes_normal(fn) -> bool:
    try:
        return len(inspect.signature(fn).parameters) >= 2
    except (TypeError, ValueError):
        return False


@dataclass(frozen=True)
class ProblemData:
    """Data of the transmission problem.

    ``f(x)``, ``u0(x)`` map (n, 2) points to (n, 2) vectors.  ``phi0`` may take
    ``(x, n)`` with the outward unit normal so that traction data ``sigma n``
    can be written directly.
    """

    material: object
    lam_ext: float = 1.0
    mu_ext: float = 1.0
    f: Callable = _zero_field
    u0: Callable = _zero_field
    phi0: Callable = _zero_field

    def __post_init__(self):
        if not (self.lam_ext > 0 and self.mu_ext > 0):
            raise ValueError("exterior Lame constants must be positive")

    def phi0_at(self, x, n):
        return self.phi0(x, n) if _takes_normal(self.phi0) else self.phi0(x)

    def scaled(self, rec: ScaleRecord) -> "ProblemData":
        """Data on the geometry ``x' = factor (x - center)``."""
        s = rec.factor
        f, u0, phi0 = self.f, self.u0, self.phi0
        if _takes_normal(phi0):
            def phi0_s(y, n):
                return np.asarray(phi0(rec.inverse(y), n))
        else:
            def phi0_s(y, n):
                return np.asarray(phi0(rec.inverse(y)))
        return replace(self, f=lambda y: np.asarray(f(rec.inverse(y))) / s,
                       u0=lambda y: s * np.asarray(u0(rec.inverse(y))), phi0=phi0_s)


def compatibility_residuals(data: ProblemData, mesh) -> np.ndarray:
    """``int_Omega f + int_Gamma phi0`` (both components), by high-order quadrature."""
    bary, w = triangle_rule(5)
    p = mesh.nodes[mesh.triangles]
    pts = np.einsum("qk,tkd->tqd", bary, p).reshape(-1, 2)
    fv = np.asarray(data.f(pts)).reshape(len(p), len(w), 2)
    vol = np.einsum("t,q,tqd->d", mesh.areas, w, fv)
    # composite Gauss rule on the edges: traction data of exterior fields may
    # vary rapidly when their sources lie close to the boundary
    g, gw = np.polynomial.legendre.leggauss(16)
    sub = 8
    g = ((np.arange(sub)[:, None] + 0.5 * (g[None, :] + 1)) / sub).ravel()
    gw = np.tile(0.5 * gw / sub, sub)
    a = mesh.nodes[mesh.boundary_edges[:, 0]]
    b = mesh.nodes[mesh.boundary_edges[:, 1]]
    d = b - a
    L = np.linalg.norm(d, axis=1)
    n = np.stack([d[:, 1], -d[:, 0]], axis=1) / L[:, None]
    bpts = (a[:, None, :] + g[None, :, None] * d[:, None, :]).reshape(-1, 2)
    bn = np.repeat(n, len(g), axis=0)
    pv = np.asarray(data.phi0_at(bpts, bn)).reshape(len(a), len(g), 2)
    return vol + np.einsum("e,q,eqd->d", L, gw, pv)


def project_rbm(bs: BoundarySpace) -> np.ndarray:
    """L2 projections of the rigid body motions onto P0; columns are ``xi^j``.

    On each edge the projection of an affine field is its midpoint value, so
    ``xi^3|_E = (-s_2, s_1)`` with ``s`` the edge midpoint.
    """
    return np.stack([bs.interpolate_p0(r) for r in rigid_body_basis(2)], axis=1)


def rbm_vectors(bs: BoundarySpace, kind: str = "p0-projected") -> tuple[np.ndarray, str]:
    """Stabilization directions and the boundary space they live in."""
    if kind == "p0-projected":
        return project_rbm(bs), "p0"
    if kind == "p1-rigid":
        return np.stack([bs.interpolate_p1(r) for r in rigid_body_basis(2)], axis=1), "p1"
    raise ValueError(f"unknown coupling.xi {kind!r}")


@dataclass(frozen=True, eq=False)
class Stabilization:
    """Rank-D update kept in factored form: residual gains ``G^T (G x - s)``."""

    G: np.ndarray
    s: np.ndarray


@dataclass(frozen=True, eq=False)
class CoupledSolution:
    u: np.ndarray
    phi: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.u, self.phi])


@dataclass(frozen=True, eq=False)
class CoupledSystem:
    """Residual and tangent of one coupling formulation."""

    method: str
    sp: FemSpace
    bs: BoundarySpace
    layers: LayerMatrices
    law: object
    F: np.ndarray = field(repr=False)
    UU: np.ndarray = field(repr=False)   # boundary part of the displacement-displacement block (trace dofs)
    UP: np.ndarray = field(repr=False)   # displacement rows (trace dofs) x density columns
    PU: np.ndarray = field(repr=False)   # density rows x trace dofs
    PP: np.ndarray = field(repr=False)
    compatibility: np.ndarray = field(default_factory=lambda: np.zeros(2), repr=False)
    stabilization: Stabilization | None = None

    @property
    def n_u(self) -> int:
        return self.sp.dof_count

    @property
    def n_phi(self) -> int:
        return self.bs.n_p0

    @property
    def size(self) -> int:
        return self.n_u + self.n_phi

    @cached_property
    def tdofs(self) -> np.ndarray:
        return self.sp.trace_dofs

    @property
    def rhs(self) -> np.ndarray:
        if self.stabilization is None:
            return self.F
        return self.F + self.stabilization.G.T @ self.stabilization.s

    def split(self, x) -> CoupledSolution:
        x = np.asarray(x, dtype=float)
        return CoupledSolution(x[: self.n_u], x[self.n_u:])

    def apply_unstabilized(self, x) -> np.ndarray:
        """``b(x, .)`` as a vector."""
        u, phi = x[: self.n_u], x[self.n_u:]
        out = np.empty(self.size)
        ru = assemble_nonlinear_form(self.sp, self.law, u)
        ut = u[self.tdofs]
        ru[self.tdofs] += self.UU @ ut + self.UP @ phi
        out[: self.n_u] = ru
        out[self.n_u:] = self.PU @ ut + self.PP @ phi
        return out

    def residual(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = self.apply_unstabilized(x) - self.F
        if self.stabilization is not None:
            G, s = self.stabilization.G, self.stabilization.s
            r += G.T @ (G @ x - s)
        return r

    def tangent(self, x=None) -> np.ndarray:
        x = np.zeros(self.size) if x is None else np.asarray(x, dtype=float)
        n = self.n_u
        J = np.zeros((self.size, self.size))
        J[:n, :n] = assemble_tangent_matrix(self.sp, self.law, x[:n])
        t = self.tdofs
        J[np.ix_(t, t)] += self.UU
        J[t, n:] += self.UP
        J[n:, t] += self.PU
        J[n:, n:] = self.PP
        if self.stabilization is not None:
            G = self.stabilization.G
            J += G.T @ G
        return J

    def matrix(self) -> np.ndarray:
        """Full linear block matrix; only meaningful for a linear material law."""
        if not getattr(self.law, "is_linear", False):
            raise ValueError("matrix() requires a linear material law; use tangent(x)")
        return self.tangent()

    def with_law(self, law) -> "CoupledSystem":
        return replace(self, law=law)

    def without_stabilization(self) -> "CoupledSystem":
        return replace(self, stabilization=None)


def _boundary_blocks(method, L: LayerMatrices):
    D = 0.5 * L.M - L.Kmat
    zero = np.zeros((L.M.shape[1], L.M.shape[1]))
    if method == "symmetric":
        return L.W, -D.T, D, L.V
    if method == "jn":
        return zero, -L.M.T, D, L.V
    if method == "bmc":
        return zero, D.T, -L.M, L.V
    raise ValueError(f"unknown coupling method {method!r}; expected one of {METHODS}")


def _boundary_data(bs: BoundarySpace, data: ProblemData):
    u0 = bs.interpolate_p1(data.u0)
    phi0 = np.asarray(data.phi0_at(bs.midpoints, bs.normals), dtype=float).reshape(-1)
    return u0, phi0


def assemble_rhs(method: str, sp: FemSpace, bs: BoundarySpace, data: ProblemData,
                 layers: LayerMatrices | None = None) -> np.ndarray:
    """Right-hand side ``F`` of the unstabilized formulation."""
    L = layers or assemble_layer_matrices(bs, data.lam_ext, data.mu_ext)
    u0, phi0 = _boundary_data(bs, data)
    Fu = assemble_load(sp, data.f)
    Fu[sp.trace_dofs] += L.M.T @ phi0
    D = 0.5 * L.M - L.Kmat
    if method == "symmetric":
        Fu[sp.trace_dofs] += L.W @ u0
        Fp = D @ u0
    elif method == "jn":
        Fp = D @ u0
    elif method == "bmc":
        Fp = -L.M @ u0
    else:
        raise ValueError(f"unknown coupling method {method!r}")
    return np.concatenate([Fu, Fp])


def assemble_system(method: str, sp: FemSpace, bs: BoundarySpace, data: ProblemData,
                    stabilize: bool = False, xi: str = "p0-projected",
                    layers: LayerMatrices | None = None) -> CoupledSystem:
    """Assemble one coupling on trace-compatible spaces over a scaled mesh."""
    if bs.mesh is not sp.mesh and not (np.array_equal(bs.mesh.nodes, sp.mesh.nodes)
                                       and np.array_equal(bs.mesh.boundary_edges, sp.mesh.boundary_edges)):
        raise ValueError("boundary space is not the trace of the volume mesh")
    L = layers or assemble_layer_matrices(bs, data.lam_ext, data.mu_ext)
    UU, UP, PU, PP = _boundary_blocks(method, L)
    F = assemble_rhs(method, sp, bs, data, L)
    system = CoupledSystem(method, sp, bs, L, data.material, F, UU, UP, PU, PP,
                           compatibility_residuals(data, sp.mesh))
    if stabilize:
        system = add_stabilization(system, *rbm_vectors(bs, xi), data=data)
    return system


def _functional_rows(system: CoupledSystem, xi: np.ndarray, space: str, data: ProblemData | None):
    """``G`` (D x N) and ``s`` for the stabilization functionals of ``system.method``."""
    L, n = system.layers, system.n_u
    if space == "p0":
        Mrow, Krow, Vrow = L.M, L.Kmat, L.V
    else:
        p = L.p1_test
        Mrow, Krow, Vrow = p["M11"], p["K11"], p["V10"]
    G = np.zeros((xi.shape[1], system.size))
    if system.method == "bmc":
        trace_rows = -Mrow
    else:
        trace_rows = 0.5 * Mrow - Krow
    G[:, system.tdofs] = xi.T @ trace_rows
    G[:, n:] = xi.T @ Vrow
    s = None
    if data is not None:
        s = xi.T @ (trace_rows @ system.bs.interpolate_p1(data.u0))
    return G, s


def add_stabilization(system: CoupledSystem, xi: np.ndarray, space: str = "p0",
                      data: ProblemData | None = None, s: np.ndarray | None = None) -> CoupledSystem:
    """Attach the rank-D implicit stabilization built from the density equation.

    ``g_j(x)`` is the density row tested with ``xi^j``; ``s_j`` the matching
    right-hand side.  Either pass the problem ``data`` (``s`` is then the
    density-row right-hand side tested with ``xi``) or ``s`` explicitly.
    """
    xi = np.asarray(xi, dtype=float)
    gram = xi.T @ _gram_matrix(system.bs, space) @ xi
    ev = np.linalg.eigvalsh(0.5 * (gram + gram.T))
    if ev.min() <= 1e-12 * max(ev.max(), 1e-300):
        raise ValueError("stabilization directions are linearly dependent")
    G, s_data = _functional_rows(system, xi, space, data)
    if s is None:
        if space == "p0":
            s = xi.T @ system.F[system.n_u:]
        elif data is not None:
            s = s_data
        else:
            raise ValueError("P1 stabilization directions need the problem data for s")
    return replace(system, stabilization=Stabilization(G, np.asarray(s, dtype=float)))


def _gram_matrix(bs: BoundarySpace, space: str) -> np.ndarray:
    from .bem import mass_matrix
    return mass_matrix(bs, space, space)


def energy_gram(system: CoupledSystem, xi: np.ndarray | None = None, space: str = "p0") -> np.ndarray:
    """Matrix of ``|||(u, phi)|||^2 = |eps(u)|^2 + <phi, V phi> + sum_j g_j(u, phi)^2``."""
    if xi is None:
        xi, space = project_rbm(system.bs), "p0"
    n = system.n_u
    E = np.zeros((system.size, system.size))
    E[:n, :n] = assemble_strain_gram(system.sp)
    E[n:, n:] = system.layers.V
    sym = replace(system, method="symmetric") if system.method == "bmc" else system
    G, _ = _functional_rows(sym, xi, space, None)
    return E + G.T @ G


def energy_norm(system: CoupledSystem, u, phi, xi: np.ndarray | None = None, space: str = "p0") -> float:
    x = np.concatenate([np.asarray(u, float), np.asarray(phi, float)])
    return float(np.sqrt(max(x @ energy_gram(system, xi, space) @ x, 0.0)))
