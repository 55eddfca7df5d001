"""Vector-valued P1 finite elements on a triangulation.

Degrees of freedom are interleaved: node ``i`` owns ``2i`` (x) and ``2i+1`` (y).
Element strains are constant, so the material law is evaluated once per
element; this is exact for both material laws because ``mu_tilde(gamma)``
is element-constant as well.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sps

from .material import FROB_WEIGHT, frobenius
from .mesh import Mesh

__all__ = [
    "FemSpace",
    "triangle_rule",
    "element_strains",
    "strain_at",
    "assemble_nonlinear_form",
    "assemble_tangent_matrix",
    "assemble_strain_gram",
    "assemble_load",
    "rigid_body_basis",
    "rigid_body_coefficients",
    "h1_seminorm",
    "interpolate",
]


def triangle_rule(degree: int = 2):
    """Barycentric points and weights (summing to 1) on the reference triangle.

    ``degree`` 1 is the centroid rule, 2 the edge-midpoint rule and 5 the
    seven-point Radon rule.
    """
    if degree <= 1:
        return np.full((1, 3), 1 / 3), np.ones(1)
    if degree == 2:
        return np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]), np.full(3, 1 / 3)
    if degree <= 5:
        s15 = np.sqrt(15.0)
        a1, b1 = (9 - 2 * s15) / 21, (6 + s15) / 21
        a2, b2 = (9 + 2 * s15) / 21, (6 - s15) / 21
        w1, w2 = (155 + s15) / 1200, (155 - s15) / 1200
        pts = [[1 / 3] * 3]
        pts += [[a1, b1, b1], [b1, a1, b1], [b1, b1, a1]]
        pts += [[a2, b2, b2], [b2, a2, b2], [b2, b2, a2]]
        return np.array(pts), np.array([9 / 40, w1, w1, w1, w2, w2, w2])
    raise ValueError("triangle rules available up to degree 5")


@dataclass(frozen=True, eq=False)
class FemSpace:
    """``(S^1(T_h))^2`` on ``mesh``."""

    mesh: Mesh

    @property
    def dof_count(self) -> int:
        return 2 * self.mesh.n_nodes

    @cached_property
    def element_dofs(self) -> np.ndarray:
        t = self.mesh.triangles
        return np.stack([2 * t[:, 0], 2 * t[:, 0] + 1, 2 * t[:, 1], 2 * t[:, 1] + 1,
                         2 * t[:, 2], 2 * t[:, 2] + 1], axis=1)

    @cached_property
    def grads(self) -> np.ndarray:
        """Barycentric gradients, shape (t, 3, 2)."""
        p = self.mesh.nodes[self.mesh.triangles]
        J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # columns are edge vectors
        Jinv = np.linalg.inv(J)
        g12 = Jinv  # rows: grad lambda_1, grad lambda_2
        g0 = -g12.sum(axis=1, keepdims=True)
        return np.concatenate([g0, g12], axis=1)

    @cached_property
    def B(self) -> np.ndarray:
        """Strain-displacement matrices, shape (t, 3, 6)."""
        g = self.grads
        B = np.zeros((len(g), 3, 6))
        B[:, 0, 0::2] = g[:, :, 0]
        B[:, 1, 1::2] = g[:, :, 1]
        B[:, 2, 0::2] = 0.5 * g[:, :, 1]
        B[:, 2, 1::2] = 0.5 * g[:, :, 0]
        return B

    @cached_property
    def trace_map(self) -> dict:
        """Boundary node -> ``(dof_x, dof_y)``."""
        return {int(n): (2 * int(n), 2 * int(n) + 1) for n in self.mesh.boundary_nodes}

    @cached_property
    def trace_dofs(self) -> np.ndarray:
        """Global dofs of the boundary nodes, ordered as ``mesh.boundary_nodes``."""
        b = self.mesh.boundary_nodes
        return np.stack([2 * b, 2 * b + 1], axis=1).ravel()

    def _check(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dof_count,):
            raise ValueError(f"coefficient vector has shape {u.shape}, expected ({self.dof_count},)")
        return u


def element_strains(sp: FemSpace, u) -> np.ndarray:
    u = sp._check(u)
    return np.einsum("tij,tj->ti", sp.B, u[sp.element_dofs])


def strain_at(sp: FemSpace, u, triangle: int) -> np.ndarray:
    return element_strains(sp, u)[triangle]


def _scatter_vector(sp, local):
    out = np.zeros(sp.dof_count)
    np.add.at(out, sp.element_dofs.ravel(), local.ravel())
    return out


def _scatter_matrix(sp, local):
    rows = np.repeat(sp.element_dofs, 6, axis=1).ravel()
    cols = np.tile(sp.element_dofs, (1, 6)).ravel()
    n = sp.dof_count
    return sps.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).toarray()


def assemble_nonlinear_form(sp: FemSpace, law, u) -> np.ndarray:
    """Vector with entries ``<A eps(u_h), eps(v_i)>``."""
    sig = law.stress(element_strains(sp, u))
    local = np.einsum("t,tij,tj->ti", sp.mesh.areas, sp.B.transpose(0, 2, 1), FROB_WEIGHT * sig)
    return _scatter_vector(sp, local)


def assemble_tangent_matrix(sp: FemSpace, law, u=None) -> np.ndarray:
    """Dense Jacobian of :func:`assemble_nonlinear_form` at ``u``."""
    u = np.zeros(sp.dof_count) if u is None else u
    T = law.tangent(element_strains(sp, u))
    WT = FROB_WEIGHT[:, None] * T
    local = np.einsum("t,tki,tkl,tlj->tij", sp.mesh.areas, sp.B, WT, sp.B)
    return _scatter_matrix(sp, local)


def assemble_strain_gram(sp: FemSpace) -> np.ndarray:
    """Matrix of ``<eps(u), eps(v)>``."""
    local = np.einsum("t,tki,k,tkj->tij", sp.mesh.areas, sp.B, FROB_WEIGHT, sp.B)
    return _scatter_matrix(sp, local)


def assemble_load(sp: FemSpace, f) -> np.ndarray:
    """Load vector ``<f, v_i>`` with the edge-midpoint rule.

    ``f`` maps an (n, 2) array of points to an (n, 2) array of forces.
    """
    bary, w = triangle_rule(2)
    p = sp.mesh.nodes[sp.mesh.triangles]
    pts = np.einsum("qk,tkd->tqd", bary, p)
    vals = np.asarray(f(pts.reshape(-1, 2)), dtype=float).reshape(len(p), len(w), 2)
    local = np.einsum("t,q,qk,tqd->tkd", sp.mesh.areas, w, bary, vals)
    return _scatter_vector(sp, local.reshape(len(p), 6))


def rigid_body_basis(d: int = 2) -> list:
    """Translations and rotations spanning the rigid body motions in ``R^d``."""
    if d == 2:
        return [
            lambda x: np.stack([np.ones(len(x)), np.zeros(len(x))], axis=1),
            lambda x: np.stack([np.zeros(len(x)), np.ones(len(x))], axis=1),
            lambda x: np.stack([-x[:, 1], x[:, 0]], axis=1),
        ]
    if d == 3:
        def unit(k):
            return lambda x: np.tile(np.eye(3)[k], (len(x), 1))

        return [
            unit(0), unit(1), unit(2),
            lambda x: np.stack([-x[:, 1], x[:, 0], np.zeros(len(x))], axis=1),
            lambda x: np.stack([np.zeros(len(x)), -x[:, 2], x[:, 1]], axis=1),
            lambda x: np.stack([x[:, 2], np.zeros(len(x)), -x[:, 0]], axis=1),
        ]
    raise ValueError(f"rigid body motions are defined for d = 2 or 3, got {d}")


def interpolate(sp: FemSpace, fn) -> np.ndarray:
    """Nodal interpolant of a vector field."""
    return np.asarray(fn(sp.mesh.nodes), dtype=float).reshape(-1)


def rigid_body_coefficients(sp: FemSpace) -> np.ndarray:
    """Rows are the nodal coefficients of the three planar rigid body motions."""
    return np.stack([interpolate(sp, r) for r in rigid_body_basis(2)])


def h1_seminorm(sp: FemSpace, u) -> float:
    """``||eps(u_h)||_{L^2}``."""
    e = element_strains(sp, u)
    return float(np.sqrt(np.sum(sp.mesh.areas * frobenius(e, e))))
