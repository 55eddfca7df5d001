"""Galerkin matrices of the planar Lame layer operators.

Boundary densities live in ``P0`` (two dofs per edge, ``2k + i``) and traces in
``P1`` (two dofs per boundary node, ``2m + i`` with ``m`` the position of the
node in ``mesh.boundary_nodes``).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..mesh import Mesh
from .kernels import HypersingularKernel, KelvinKernel, TractionKernel
from .quadrature import P0_BASIS, P1_BASIS, panel_integrals

__all__ = [
    "BoundarySpace",
    "LayerMatrices",
    "galerkin_matrix",
    "mass_matrix",
    "assemble_V",
    "assemble_K_and_M",
    "assemble_W",
    "assemble_W_calderon",
    "assemble_layer_matrices",
]

_BASES = {"p0": P0_BASIS, "p1": P1_BASIS}


@dataclass(frozen=True, eq=False)
class BoundarySpace:
    """Boundary element spaces on the trace mesh of ``mesh``."""

    mesh: Mesh

    @cached_property
    def bnodes(self) -> np.ndarray:
        return self.mesh.boundary_nodes

    @cached_property
    def edges(self) -> np.ndarray:
        """Boundary edges in trace-node numbering."""
        pos = {int(n): k for k, n in enumerate(self.bnodes)}
        return np.array([[pos[int(a)], pos[int(b)]] for a, b in self.mesh.boundary_edges], dtype=np.intp)

    @cached_property
    def points(self) -> np.ndarray:
        return self.mesh.nodes[self.bnodes]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_p0(self) -> int:
        return 2 * self.n_edges

    @property
    def n_p1(self) -> int:
        return 2 * len(self.bnodes)

    @cached_property
    def lengths(self) -> np.ndarray:
        d = self.points[self.edges[:, 1]] - self.points[self.edges[:, 0]]
        return np.linalg.norm(d, axis=1)

    @cached_property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.points[self.edges[:, 0]] + self.points[self.edges[:, 1]])

    @cached_property
    def normals(self) -> np.ndarray:
        d = self.points[self.edges[:, 1]] - self.points[self.edges[:, 0]]
        return np.stack([d[:, 1], -d[:, 0]], axis=1) / self.lengths[:, None]

    @property
    def length(self) -> float:
        return float(self.lengths.sum())

    def trace_matrix(self, dof_count: int | None = None) -> np.ndarray:
        """Selection matrix from volume P1 dofs onto trace dofs."""
        n = 2 * self.mesh.n_nodes if dof_count is None else dof_count
        T = np.zeros((self.n_p1, n))
        rows = np.arange(self.n_p1)
        cols = np.stack([2 * self.bnodes, 2 * self.bnodes + 1], axis=1).ravel()
        T[rows, cols] = 1.0
        return T

    def interpolate_p0(self, fn) -> np.ndarray:
        """Midpoint interpolation of a vector field into P0."""
        return np.asarray(fn(self.midpoints), dtype=float).reshape(-1)

    def interpolate_p1(self, fn) -> np.ndarray:
        return np.asarray(fn(self.points), dtype=float).reshape(-1)

    def tangential_derivative(self) -> np.ndarray:
        """Matrix mapping P1 trace coefficients to their edgewise arc-length derivative (P0)."""
        D = np.zeros((self.n_p0, self.n_p1))
        k = np.arange(self.n_edges)
        for i in range(2):
            np.add.at(D, (2 * k + i, 2 * self.edges[:, 1] + i), 1.0 / self.lengths)
            np.add.at(D, (2 * k + i, 2 * self.edges[:, 0] + i), -1.0 / self.lengths)
        return D

    def dof_map(self, space: str) -> np.ndarray:
        """Per edge, the scalar basis indices of ``space`` (shape (E, nb))."""
        if space == "p0":
            return np.arange(self.n_edges)[:, None]
        if space == "p1":
            return self.edges
        raise ValueError(f"unknown boundary space {space!r}")

    def size(self, space: str) -> int:
        return self.n_p0 if space == "p0" else self.n_p1


def galerkin_matrix(bs: BoundarySpace, kernel, test: str = "p0", trial: str = "p0") -> np.ndarray:
    """Dense matrix of ``<phi_a, int k(., y) psi_b(y) ds_y>`` over all panel pairs."""
    E = bs.n_edges
    kx, ky = np.meshgrid(np.arange(E), np.arange(E), indexing="ij")
    kx, ky = kx.ravel(), ky.ravel()
    vals = panel_integrals(kernel, bs.points, bs.edges[kx], bs.edges[ky], _BASES[test], _BASES[trial])
    ta, tb = bs.dof_map(test), bs.dof_map(trial)
    out = np.zeros((bs.size(test), bs.size(trial)))
    for a in range(ta.shape[1]):
        for b in range(tb.shape[1]):
            for i in range(2):
                for p in range(2):
                    np.add.at(out, (2 * ta[kx, a] + i, 2 * tb[ky, b] + p), vals[:, a, b, i, p])
    return out


def mass_matrix(bs: BoundarySpace, test: str = "p0", trial: str = "p1") -> np.ndarray:
    """Exact ``<phi_a, psi_b>`` on the boundary, both vector components."""
    local = {
        ("p0", "p0"): np.array([[1.0]]),
        ("p0", "p1"): np.array([[0.5, 0.5]]),
        ("p1", "p0"): np.array([[0.5], [0.5]]),
        ("p1", "p1"): np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]]),
    }[(test, trial)]
    ta, tb = bs.dof_map(test), bs.dof_map(trial)
    out = np.zeros((bs.size(test), bs.size(trial)))
    for a in range(ta.shape[1]):
        for b in range(tb.shape[1]):
            for i in range(2):
                np.add.at(out, (2 * ta[:, a] + i, 2 * tb[:, b] + i), bs.lengths * local[a, b])
    return out


def _check_scaled(bs):
    if np.linalg.norm(bs.points, axis=1).max() > 0.25 * (1 + 1e-12):
        warnings.warn("boundary not scaled into the disc of diameter 1/2; "
                      "the single-layer matrix may fail to be positive definite", stacklevel=3)
        return False
    return True


def assemble_V(bs: BoundarySpace, lam_ext: float, mu_ext: float) -> np.ndarray:
    """Single-layer matrix on P0 x P0, symmetrized against round-off."""
    _check_scaled(bs)
    V = galerkin_matrix(bs, KelvinKernel(lam_ext, mu_ext))
    return 0.5 * (V + V.T)


def assemble_K_and_M(bs: BoundarySpace, lam_ext: float, mu_ext: float, test: str = "p0"):
    """Double-layer matrix ``<psi_k, K u_j>`` and mass matrix, P0 (or P1) rows x P1 columns."""
    _check_scaled(bs)
    K = galerkin_matrix(bs, TractionKernel(lam_ext, mu_ext), test, "p1")
    return K, mass_matrix(bs, test, "p1")


def assemble_W(bs: BoundarySpace, lam_ext: float, mu_ext: float) -> np.ndarray:
    """Hypersingular matrix on P1 traces.

    Uses the integrated-by-parts form: the weakly singular kernel of
    :class:`HypersingularKernel` is integrated against the edgewise tangential
    derivatives of the trace basis.  Translations have zero derivative and the
    rotation lies in the kernel of the continuous operator, so both are
    annihilated up to quadrature error; the matrix is a Galerkin matrix of a
    positive semidefinite operator.
    """
    _check_scaled(bs)
    Ds = bs.tangential_derivative()
    W = Ds.T @ galerkin_matrix(bs, HypersingularKernel(lam_ext, mu_ext)) @ Ds
    return 0.5 * (W + W.T)


def assemble_W_calderon(V, Kmat, M, symmetrize: bool = True, swap: bool = False) -> np.ndarray:
    """Calderon composite ``(M/2 - K)^T V^{-1} (M/2 + K)``.

    ``swap=True`` gives the alternative ordering ``(M/2 + K)^T V^{-1} (M/2 - K)``.
    With P0 densities this composite is not semidefinite: traces in the kernel
    of ``M`` give ``-|K v|^2_{V^{-1}}``.  It serves as an independent check of
    :func:`assemble_W` on smooth traces.
    """
    from scipy.linalg import cho_factor, cho_solve

    C = 0.5 * M + Kmat
    D = 0.5 * M - Kmat
    if swap:
        C, D = D, C
    W = D.T @ cho_solve(cho_factor(V), C)
    return 0.5 * (W + W.T) if symmetrize else W


@dataclass(frozen=True, eq=False)
class LayerMatrices:
    """Assembled boundary matrices for one boundary space and exterior material."""

    bs: BoundarySpace
    lam_ext: float
    mu_ext: float
    V: np.ndarray = field(repr=False)
    Kmat: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    W: np.ndarray = field(repr=False)

    @cached_property
    def p1_test(self) -> dict:
        """P1-test versions ``V10`` (P1 x P0), ``K11`` and ``M11`` (P1 x P1), assembled on demand."""
        K11, M11 = assemble_K_and_M(self.bs, self.lam_ext, self.mu_ext, test="p1")
        V10 = galerkin_matrix(self.bs, KelvinKernel(self.lam_ext, self.mu_ext), "p1", "p0")
        return {"V10": V10, "K11": K11, "M11": M11}

    @cached_property
    def V11(self) -> np.ndarray:
        V = galerkin_matrix(self.bs, KelvinKernel(self.lam_ext, self.mu_ext), "p1", "p1")
        return 0.5 * (V + V.T)


def assemble_layer_matrices(bs: BoundarySpace, lam_ext: float, mu_ext: float) -> LayerMatrices:
    V = assemble_V(bs, lam_ext, mu_ext)
    K, M = assemble_K_and_M(bs, lam_ext, mu_ext)
    return LayerMatrices(bs, lam_ext, mu_ext, V, K, M, assemble_W(bs, lam_ext, mu_ext))
