"""Kernels of the planar Lame layer potentials.

Each kernel ``k(x, y)`` is written as a function of ``z = y - x`` and the
unit normal ``n`` at ``y``.  Two singular structures occur:

* ``degree = 0``: ``k = C log|z| + h(z/|z|)`` with a constant matrix ``C``
  and a bounded angular part ``h`` (single layer);
* ``degree = -1``: ``k = F(z/|z|, n) / |z|`` (double layer).

The panel quadrature in :mod:`lamecouple.bem.quadrature` only relies on this
split, so any kernel exposing it can be integrated on touching and
identical panels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "kelvin_tensor", "LogKernel", "KelvinKernel", "TractionKernel", "HypersingularKernel", "lame_constants",
]


def lame_constants(lam: float, mu: float) -> tuple[float, float, float]:
    """``(a, b, nu)`` with ``G = a(-b log|z| I + z z^T/|z|^2)`` and Poisson ratio ``nu``."""
    if not (lam > 0 and mu > 0):
        raise ValueError("exterior Lame constants must be positive")
    a = (lam + mu) / (4 * np.pi * mu * (lam + 2 * mu))
    b = (lam + 3 * mu) / (lam + mu)
    nu = lam / (2 * (lam + mu))
    return a, b, nu


def kelvin_tensor(z, lam: float, mu: float) -> np.ndarray:
    """Fundamental solution of the planar Lame operator.

    ``G(z) = (lam+mu)/(2 mu (lam+2mu)) [ (lam+3mu)/(lam+mu) g(z) I + z z^T/(2 pi |z|^2) ]``
    with the Laplace kernel ``g(z) = -log|z| / (2 pi)``.  ``z`` may have shape
    (2,) or (n, 2).
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    r2 = np.einsum("ni,ni->n", z, z)
    if np.any(r2 == 0):
        raise ZeroDivisionError("Kelvin tensor is singular at z = 0")
    a, b, _ = lame_constants(lam, mu)
    G = a * (np.einsum("ni,nj->nij", z, z) / r2[:, None, None]
             - 0.5 * b * np.log(r2)[:, None, None] * np.eye(2))
    return G[0] if single else G


@dataclass(frozen=True)
class LogKernel:
    """Scalar ``log|x - y|``."""

    degree: int = 0
    size: int = 1

    @property
    def log_coef(self):
        return np.ones((1, 1))

    def angular(self, zhat, n):
        return np.zeros((len(zhat), 1, 1))

    def __call__(self, z, n):
        return 0.5 * np.log(np.einsum("ni,ni->n", z, z))[:, None, None]


@dataclass(frozen=True)
class KelvinKernel:
    """Single-layer kernel ``G(x - y)``."""

    lam: float
    mu: float
    degree: int = 0
    size: int = 2

    @property
    def log_coef(self):
        a, b, _ = lame_constants(self.lam, self.mu)
        return -a * b * np.eye(2)

    def angular(self, zhat, n):
        a, _, _ = lame_constants(self.lam, self.mu)
        return a * np.einsum("ni,nj->nij", zhat, zhat)

    def __call__(self, z, n):
        return kelvin_tensor(z, self.lam, self.mu)


@dataclass(frozen=True)
class TractionKernel:
    """Double-layer kernel: traction of the Kelvin tensor at ``y`` with outward normal ``n``.

    ``(K v)(x) = int_Gamma k(x, y) v(y) ds_y`` with
    ``k_ip = -[(zhat.n)((1-2nu) d_ip + 2 zhat_i zhat_p) - (1-2nu)(zhat_i n_p - zhat_p n_i)] / (4 pi (1-nu) |z|)``.
    """

    lam: float
    mu: float
    degree: int = -1
    size: int = 2

    def angular(self, zhat, n):
        _, _, nu = lame_constants(self.lam, self.mu)
        c = 1 - 2 * nu
        zn = np.einsum("ni,ni->n", zhat, n)[:, None, None]
        zz = np.einsum("ni,nj->nij", zhat, zhat)
        zxn = np.einsum("ni,nj->nij", zhat, n)
        F = zn * (c * np.eye(2) + 2 * zz) - c * (zxn - zxn.transpose(0, 2, 1))
        return -F / (4 * np.pi * (1 - nu))

    def __call__(self, z, n):
        r = np.sqrt(np.einsum("ni,ni->n", z, z))
        return self.angular(z / r[:, None], n) / r[:, None, None]


@dataclass(frozen=True)
class HypersingularKernel:
    """Weakly singular kernel of the hypersingular operator after integration by parts.

    ``<W u, v> = int int (dv/ds)(x)^T k(x, y) (du/ds)(y) ds_y ds_x`` with
    ``k = 4 mu^2 a (-log|z| I + z z^T/|z|^2)``, ``a`` as in :func:`lame_constants`.
    """

    lam: float
    mu: float
    degree: int = 0
    size: int = 2

    @property
    def _c(self):
        a, _, _ = lame_constants(self.lam, self.mu)
        return 4 * self.mu**2 * a

    @property
    def log_coef(self):
        return -self._c * np.eye(2)

    def angular(self, zhat, n):
        return self._c * np.einsum("ni,nj->nij", zhat, zhat)

    def __call__(self, z, n):
        r2 = np.einsum("ni,ni->n", z, z)
        zz = np.einsum("ni,nj->nij", z, z) / r2[:, None, None]
        return self._c * (zz - 0.5 * np.log(r2)[:, None, None] * np.eye(2))
