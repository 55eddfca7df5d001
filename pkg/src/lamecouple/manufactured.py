"""Manufactured transmission problems with closed-form data.

Each problem fixes an interior displacement ``u`` (with gradient and Hessian)
and an exterior field ``u_ext`` solving the homogeneous Lame equations with
``O(1/|x|)`` decay.  The data follow from the jump conditions:
``u0 = u - u_ext`` and ``phi0 = sigma(u) n - sigma_ext(u_ext) n`` on the
boundary, ``f = -div A(eps(u))`` inside.  Compatibility of ``f`` and ``phi0``
holds by construction because ``u_ext`` carries no net force.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bem.kernels import TractionKernel, kelvin_tensor
from .coupling import ProblemData
from .material import LinearLame

__all__ = [
    "ManufacturedProblem",
    "PROBLEMS",
    "build_manufactured",
    "kelvin_displacement",
    "kelvin_traction",
    "strain_of_gradient",
]


def strain_of_gradient(g):
    """Stored strain ``(xx, yy, xy)`` from gradients ``g[..., i, j] = d u_i / d x_j``."""
    return np.stack([g[..., 0, 0], g[..., 1, 1], 0.5 * (g[..., 0, 1] + g[..., 1, 0])], axis=-1)


def _stress_matrix(s):
    return np.stack([np.stack([s[..., 0], s[..., 2]], -1), np.stack([s[..., 2], s[..., 1]], -1)], -2)


def kelvin_displacement(x, x0, c, lam, mu):
    """``G(x - x0) c``."""
    return np.einsum("nij,j->ni", kelvin_tensor(np.atleast_2d(x) - x0, lam, mu), c)


def kelvin_traction(x, n, x0, c, lam, mu):
    """Traction ``sigma(G(. - x0) c) n`` at ``x`` for the normal ``n``."""
    k = TractionKernel(lam, mu)(np.atleast_2d(x) - np.atleast_2d(x0), np.atleast_2d(n))
    return np.einsum("nip,i->np", k, c)


# interior fields ------------------------------------------------------------

def _affine():
    A = np.array([[0.5, -0.2], [0.4, 0.25]])
    b = np.array([0.3, -0.1])
    return (lambda x: x @ A.T + b,
            lambda x: np.broadcast_to(A, (len(x), 2, 2)).copy(),
            lambda x: np.zeros((len(x), 2, 2, 2)))


def _polynomial():
    def u(x):
        x1, x2 = x[:, 0], x[:, 1]
        return np.stack([x1**2 * x2 + 0.5 * x1**2, -x1 * x2**2 + 0.5 * x1**2], axis=1)

    def grad(x):
        x1, x2 = x[:, 0], x[:, 1]
        g = np.empty((len(x), 2, 2))
        g[:, 0, 0] = 2 * x1 * x2 + x1
        g[:, 0, 1] = x1**2
        g[:, 1, 0] = -x2**2 + x1
        g[:, 1, 1] = -2 * x1 * x2
        return g

    def hess(x):
        x1, x2 = x[:, 0], x[:, 1]
        H = np.zeros((len(x), 2, 2, 2))  # H[n, i, j, k] = d^2 u_i / dx_j dx_k
        H[:, 0, 0, 0] = 2 * x2 + 1
        H[:, 0, 0, 1] = H[:, 0, 1, 0] = 2 * x1
        H[:, 1, 0, 0] = 1.0
        H[:, 1, 0, 1] = H[:, 1, 1, 0] = -2 * x2
        H[:, 1, 1, 1] = -2 * x1
        return H

    return u, grad, hess


@dataclass(frozen=True)
class ManufacturedProblem:
    """Closed-form transmission problem in physical coordinates."""

    name: str
    material: object
    lam_ext: float
    mu_ext: float
    u: Callable
    grad_u: Callable
    hess_u: Callable
    sources: tuple = ()          # ((x0, c), ...) Kelvin sources of the exterior field
    exact: bool = True           # whether u and phi are known in closed form

    def u_ext(self, x):
        x = np.atleast_2d(x)
        out = np.zeros((len(x), 2))
        for x0, c in self.sources:
            out += kelvin_displacement(x, np.asarray(x0), np.asarray(c), self.lam_ext, self.mu_ext)
        return out

    def traction_ext(self, x, n):
        x = np.atleast_2d(x)
        out = np.zeros((len(x), 2))
        for x0, c in self.sources:
            out += kelvin_traction(x, n, np.asarray(x0), np.asarray(c), self.lam_ext, self.mu_ext)
        return out

    def stress(self, x):
        return self.material.stress(strain_of_gradient(self.grad_u(x)))

    def f(self, x):
        """``-div A(eps(u))`` via the chain rule through the material tangent."""
        e = strain_of_gradient(self.grad_u(x))
        T = self.material.tangent(e)
        H = self.hess_u(x)
        # d eps / d x_j as stored tensors
        de = np.stack([strain_of_gradient(H[:, :, :, j]) for j in range(2)], axis=1)  # (n, j, 3)
        ds = np.einsum("nab,njb->nja", T, de)
        # (div sigma)_i = d_1 sigma_i1 + d_2 sigma_i2
        div = np.stack([ds[:, 0, 0] + ds[:, 1, 2], ds[:, 0, 2] + ds[:, 1, 1]], axis=1)
        return -div

    def u0(self, x):
        return self.u(x) - self.u_ext(x)

    def phi0(self, x, n):
        S = _stress_matrix(self.stress(x))
        return np.einsum("nij,nj->ni", S, n) - self.traction_ext(x, n)

    def phi_exact(self, method: str):
        """Exact density as a function of ``(x, n)``, or ``None`` when not available.

        For the symmetric and Johnson-Nedelec couplings the density is the
        exterior traction.  For Bielak-MacCamy it is the single-layer density
        of ``u_ext``, known only when ``u_ext`` vanishes.
        """
        if not self.exact:
            return None
        if method == "bmc":
            if self.sources:
                return None
            return lambda x, n: np.zeros((len(x), 2))
        return self.traction_ext

    def data(self) -> ProblemData:
        return ProblemData(self.material, self.lam_ext, self.mu_ext, self.f, self.u0, self.phi0)


def _load_problem(material, lam_ext, mu_ext):
    """Hencky benchmark: constant body force balanced by a uniform boundary traction."""
    force = np.array([4.0, -2.0])

    class _Load(ManufacturedProblem):
        def f(self, x):
            return np.tile(force, (len(x), 1))

        def u0(self, x):
            return np.stack([0.5 * x[:, 0] * x[:, 1], -0.5 * x[:, 0] ** 2 + 0.3 * x[:, 1]], axis=1)

        def phi0(self, x, n):
            # balances f on the unit square (|Omega| = 1, |Gamma| = 4)
            return np.tile(-force / 4.0, (len(x), 1))

    zero = _affine()
    return _Load("hencky-load", material, lam_ext, mu_ext, *zero, exact=False)


PROBLEMS = ("linear-patch", "smooth", "smooth-biharmonic-free", "kelvin-exterior", "hencky-load")


def build_manufactured(name: str, material=None, lam_ext: float = 1.0, mu_ext: float = 1.0) -> ManufacturedProblem:
    """Build a shipped problem by name.

    ``linear-patch``: affine interior field with a rotation part, ``u_ext = 0``.
    ``smooth`` (alias ``smooth-biharmonic-free``): polynomial interior field, ``u_ext = 0``.
    ``kelvin-exterior``: polynomial interior field and a Kelvin dipole outside,
    sources at (0.3, 0.25) and (0.2, 0.35) with opposite forces, so the exterior
    field decays like ``1/|x|`` and carries no net force.
    ``hencky-load``: constant body force on the unit square, no closed-form solution.
    """
    material = material or LinearLame(1.0, 1.0)
    if name == "linear-patch":
        return ManufacturedProblem(name, material, lam_ext, mu_ext, *_affine())
    if name in ("smooth", "smooth-biharmonic-free"):
        return ManufacturedProblem(name, material, lam_ext, mu_ext, *_polynomial())
    if name == "kelvin-exterior":
        c = (1.0, 0.5)
        sources = (((0.3, 0.25), c), ((0.2, 0.35), (-c[0], -c[1])))
        return ManufacturedProblem(name, material, lam_ext, mu_ext, *_polynomial(), sources=sources)
    if name == "hencky-load":
        return _load_problem(material, lam_ext, mu_ext)
    raise ValueError(f"unknown manufactured problem {name!r}; expected one of {PROBLEMS}")
