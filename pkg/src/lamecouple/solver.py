"""Dense solvers for the coupled systems.

``direct`` factors the (linear) block matrix once.  ``newton`` uses the
tangent with a residual backtracking safeguard.  ``picard`` is the damped
Zarantonello iteration ``x <- x - theta P^{-1} R(x)`` preconditioned by the
same coupling assembled with a linear reference law.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .material import FROB_WEIGHT, LinearLame

__all__ = [
    "ConvergenceError",
    "SolveOptions",
    "SolveTrace",
    "dense_lu",
    "lu_solve",
    "dense_eig",
    "dense_svd",
    "reference_law",
    "relative_constants",
    "default_theta",
    "solve",
]


class ConvergenceError(RuntimeError):
    """Raised when an iteration stops without meeting its tolerance."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


# ---------------------------------------------------------------------------
# dense backend
# ---------------------------------------------------------------------------

def dense_lu(A, check: bool = True):
    """LU factorization with partial pivoting; raises on numerical singularity."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("LU needs a square matrix")
    lu, piv = sla.lu_factor(A, check_finite=True)
    if check:
        d = np.abs(np.diag(lu))
        if d.min() <= np.finfo(float).eps * max(d.max(), 1e-300) * len(d):
            raise np.linalg.LinAlgError("matrix is numerically singular")
    return lu, piv


def lu_solve(factors, b):
    return sla.lu_solve(factors, b)


def rcond_estimate(A, factors) -> float:
    """Reciprocal 1-norm condition estimate from an LU factorization."""
    anorm = np.linalg.norm(A, 1)
    rc, info = sla.lapack.dgecon(factors[0], anorm, norm="1")
    return float(rc)


def dense_eig(A, B=None):
    """Eigenvalues (ascending) of a symmetric matrix, or of the pencil ``(A, B)`` with ``B`` SPD.

    Inputs are symmetrized first; callers pass symmetric matrices or
    symmetric parts.
    """
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + A.T)
    if B is None:
        return sla.eigh(A, eigvals_only=True)
    B = np.asarray(B, dtype=float)
    return sla.eigh(A, 0.5 * (B + B.T), eigvals_only=True)


def dense_svd(A):
    return sla.svd(np.asarray(A, dtype=float), compute_uv=False)


# ---------------------------------------------------------------------------
# options and traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolveOptions:
    method: str = "direct"
    tol: float = 1e-10
    max_iter: int = 200
    theta: float | None = None

    def __post_init__(self):
        if self.method not in ("direct", "newton", "picard"):
            raise ValueError(f"unknown solver.method {self.method!r}")
        if not self.tol > 0:
            raise ValueError("solver.tol must be positive")
        if self.theta is not None and not self.theta > 0:
            raise ValueError("solver.theta must be positive")
        if self.max_iter < 1:
            raise ValueError("solver.max_iter must be at least 1")


@dataclass
class SolveTrace:
    method: str
    residuals: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    theta: float | None = None
    rcond: float | None = None


# ---------------------------------------------------------------------------
# Picard damping
# ---------------------------------------------------------------------------

def reference_law(law):
    """Linear law used to precondition the Picard iteration.

    For the Hencky law the shear modulus is the harmonic mean of the extreme
    tangent shear moduli and the bulk modulus is kept.
    """
    if isinstance(law, LinearLame):
        return law
    lo, hi = law.mu_tilde.bounds()
    mu = 2 * lo * hi / (lo + hi)
    return LinearLame(max(law.K - mu, 1e-3 * law.K), mu)


def relative_constants(law, ref, n: int = 4000, seed: int = 0) -> tuple[float, float]:
    """Sampled monotonicity and Lipschitz constants of ``law`` in the energy of ``ref``."""
    rng = np.random.default_rng(seed)
    C = ref.tangent(np.zeros(3))
    Cinv = np.linalg.inv(C)
    mag = np.exp(rng.uniform(-4, 3, size=(n, 1)))
    e1 = mag * rng.standard_normal((n, 3))
    de = mag * rng.standard_normal((n, 3)) * np.exp(rng.uniform(-6, 0, size=(n, 1)))
    ds = law.stress(e1 + de) - law.stress(e1)
    energy = np.einsum("ni,i,ij,nj->n", de, FROB_WEIGHT, C, de)
    mono = np.einsum("ni,i,ni->n", ds, FROB_WEIGHT, de) / energy
    dual = np.einsum("ni,i,ij,nj->n", ds, FROB_WEIGHT, Cinv, ds)
    return float(mono.min()), float(np.sqrt(dual / energy).max())


def default_theta(law, ref=None) -> float:
    """Damping ``c/L^2`` from the sampled constants relative to the reference energy.

    Any value in ``(0, 2c/L^2)`` gives a contraction; ``c/L^2`` minimizes the
    guaranteed rate ``sqrt(1 - c^2/L^2)``.
    """
    c, L = relative_constants(law, ref or reference_law(law))
    return c / L**2


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------

def _direct(system, opts, trace):
    if not getattr(system.law, "is_linear", False):
        raise ValueError("direct solver needs a linear material law; use newton or picard")
    A = system.tangent()
    fac = dense_lu(A)
    trace.rcond = rcond_estimate(A, fac)
    x = lu_solve(fac, system.rhs)
    trace.residuals.append(float(np.linalg.norm(system.residual(x))))
    trace.iterations = 1
    return x


def _newton(system, opts, trace, x):
    r = system.residual(x)
    nr = float(np.linalg.norm(r))
    trace.residuals.append(nr)
    for _ in range(opts.max_iter):
        if nr <= opts.tol:
            return x
        dx = lu_solve(dense_lu(system.tangent(x)), r)
        t = 1.0
        while True:
            xn = x - t * dx
            rn = system.residual(xn)
            nrn = float(np.linalg.norm(rn))
            if nrn <= (1 - 1e-4 * t) * nr or t < 1 / 64:
                break
            t *= 0.5
        x, r, nr = xn, rn, nrn
        trace.iterations += 1
        trace.residuals.append(nr)
    return x


def _picard(system, opts, trace, x):
    ref = reference_law(system.law)
    fac = dense_lu(system.with_law(ref).tangent())
    theta = opts.theta if opts.theta is not None else default_theta(system.law, ref)
    trace.theta = theta
    r = system.residual(x)
    nr = float(np.linalg.norm(r))
    trace.residuals.append(nr)
    for _ in range(opts.max_iter):
        if nr <= opts.tol:
            return x
        x = x - theta * lu_solve(fac, r)
        r = system.residual(x)
        nr = float(np.linalg.norm(r))
        trace.iterations += 1
        trace.residuals.append(nr)
    return x


def solve(system, opts: SolveOptions | None = None, x0=None):
    """Solve ``system.residual(x) = 0``.

    Returns
    -------
    (CoupledSolution, SolveTrace)

    Raises
    ------
    ConvergenceError
        If the residual tolerance is not met within ``max_iter`` iterations.
    numpy.linalg.LinAlgError
        If a factored matrix is numerically singular.
    """
    opts = opts or SolveOptions()
    trace = SolveTrace(opts.method)
    x = np.zeros(system.size) if x0 is None else np.array(x0, dtype=float)
    if opts.method == "direct":
        x = _direct(system, opts, trace)
        trace.converged = trace.residuals[-1] <= max(opts.tol, 1e3 * np.finfo(float).eps
                                                     * np.linalg.norm(system.rhs))
    else:
        x = (_newton if opts.method == "newton" else _picard)(system, opts, trace, x)
        trace.converged = trace.residuals[-1] <= opts.tol
    if not trace.converged:
        raise ConvergenceError(f"{opts.method} stopped at residual {trace.residuals[-1]:.3e} "
                               f"after {trace.iterations} iterations (tol {opts.tol:g})", trace)
    return system.split(x), trace
