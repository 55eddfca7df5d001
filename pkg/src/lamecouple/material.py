"""Interior material laws on symmetric 2x2 tensors.

Symmetric tensors are stored as arrays with a trailing axis of length 3
holding ``(xx, yy, xy)``.  The shear entry is stored once, so the Frobenius
product weights it twice.  Tangents are 3x3 matrices acting on this storage:
``dsigma = T @ de``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "FROB_WEIGHT",
    "sym_tensor",
    "frobenius",
    "frobenius_norm",
    "trace",
    "deviator",
    "gamma",
    "Profile",
    "parse_profile",
    "LinearLame",
    "Hencky",
    "eval_stress",
    "eval_tangent",
    "monotonicity_constants",
    "sample_constants",
]

FROB_WEIGHT = np.array([1.0, 1.0, 2.0])
_IDENTITY = np.array([1.0, 1.0, 0.0])


def sym_tensor(xx, yy, xy) -> np.ndarray:
    return np.stack(np.broadcast_arrays(*map(np.asarray, (xx, yy, xy))), axis=-1).astype(float)


def frobenius(a, b):
    """Frobenius product ``a : b`` of stored symmetric tensors."""
    return np.sum(FROB_WEIGHT * np.asarray(a) * np.asarray(b), axis=-1)


def frobenius_norm(a):
    return np.sqrt(frobenius(a, a))


def trace(e):
    e = np.asarray(e)
    return e[..., 0] + e[..., 1]


def deviator(e):
    e = np.asarray(e, dtype=float)
    return e - 0.5 * trace(e)[..., None] * _IDENTITY


def gamma(e):
    """Deviatoric invariant ``dev(e) : dev(e)``."""
    e = np.asarray(e, dtype=float)
    return 0.5 * (e[..., 0] - e[..., 1]) ** 2 + 2.0 * e[..., 2] ** 2


# ---------------------------------------------------------------------------
# shear profiles for the Hencky law
# ---------------------------------------------------------------------------

_SAMPLE_T = np.concatenate([[0.0], np.logspace(-8, 8, 4001)])


@dataclass(frozen=True)
class Profile:
    """Scalar shear function ``mu(t)`` on ``[0, inf)`` with its derivative."""

    name: str
    f: Callable = field(repr=False)
    df: Callable | None = field(default=None, repr=False)

    def __call__(self, t):
        return self.f(np.asarray(t, dtype=float))

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.df is not None:
            return self.df(t)
        h = 1e-6 * np.maximum(1.0, np.abs(t))
        return (self.f(t + h) - self.f(np.maximum(t - h, 0.0))) / (t + h - np.maximum(t - h, 0.0))

    def radial(self, t):
        """``mu(t) + 2 t mu'(t)``: the shear modulus along the deviatoric ray."""
        t = np.asarray(t, dtype=float)
        return self(t) + 2.0 * t * self.derivative(t)

    def _extremum(self, g, sign):
        vals = sign * g(_SAMPLE_T)
        k = int(np.argmin(vals))
        best = vals[k]
        lo, hi = _SAMPLE_T[max(k - 1, 0)], _SAMPLE_T[min(k + 1, len(_SAMPLE_T) - 1)]
        if hi > lo:
            res = minimize_scalar(lambda t: sign * float(g(t)), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12 * max(1.0, hi)})
            best = min(best, res.fun)
        return sign * float(best)

    def bounds(self) -> tuple[float, float]:
        """(inf, sup) over ``t >= 0`` of ``min(mu, mu + 2 t mu')`` and ``max(...)``, by sampling."""
        lo = min(self._extremum(self, 1), self._extremum(self.radial, 1))
        hi = max(self._extremum(self, -1), self._extremum(self.radial, -1))
        return lo, hi


def _const(c):
    return Profile(f"const({c:g})", lambda t: np.full_like(t, c, dtype=float), lambda t: np.zeros_like(t))


def _rational(a, b):
    return Profile(f"rational({a:g},{b:g})", lambda t: a + b / (1.0 + t), lambda t: -b / (1.0 + t) ** 2)


def _arctan(a, b):
    return Profile(f"arctan({a:g},{b:g})", lambda t: a + b * np.arctan(t), lambda t: b / (1.0 + t**2))


_PROFILES = {"const": _const, "rational": _rational, "arctan": _arctan}


def parse_profile(text: str) -> Profile:
    """Parse ``const(c)``, ``rational(a,b)`` (``a + b/(1+t)``) or ``arctan(a,b)`` (``a + b*atan(t)``)."""
    m = re.fullmatch(r"\s*(\w+)\s*\(([^)]*)\)\s*", text)
    if not m or m.group(1) not in _PROFILES:
        raise ValueError(f"unknown shear profile {text!r}; expected one of {sorted(_PROFILES)}")
    args = [float(a) for a in m.group(2).split(",") if a.strip()]
    try:
        return _PROFILES[m.group(1)](*args)
    except TypeError:
        raise ValueError(f"wrong number of arguments in {text!r}") from None


# ---------------------------------------------------------------------------
# laws
# ---------------------------------------------------------------------------

def _lame_matrix(lam, mu):
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    T = np.zeros(lam.shape + (3, 3))
    T[..., 0, 0] = T[..., 1, 1] = lam + 2 * mu
    T[..., 0, 1] = T[..., 1, 0] = lam
    T[..., 2, 2] = 2 * mu
    return T


@dataclass(frozen=True)
class LinearLame:
    """``sigma = lam tr(e) I + 2 mu e``."""

    lam: float
    mu: float

    def __post_init__(self):
        if not (self.lam > 0 and self.mu > 0):
            raise ValueError("Lame constants must be positive")

    @property
    def is_linear(self) -> bool:
        return True

    def stress(self, e):
        e = np.asarray(e, dtype=float)
        return self.lam * trace(e)[..., None] * _IDENTITY + 2 * self.mu * e

    def tangent(self, e):
        shape = np.shape(e)[:-1]
        return np.broadcast_to(_lame_matrix(self.lam, self.mu), shape + (3, 3)).copy()

    def constants(self):
        return 2.0 * self.mu, 6.0 * self.lam + 4.0 * self.mu


@dataclass(frozen=True)
class Hencky:
    """Hencky-von Mises law ``sigma = (K - mu(g)) tr(e) I + 2 mu(g) e`` with ``g = gamma(e)``.

    Parameters
    ----------
    K : float
        Bulk modulus.
    mu_tilde : Profile
        Shear function; ``mu_tilde(t) >= alpha`` and ``mu_tilde(t) + 2 t mu_tilde'(t) >= alpha``
        are required so the law is strongly monotone, and ``mu_tilde(t) <= K - beta``.
    alpha, beta : float
        Certified lower bound and margin.  ``alpha=None`` takes the sampled infimum.
    """

    K: float
    mu_tilde: Profile
    alpha: float | None = None
    beta: float = 0.0

    def __post_init__(self):
        if isinstance(self.mu_tilde, str):
            object.__setattr__(self, "mu_tilde", parse_profile(self.mu_tilde))
        lo, _ = self.mu_tilde.bounds()
        if self.alpha is None:
            object.__setattr__(self, "alpha", lo)
        sup_mu = self.mu_tilde._extremum(self.mu_tilde, -1)
        tol = 1e-10 * max(1.0, abs(lo))
        if not self.K > 0:
            raise ValueError("bulk modulus must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if lo < self.alpha - tol:
            raise ValueError(f"shear profile drops to {lo:.6g} below alpha={self.alpha:g}")
        if self.beta < 0 or sup_mu > self.K - self.beta + tol:
            raise ValueError(f"shear profile reaches {sup_mu:.6g} above K - beta = {self.K - self.beta:g}")

    @property
    def is_linear(self) -> bool:
        return False

    def stress(self, e):
        e = np.asarray(e, dtype=float)
        m = self.mu_tilde(gamma(e))[..., None]
        return (self.K - m) * trace(e)[..., None] * _IDENTITY + 2 * m * e

    def tangent(self, e):
        e = np.asarray(e, dtype=float)
        g = gamma(e)
        m = self.mu_tilde(g)
        dm = self.mu_tilde.derivative(g)
        T = _lame_matrix(self.K - m, m)
        d = deviator(e)
        wd = FROB_WEIGHT * d
        return T + 4.0 * dm[..., None, None] * d[..., :, None] * wd[..., None, :]

    def constants(self):
        _, hi = self.mu_tilde.bounds()
        return 2.0 * min(self.alpha, self.K), 2.0 * max(self.K, hi)


def eval_stress(law, e):
    return law.stress(e)


def eval_tangent(law, e):
    return law.tangent(e)


def monotonicity_constants(law) -> tuple[float, float]:
    """``(c_A, L_A)`` for pointwise strong monotonicity and Lipschitz continuity."""
    return law.constants()


def sample_constants(law, n: int = 2000, scale: float = 1.0, seed: int = 0) -> tuple[float, float]:
    """Sampled monotonicity and Lipschitz quotients over random tensor pairs.

    Returns the smallest ``<A e1 - A e2, e1 - e2> / |e1 - e2|^2`` and the largest
    ``|A e1 - A e2| / |e1 - e2|`` seen.
    """
    rng = np.random.default_rng(seed)
    mag = scale * np.exp(rng.uniform(-4, 3, size=(n, 1)))
    e1 = mag * rng.standard_normal((n, 3))
    e2 = e1 + mag * rng.standard_normal((n, 3)) * np.exp(rng.uniform(-6, 0, size=(n, 1)))
    de = e1 - e2
    ds = law.stress(e1) - law.stress(e2)
    nn = frobenius(de, de)
    mono = frobenius(ds, de) / nn
    lip = np.sqrt(frobenius(ds, ds) / nn)
    return float(mono.min()), float(lip.max())


def law_from_config(cfg: dict):
    """Build a law from ``material.*`` keys (already stripped of the prefix)."""
    kind = cfg.get("kind", "linear").lower()
    if kind in ("linear", "lame", "linearlame"):
        return LinearLame(float(cfg.get("lambda", 1.0)), float(cfg.get("mu", 1.0)))
    if kind == "hencky":
        alpha = cfg.get("alpha")
        return Hencky(float(cfg.get("K", 5.0)), parse_profile(cfg.get("mu_tilde", "rational(2,1)")),
                      None if alpha is None else float(alpha), float(cfg.get("beta", 0.0)))
    raise ValueError(f"unknown material.kind {kind!r}")

