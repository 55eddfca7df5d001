"""Experiment configuration: flat ``section.key = value`` files with ``#`` comments.

Example::

    experiment = converge
    geometry.preset = square
    geometry.levels = 4
    material.kind = linear
    coupling.method = symmetric
    problem.name = smooth
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .coupling import METHODS
from .manufactured import PROBLEMS
from .material import law_from_config
from .mesh import LSHAPE, SQUARE
from .solver import SolveOptions

__all__ = ["ConfigError", "ExperimentConfig", "EXPERIMENTS", "parse_config", "load_config"]

EXPERIMENTS = ("solve", "verify", "converge", "contraction", "rbm-check", "centroid-check")
PRESETS = {"square": SQUARE, "lshape": LSHAPE}
SURFACES = ("tetra", "cube", "icosahedron")

# key -> default (None means no default)
_KEYS = {
    "experiment": None,
    "output.dir": "results",
    "geometry.preset": "square",
    "geometry.polygon": None,
    "geometry.h0": "0.25",
    "geometry.levels": "4",
    "geometry.surface": None,
    "material.kind": "linear",
    "material.lambda": "1.0",
    "material.mu": "1.0",
    "material.K": "5.0",
    "material.mu_tilde": "rational(2,1)",
    "material.alpha": None,
    "material.beta": "0.0",
    "exterior.lambda": "1.0",
    "exterior.mu": "1.0",
    "coupling.method": "symmetric",
    "coupling.stabilize": "false",
    "coupling.xi": "p0-projected",
    "problem.name": "smooth",
    "solver.method": None,
    "solver.tol": "1e-10",
    "solver.max_iter": "200",
    "solver.theta": None,
}


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    output_dir: str
    polygon: tuple
    geometry_name: str
    h0: float
    levels: int
    surface: str | None
    material: object
    lam_ext: float
    mu_ext: float
    methods: tuple
    stabilize: bool
    xi: str
    problem: str
    solver: SolveOptions
    raw: dict = field(default_factory=dict, repr=False)


def _bool(text: str, key: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _polygon(text: str) -> tuple:
    """``x0,y0; x1,y1; ...`` in counterclockwise order."""
    try:
        pts = tuple(tuple(float(c) for c in p.split(",")) for p in text.split(";") if p.strip())
    except ValueError:
        raise ConfigError(f"geometry.polygon: cannot parse {text!r}") from None
    if len(pts) < 3 or any(len(p) != 2 for p in pts):
        raise ConfigError("geometry.polygon needs at least three 'x,y' vertices")
    return pts


def _read_pairs(text: str) -> dict:
    cp = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                   delimiters=("=",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return {k.strip(): v.strip() for k, v in cp.items("config")}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text."""
    given = _read_pairs(text)
    unknown = sorted(set(given) - set(_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {k: v for k, v in _KEYS.items() if v is not None}
    cfg.update(given)

    experiment = cfg.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}; got {experiment!r}")

    if "geometry.polygon" in cfg:
        polygon, gname = _polygon(cfg["geometry.polygon"]), "polygon"
    else:
        gname = cfg["geometry.preset"]
        if gname not in PRESETS:
            raise ConfigError(f"geometry.preset must be one of {', '.join(PRESETS)}; got {gname!r}")
        polygon = tuple(PRESETS[gname])
    h0 = _float(cfg["geometry.h0"], "geometry.h0")
    try:
        levels = int(cfg["geometry.levels"])
    except ValueError:
        raise ConfigError("geometry.levels must be an integer") from None
    if levels < 1:
        raise ConfigError("geometry.levels must be at least 1")
    if not h0 > 0:
        raise ConfigError("geometry.h0 must be positive")
    surface = cfg.get("geometry.surface")
    if surface is not None and surface not in SURFACES and not Path(surface).suffix == ".mesh":
        raise ConfigError(f"geometry.surface must be one of {', '.join(SURFACES)} or a .mesh file")

    mat = {k.split(".", 1)[1]: v for k, v in cfg.items() if k.startswith("material.")}
    try:
        material = law_from_config(mat)
    except ValueError as exc:
        raise ConfigError(f"material: {exc}") from None
    lam_ext = _float(cfg["exterior.lambda"], "exterior.lambda")
    mu_ext = _float(cfg["exterior.mu"], "exterior.mu")
    if not (lam_ext > 0 and mu_ext > 0):
        raise ConfigError("exterior Lame constants must be positive")

    method = cfg["coupling.method"]
    if method == "all":
        methods = METHODS
    elif method in METHODS:
        methods = (method,)
    else:
        raise ConfigError(f"coupling.method must be one of {', '.join(METHODS)} or all; got {method!r}")
    xi = cfg["coupling.xi"]
    if xi not in ("p0-projected", "p1-rigid"):
        raise ConfigError(f"coupling.xi must be p0-projected or p1-rigid; got {xi!r}")
    problem = cfg["problem.name"]
    if problem not in PROBLEMS:
        raise ConfigError(f"problem.name must be one of {', '.join(PROBLEMS)}; got {problem!r}")

    smethod = cfg.get("solver.method") or ("direct" if material.is_linear else "newton")
    theta = cfg.get("solver.theta")
    try:
        solver = SolveOptions(smethod, _float(cfg["solver.tol"], "solver.tol"),
                              int(cfg["solver.max_iter"]),
                              None if theta is None else _float(theta, "solver.theta"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if smethod == "direct" and not material.is_linear:
        raise ConfigError("solver.method = direct needs material.kind = linear")

    return ExperimentConfig(experiment, cfg["output.dir"], polygon, gname, h0, levels, surface,
                            material, lam_ext, mu_ext, methods,
                            _bool(cfg["coupling.stabilize"], "coupling.stabilize"), xi, problem,
                            solver, cfg)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
