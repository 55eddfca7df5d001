"""Command line experiment runner.

``lamecouple <config> [--out DIR] [--dump-matrices] [--verbose]``

Exit codes: 0 when every requested check passes, 1 on a failed check or a
solver failure, 2 on an invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    VerificationReport,
    check_centroids,
    check_jn_condition,
    check_kernel_identities,
    check_rbm_independence,
    check_stabilized_ellipticity,
    convergence_study,
    estimate_contraction_constant,
    level_meshes,
    observed_rates,
    write_reports,
)
from .bem import BoundarySpace, assemble_layer_matrices
from .config import ConfigError, ExperimentConfig, load_config
from .coupling import assemble_system
from .fem import FemSpace
from .manufactured import build_manufactured
from .material import LinearLame, sample_constants
from .mesh import read_mesh, scale_to_unit
from .solver import ConvergenceError, solve
from .surface import icosahedron, shipped_surfaces

__all__ = ["main", "run"]

log = logging.getLogger("lamecouple")

RESULT_COLUMNS = ["level", "h", "dofs", "err_eps", "err_phi", "rate_eps", "rate_phi", "iters"]


class CheckFailed(RuntimeError):
    pass


def _num(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "nan" if math.isnan(v) else f"{v:.15e}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) if not isinstance(v, str) else v for v in r])


def _result_name(cfg: ExperimentConfig, method: str) -> str:
    return "results.csv" if len(cfg.methods) == 1 else f"results_{method}.csv"


def _dump(out: Path, tag: str, system) -> None:
    d = out / "matrices"
    d.mkdir(exist_ok=True)
    L = system.layers
    for name, mat in (("V", L.V), ("K", L.Kmat), ("M", L.M), ("W", L.W),
                      ("A", system.tangent()), ("rhs", system.rhs)):
        np.save(d / f"{tag}_{name}.npy", mat)


def _problem(cfg: ExperimentConfig):
    return build_manufactured(cfg.problem, cfg.material, cfg.lam_ext, cfg.mu_ext)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _converge(cfg, out, dump):
    problem = _problem(cfg)
    for method in cfg.methods:
        res = convergence_study(problem, method, cfg.levels, cfg.polygon, cfg.h0, cfg.solver,
                                cfg.stabilize, cfg.xi, keep=dump)
        re = observed_rates([r.err_eps for r in res])
        rp = observed_rates([r.err_phi for r in res])
        rows = [[r.level, r.h, r.dofs, r.err_eps, r.err_phi, a, b, r.iters] for r, a, b in zip(res, re, rp)]
        _write_csv(out / _result_name(cfg, method), RESULT_COLUMNS, rows)
        for r in res:
            log.info("%s level %d h=%.4g dofs=%d err_eps=%.3e err_phi=%.3e iters=%d",
                     method, r.level, r.h, r.dofs, r.err_eps, r.err_phi, r.iters)
            if dump:
                _dump(out, f"{method}_level{r.level}", r.system)
        print(f"{method}: {len(res)} levels, final err_eps={res[-1].err_eps:.3e}, rate_eps={re[-1]:.3f}")
    return []


def _solve(cfg, out, dump):
    """Single solve on the finest level, with the discrete fields written out."""
    problem = _problem(cfg)
    for method in cfg.methods:
        res = convergence_study(problem, method, cfg.levels, cfg.polygon, cfg.h0, cfg.solver,
                                cfg.stabilize, cfg.xi, keep=True)[-1:]
        r = res[0]
        _write_csv(out / _result_name(cfg, method), RESULT_COLUMNS,
                   [[r.level, r.h, r.dofs, r.err_eps, r.err_phi, math.nan, math.nan, r.iters]])
        sys_, rec, sol = r.system, r.scale, r.solution
        x = rec.inverse(sys_.sp.mesh.nodes)
        u = rec.unscale_displacement(sol.u).reshape(-1, 2)
        suffix = "" if len(cfg.methods) == 1 else f"_{method}"
        _write_csv(out / f"displacement{suffix}.csv", ["x", "y", "u1", "u2"],
                   np.column_stack([x, u]).tolist())
        mid = rec.inverse(sys_.bs.midpoints)
        _write_csv(out / f"density{suffix}.csv", ["x", "y", "phi1", "phi2"],
                   np.column_stack([mid, sol.phi.reshape(-1, 2)]).tolist())
        if dump:
            _dump(out, f"{method}_level{r.level}", sys_)
        print(f"{method}: h={r.h:.4g} dofs={r.dofs} iters={r.iters} err_eps={r.err_eps:.3e}")
    return []


def _surfaces(cfg):
    if cfg.surface is None:
        return {"tetra": shipped_surfaces()["tetra"]}
    if cfg.surface == "icosahedron":
        return {"icosahedron": icosahedron()}
    if cfg.surface in ("tetra", "cube"):
        return {cfg.surface: shipped_surfaces()[cfg.surface]}
    return {Path(cfg.surface).stem: read_mesh(cfg.surface)}


def _tag(report: VerificationReport, **ctx) -> VerificationReport:
    report.certificates = {**report.certificates, **ctx}
    return report


class _Collector:
    """Accumulates reports; with ``fail_fast`` stops at the first failure."""

    def __init__(self, fail_fast: bool):
        self.reports = []
        self.fail_fast = fail_fast

    def add(self, report):
        self.reports.append(report)
        log.info(report.summary())
        if self.fail_fast and not report.passed:
            raise CheckFailed(report.summary())


def _rbm_check(cfg, out, dump, col=None):
    col = col or _Collector(False)
    if cfg.surface is not None:
        for name, sm in _surfaces(cfg).items():
            col.add(_tag(check_rbm_independence(sm), mesh=name))
        return col.reports
    for lev, m0 in enumerate(level_meshes(cfg.polygon, cfg.levels, cfg.h0)):
        m, _ = scale_to_unit(m0)
        col.add(_tag(check_rbm_independence(BoundarySpace(m)), mesh=cfg.geometry_name, level=lev))
    return col.reports


def _centroid_check(cfg, out, dump, col=None):
    col = col or _Collector(False)
    for name, sm in _surfaces(cfg).items():
        col.add(_tag(check_centroids(sm), mesh=name))
    return col.reports


def _contraction(cfg, out, dump, col=None, rows_out=None):
    col = col or _Collector(False)
    rows, values = [], []
    for lev, m0 in enumerate(level_meshes(cfg.polygon, cfg.levels, cfg.h0)):
        m, _ = scale_to_unit(m0)
        est = estimate_contraction_constant(BoundarySpace(m), cfg.lam_ext, cfg.mu_ext, h=m0.h)
        rows.append([lev, est.h, est.n_dofs, est.c_K_h])
        values.append(est.c_K_h)
        col.add(VerificationReport("contraction_constant", 0.4 < est.c_K_h < 1.0,
                                   {"level": lev, "h": m0.h, "c_K_h": est.c_K_h},
                                   {"lower": 0.4, "upper": 1.0}))
    drop = max([0.0] + [a - b for a, b in zip(values[:-1], values[1:])])
    col.add(VerificationReport("contraction_monotone", drop <= 1e-3, {"max_decrease": drop},
                               {"tol": 1e-3}))
    _write_csv(out / "contraction.csv", ["level", "h", "dofs", "c_K_h"], rows)
    if rows_out is not None:
        rows_out.extend(values)
    return col.reports


def _verify(cfg, out, dump):
    """Every certificate on the configured geometry; stops at the first failure."""
    col = _Collector(True)
    try:
        _rbm_check(cfg, out, dump, col)
        for name, sm in {**shipped_surfaces(), "icosahedron": icosahedron()}.items():
            col.add(_tag(check_rbm_independence(sm), mesh=name))
            col.add(_tag(check_centroids(sm), mesh=name))
        c_A, _ = cfg.material.constants()
        mono, _ = sample_constants(cfg.material)
        col.add(VerificationReport("material_monotonicity", mono >= 0.99 * c_A,
                                   {"sampled": mono, "c_A": c_A}, {"factor": 0.99}))
        data = _problem(cfg).data()
        for lev, m0 in enumerate(level_meshes(cfg.polygon, cfg.levels, cfg.h0)):
            m, rec = scale_to_unit(m0)
            sp, bs = FemSpace(m), BoundarySpace(m)
            L = assemble_layer_matrices(bs, cfg.lam_ext, cfg.mu_ext)
            col.add(_tag(check_kernel_identities(bs, cfg.lam_ext, cfg.mu_ext, L), level=lev))
            d = data.scaled(rec)
            for method in cfg.methods:
                plain = assemble_system(method, sp, bs, d, layers=L)
                stab = assemble_system(method, sp, bs, d, stabilize=True, xi=cfg.xi, layers=L)
                col.add(_tag(check_stabilized_ellipticity(plain, stab), level=lev, method=method))
                a, _ = solve(plain, cfg.solver)
                b, _ = solve(stab, cfg.solver)
                diff = float(np.linalg.norm(a.x - b.x) / max(np.linalg.norm(b.x), 1e-300))
                # p1-rigid agrees only up to an O(h^3) consistency error
                rtol = 1e-8 if cfg.xi == "p0-projected" else 1e-6
                col.add(VerificationReport("stabilization_equivalence", diff <= rtol,
                                           {"level": lev, "method": method, "rel_diff": diff},
                                           {"rtol": rtol}))
                if dump:
                    _dump(Path(out), f"{method}_level{lev}", stab)
        cks = []
        _contraction(cfg, out, dump, col, cks)
        if isinstance(cfg.material, LinearLame):
            jn = check_jn_condition(None, cfg.lam_ext, cfg.mu_ext, cks[-1], "linear",
                                    lam_int=cfg.material.lam, mu_int=cfg.material.mu)
        else:
            jn = check_jn_condition(None, cfg.lam_ext, cfg.mu_ext, cks[-1], "hencky", law=cfg.material)
        col.add(jn)
    except CheckFailed:
        pass
    return col.reports


EXPERIMENT_RUNNERS = {
    "solve": _solve,
    "converge": _converge,
    "verify": _verify,
    "contraction": _contraction,
    "rbm-check": _rbm_check,
    "centroid-check": _centroid_check,
}


def run(cfg: ExperimentConfig, out: Path, dump: bool = False) -> int:
    """Run one experiment and write its artifacts into ``out``; returns the exit code."""
    out.mkdir(parents=True, exist_ok=True)
    reports = EXPERIMENT_RUNNERS[cfg.experiment](cfg, out, dump)
    if reports:
        write_reports(out / "verify.csv", reports)
        (out / "summary.txt").write_text("".join(r.summary() + "\n" for r in reports))
        for r in reports:
            print(r.summary())
        return 0 if all(r.passed for r in reports) else 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lamecouple",
                                     description="FEM-BEM coupling experiments for planar elasticity")
    parser.add_argument("config", help="experiment configuration file")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--dump-matrices", action="store_true", help="save assembled matrices as .npy")
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        out = Path(args.out or cfg.output_dir)
        return run(cfg, out, args.dump_matrices)
    except ConfigError as exc:
        print(f"lamecouple: config error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"lamecouple: solver failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"lamecouple: invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
