"""Command-line driver: config parsing, exit codes and artifacts."""
import csv
from pathlib import Path

import numpy as np
import pytest

from lamecouple.cli import main
from lamecouple.config import ConfigError, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_defaults(self):
        cfg = parse_config("experiment = converge\n")
        assert cfg.levels == 4 and cfg.h0 == 0.25 and cfg.methods == ("symmetric",)
        assert cfg.stabilize is False and cfg.solver.method == "direct"

    def test_comments_and_all_methods(self):
        cfg = parse_config("# header\nexperiment = verify  # trailing\ncoupling.method = all\n")
        assert cfg.methods == ("symmetric", "jn", "bmc")

    def test_polygon(self):
        cfg = parse_config("experiment = solve\ngeometry.polygon = 0,0; 2,0; 2,1; 0,1\n")
        assert cfg.polygon[2] == (2.0, 1.0) and cfg.geometry_name == "polygon"

    def test_nonlinear_defaults_to_newton(self):
        cfg = parse_config("experiment = solve\nmaterial.kind = hencky\nmaterial.alpha = 1.875\n"
                           "material.beta = 1\n")
        assert cfg.solver.method == "newton"

    @pytest.mark.parametrize("text", [
        "experiment = fly\n",
        "experiment = solve\ncoupling.method = fem\n",
        "experiment = solve\ngeometry.levels = 0\n",
        "experiment = solve\ngeometry.h0 = -1\n",
        "experiment = solve\ngeometry.polygon = 0,0; 1,0\n",
        "experiment = solve\nsolver.tol = small\n",
        "experiment = solve\nmaterial.lambda = -3\n",
        "experiment = solve\ncoupling.stabilize = maybe\n",
        "experiment = solve\ncoupling.xi = p2\n",
        "experiment = solve\nmaterial.kind = hencky\nsolver.method = direct\n",
        "experiment = solve\nbogus.key = 1\n",
        "experiment = solve\nno equals sign here\n",
    ])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)


class TestExitCodes:
    def test_missing_file(self, tmp_path, capsys):
        assert main([str(tmp_path / "nope.cfg")]) == 2
        assert "config error" in capsys.readouterr().err

    def test_malformed_mesh(self, tmp_path):
        bad = tmp_path / "bad.mesh"
        bad.write_text("3\n")
        cfg = write_cfg(tmp_path, f"experiment = centroid-check\ngeometry.surface = {bad}\n")
        assert main([str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_bad_config(self, tmp_path):
        assert main([str(write_cfg(tmp_path, "experiment = solve\nfoo = 1\n"))]) == 2

    def test_failed_check(self, tmp_path):
        strip = tmp_path / "strip.mesh"
        strip.write_text("mesh3d-surface 5 2\n0 0 0\n2 0 0\n1 1 0\n4 0 0\n3 1 0\n0 1 2\n1 3 4\n")
        cfg = write_cfg(tmp_path, f"experiment = centroid-check\ngeometry.surface = {strip}\n")
        assert main([str(cfg), "--out", str(tmp_path / "o")]) == 1
        assert ",fail," in (tmp_path / "o" / "verify.csv").read_text()

    def test_nonconvergence(self, tmp_path):
        cfg = write_cfg(tmp_path, "experiment = solve\ngeometry.levels = 1\nmaterial.kind = hencky\n"
                        "material.alpha = 1.875\nmaterial.beta = 1\nproblem.name = hencky-load\n"
                        "solver.method = picard\nsolver.max_iter = 2\n")
        assert main([str(cfg), "--out", str(tmp_path / "o")]) == 1


class TestExperiments:
    def test_rbm_check(self, tmp_path):
        assert main([str(CONFIGS / "rbm_square.cfg"), "--out", str(tmp_path)]) == 0
        line = (tmp_path / "verify.csv").read_text().splitlines()[0]
        assert line.startswith("rbm_independence,pass,sigma_min=")
        assert (tmp_path / "summary.txt").exists()

    def test_centroid_check(self, tmp_path):
        assert main([str(CONFIGS / "centroid_tetra.cfg"), "--out", str(tmp_path)]) == 0
        assert (tmp_path / "verify.csv").read_text().startswith("noncollinear_centroids,pass")

    def test_converge(self, tmp_path):
        assert main([str(CONFIGS / "converge_square.cfg"), "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "results.csv")
        assert len(rows) == 4
        errs = [float(r["err_eps"]) for r in rows]
        assert all(b < a for a, b in zip(errs[:-1], errs[1:]))
        assert list(rows[0]) == ["level", "h", "dofs", "err_eps", "err_phi", "rate_eps", "rate_phi", "iters"]

    def test_deterministic(self, tmp_path):
        for d in ("a", "b"):
            assert main([str(CONFIGS / "converge_square.cfg"), "--out", str(tmp_path / d)]) == 0
        assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()

    def test_solve_dump_matrices(self, tmp_path):
        cfg = write_cfg(tmp_path, "experiment = solve\ngeometry.levels = 1\ncoupling.method = jn\n"
                        "problem.name = kelvin-exterior\n")
        assert main([str(cfg), "--out", str(tmp_path / "o"), "--dump-matrices", "--verbose"]) == 0
        mats = tmp_path / "o" / "matrices"
        V = np.load(mats / "jn_level0_V.npy")
        assert np.allclose(V, V.T)
        A = np.load(mats / "jn_level0_A.npy")
        assert A.shape[0] == len(np.load(mats / "jn_level0_rhs.npy"))
        assert len(read_rows(tmp_path / "o" / "displacement.csv")) > 0

    def test_contraction(self, tmp_path):
        cfg = write_cfg(tmp_path, "experiment = contraction\ngeometry.preset = lshape\ngeometry.levels = 2\n")
        assert main([str(cfg), "--out", str(tmp_path / "o")]) == 0
        rows = read_rows(tmp_path / "o" / "contraction.csv")
        assert all(0.4 < float(r["c_K_h"]) < 1 for r in rows)

    def test_verify(self, tmp_path):
        cfg = write_cfg(tmp_path, "experiment = verify\ngeometry.levels = 2\ncoupling.method = all\n"
                        "problem.name = kelvin-exterior\n")
        assert main([str(cfg), "--out", str(tmp_path / "o")]) == 0
        names = {line.split(",")[0] for line in (tmp_path / "o" / "verify.csv").read_text().splitlines()}
        assert {"rbm_independence", "noncollinear_centroids", "kernel_identities",
                "stabilized_ellipticity", "stabilization_equivalence", "jn_condition_linear"} <= names
