"""Certificates: rigid projections, centroids, contraction, JN condition, convergence."""
import numpy as np
import pytest

from conftest import level
from lamecouple.analysis import (
    VerificationReport,
    check_centroids,
    check_jn_condition,
    check_kernel_identities,
    check_rbm_independence,
    check_stabilized_ellipticity,
    convergence_study,
    estimate_contraction_constant,
    find_noncollinear_centroids,
    observed_rates,
    strain_error,
    write_reports,
)
from lamecouple.bem import BoundarySpace
from lamecouple.coupling import assemble_system, ProblemData
from lamecouple.fem import FemSpace, interpolate
from lamecouple.manufactured import build_manufactured
from lamecouple.material import Hencky, LinearLame, parse_profile
from lamecouple.mesh import LSHAPE, Mesh, unit_square
from lamecouple.surface import SurfaceMesh3, cube, icosahedron, refine_surface, tetrahedron


def rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    return q if np.linalg.det(q) > 0 else -q


class TestRbmIndependence:
    def test_square(self):
        rep = check_rbm_independence(level("square", 1 / 4).bs)
        assert rep.passed and rep.certificates["D"] == 3

    def test_lshape_mesh_accepted(self):
        assert check_rbm_independence(level("lshape", 1 / 4).mesh).passed

    @pytest.mark.parametrize("builder", [tetrahedron, cube])
    def test_surfaces(self, builder):
        rep = check_rbm_independence(builder())
        assert rep.passed and rep.certificates["D"] == 6

    def test_single_segment_fails(self):
        rep = check_rbm_independence(np.array([[[0.0, 0.0], [1.0, 0.0]]]))
        assert not rep.passed

    def test_collinear_segments_pass_in_2d(self):
        # midpoints on a line still separate the planar rotation from translations
        segs = np.array([[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [2.0, 0.0]]])
        assert check_rbm_independence(segs).passed

    def test_collinear_centroid_strip_fails_in_3d(self):
        tris = np.array([[[0, 0, 0], [2, 0, 0], [1, 1, 0]], [[2, 0, 0], [4, 0, 0], [3, 1, 0]]], dtype=float)
        assert not check_rbm_independence(tris).passed

    def test_degenerate(self):
        with pytest.raises(ValueError):
            check_rbm_independence(np.array([[[0.0, 0.0], [0.0, 0.0]]]))
        with pytest.raises(ValueError):
            check_rbm_independence("square")

    def test_rigid_motion_invariance(self, rng):
        sm = cube()
        Q = rotation(rng)
        moved = SurfaceMesh3(sm.nodes @ Q.T + rng.standard_normal(3), sm.triangles)
        assert check_rbm_independence(moved).passed == check_rbm_independence(sm).passed

    def test_scaling_of_rotation_block(self):
        bs = level("square", 1 / 4).bs
        t = 3.0
        m = Mesh(t * bs.mesh.nodes, bs.mesh.triangles, bs.mesh.boundary_edges)
        from lamecouple.analysis import _projection_gram
        G1, Gt = _projection_gram(bs), _projection_gram(BoundarySpace(m))
        assert np.allclose(Gt[:2, :2], t * G1[:2, :2])
        assert np.allclose(Gt[2, 2], t**3 * G1[2, 2])


class TestCentroids:
    @pytest.mark.parametrize("builder", [tetrahedron, cube, icosahedron])
    def test_closed_surfaces(self, builder):
        sm = builder()
        a, b, c = find_noncollinear_centroids(sm)
        x = sm.centroids
        assert np.linalg.norm(np.cross(x[b] - x[a], x[c] - x[a])) > 1e-10 * sm.scale**2
        assert check_centroids(sm).passed

    def test_randomized_refinements(self, rng):
        for _ in range(10):
            sm = icosahedron()
            for _ in range(int(rng.integers(0, 3))):
                sm = refine_surface(sm, project_to_sphere=True)
            nodes = sm.nodes * rng.uniform(0.8, 1.2, size=(len(sm.nodes), 1))
            sm = SurfaceMesh3(nodes @ rotation(rng).T, sm.triangles)
            assert find_noncollinear_centroids(sm) is not None

    def test_two_triangle_strip_fails(self):
        strip = SurfaceMesh3([(0, 0, 0), (2, 0, 0), (1, 1, 0), (4, 0, 0), (3, 1, 0)], [(0, 1, 2), (1, 3, 4)])
        assert find_noncollinear_centroids(strip) is None
        rep = check_centroids(strip)
        assert not rep.passed and "exhausted" in rep.message


class TestContraction:
    def test_square_levels(self):
        vals = [estimate_contraction_constant(level("square", h).bs, 1, 1).c_K_h for h in (1 / 4, 1 / 8, 1 / 16)]
        assert all(0.4 < v < 1 for v in vals)
        assert all(b >= a - 1e-3 for a, b in zip(vals[:-1], vals[1:]))

    def test_lshape_larger_than_square(self):
        sq = estimate_contraction_constant(level("square", 1 / 8).bs, 1, 1).c_K_h
        ls = estimate_contraction_constant(level("lshape", 1 / 8).bs, 1, 1).c_K_h
        assert sq < ls < 1

    def test_rigid_traces_are_eigenvectors(self):
        # (1/2 + K) r = 0 makes rigid traces null vectors of A but not of B
        L = level("square", 1 / 8)
        p = L.layers.p1_test
        C = 0.5 * p["M11"] + p["K11"]
        r = L.bs.interpolate_p1(lambda x: np.column_stack([-x[:, 1], x[:, 0]]))
        assert np.abs(C @ r).max() <= 1e-10


class TestJnCondition:
    def test_theorem_example(self):
        rep = check_jn_condition(3.0, 1.0, 1.0, 0.9)
        assert rep.passed
        assert rep.certificates["lhs"] == 6.0 and rep.certificates["rhs"] == 4.5
        assert rep.certificates["margin"] == 1.5

    def test_linear_example(self):
        rep = check_jn_condition(None, 1.0, 1.0, 0.99, "linear", lam_int=1.0, mu_int=1.0)
        assert rep.passed
        assert rep.certificates["eta"] == 1.0 and rep.certificates["rhs"] == 0.2475

    def test_boundary_case_fails(self):
        # binary-exact inputs so that lhs == rhs holds exactly
        rep = check_jn_condition(1.25, 1.0, 1.0, 0.5)
        assert not rep.passed and rep.certificates["margin"] == 0.0

    def test_hencky_variant(self):
        law = Hencky(5.0, parse_profile("rational(2,1)"), alpha=1.875, beta=1.0)
        rep = check_jn_condition(None, 1.0, 1.0, 0.9, "hencky", law=law)
        # eta = min(K - sup mu, inf mu) = min(2, 1.875)
        assert rep.certificates["eta"] == pytest.approx(1.875, rel=1e-8)
        assert rep.passed

    def test_bad_variant(self):
        with pytest.raises(ValueError):
            check_jn_condition(1.0, 1.0, 1.0, 0.5, "other")
        with pytest.raises(ValueError):
            check_jn_condition(None, 1.0, 1.0, 0.5)


class TestOperatorChecks:
    def test_kernel_identities(self):
        L = level("square", 1 / 16)
        assert check_kernel_identities(L.bs, 1, 1, L.layers).passed

    def test_stabilized_ellipticity(self):
        L = level("square", 1 / 4)
        data = ProblemData(LinearLame(1, 1))
        plain = assemble_system("jn", L.sp, L.bs, data, layers=L.layers)
        stab = assemble_system("jn", L.sp, L.bs, data, stabilize=True, layers=L.layers)
        rep = check_stabilized_ellipticity(plain, stab)
        assert rep.passed and rep.certificates["min_eig_sym"] > 0


class TestConvergence:
    def test_strain_error_exact_for_linear(self):
        m = unit_square(0.25)
        A = np.array([[0.3, -0.1], [0.2, 0.5]])
        u = interpolate(FemSpace(m), lambda x: x @ A.T)
        assert strain_error(m, u, lambda x: np.broadcast_to(A, (len(x), 2, 2))) <= 1e-14

    def test_rates(self):
        r = observed_rates([1.0, 0.5, 0.25, 0.0])
        assert np.isnan(r[0]) and r[1] == pytest.approx(1.0) and np.isnan(r[3])

    @pytest.mark.parametrize("method", ["symmetric", "jn", "bmc"])
    def test_linear_patch(self, method):
        res = convergence_study(build_manufactured("linear-patch"), method, levels=2)
        assert all(r.err_eps <= 1e-8 and r.err_phi <= 1e-8 for r in res)

    def test_lshape_smooth(self):
        res = convergence_study(build_manufactured("smooth"), "symmetric", levels=3, polygon=LSHAPE)
        rates = observed_rates([r.err_eps for r in res])
        assert rates[-1] > 0.8

    def test_methods_mutually_consistent(self):
        p = build_manufactured("kelvin-exterior")
        diffs = []
        for levels in (2, 3):
            sols = {m: convergence_study(p, m, levels=levels, keep=True)[-1] for m in ("symmetric", "jn", "bmc")}
            sp = sols["symmetric"].system.sp
            from lamecouple.fem import assemble_strain_gram
            G = assemble_strain_gram(sp)
            d = sols["symmetric"].solution.u - sols["bmc"].solution.u
            diffs.append(np.sqrt(d @ G @ d))
        assert diffs[1] < diffs[0]


class TestReports:
    def test_csv_row(self, tmp_path):
        rep = VerificationReport("rbm_independence", True, {"sigma_min": 0.5, "D": 3}, {"rtol": 1e-12})
        write_reports(tmp_path / "v.csv", [rep])
        line = (tmp_path / "v.csv").read_text().strip()
        assert line.startswith("rbm_independence,pass,sigma_min=5.000000000000000e-01,D=3")
        assert "PASS" in rep.summary()
