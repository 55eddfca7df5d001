"""Dense backend and the direct, Newton and Picard drivers."""
import numpy as np
import pytest

from conftest import level
from test_coupling import HENCKY, LINEAR, system
from lamecouple.solver import (
    ConvergenceError,
    SolveOptions,
    default_theta,
    dense_eig,
    dense_lu,
    dense_svd,
    lu_solve,
    reference_law,
    relative_constants,
    solve,
)


class TestBackend:
    def test_identity_eigenvalues(self):
        assert np.allclose(dense_eig(np.eye(4)), 1.0)

    def test_generalized(self):
        assert np.allclose(dense_eig(np.diag([2.0, 3.0]), np.eye(2)), [2.0, 3.0])

    def test_lu_residual(self, rng):
        B = rng.standard_normal((40, 40))
        A = B @ B.T + 40 * np.eye(40)
        b = rng.standard_normal(40)
        x = lu_solve(dense_lu(A), b)
        assert np.linalg.norm(A @ x - b) <= 1e-12 * np.linalg.norm(b)

    @pytest.mark.filterwarnings("ignore::scipy.linalg.LinAlgWarning")
    def test_singular(self):
        with pytest.raises(np.linalg.LinAlgError):
            dense_lu(np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_svd_rectangular(self):
        assert np.allclose(dense_svd(np.array([[3.0, 0, 0], [0, 4.0, 0]])), [4.0, 3.0])


class TestOptions:
    @pytest.mark.parametrize("kwargs", [dict(method="cg"), dict(tol=0.0), dict(theta=-1.0), dict(max_iter=0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SolveOptions(**kwargs)


class TestDrivers:
    def test_direct_needs_linear_law(self):
        with pytest.raises(ValueError):
            solve(system("symmetric", level("square", 1 / 4), law=HENCKY))

    def test_picard_matches_direct(self):
        s = system("jn", level("square", 1 / 8), stabilize=True)
        a, _ = solve(s)
        b, trace = solve(s, SolveOptions("picard", tol=1e-11))
        assert trace.iterations == 1          # the reference law is the law itself
        assert np.abs(a.x - b.x).max() <= 1e-10

    def test_picard_damped_linear(self):
        s = system("symmetric", level("square", 1 / 8), stabilize=True)
        a, _ = solve(s)
        b, trace = solve(s, SolveOptions("picard", tol=1e-11, theta=0.7))
        assert trace.converged and np.abs(a.x - b.x).max() <= 1e-9

    @pytest.mark.parametrize("method", ["symmetric", "jn", "bmc"])
    def test_hencky_newton_and_picard(self, method):
        s = system(method, level("square", 1 / 8), stabilize=True, law=HENCKY)
        a, ta = solve(s, SolveOptions("newton"))
        b, tb = solve(s, SolveOptions("picard"))
        assert ta.iterations <= 10 and tb.iterations <= 50
        assert np.abs(a.x - b.x).max() <= 1e-8
        assert np.all(np.diff(tb.residuals) <= 0)
        assert np.linalg.norm(s.without_stabilization().residual(a.x)) <= 1e-8

    def test_max_iter_reported(self):
        s = system("symmetric", level("square", 1 / 4), stabilize=True, law=HENCKY)
        with pytest.raises(ConvergenceError) as exc:
            solve(s, SolveOptions("picard", max_iter=2))
        assert exc.value.trace.iterations == 2
        assert not exc.value.trace.converged


class TestDamping:
    def test_reference_law(self):
        ref = reference_law(HENCKY)
        assert ref.mu == pytest.approx(2 * 1.875 * 3 / 4.875)
        assert ref.lam == pytest.approx(5 - ref.mu)
        assert reference_law(LINEAR) is LINEAR

    def test_theta_in_contraction_range(self):
        c, L = relative_constants(HENCKY, reference_law(HENCKY))
        theta = default_theta(HENCKY)
        assert 0 < theta < 2 * c / L**2
        assert theta == pytest.approx(c / L**2)
