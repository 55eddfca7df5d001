"""Material laws: stresses, tangents and monotonicity constants."""
import numpy as np
import pytest

from lamecouple.material import (
    Hencky,
    LinearLame,
    deviator,
    eval_stress,
    eval_tangent,
    frobenius,
    gamma,
    law_from_config,
    monotonicity_constants,
    parse_profile,
    sample_constants,
    sym_tensor,
)


def random_strains(rng, n, scale=1.0):
    return scale * rng.standard_normal((n, 3))


def fd_tangent(law, e, t=1e-6):
    cols = []
    for k in range(3):
        d = np.zeros(3)
        d[k] = t
        cols.append((law.stress(e + d) - law.stress(e - d)) / (2 * t))
    return np.stack(cols, axis=-1)


HENCKY = Hencky(5.0, parse_profile("rational(2,1)"), alpha=1.875, beta=1.0)


class TestTensorAlgebra:
    def test_frobenius_weight(self):
        a = sym_tensor(1.0, 2.0, 3.0)
        assert frobenius(a, a) == pytest.approx(1 + 4 + 2 * 9)

    def test_deviator_traceless(self, rng):
        e = random_strains(rng, 20)
        d = deviator(e)
        assert np.allclose(d[:, 0] + d[:, 1], 0)
        assert np.allclose(gamma(e), frobenius(d, d))


class TestLinearLame:
    def test_identity_strain(self):
        s = LinearLame(1, 1).stress(sym_tensor(1, 1, 0))
        assert np.allclose(s, [4, 4, 0])

    def test_zero_strain(self):
        for law in (LinearLame(1, 1), HENCKY):
            assert np.allclose(eval_stress(law, np.zeros(3)), 0)

    @pytest.mark.parametrize("lam,mu,expected", [(1, 1, (2, 10)), (2, 3, (6, 24))])
    def test_constants(self, lam, mu, expected):
        assert monotonicity_constants(LinearLame(lam, mu)) == expected

    def test_tangent_is_constant(self, rng):
        law = LinearLame(2.0, 0.7)
        T = eval_tangent(law, random_strains(rng, 5))
        assert np.allclose(T, T[0])
        e = random_strains(rng, 1)[0]
        assert np.allclose(T[0] @ e, law.stress(e))

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            LinearLame(0.0, 1.0)


class TestHencky:
    def test_constant_profile_is_linear(self, rng):
        lam, mu = 1.3, 0.8
        h = Hencky(lam + mu, parse_profile(f"const({mu})"))
        e = random_strains(rng, 200)
        assert np.allclose(h.stress(e), LinearLame(lam, mu).stress(e), rtol=1e-13, atol=1e-13)

    def test_tangent_at_zero(self):
        mu0 = HENCKY.mu_tilde(0.0)
        ref = LinearLame(HENCKY.K - mu0, mu0).tangent(np.zeros(3))
        assert np.allclose(HENCKY.tangent(np.zeros(3)), ref)

    def test_tangent_finite_difference(self, rng):
        for e in random_strains(rng, 20):
            T = HENCKY.tangent(e)
            fd = fd_tangent(HENCKY, e)
            assert np.linalg.norm(T - fd) <= 1e-5 * np.linalg.norm(T)

    def test_constants_are_certified_by_sampling(self):
        c_A, L_A = monotonicity_constants(HENCKY)
        assert (c_A, L_A) == pytest.approx((3.75, 10.0))
        mono, lip = sample_constants(HENCKY, n=4000)
        assert mono >= c_A * (1 - 1e-9)
        assert lip <= L_A * (1 + 1e-9)

    def test_alpha_one_sampling(self):
        h = Hencky(5.0, parse_profile("rational(2,1)"), alpha=1.0)
        c_A, _ = monotonicity_constants(h)
        assert c_A == 2.0
        assert sample_constants(h)[0] >= 2.0

    def test_rejects_profile_below_alpha(self):
        with pytest.raises(ValueError):
            Hencky(5.0, parse_profile("rational(2,1)"), alpha=2.5)

    def test_rejects_profile_above_bulk(self):
        with pytest.raises(ValueError):
            Hencky(3.5, parse_profile("rational(2,1)"), beta=1.0)


class TestMonotonicityProperties:
    @pytest.mark.parametrize("law", [LinearLame(1, 1), LinearLame(0.3, 2.0), HENCKY])
    def test_pointwise_inequalities(self, law, rng):
        c_A, L_A = monotonicity_constants(law)
        e1, e2 = random_strains(rng, 500, 3.0), random_strains(rng, 500, 3.0)
        de, ds = e1 - e2, law.stress(e1) - law.stress(e2)
        assert np.all(frobenius(ds, de) >= c_A * frobenius(de, de) * (1 - 1e-12))
        assert np.all(np.sqrt(frobenius(ds, ds)) <= L_A * np.sqrt(frobenius(de, de)) * (1 + 1e-12))


class TestProfilesAndConfig:
    def test_parse(self):
        p = parse_profile("arctan(1, 0.5)")
        assert p(0.0) == pytest.approx(1.0)
        assert p.derivative(0.0) == pytest.approx(0.5)

    def test_bounds(self):
        lo, hi = parse_profile("rational(2,1)").bounds()
        assert lo == pytest.approx(1.875, rel=1e-8)
        assert hi == pytest.approx(3.0)

    @pytest.mark.parametrize("text", ["nope(1)", "rational(1)", "const"])
    def test_parse_errors(self, text):
        with pytest.raises(ValueError):
            parse_profile(text)

    def test_law_from_config(self):
        assert law_from_config({"kind": "linear", "lambda": "2", "mu": "3"}) == LinearLame(2.0, 3.0)
        h = law_from_config({"kind": "hencky", "K": "5", "mu_tilde": "rational(2,1)", "alpha": "1.875"})
        assert isinstance(h, Hencky) and h.alpha == 1.875
        with pytest.raises(ValueError):
            law_from_config({"kind": "plastic"})
