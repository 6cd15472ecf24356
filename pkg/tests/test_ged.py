import numpy as np
import pytest
from scipy import integrate, stats

from lpreg.ged import (
    GedParams,
    ged_abs_moment,
    ged_cdf,
    ged_density,
    ged_kurtosis,
    ged_quantile,
    ged_sample,
)

P_SET = [1.0, 1.5, 2.0, 5.0, 10.0, 20.0]


class TestDensity:
    def test_standard_normal_at_zero(self):
        assert ged_density(0.0, GedParams(0.0, 1.0, 2.0)) == pytest.approx(
            0.3989422804014327, abs=1e-9
        )

    def test_laplace_at_mode(self):
        assert ged_density(0.0, GedParams(0.0, 1.0, 1.0)) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("p", P_SET)
    def test_symmetry(self, p):
        z = np.linspace(0.1, 6.0, 40)
        params = GedParams(0.0, 1.3, p)
        np.testing.assert_allclose(ged_density(z, params), ged_density(-z, params))

    @pytest.mark.parametrize("p", P_SET)
    def test_normalization_quadrature(self, p):
        # At p=1 the tail mass beyond 12 scale units is ~6e-6, so the
        # window must be wider than that for a 1e-8 normalization check.
        params = GedParams(0.4, 0.7, p)
        lo = params.location - 40.0 * params.scale
        hi = params.location + 40.0 * params.scale
        total, _ = integrate.quad(
            lambda z: ged_density(z, params), lo, hi,
            points=[params.location], limit=400,
        )
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            ged_density(np.nan, GedParams())
        with pytest.raises(ValueError):
            GedParams(scale=0.0)
        with pytest.raises(ValueError):
            GedParams(shape=-1.0)


class TestCdfQuantile:
    def test_median_is_half(self):
        for p in P_SET:
            assert ged_cdf(0.7, GedParams(0.7, 2.0, p)) == pytest.approx(0.5, abs=1e-14)

    def test_normal_equivalence(self):
        z = np.linspace(-6.0, 6.0, 121)
        params = GedParams(0.0, 1.0, 2.0)
        np.testing.assert_allclose(ged_density(z, params), stats.norm.pdf(z), atol=1e-9)
        np.testing.assert_allclose(ged_cdf(z, params), stats.norm.cdf(z), atol=1e-9)
        u = np.linspace(0.01, 0.99, 99)
        np.testing.assert_allclose(ged_quantile(u, params), stats.norm.ppf(u), atol=1e-9)

    def test_upper_tail_value(self):
        assert ged_cdf(1.959964, GedParams(0.0, 1.0, 2.0)) == pytest.approx(0.975, abs=1e-6)
        assert ged_quantile(0.975, GedParams(0.0, 1.0, 2.0)) == pytest.approx(
            1.959964, abs=1e-5
        )

    @pytest.mark.parametrize("p", P_SET)
    def test_reflection_identity(self, p):
        params = GedParams(0.3, 1.1, p)
        z = np.linspace(-4.0, 4.0, 41)
        np.testing.assert_allclose(
            ged_cdf(z, params) + ged_cdf(2 * params.location - z, params), 1.0, atol=1e-12
        )

    @pytest.mark.parametrize("p", P_SET)
    def test_round_trip(self, p):
        params = GedParams(-0.2, 0.8, p)
        u = (np.arange(1, 100)) / 100.0
        back = ged_cdf(ged_quantile(u, params), params)
        np.testing.assert_allclose(back, u, atol=1e-9)

    def test_quantile_strictly_increasing(self):
        u = np.linspace(0.001, 0.999, 200)
        q = ged_quantile(u, GedParams(0.0, 1.0, 3.0))
        assert np.all(np.diff(q) > 0)

    def test_quantile_domain(self):
        for u in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError):
                ged_quantile(u, GedParams())


class TestMoments:
    def test_known_values(self):
        assert ged_abs_moment(2.0, GedParams(0.0, 1.0, 2.0)) == pytest.approx(1.0, rel=1e-12)
        assert ged_abs_moment(1.0, GedParams(0.0, 1.0, 1.0)) == pytest.approx(1.0, rel=1e-12)
        assert ged_abs_moment(0.0, GedParams(0.0, 3.0, 7.0)) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("p", [1.0, 2.0, 5.0])
    def test_moment_matches_quadrature(self, p):
        params = GedParams(0.0, 1.2, p)
        for r in (1.0, 2.0, 3.5):
            val, _ = integrate.quad(
                lambda z: np.abs(z) ** r * ged_density(z, params), -40, 40, limit=400
            )
            assert ged_abs_moment(r, params) == pytest.approx(val, rel=1e-7)

    def test_kurtosis_special_cases(self):
        assert ged_kurtosis(GedParams(0.0, 1.0, 2.0)) == pytest.approx(3.0, rel=1e-12)
        assert ged_kurtosis(GedParams(0.0, 1.0, 1.0)) == pytest.approx(6.0, rel=1e-12)

    def test_kurtosis_decreasing_in_shape(self):
        ps = np.linspace(1.0, 20.0, 77)
        k = [ged_kurtosis(GedParams(0.0, 1.0, p)) for p in ps]
        assert np.all(np.diff(k) < 0)

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            ged_abs_moment(-0.5, GedParams())


class TestSampler:
    def test_deterministic(self):
        a = ged_sample(1000, GedParams(0.0, 1.0, 3.0), 42)
        b = ged_sample(1000, GedParams(0.0, 1.0, 3.0), 42)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("p", [1.0, 2.0, 5.0])
    def test_sample_moments(self, p):
        params = GedParams(0.0, 1.0, p)
        z = np.abs(ged_sample(100_000, params, 7))
        for r in (1.0, 2.0, 2.0 * p - 2.0):
            sample = z**r
            se = sample.std(ddof=1) / np.sqrt(sample.size)
            # r = 0 (p = 1) is exact, with zero standard error.
            assert abs(sample.mean() - ged_abs_moment(r, params)) <= 3.0 * se + 1e-12

    @pytest.mark.parametrize("p", [1.0, 2.0, 5.0])
    def test_kolmogorov_smirnov(self, p):
        params = GedParams(0.0, 1.0, p)
        z = ged_sample(10_000, params, 11)
        d = stats.kstest(z, lambda v: ged_cdf(v, params)).statistic
        assert d < 1.63 / np.sqrt(z.size)

    def test_location_scale(self):
        z = ged_sample(50_000, GedParams(2.0, 0.5, 4.0), 3)
        assert z.mean() == pytest.approx(2.0, abs=0.02)

    def test_rejects_zero_draws(self):
        with pytest.raises(ValueError):
            ged_sample(0, GedParams(), 1)
