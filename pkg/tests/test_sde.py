import numpy as np
import pytest

from quantdiff import (CompositeMap, DomainError, NormalShiftLaw,
                       SingularityError, StationaryLaw, TukeyParams, bm_drift,
                       g_sde_coefficients, g_state_clip, gbm,
                       gbm_g_coefficients, h_sde_coefficients,
                       lipschitz_diagnostics, norm_cdf, normal_law, ou,
                       ou_g_coefficients, random_level_value,
                       sde_coefficients_general, true_law, tukey_law,
                       unified_g_coefficients, uniform_law)


def bm_map(params, t0=0.05, mu=0.0, sigma=1.0):
    spec = bm_drift(mu, sigma, 0.0)
    return CompositeMap(target=tukey_law(params), law=true_law(spec),
                        driver=spec, t0=t0)


class TestRandomLevelValue:
    def test_median_maps_to_loc(self):
        cmap = bm_map(TukeyParams(loc=0.4, g=0.5))
        # the driver median at t: y0 + mu t = 0
        assert random_level_value(cmap, 1.0, 0.0) == pytest.approx(0.4, abs=1e-14)

    def test_identity_target(self):
        # target distributed exactly as Y_t at t = 1: the map is the identity
        spec = bm_drift(0.2, 1.3, 0.1)
        target = normal_law(0.1 + 0.2, 1.3)
        cmap = CompositeMap(target=target, law=true_law(spec), driver=spec, t0=0.05)
        ys = np.linspace(-2.0, 3.0, 11)
        assert np.allclose(random_level_value(cmap, 1.0, ys), ys, atol=1e-9)

    def test_composition_collapses(self):
        # BM(0,1) at t=1, y=1: u = Phi(1), g=1 target gives e - 1
        cmap = bm_map(TukeyParams(g=1.0))
        assert random_level_value(cmap, 1.0, 1.0) == pytest.approx(np.e - 1.0, rel=1e-12)

    def test_monotone_in_y(self):
        cmap = bm_map(TukeyParams(g=0.8, h=0.1))
        ys = np.linspace(-3, 3, 99)
        z = random_level_value(cmap, 0.7, ys)
        assert np.all(np.diff(z) > 0)

    def test_rejects_t_below_t0(self):
        cmap = bm_map(TukeyParams(g=0.5))
        with pytest.raises(DomainError):
            random_level_value(cmap, 0.01, 0.0)


class TestGeneralCoefficients:
    def test_identity_map_invariance(self):
        # false law equal to the target at every t: alpha = mu, sigma = sigma
        spec = bm_drift(0.3, 1.7, 0.0)
        law = StationaryLaw(normal_law())
        cmap = CompositeMap(target=normal_law(), law=law, driver=spec, t0=0.05)
        for z in (-1.2, 0.0, 0.7, 2.1):
            pair = sde_coefficients_general(cmap, 0.8, z)
            assert pair.alpha == pytest.approx(0.3, rel=1e-12)
            assert pair.sigma == pytest.approx(1.7, rel=1e-12)

    def test_volatility_nonnegative(self):
        cmap = bm_map(TukeyParams(g=0.8, h=0.05))
        zs = np.asarray(cmap.target.quantile(np.linspace(0.01, 0.99, 50)))
        pair = sde_coefficients_general(cmap, 0.5, zs)
        assert np.all(pair.sigma >= 0.0)

    def test_singularity_reported(self):
        cmap = CompositeMap(target=uniform_law(0, 1),
                            law=StationaryLaw(uniform_law(0, 1)),
                            driver=bm_drift(), t0=0.05)
        with pytest.raises(SingularityError):
            sde_coefficients_general(cmap, 0.5, 1.5)


class TestClosedFormAgreement:
    """Every closed form agrees with the general route at random points."""

    def test_g_true_law_bm(self, rng):
        cmap = bm_map(TukeyParams(g=0.5))
        for _ in range(20):
            t = float(rng.uniform(0.1, 2.0))
            z = float(rng.uniform(-1.5, 3.0))
            gen = sde_coefficients_general(cmap, t, z)
            clo = g_sde_coefficients(cmap, t, z)
            assert clo.alpha == pytest.approx(gen.alpha, rel=1e-10)
            assert clo.sigma == pytest.approx(gen.sigma, rel=1e-10)

    def test_g_false_law(self, rng):
        spec = bm_drift(0.4, 1.2, 0.0)
        cmap = CompositeMap(target=tukey_law(TukeyParams(g=-0.7)),
                            law=NormalShiftLaw(loc=0.3), driver=spec, t0=0.05)
        for _ in range(20):
            t = float(rng.uniform(0.1, 2.0))
            z = float(rng.uniform(-3.0, 1.2))
            gen = sde_coefficients_general(cmap, t, z)
            clo = g_sde_coefficients(cmap, t, z)
            assert clo.alpha == pytest.approx(gen.alpha, rel=1e-10)
            assert clo.sigma == pytest.approx(gen.sigma, rel=1e-10)

    def test_h_true_law_bm(self, rng):
        cmap = bm_map(TukeyParams(h=0.1))
        for _ in range(20):
            t = float(rng.uniform(0.1, 2.0))
            z = float(rng.uniform(-3.0, 3.0))
            gen = sde_coefficients_general(cmap, t, z)
            clo = h_sde_coefficients(cmap, t, z)
            assert clo.alpha == pytest.approx(gen.alpha, rel=1e-10)
            assert clo.sigma == pytest.approx(gen.sigma, rel=1e-10)

    def test_h_zero_is_gaussian_specialization(self):
        cmap = bm_map(TukeyParams(h=0.0))
        zs = np.linspace(-2.5, 2.5, 20)
        gen = sde_coefficients_general(cmap, 0.7, zs)
        clo = h_sde_coefficients(cmap, 0.7, zs)
        assert np.allclose(clo.alpha, gen.alpha, rtol=1e-12, atol=1e-14)
        assert np.allclose(clo.sigma, gen.sigma, rtol=1e-12)

    def test_h_false_law(self, rng):
        spec = bm_drift(-0.2, 0.9, 0.0)
        cmap = CompositeMap(target=tukey_law(TukeyParams(h=0.08)),
                            law=NormalShiftLaw(loc=-0.4), driver=spec, t0=0.05)
        for _ in range(20):
            t = float(rng.uniform(0.1, 2.0))
            z = float(rng.uniform(-2.0, 2.0))
            gen = sde_coefficients_general(cmap, t, z)
            clo = h_sde_coefficients(cmap, t, z)
            assert clo.alpha == pytest.approx(gen.alpha, rel=1e-10)
            assert clo.sigma == pytest.approx(gen.sigma, rel=1e-10)

    def test_gbm_matches_general(self, rng):
        # true-law GBM with Tukey-g target equals the named closed form
        spec = gbm(0.12, 0.4, 1.0)
        cmap = CompositeMap(target=tukey_law(TukeyParams(g=0.5)),
                            law=true_law(spec), driver=spec, t0=0.05)
        for _ in range(20):
            t = float(rng.uniform(0.1, 2.0))
            z = float(rng.uniform(-1.5, 3.0))
            gen = sde_coefficients_general(cmap, t, z)
            named = gbm_g_coefficients(0.5, t, z)
            assert named.alpha == pytest.approx(gen.alpha, rel=1e-10, abs=1e-12)
            assert named.sigma == pytest.approx(gen.sigma, rel=1e-10)

    def test_ou_matches_general(self, rng):
        spec = ou(theta=1.4, level=0.2, sigma=0.8, y0=0.6)
        cmap = CompositeMap(target=tukey_law(TukeyParams(g=0.5)),
                            law=true_law(spec), driver=spec, t0=0.05)
        for _ in range(20):
            t = float(rng.uniform(0.1, 2.0))
            z = float(rng.uniform(-1.5, 3.0))
            gen = sde_coefficients_general(cmap, t, z)
            named = ou_g_coefficients(0.5, 1.4, t, z)
            assert named.alpha == pytest.approx(gen.alpha, rel=1e-10, abs=1e-12)
            assert named.sigma == pytest.approx(gen.sigma, rel=1e-10)

    def test_unified_reproduces_both(self, rng):
        for _ in range(20):
            t = float(rng.uniform(0.05, 2.0))
            z = float(rng.uniform(-1.5, 3.0))
            gbm_pair = gbm_g_coefficients(0.5, t, z)
            uni = unified_g_coefficients(0.5, driver_var=t, sigma=1.0, z=z)
            assert uni.alpha == pytest.approx(gbm_pair.alpha, rel=1e-12, abs=1e-14)
            assert uni.sigma == pytest.approx(gbm_pair.sigma, rel=1e-12)
            theta = 1.4
            var = (1.0 - np.exp(-2 * theta * t)) / (2 * theta)
            ou_pair = ou_g_coefficients(0.5, theta, t, z)
            uni2 = unified_g_coefficients(0.5, driver_var=var, sigma=1.0, z=z)
            assert uni2.alpha == pytest.approx(ou_pair.alpha, rel=1e-12, abs=1e-14)
            assert uni2.sigma == pytest.approx(ou_pair.sigma, rel=1e-12)


class TestClosedFormSpecialValues:
    def test_g_volatility_at_zero(self):
        # z = 0: exponent vanishes, sigma_tilde = sigma f(Q(0.5)) sqrt(2 pi)
        spec = bm_drift(0.0, 1.3, 0.0)
        cmap = CompositeMap(target=tukey_law(TukeyParams(g=0.5)),
                            law=true_law(spec), driver=spec, t0=0.05)
        t = 0.8
        pair = g_sde_coefficients(cmap, t, 0.0)
        f0 = float(np.asarray(true_law(spec).pdf(t, 0.0)))
        assert pair.sigma == pytest.approx(1.3 * f0 * np.sqrt(2 * np.pi), rel=1e-12)

    def test_gbm_named_values_at_zero(self):
        pair = gbm_g_coefficients(0.5, 2.0, 0.0)
        assert pair.alpha == pytest.approx(0.5 / 4.0, rel=1e-14)
        assert pair.sigma == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-14)

    def test_ou_large_theta_limits_at_zero(self):
        theta = 60.0
        pair = ou_g_coefficients(0.5, theta, 1.0, 0.0)
        assert pair.alpha == pytest.approx(0.5 * theta, rel=1e-8)
        assert pair.sigma == pytest.approx(np.sqrt(2 * theta), rel=1e-8)

    def test_unified_drift_at_zero(self):
        pair = unified_g_coefficients(0.7, driver_var=0.9, sigma=1.1, z=0.0)
        assert pair.alpha == pytest.approx(1.1 ** 2 * 0.7 / (2 * 0.9), rel=1e-14)

    def test_negative_g_same_formula(self):
        pair = unified_g_coefficients(-0.5, driver_var=1.0, sigma=1.0, z=0.5)
        assert np.isfinite(pair.alpha) and pair.sigma > 0

    def test_h_volatility_at_zero(self):
        spec = bm_drift(0.0, 1.0, 0.0)
        cmap = CompositeMap(target=tukey_law(TukeyParams(h=0.1)),
                            law=true_law(spec), driver=spec, t0=0.05)
        t = 0.6
        pair = h_sde_coefficients(cmap, t, 0.0)
        f0 = float(np.asarray(true_law(spec).pdf(t, 0.0)))
        assert pair.sigma == pytest.approx(f0 * np.sqrt(2 * np.pi), rel=1e-12)
        # the drift's second term vanishes at z = 0 (x factor), first term has
        # f'(center) = 0, so alpha = 0 exactly at the symmetric center
        assert pair.alpha == pytest.approx(0.0, abs=1e-14)

    def test_boundary_errors(self):
        cmap = bm_map(TukeyParams(g=0.5))
        with pytest.raises(DomainError):
            g_sde_coefficients(cmap, 1.0, -2.0)
        with pytest.raises(DomainError):
            gbm_g_coefficients(0.5, 0.0, 0.0)


class TestMonotonicityAndClip:
    def test_map_monotone_in_level(self):
        for params in (TukeyParams(g=0.5), TukeyParams(h=0.1),
                       TukeyParams(g=-0.8, h=0.05)):
            cmap = bm_map(params)
            us = np.linspace(0.005, 0.995, 99)
            law = true_law(cmap.driver)
            ys = law.quantile(0.7, us)
            z = random_level_value(cmap, 0.7, ys)
            assert np.all(np.diff(z) >= 0)

    def test_state_clip(self):
        assert g_state_clip(-10.0, 0.5) == pytest.approx((1e-12 - 1) / 0.5)
        assert g_state_clip(10.0, -0.5) == pytest.approx((1e-12 - 1) / -0.5)
        assert g_state_clip(0.3, 0.5) == 0.3


class TestLipschitzDiagnostics:
    def test_gaussian_false_law_report(self):
        spec = bm_drift(0.0, 1.0, 0.0)
        cmap = CompositeMap(target=tukey_law(TukeyParams(g=0.5)),
                            law=StationaryLaw(normal_law()), driver=spec, t0=0.05)
        report = lipschitz_diagnostics(cmap, "g", g=0.5)
        names = [c.name for c in report.conditions]
        assert names == [f"L{i}" for i in range(1, 9)]
        # Gaussian tails against the exploding exponent: growth at z -> inf
        l2 = next(c for c in report.conditions if c.name == "L2")
        assert l2.verdict in ("unbounded", "indeterminate")
        assert "L1" in report.table()

    def test_flat_compact_support_ratio_vanishes(self):
        # uniform false law has f' = 0: L3 = f'/f -> 0 at the boundary
        spec = bm_drift(0.0, 1.0, 0.0)
        cmap = CompositeMap(target=tukey_law(TukeyParams(g=0.5)),
                            law=StationaryLaw(uniform_law(-30.0, 30.0)),
                            driver=spec, t0=0.05)
        report = lipschitz_diagnostics(cmap, "g", g=0.5)
        l3 = next(c for c in report.conditions if c.name == "L3")
        assert np.allclose(l3.values, 0.0)
        assert l3.verdict == "bounded"

    def test_h_family_has_ten_conditions(self):
        cmap = bm_map(TukeyParams(h=0.1))
        report = lipschitz_diagnostics(cmap, "h", h=0.1)
        assert [c.name for c in report.conditions] == [f"L{i}" for i in range(1, 11)]

    def test_gbm_drift_derivative_unbounded(self):
        cmap = bm_map(TukeyParams(g=0.5))
        report = lipschitz_diagnostics(cmap, "g", g=0.5)
        assert report.drift_derivative is not None
        assert report.drift_derivative.verdict == "unbounded"
