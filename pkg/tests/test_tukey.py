import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from quantdiff import (ConvergenceError, DomainError, TukeyParams,
                       elongation_check, norm_cdf, normal_law, pareto_law,
                       rank_transmutation_map, std_normal_quantile,
                       tukey_g_cdf, tukey_g_density, tukey_g_quantile,
                       tukey_gh_cdf, tukey_gh_density, tukey_gh_quantile,
                       tukey_h_cdf, tukey_h_density, tukey_h_quantile,
                       tukey_law, tukey_support, uniform_law)

U99 = np.linspace(0.001, 0.999, 99)
INV_SQRT2PI = 0.3989422804014327
PHI_1 = 0.84134474606854295  # Phi(1)


class TestParams:
    def test_scale_must_be_positive(self):
        with pytest.raises(DomainError):
            TukeyParams(scale=0.0)

    def test_negative_h_rejected(self):
        with pytest.raises(DomainError):
            TukeyParams(h=-0.05)

    def test_large_h_warns_only(self):
        with pytest.warns(UserWarning):
            TukeyParams(h=0.6)


class TestGFamily:
    def test_median_maps_to_loc(self):
        assert tukey_g_quantile(0.5, TukeyParams(g=2.0)) == pytest.approx(0.0, abs=1e-15)

    def test_small_g_equals_limit(self):
        p_small = TukeyParams(g=1e-8)
        p_zero = TukeyParams(g=0.0)
        q1 = tukey_g_quantile(U99, p_small)
        q2 = tukey_g_quantile(U99, p_zero)
        x = std_normal_quantile(U99)
        assert np.allclose(q1, x, atol=1e-10)
        assert np.array_equal(q1, q2)

    def test_unit_plugin_value(self):
        # x_u = 1 so Q = e - 1
        assert tukey_g_quantile(PHI_1, TukeyParams(g=1.0)) == pytest.approx(
            np.e - 1.0, abs=1e-12)

    def test_cdf_outside_support(self):
        p = TukeyParams(g=0.5)
        lo, hi = tukey_support(p)
        assert lo == -2.0 and hi == np.inf
        assert tukey_g_cdf(-2.5, p) == 0.0
        pn = TukeyParams(g=-0.5)
        assert tukey_g_cdf(2.5, pn) == 1.0

    def test_boundary_limit(self):
        # quantile decreases monotonically toward loc - scale/g as u -> 0+
        p = TukeyParams(loc=1.0, scale=2.0, g=0.7)
        bound = 1.0 - 2.0 / 0.7
        us = np.geomspace(1e-12, 1e-2, 30)
        q = tukey_g_quantile(us, p)
        gaps = q - bound
        assert np.all(np.diff(q) > 0)
        assert np.all(gaps > 0)
        assert gaps[0] < 0.05 * gaps[-1]  # closes in on the bound
        # the exact limit: exp(g x_u) * scale / g above the bound
        x = std_normal_quantile(us[0])
        assert gaps[0] == pytest.approx(np.exp(0.7 * x) * 2.0 / 0.7, rel=1e-9)

    def test_mirror_symmetry(self):
        # Q_{-g}(u) = -Q_{g}(1-u) for loc = 0
        q_pos = tukey_g_quantile(U99, TukeyParams(g=0.9))
        q_neg = tukey_g_quantile(1.0 - U99, TukeyParams(g=-0.9))
        assert np.allclose(q_pos, -q_neg, rtol=1e-12, atol=1e-12)

    def test_density_at_center(self):
        p = TukeyParams(scale=2.0, g=1.3)
        assert tukey_g_density(p.loc, p) == pytest.approx(INV_SQRT2PI / 2.0, rel=1e-12)

    def test_density_plugin(self):
        # z = e - 1 has x_u = 1: f = exp(-1/2)/(sqrt(2 pi) e)
        got = tukey_g_density(np.e - 1.0, TukeyParams(g=1.0))
        assert got == pytest.approx(0.08901605491595147, rel=1e-11)

    def test_density_zero_outside(self):
        assert tukey_g_density(-3.0, TukeyParams(g=0.5)) == 0.0


class TestHFamily:
    def test_median(self):
        assert tukey_h_quantile(0.5, TukeyParams(loc=0.7, h=0.1)) == pytest.approx(0.7)

    def test_forward_roundtrip(self):
        # closed-form forward value at x = 1
        p = TukeyParams(h=0.1)
        z = 1.051271096376024  # exp(0.05)
        assert tukey_h_quantile(PHI_1, p) == pytest.approx(z, rel=1e-12)
        u = tukey_h_cdf(z, p)
        assert u == pytest.approx(PHI_1, abs=1e-12)
        assert abs(tukey_h_quantile(u, p) - z) < 1e-10

    def test_h_zero_is_gaussian(self):
        assert tukey_h_quantile(0.975, TukeyParams(h=0.0)) == pytest.approx(
            1.9599639845400542, rel=1e-12)

    def test_negative_h_domain_error(self):
        p_ok = TukeyParams(h=0.1)
        bad = TukeyParams(loc=0.0, scale=1.0, g=0.0, h=0.0)
        object.__setattr__(bad, "h", -0.2)
        with pytest.raises(DomainError):
            tukey_h_quantile(0.5, bad)
        assert tukey_h_quantile(0.5, p_ok) == 0.0

    def test_density_center(self):
        p = TukeyParams(scale=3.0, h=0.08)
        assert tukey_h_density(p.loc, p) == pytest.approx(INV_SQRT2PI / 3.0, rel=1e-12)

    def test_lambert_inversion_vs_bracketed_root(self):
        p = TukeyParams(h=0.1)
        zs = tukey_h_quantile(U99, p)
        got = tukey_h_cdf(zs, p)
        for z, u in zip(zs, got):
            x = brentq(lambda x_: x_ * np.exp(0.05 * x_ * x_) - z, -40, 40,
                       xtol=1e-15, rtol=8.9e-16)
            assert abs(norm_cdf(x) - u) < 1e-10


class TestGHFamily:
    def test_median(self):
        assert tukey_gh_quantile(0.5, TukeyParams(loc=0.2, g=0.8, h=0.1)) == pytest.approx(0.2)

    def test_h_zero_reduces_to_g(self):
        p = TukeyParams(g=0.7, h=0.0)
        assert np.allclose(tukey_gh_quantile(U99, p), tukey_g_quantile(U99, p),
                           rtol=1e-12, atol=1e-12)

    def test_closed_form_plugin(self):
        got = tukey_gh_quantile(PHI_1, TukeyParams(g=0.8, h=0.1))
        assert got == pytest.approx(1.6104696944374586, rel=1e-12)

    def test_unbracketed_raises(self):
        with pytest.raises(ConvergenceError):
            tukey_gh_cdf(1e306, TukeyParams(g=0.8, h=0.001))

    def test_roundtrip_lattice(self):
        for g in (-2.0, -0.8, -0.1, 0.1, 0.8, 2.0):
            for h in (0.0, 0.05, 0.1, 0.5):
                p = TukeyParams(g=g, h=h)
                z = tukey_gh_quantile(U99, p)
                assert np.all(np.diff(z) > 0)
                assert np.max(np.abs(tukey_gh_cdf(z, p) - U99)) < 1e-10

    @given(g=st.floats(-1.5, 1.5), h=st.floats(0.0, 0.4),
           u=st.floats(0.001, 0.999))
    @settings(max_examples=150, deadline=None)
    def test_roundtrip_property(self, g, h, u):
        p = TukeyParams(g=g, h=h)
        z = tukey_gh_quantile(u, p)
        assert tukey_gh_cdf(z, p) == pytest.approx(u, abs=1e-10)

    def test_endpoint_conventions(self):
        p = TukeyParams(g=0.3, h=0.05)
        assert tukey_gh_quantile(0.0, p) == -np.inf
        assert tukey_gh_quantile(1.0, p) == np.inf
        with pytest.raises(DomainError):
            tukey_gh_quantile(1.2, p)


class TestDensities:
    @pytest.mark.parametrize("params", [
        TukeyParams(g=0.8), TukeyParams(g=-0.8), TukeyParams(g=2.0),
        TukeyParams(h=0.1), TukeyParams(h=0.5),
        TukeyParams(g=0.5, h=0.1), TukeyParams(loc=0.4, scale=1.6, g=-0.4, h=0.05),
    ])
    def test_normalization(self, params):
        assert tukey_law(params).normalization() == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("params", [
        TukeyParams(g=0.8), TukeyParams(h=0.1), TukeyParams(g=0.5, h=0.1),
    ])
    def test_cdf_derivative_matches_density(self, params):
        law = tukey_law(params)
        zs = law.quantile(np.linspace(0.02, 0.98, 50))
        eps = 1e-6
        fd = (np.asarray(law.cdf(zs + eps)) - np.asarray(law.cdf(zs - eps))) / (2 * eps)
        f = np.asarray(law.pdf(zs))
        assert np.max(np.abs(fd - f) / f) < 1e-6

    @pytest.mark.parametrize("params", [
        TukeyParams(g=0.8), TukeyParams(h=0.1), TukeyParams(g=0.5, h=0.1),
        TukeyParams(loc=0.3, scale=2.0, g=-0.6, h=0.02),
    ])
    def test_density_derivative_matches_fd(self, params):
        law = tukey_law(params)
        zs = law.quantile(np.linspace(0.05, 0.95, 30))
        eps = 1e-6
        fd = (np.asarray(law.pdf(zs + eps)) - np.asarray(law.pdf(zs - eps))) / (2 * eps)
        got = np.asarray(law.pdf_prime(zs))
        assert np.max(np.abs(fd - got)) < 1e-5 * max(1.0, np.max(np.abs(got)))


class TestRankTransmutation:
    def test_identity(self):
        n = normal_law()
        assert rank_transmutation_map(n, n, 0.37) == pytest.approx(0.37, abs=1e-13)

    def test_endpoints_fixed(self):
        assert rank_transmutation_map(normal_law(), pareto_law(1, 2), 0.0) == 0.0
        assert rank_transmutation_map(normal_law(), pareto_law(1, 2), 1.0) == 1.0

    def test_wang_inverse_direction(self):
        # F2 = N(lambda, 1): G(0.5) = Phi(-lambda)
        got = rank_transmutation_map(normal_law(), normal_law(0.1, 1.0), 0.5)
        assert got == pytest.approx(0.46017216272297102, rel=1e-12)


class TestElongation:
    def test_exp_square_passes(self):
        report = elongation_check(lambda w: np.exp(w * w))
        assert report.all_passed

    def test_one_plus_square_passes(self):
        report = elongation_check(lambda w: 1.0 + w * w)
        assert report.all_passed

    def test_identity_fails_convexity(self):
        report = elongation_check(lambda w: np.asarray(w, dtype=float))
        assert not report.convex
        assert not report.all_passed


class TestUnivariateLaws:
    def test_uniform_quantile_generalised_inverse_consistency(self):
        law = uniform_law(0.0, 2.0)
        us = np.linspace(0.01, 0.99, 25)
        q = np.asarray(law.quantile(us))
        assert np.allclose(np.asarray(law.cdf(q)), us)

    def test_pareto_normalization(self):
        assert pareto_law(2000.0, 1.2).normalization() == pytest.approx(1.0, abs=1e-8)

    def test_normal_density_integrates(self):
        assert normal_law(0.3, 1.7).normalization() == pytest.approx(1.0, abs=1e-10)
