"""Gaussian score model: special functions, tail law, design rule, sampling."""

import math

import numpy as np
import pytest

from topkcert import (
    GaussianScoreModel,
    k_eps,
    keep_ratio,
    limit_tail_mass,
    phi_cdf,
    phi_quantile,
    phi_survival,
    sample_scores,
    threshold_for_eps,
)


def quantile_by_bisection(p, lo=-15.0, hi=15.0):
    """Independent oracle: bisect the erfc-based CDF."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestNormalFunctions:
    def test_median_and_symmetry(self):
        assert phi_cdf(0.0) == 0.5
        assert phi_quantile(0.5) == 0.0
        for x in (-3.7, -0.2, 0.0, 1.1, 4.2):
            assert abs(phi_survival(x) - phi_cdf(-x)) <= 1e-15

    def test_table_consistency_value(self):
        # the sigma=1, eps=0.01 table row corresponds to Phi(1.326) ~ 0.9076
        assert abs(phi_cdf(1.326) - 0.9076) < 5e-5

    def test_quantile_roundtrip_grid(self):
        grid = np.concatenate([
            [1e-6, 1e-5, 1e-4, 1e-3],
            np.linspace(0.01, 0.99, 197),
            [1 - 1e-3, 1 - 1e-4, 1 - 1e-5, 1 - 1e-6],
        ])
        for p in grid:
            assert abs(phi_cdf(phi_quantile(float(p))) - p) <= 1e-8

    def test_quantile_against_bisection_oracle(self):
        for p in (1e-9, 1e-4, 0.023, 0.31, 0.5, 0.77, 0.999, 1 - 1e-7):
            assert abs(phi_quantile(p) - quantile_by_bisection(p)) <= 1e-9

    def test_quantile_domain(self):
        for p in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValueError):
                phi_quantile(p)


class TestTailMassLaw:
    def test_center_of_shifted_normal(self):
        model = GaussianScoreModel(0.7, 1.3, 100)
        t = model.mu + model.sigma ** 2
        assert abs(limit_tail_mass(model, t) - 0.5) <= 1e-15

    def test_extreme_thresholds(self):
        model = GaussianScoreModel(0.0, 1.0, 100)
        assert limit_tail_mass(model, -1e6) == 1.0
        assert limit_tail_mass(model, 1e6) == 0.0

    def test_threshold_hits_target_mass(self):
        for mu, sigma in ((0.0, 1.0), (-2.0, 0.3), (5.0, 2.5)):
            model = GaussianScoreModel(mu, sigma, 100)
            for eps in (0.001, 0.01, 0.31, 0.5, 0.9):
                t = threshold_for_eps(model, eps)
                assert abs(limit_tail_mass(model, t) - (1 - eps)) <= 1e-9

    def test_threshold_closed_forms(self):
        model = GaussianScoreModel(0.0, 1.0, 100)
        assert threshold_for_eps(model, 0.5) == model.mu + model.sigma ** 2
        assert abs(threshold_for_eps(model, 0.01) - (-1.3263)) < 1e-4

    def test_derived_quantile_substitution(self):
        model = GaussianScoreModel(0.0, 1.0, 100)
        t = 1.0 + phi_quantile(0.99)
        assert abs(limit_tail_mass(model, t) - 0.01) <= 1e-12


class TestDesignRule:
    def test_table_sizes(self):
        rows = {0.1: 9871, 0.5: 9662, 1.0: 9077, 2.0: 6280, 3.0: 2503}
        for sigma, expected in rows.items():
            got = k_eps(GaussianScoreModel(0.0, sigma, 10_000), 0.01)
            assert got.size == expected

    def test_long_context_ratios(self):
        rows = {0.001: 0.9817, 0.005: 0.9425, 0.01: 0.9076, 0.02: 0.8540,
                0.05: 0.7405}
        for eps, expected in rows.items():
            assert abs(keep_ratio(1.0, eps) - expected) < 1e-4

    def test_ratio_free_of_mu_and_n(self):
        for sigma, eps in ((0.4, 0.02), (1.7, 0.001)):
            ratio = keep_ratio(sigma, eps)
            for mu in (-10.0, 0.0, 25.0):
                for n in (128, 9973):
                    model = GaussianScoreModel(mu, sigma, n)
                    assert k_eps(model, eps).expected == n * ratio

    def test_domain_checks(self):
        model = GaussianScoreModel(0.0, 1.0, 10)
        with pytest.raises(ValueError):
            k_eps(model, 0.0)
        with pytest.raises(ValueError):
            threshold_for_eps(model, 1.0)
        with pytest.raises(ValueError):
            GaussianScoreModel(0.0, 0.0, 10)
        with pytest.raises(ValueError):
            GaussianScoreModel(0.0, 1.0, 0)


class TestSampling:
    def test_same_seed_bit_identical(self):
        model = GaussianScoreModel(0.3, 2.0, 1000)
        a = sample_scores(model, 99)
        b = sample_scores(model, 99)
        np.testing.assert_array_equal(a.scores, b.scores)
        assert not np.array_equal(a.scores, sample_scores(model, 100).scores)

    def test_sample_mean_within_clt_band(self):
        n = 100_000
        model = GaussianScoreModel(1.5, 0.8, n)
        sv = sample_scores(model, 7)
        assert abs(sv.scores.mean() - model.mu) <= 4 * model.sigma / math.sqrt(n)

    def test_lln_exponential_moment(self):
        # (1/n) sum e^s converges to exp(mu + sigma^2/2); 1% band at n = 1e6
        n = 1_000_000
        model = GaussianScoreModel(0.0, 1.0, n)
        sv = sample_scores(model, 11)
        emp = np.exp(sv.scores).mean()
        theory = math.exp(model.mu + model.sigma ** 2 / 2)
        assert abs(emp - theory) <= 0.01 * theory

    def test_lln_thresholded_exponential_moment(self):
        # (1/n) sum_{s>t} e^s -> exp(mu + sigma^2/2) * survival((t-mu-sigma^2)/sigma)
        n = 1_000_000
        model = GaussianScoreModel(0.2, 1.0, n)
        sv = sample_scores(model, 13)
        for t in (model.mu, model.mu + model.sigma ** 2, model.mu + 2.0):
            emp = np.exp(sv.scores[sv.scores > t]).mean() * (sv.scores > t).mean()
            theory = math.exp(model.mu + model.sigma ** 2 / 2) * limit_tail_mass(model, t)
            assert abs(emp - theory) <= 0.01 * theory

    def test_empirical_tail_mass_tracks_limit(self):
        n = 200_000
        model = GaussianScoreModel(0.0, 1.0, n)
        sv = sample_scores(model, 17)
        w = np.exp(sv.scores - sv.scores.max())
        for t in (-1.0, 0.5, 1.0, 2.0):
            emp = w[sv.scores > t].sum() / w.sum()
            assert abs(emp - limit_tail_mass(model, t)) <= 0.01
