"""Distribution-level machinery: softmax, truncation, exact identities."""

import numpy as np
import pytest

from topkcert import ScoreVector, SoftmaxSummary, kl_truncated, softmax, truncate_topk, tv_exact

from conftest import random_scores


class TestScoreVector:
    def test_sort_is_non_increasing(self, rng):
        for _ in range(50):
            sv = ScoreVector(random_scores(rng))
            assert np.all(np.diff(sv.sorted_scores) <= 0)

    def test_ties_break_to_smaller_original_index(self):
        sv = ScoreVector([1.0, 3.0, 3.0, 1.0, 3.0])
        assert sv.sort_perm.tolist() == [1, 2, 4, 0, 3]

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            ScoreVector([])
        with pytest.raises(ValueError):
            ScoreVector([1.0, np.inf])
        with pytest.raises(ValueError):
            ScoreVector([1.0, np.nan])
        with pytest.raises(ValueError):
            ScoreVector([[1.0, 2.0]])

    def test_k_range_checks(self):
        sv = ScoreVector([3.0, 1.0])
        with pytest.raises(ValueError):
            tv_exact(sv, 0)
        with pytest.raises(ValueError):
            tv_exact(sv, 3)


class TestSoftmax:
    def test_uniform_scores(self):
        p = softmax(ScoreVector([0.0, 0.0, 0.0, 0.0]))
        np.testing.assert_allclose(p, 0.25, atol=1e-15)

    def test_shift_invariance(self, rng):
        for c in (-300.0, -1.0, 7.0, 250.0):
            s = rng.uniform(-5, 5, 12)
            base = softmax(ScoreVector(s))
            shifted = softmax(ScoreVector(s + c))
            np.testing.assert_allclose(shifted, base, atol=1e-12)

    def test_matches_direct_formula_small_n(self):
        s = np.array([3.0, 1.0, 0.0])
        direct = np.exp(s) / np.exp(s).sum()
        np.testing.assert_allclose(softmax(ScoreVector(s)), direct, atol=1e-14)

    def test_order_preserving_and_normalized(self, rng):
        for _ in range(100):
            sv = ScoreVector(random_scores(rng))
            p = softmax(sv)
            assert abs(p.sum() - 1.0) <= 1e-12
            ranked = p[sv.sort_perm]
            assert np.all(np.diff(ranked) <= 1e-300)


class TestTruncate:
    def test_k_equals_n_is_identity(self, rng):
        sv = ScoreVector(random_scores(rng))
        np.testing.assert_allclose(truncate_topk(sv, sv.n), softmax(sv), atol=1e-14)

    def test_uniform_head(self):
        sv = ScoreVector(np.zeros(10))
        p_hat = truncate_topk(sv, 4)
        np.testing.assert_allclose(p_hat[:4], 0.25, atol=1e-14)
        assert np.all(p_hat[4:] == 0.0)

    def test_matches_renormalization_oracle(self, rng):
        for _ in range(200):
            s = rng.uniform(-50, 50, 8)
            sv = ScoreVector(s)
            k = int(rng.integers(1, 9))
            p = softmax(sv)
            head = sv.sort_perm[:k]
            oracle = np.zeros(8)
            oracle[head] = p[head] / p[head].sum()
            np.testing.assert_allclose(truncate_topk(sv, k), oracle, atol=1e-12)
            assert abs(truncate_topk(sv, k).sum() - 1.0) <= 1e-12


class TestTailMassIdentity:
    def test_k_equals_n(self, rng):
        sv = ScoreVector(random_scores(rng))
        assert tv_exact(sv, sv.n) == 0.0

    def test_uniform_arithmetic(self):
        sv = ScoreVector(np.zeros(10))
        assert abs(tv_exact(sv, 7) - 0.3) <= 1e-12

    def test_equals_half_l1_on_fuzz(self, rng):
        for _ in range(1000):
            sv = ScoreVector(random_scores(rng))
            k = int(rng.integers(1, sv.n + 1))
            p = softmax(sv)
            p_hat = truncate_topk(sv, k)
            half_l1 = 0.5 * np.abs(p - p_hat).sum()
            assert abs(tv_exact(sv, k) - half_l1) <= 1e-12

    def test_monotone_in_k(self, rng):
        for _ in range(50):
            sv = ScoreVector(random_scores(rng))
            masses = [tv_exact(sv, k) for k in range(1, sv.n + 1)]
            assert np.all(np.diff(masses) <= 1e-15)


class TestKLIdentity:
    def test_k_equals_n(self, rng):
        sv = ScoreVector(random_scores(rng))
        assert kl_truncated(sv, sv.n) == 0.0

    def test_tv_equals_one_minus_exp_neg_kl(self, rng):
        for _ in range(1000):
            sv = ScoreVector(random_scores(rng))
            k = int(rng.integers(1, sv.n + 1))
            tv = tv_exact(sv, k)
            kl = kl_truncated(sv, k)
            assert abs(tv - (1.0 - np.exp(-kl))) <= 1e-12

    def test_first_order_agreement_at_small_tail(self, rng):
        # tau controlled via a two-level construction so it stays in a band
        # where tau^2 is resolvable in float64 (KL is a difference of O(1)
        # logs, accurate to a few 1e-16 absolute)
        checked = 0
        for _ in range(300):
            n = int(rng.integers(4, 64))
            k = int(rng.integers(1, n))
            tau_target = 10.0 ** rng.uniform(-7, -3)
            gap = np.log((n - k) / k * (1 - tau_target) / tau_target)
            scores = np.concatenate([np.zeros(k), -gap * np.ones(n - k)])
            sv = ScoreVector(scores)
            tau = tv_exact(sv, k)
            assert 0 < tau < 1e-3
            assert abs(kl_truncated(sv, k) - tau) <= tau ** 2
            checked += 1
        # and on organically sampled instances falling in the same band
        for _ in range(500):
            sv = ScoreVector(random_scores(rng, n_max=32))
            k = sv.n - 1 if sv.n > 1 else 1
            tau = tv_exact(sv, k)
            if 1e-7 < tau < 1e-3:
                assert abs(kl_truncated(sv, k) - tau) <= tau ** 2
                checked += 1
        assert checked >= 300

    def test_monotone_in_k(self, rng):
        for _ in range(50):
            sv = ScoreVector(random_scores(rng))
            kls = [kl_truncated(sv, k) for k in range(1, sv.n + 1)]
            assert np.all(np.diff(kls) <= 1e-15)

    def test_matches_direct_kl_sum(self, rng):
        for _ in range(200):
            sv = ScoreVector(random_scores(rng, n_max=16, lo=-5, hi=5))
            k = int(rng.integers(1, sv.n + 1))
            p = softmax(sv)
            p_hat = truncate_topk(sv, k)
            live = p_hat > 0
            direct = float(np.sum(p_hat[live] * np.log(p_hat[live] / p[live])))
            assert abs(kl_truncated(sv, k) - direct) <= 1e-10


class TestSummaryInternals:
    def test_head_plus_tail_equals_total(self, rng):
        for _ in range(200):
            sv = ScoreVector(random_scores(rng))
            summary = SoftmaxSummary(sv)
            k = int(rng.integers(1, sv.n + 1))
            total = np.exp(summary.log_total)
            head = np.exp(summary.log_head(k))
            tail = np.exp(summary.log_tail(k))
            assert abs(head + tail - total) <= 1e-12 * total

    def test_shift_leaves_masses_alone(self, rng):
        s = rng.uniform(-10, 10, 30)
        for c in (-200.0, 150.0):
            a, b = SoftmaxSummary(ScoreVector(s)), SoftmaxSummary(ScoreVector(s + c))
            for k in (1, 7, 30):
                assert abs(a.tail_mass(k) - b.tail_mass(k)) <= 1e-12
