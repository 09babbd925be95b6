"""Blockwise certificates: gap bound, interval mass bound, pigeonhole gap."""

import numpy as np
import pytest

from topkcert import (
    BlockMassInterval,
    BlockMassSummary,
    BlockPartition,
    ScoreVector,
    block_gap_certificate,
    block_mass_certificate,
    guaranteed_block_gap,
)
from topkcert.truncation import DegenerateInputError


def random_partition(rng, n, num_blocks):
    perm = rng.permutation(n)
    cuts = np.sort(rng.choice(np.arange(1, n), size=num_blocks - 1, replace=False))
    return BlockPartition(tuple(np.split(perm, cuts)))


def exact_block_tv(log_mass, kept):
    """Discarded mass fraction when keeping exactly the blocks in ``kept``."""
    w = np.exp(log_mass - log_mass.max())
    mask = np.zeros(len(log_mass), dtype=bool)
    mask[kept] = True
    return float(w[~mask].sum() / w.sum())


class TestBlockPartition:
    def test_rejects_overlap_and_gaps(self):
        with pytest.raises(ValueError):
            BlockPartition((np.array([0, 1]), np.array([1, 2])))
        with pytest.raises(ValueError):
            BlockPartition((np.array([0]), np.array([2])))
        with pytest.raises(ValueError):
            BlockPartition((np.array([0, 1]), np.array([], dtype=int)))

    def test_contiguous_covers(self):
        part = BlockPartition.contiguous(10, 3)
        assert part.num_blocks == 3
        assert sorted(np.concatenate(part.blocks).tolist()) == list(range(10))

    def test_mass_summary_matches_direct_sums(self, rng):
        for _ in range(100):
            n = int(rng.integers(4, 64))
            m = int(rng.integers(2, min(8, n) + 1))
            sv = ScoreVector(rng.uniform(-50, 50, n))
            part = random_partition(rng, n, m)
            bm = BlockMassSummary.from_scores(sv, part)
            for j, block in enumerate(part.blocks):
                direct = np.logaddexp.reduce(sv.scores[block])
                assert abs(bm.log_mass[j] - direct) <= 1e-12 * max(1, abs(direct))


class TestBlockGapCertificate:
    def test_equal_masses_bound_equals_exact(self, rng):
        for m in (2, 4, 7):
            bm = BlockMassSummary(np.full(m, 1.3))
            for alpha in range(1, m):
                cert = block_gap_certificate(bm, alpha, 0.5)
                assert abs(cert.tv_bound - (m - alpha) / m) <= 1e-12

    def test_chained_loose_form_dominates(self, rng):
        for _ in range(300):
            m = int(rng.integers(2, 10))
            bm = BlockMassSummary(rng.uniform(-20, 20, m))
            alpha = int(rng.integers(1, m))
            cert = block_gap_certificate(bm, alpha, 0.5)
            w = bm.sorted_log_mass
            loose = (m - alpha) / alpha * np.exp(-(w[alpha - 1] - w[alpha]))
            assert cert.tv_bound <= loose + 1e-15

    def test_sound_against_exact_blockwise_tail(self, rng):
        for _ in range(1000):
            n = int(rng.integers(4, 64))
            m = int(rng.integers(2, min(8, n) + 1))
            sv = ScoreVector(rng.uniform(-50, 50, n))
            part = random_partition(rng, n, m)
            bm = BlockMassSummary.from_scores(sv, part)
            alpha = int(rng.integers(1, m))
            cert = block_gap_certificate(bm, alpha, 0.1)
            exact = exact_block_tv(bm.log_mass, bm.order[:alpha])
            assert cert.tv_bound >= exact - 1e-12

    def test_two_level_block_configuration_is_tight(self, rng):
        for _ in range(50):
            m = int(rng.integers(2, 10))
            alpha = int(rng.integers(1, m))
            hi, gap = float(rng.uniform(-3, 3)), float(rng.uniform(0, 8))
            bm = BlockMassSummary(np.concatenate([
                np.full(alpha, hi), np.full(m - alpha, hi - gap)]))
            cert = block_gap_certificate(bm, alpha, 0.5)
            exact = exact_block_tv(bm.log_mass, bm.order[:alpha])
            assert abs(cert.tv_bound - exact) <= 1e-12

    def test_alpha_domain(self):
        bm = BlockMassSummary([1.0, 0.0])
        with pytest.raises(ValueError):
            block_gap_certificate(bm, 0, 0.1)
        with pytest.raises(ValueError):
            block_gap_certificate(bm, 2, 0.1)


class TestGuaranteedGap:
    def test_equal_masses(self):
        pos, gap = guaranteed_block_gap(BlockMassSummary(np.zeros(5)))
        assert pos == 1 and gap == 0.0

    def test_arithmetic_example(self):
        pos, gap = guaranteed_block_gap(BlockMassSummary([5.0, 3.0, 0.0]))
        assert pos == 2 and gap == 3.0

    def test_pigeonhole_lower_bound(self, rng):
        for _ in range(1000):
            m = int(rng.integers(2, 12))
            bm = BlockMassSummary(rng.uniform(-30, 30, m))
            _, gap = guaranteed_block_gap(bm)
            w = bm.sorted_log_mass
            assert gap >= (w[0] - w[-1]) / (m - 1) - 1e-12

    def test_single_block_rejected(self):
        with pytest.raises(ValueError):
            guaranteed_block_gap(BlockMassSummary([1.0]))


class TestBlockMassCertificate:
    def test_exact_intervals_collapse_to_exact_tv(self, rng):
        for _ in range(300):
            m = int(rng.integers(2, 10))
            log_mass = rng.uniform(-20, 20, m)
            iv = BlockMassInterval.exact(log_mass)
            alpha = int(rng.integers(1, m + 1))
            cert = block_mass_certificate(iv, alpha, 0.5)
            kept = np.argsort(-log_mass, kind="stable")[:alpha]
            assert abs(cert.tv_bound - exact_block_tv(log_mass, kept)) <= 1e-12

    def test_alpha_equals_m_is_zero(self, rng):
        iv = BlockMassInterval.exact(rng.uniform(-5, 5, 6))
        assert block_mass_certificate(iv, 6, 0.5).tv_bound == 0.0

    def test_sound_for_any_valid_intervals(self, rng):
        for _ in range(1000):
            m = int(rng.integers(2, 10))
            log_mass = rng.uniform(-20, 20, m)
            lo = log_mass + np.log(rng.uniform(0.2, 1.0, m))
            hi = log_mass - np.log(rng.uniform(0.2, 1.0, m))
            iv = BlockMassInterval(lo, hi)
            alpha = int(rng.integers(1, m + 1))
            cert = block_mass_certificate(iv, alpha, 0.1)
            kept = np.argsort(-lo, kind="stable")[:alpha]
            assert cert.tv_bound >= exact_block_tv(log_mass, kept) - 1e-12

    def test_monotone_tightening_for_fixed_kept_set(self, rng):
        # pinching any interval toward the truth never worsens the bound for
        # the same kept set (re-selection may jump to a different set)
        for _ in range(200):
            m = int(rng.integers(2, 8))
            log_mass = rng.uniform(-10, 10, m)
            slack_lo = np.log(rng.uniform(0.2, 1.0, m))
            slack_hi = -np.log(rng.uniform(0.2, 1.0, m))
            alpha = int(rng.integers(1, m + 1))
            kept = rng.choice(m, size=alpha, replace=False)
            last = None
            for t in np.linspace(0.0, 1.0, 6):
                iv = BlockMassInterval(log_mass + (1 - t) * slack_lo,
                                       log_mass + (1 - t) * slack_hi)
                bound = block_mass_certificate(iv, alpha, 0.1, kept=kept).tv_bound
                if last is not None:
                    assert bound <= last + 1e-12
                last = bound

    def test_accepts_linear_input(self):
        iv = BlockMassInterval.from_linear([1.0, 0.0, 2.0], [2.0, 1.0, 2.0])
        cert = block_mass_certificate(iv, 2, 0.9)
        # kept = blocks 2 and 0 (largest lower bounds): S- = 3, S+ = 1
        assert abs(cert.tv_bound - 1.0 / 4.0) <= 1e-12

    def test_degenerate_intervals_rejected(self):
        iv = BlockMassInterval.from_linear([0.0, 0.0], [0.0, 0.0])
        with pytest.raises(DegenerateInputError):
            block_mass_certificate(iv, 1, 0.5)

    def test_interval_validation(self):
        with pytest.raises(ValueError):
            BlockMassInterval([1.0], [0.5])
        with pytest.raises(ValueError):
            BlockMassInterval.from_linear([-1.0], [1.0])
