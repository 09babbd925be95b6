"""Certificates over block partitions of the key set.

These operate on per-block exponential masses rather than individual keys:
a gap bound between adjacent sorted block masses, a mass-certificate bound
built from per-block lower/upper mass intervals, and a pigeonhole helper
guaranteeing at least one usable gap exists in any sorted mass profile.

Block masses are kept in log scale throughout, same overflow discipline as
the tokenwise layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certificates import Certificate, _reciprocal_ratio_bound, check_epsilon
from .truncation import DegenerateInputError, ScoreVector

__all__ = [
    "BlockPartition",
    "BlockMassSummary",
    "BlockMassInterval",
    "block_gap_certificate",
    "guaranteed_block_gap",
    "block_mass_certificate",
]


@dataclass(frozen=True)
class BlockPartition:
    """Disjoint index blocks covering 0..n-1 exactly once, all non-empty."""

    blocks: tuple[np.ndarray, ...]
    n: int = field(init=False)

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=np.intp) for b in self.blocks)
        if not blocks:
            raise ValueError("partition needs at least one block")
        for b in blocks:
            if b.size == 0:
                raise ValueError("blocks must be non-empty")
        flat = np.concatenate(blocks)
        n = flat.size
        seen = np.sort(flat)
        if not np.array_equal(seen, np.arange(n)):
            raise ValueError("blocks must partition 0..n-1 with no gaps or overlaps")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "n", n)

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @classmethod
    def contiguous(cls, n: int, num_blocks: int) -> "BlockPartition":
        """Split 0..n-1 into nearly equal consecutive runs."""
        if not 1 <= num_blocks <= n:
            raise ValueError(f"num_blocks={num_blocks} out of range [1, {n}]")
        return cls(tuple(np.array_split(np.arange(n), num_blocks)))


@dataclass(frozen=True)
class BlockMassSummary:
    """Per-block log masses with their non-increasing sort order."""

    log_mass: np.ndarray
    order: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lm = np.asarray(self.log_mass, dtype=np.float64)
        if lm.ndim != 1 or lm.size < 1:
            raise ValueError("log_mass must be a non-empty 1-D array")
        if np.any(np.isnan(lm)):
            raise ValueError("log masses must not be NaN")
        object.__setattr__(self, "log_mass", lm)
        # descending, ties broken by smaller block id
        object.__setattr__(self, "order", np.argsort(-lm, kind="stable"))

    @property
    def num_blocks(self) -> int:
        return self.log_mass.size

    @property
    def sorted_log_mass(self) -> np.ndarray:
        return self.log_mass[self.order]

    @classmethod
    def from_scores(cls, sv: ScoreVector, partition: BlockPartition) -> "BlockMassSummary":
        if partition.n != sv.n:
            raise ValueError(f"partition covers {partition.n} keys, scores have {sv.n}")
        lm = np.array([np.logaddexp.reduce(sv.scores[b]) for b in partition.blocks])
        return cls(lm)


def block_gap_certificate(bm: BlockMassSummary, alpha: int, epsilon: float) -> Certificate:
    """Certificate for keeping the alpha largest-mass blocks, from the gap
    between the alpha-th and (alpha+1)-th sorted block masses.

    Proven bound: 1 / (1 + (alpha/(M-alpha)) * exp(gap)); equals the exact
    error when the kept masses are all equal and the dropped masses are all
    equal.
    """
    epsilon = check_epsilon(epsilon)
    m = bm.num_blocks
    if not 1 <= alpha < m:
        raise ValueError(f"alpha={alpha} out of range [1, {m - 1}]")
    w = bm.sorted_log_mass
    gap = float(w[alpha - 1] - w[alpha])
    bound = _reciprocal_ratio_bound(np.log(alpha / (m - alpha)), gap)
    witness = {
        "alpha": alpha,
        "num_blocks": m,
        "gap": gap,
        "kept_blocks": bm.order[:alpha].tolist(),
    }
    return Certificate.build("block-gap", bound, epsilon, witness)


def guaranteed_block_gap(bm: BlockMassSummary) -> tuple[int, float]:
    """Largest adjacent gap in the sorted block masses.

    Returns ``(position, gap)`` where position j means the gap sits between
    the j-th and (j+1)-th largest masses (1-based, smallest j on ties).  The
    gap is at least the total spread divided by M-1, so a nontrivial spread
    always yields a usable gap somewhere.
    """
    m = bm.num_blocks
    if m < 2:
        raise ValueError("need at least two blocks to have a gap")
    w = bm.sorted_log_mass
    gaps = w[:-1] - w[1:]
    j = int(np.argmax(gaps))
    return j + 1, float(gaps[j])


@dataclass(frozen=True)
class BlockMassInterval:
    """Per-block mass brackets lower <= mass <= upper, held in log scale."""

    log_lower: np.ndarray
    log_upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.log_lower, dtype=np.float64)
        hi = np.asarray(self.log_upper, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size < 1:
            raise ValueError("lower/upper must be matching non-empty 1-D arrays")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("interval endpoints must not be NaN")
        if np.any(lo > hi):
            raise ValueError("every interval needs lower <= upper")
        object.__setattr__(self, "log_lower", lo)
        object.__setattr__(self, "log_upper", hi)

    @property
    def num_blocks(self) -> int:
        return self.log_lower.size

    @classmethod
    def from_linear(cls, lower, upper) -> "BlockMassInterval":
        lo = np.asarray(lower, dtype=np.float64)
        hi = np.asarray(upper, dtype=np.float64)
        if np.any(lo < 0) or np.any(hi < 0):
            raise ValueError("linear masses must be non-negative")
        with np.errstate(divide="ignore"):
            return cls(np.log(lo), np.log(hi))

    @classmethod
    def exact(cls, log_mass) -> "BlockMassInterval":
        """Degenerate intervals for fully known block masses."""
        lm = np.asarray(log_mass, dtype=np.float64)
        return cls(lm.copy(), lm.copy())


def _logsumexp(values: np.ndarray) -> float:
    if values.size == 0:
        return -np.inf
    return float(np.logaddexp.reduce(values))


def block_mass_certificate(iv: BlockMassInterval, alpha: int, epsilon: float,
                           kept: np.ndarray | None = None) -> Certificate:
    """Mass-certificate bound for keeping ``alpha`` blocks under interval
    uncertainty about the true block masses.

    The kept set defaults to the alpha blocks with the largest lower bounds
    (ties to the smaller block id), which maximizes the certain kept mass.
    The bound is  dropped_upper / (kept_lower + dropped_upper); it collapses
    to the exact error once every interval is pinched to the truth.  Note
    the kept set is re-chosen from the lower bounds, so tightening intervals
    can move the certificate onto a different (better) kept set; for a fixed
    ``kept`` the bound is monotone in the interval widths.
    """
    epsilon = check_epsilon(epsilon)
    m = iv.num_blocks
    if not 1 <= alpha <= m:
        raise ValueError(f"alpha={alpha} out of range [1, {m}]")
    if kept is None:
        kept = np.argsort(-iv.log_lower, kind="stable")[:alpha]
    else:
        kept = np.asarray(kept, dtype=np.intp)
        if kept.size != alpha or np.unique(kept).size != alpha:
            raise ValueError("kept must hold alpha distinct block ids")
    mask = np.zeros(m, dtype=bool)
    mask[kept] = True
    log_kept = _logsumexp(iv.log_lower[mask])
    log_dropped = _logsumexp(iv.log_upper[~mask])
    if log_kept == -np.inf and log_dropped == -np.inf:
        raise DegenerateInputError("kept lower mass and dropped upper mass are both zero")
    bound = float(np.exp(log_dropped - np.logaddexp(log_kept, log_dropped)))
    witness = {
        "alpha": alpha,
        "num_blocks": m,
        "kept_blocks": sorted(int(b) for b in kept),
        "log_kept_lower": log_kept,
        "log_dropped_upper": log_dropped,
    }
    return Certificate.build("block-mass", bound, epsilon, witness)
