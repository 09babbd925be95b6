"""Deterministic certificates that a Top-k truncation meets a TV budget.

A certificate is a verdict record: a proven upper bound on the truncation
error, the target budget, and the witness data the bound was computed from.
Bounds are sound by construction (never below the true error) and are
re-checked against exact oracles in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .truncation import ScoreVector

__all__ = ["Certificate", "gap_certificate", "multigap_certificate"]

KINDS = ("exact-mass", "single-gap", "multi-gap", "block-gap", "block-mass")


def check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in the open interval (0, 1), got {epsilon}")
    return epsilon


@dataclass(frozen=True)
class Certificate:
    """A proven TV upper bound checked against a target budget."""

    kind: str
    tv_bound: float
    epsilon: float
    passed: bool
    witness: dict[str, Any]

    @classmethod
    def build(cls, kind: str, tv_bound: float, epsilon: float,
              witness: dict[str, Any]) -> "Certificate":
        if kind not in KINDS:
            raise ValueError(f"unknown certificate kind {kind!r}")
        bound = min(max(float(tv_bound), 0.0), 1.0)
        return cls(kind=kind, tv_bound=bound, epsilon=epsilon,
                   passed=bound <= epsilon, witness=witness)


def _reciprocal_ratio_bound(log_ratio: float, gap: float) -> float:
    """1 / (1 + exp(log_ratio + gap)), evaluated without overflow."""
    return float(np.exp(-np.logaddexp(0.0, log_ratio + gap)))


def gap_threshold(n: int, k: int, epsilon: float) -> float:
    """Smallest boundary gap for which the single-gap bound certifies."""
    check_epsilon(epsilon)
    if not 1 <= k < n:
        raise ValueError(f"k={k} out of range [1, {n - 1}]")
    return float(np.log((n - k) / k) + np.log((1 - epsilon) / epsilon))


def gap_certificate(sv: ScoreVector, k: int, epsilon: float) -> Certificate:
    """Certificate from the single boundary gap between ranks k and k+1.

    Proven bound: 1 / (1 + (k/(n-k)) * exp(gap)).  Tight when the head
    scores are all equal and the tail scores are all equal.  The degenerate
    k = n keeps nothing out, so it passes with bound 0 by convention.
    """
    epsilon = check_epsilon(epsilon)
    sv._check_k(k)
    n = sv.n
    if k == n:
        return Certificate.build("single-gap", 0.0, epsilon,
                                 {"k": k, "n": n, "gap": None})
    s = sv.sorted_scores
    gap = float(s[k - 1] - s[k])
    bound = _reciprocal_ratio_bound(np.log(k / (n - k)), gap)
    return Certificate.build("single-gap", bound, epsilon,
                             {"k": k, "n": n, "gap": gap})


def multigap_certificate(sv: ScoreVector, k: int, epsilon: float,
                         m_cap: int | None = None) -> Certificate:
    """Certificate from a split of the tail at a deeper gap.

    For every admissible split depth m the tail mass is bounded by

        (m * exp(-gap_k) + (n-k-m) * exp(s_{k+m+1} - s_k)) / k

    and the certificate minimizes over all evaluated m (``m_cap`` limits the
    search for very long tails).  m = 0 recovers the loose form of the
    single-gap bound.
    """
    epsilon = check_epsilon(epsilon)
    sv._check_k(k)
    n = sv.n
    if k == n:
        return Certificate.build("multi-gap", 0.0, epsilon,
                                 {"k": k, "n": n, "m": None})
    s = sv.sorted_scores
    tail = n - k
    m_hi = tail - 1 if m_cap is None else min(tail - 1, int(m_cap))
    ms = np.arange(0, m_hi + 1)
    # exp(s_{k+1} - s_k) caps the first m discarded weights, exp(s_{k+m+1} - s_k)
    # the remaining n-k-m; both exponents are <= 0 so nothing overflows
    first = np.exp(s[k] - s[k - 1])
    deeper = np.exp(s[k + ms] - s[k - 1])
    bounds = (ms * first + (tail - ms) * deeper) / k
    best = int(np.argmin(bounds))
    depth = best + 1  # gaps averaged across ranks k .. k+best
    witness = {
        "k": k,
        "n": n,
        "m": best,
        "gap": float(s[k - 1] - s[k]),
        "mean_gap": float((s[k - 1] - s[k + best]) / depth),
    }
    return Certificate.build("multi-gap", float(bounds[best]), epsilon, witness)
