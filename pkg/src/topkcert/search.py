"""Certified Top-k selection over a cell index.

Two stopping rules, one scoring loop.  The loop always refines the
unexplored cell with the highest score ceiling; after every batch the
enabled certificates are re-checked:

* gap rule: the k-th best scored value clears every possible outside score
  by enough margin that the single-gap bound already proves the budget;
* mass rule: the scored tail mass plus a ceiling on all unscored mass is
  provably within budget (optionally growing k to the smallest size that
  certifies).

Either way a certified result's truncation error is guaranteed at most the
budget without scoring every key.  In mass mode under partial scoring, the
certificate covers the returned candidate set's own truncation error, which
is the quantity bounded; the set can differ from the global Top-k while
still meeting the budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .cells import CellIndex, all_upper_bounds, score_keys
from .certificates import Certificate, check_epsilon
from .truncation import ScoreVector

__all__ = [
    "BatchConfig",
    "AuditStep",
    "SearchResult",
    "delta_k_search",
    "mc_search",
    "hybrid_search",
    "min_k_exact",
    "write_audit_jsonl",
]


@dataclass(frozen=True)
class BatchConfig:
    """Scoring schedule knobs.

    ``initial_keys``: score whole cells until this many keys are known
    before the first certificate check (defaults to k).  ``cell_batch``
    caps how many keys of a cell are scored per step; by default a chosen
    cell is scored in full.  ``audit`` records a per-step trail.
    """

    initial_keys: int | None = None
    cell_batch: int | None = None
    audit: bool = False


@dataclass(frozen=True)
class AuditStep:
    step: int
    cell: int
    scored: int
    kth_score: float | None
    outside_bound: float | None
    tail_estimate: float | None


@dataclass(frozen=True)
class SearchResult:
    """A candidate set with the certificate that ended the search."""

    ids: np.ndarray
    scored_count: int
    certificate: Certificate
    certified: bool
    stage: str | None = None
    audit: list[AuditStep] | None = None

    @property
    def k(self) -> int:
        return self.ids.size


class SearchState:
    """Mutable scoring state: which keys are known, which cells remain."""

    def __init__(self, index: CellIndex, q: np.ndarray):
        self.index = index
        self.q = np.asarray(q, dtype=np.float64)
        self.n = index.store.n
        self.bounds = all_upper_bounds(index, self.q)
        ids = np.arange(index.num_cells)
        # visit order: descending ceiling, ties to the smaller cell id
        self.cell_order = np.lexsort((ids, -self.bounds))
        self.cursor = 0
        self.offsets = np.zeros(index.num_cells, dtype=np.intp)
        self.remaining = np.array([m.size for m in index.members], dtype=np.intp)
        self.scores = np.full(self.n, np.nan)
        self.mask = np.zeros(self.n, dtype=bool)
        self.scored_count = 0

    def has_unscored(self) -> bool:
        return self.cursor < self.cell_order.size

    def current_cell(self) -> int:
        return int(self.cell_order[self.cursor])

    def max_unscored_bound(self) -> float:
        if not self.has_unscored():
            return -np.inf
        return float(self.bounds[self.current_cell()])

    def unscored_mass_ceiling(self, shift: float) -> float:
        """Sum over unscored keys of exp(ceiling - shift), cell by cell."""
        active = self.cell_order[self.cursor:]
        if active.size == 0:
            return 0.0
        rem = self.remaining[active]
        return float(np.sum(rem * np.exp(self.bounds[active] - shift)))

    def score_batch(self, cell_batch: int | None) -> int:
        """Score the next batch from the best remaining cell; returns its id."""
        j = self.current_cell()
        members = self.index.members[j]
        start = self.offsets[j]
        stop = members.size if cell_batch is None else min(members.size, start + cell_batch)
        batch = members[start:stop]
        self.scores[batch] = score_keys(self.index.store, batch, self.q)
        self.mask[batch] = True
        self.scored_count += batch.size
        self.offsets[j] = stop
        self.remaining[j] = members.size - stop
        if self.remaining[j] == 0:
            self.cursor += 1
        return j

    def ranked_scored(self) -> tuple[np.ndarray, np.ndarray]:
        """Scored ids and values, best first, ties to the smaller id."""
        ids = np.flatnonzero(self.mask)
        vals = self.scores[ids]
        order = np.argsort(-vals, kind="stable")
        return ids[order], vals[order]


def _check_gap(state: SearchState, vals: np.ndarray, k: int,
               epsilon: float) -> tuple[Certificate | None, float | None, float | None]:
    """Gap rule on the current state; also returns (kth floor, outside ceiling)."""
    n = state.n
    if vals.size < k:
        return None, None, None
    floor = float(vals[k - 1])
    outside_scored = float(vals[k]) if vals.size > k else -np.inf
    ceiling = max(outside_scored, state.max_unscored_bound())
    gap = floor - ceiling
    bound = float(np.exp(-np.logaddexp(0.0, np.log(k / (n - k)) + gap)))
    if bound > epsilon:
        return None, floor, ceiling
    witness = {"k": k, "n": n, "gap": gap, "scored": state.scored_count}
    return Certificate.build("single-gap", bound, epsilon, witness), floor, ceiling


def _mass_profile(state: SearchState, vals: np.ndarray):
    """Max-shifted linear masses of the ranked scored values plus the
    unscored ceiling mass; underflowed terms drop out harmlessly."""
    shift = max(float(vals[0]), state.max_unscored_bound())
    w = np.exp(vals - shift)
    prefix = np.cumsum(w)
    total = float(prefix[-1])
    tail = total - prefix  # tail[i] = mass of ranks > i+1
    unscored = state.unscored_mass_ceiling(shift)
    return tail, total, unscored


def _check_mass(state: SearchState, vals: np.ndarray, k: int, epsilon: float,
                adaptive: bool) -> tuple[Certificate | None, int | None, float | None]:
    """Mass rule; returns (certificate, certified size, fixed-k estimate)."""
    if vals.size == 0:
        return None, None, None
    tail, total, unscored = _mass_profile(state, vals)
    estimate_at_k = float((tail[k - 1] + unscored) / total) if vals.size >= k else None
    kind = "block-mass" if unscored > 0.0 or state.has_unscored() else "exact-mass"

    if adaptive:
        feasible = (tail + unscored) <= epsilon * total
        if not feasible.any():
            return None, None, estimate_at_k
        size = int(np.argmax(feasible)) + 1
    else:
        if vals.size < k or estimate_at_k is None or estimate_at_k > epsilon:
            return None, None, estimate_at_k
        size = k
    estimate = float((tail[size - 1] + unscored) / total)
    witness = {
        "k": size,
        "n": state.n,
        "scored": state.scored_count,
        "kept_mass": float(total - tail[size - 1]),
        "dropped_mass_ceiling": float(tail[size - 1] + unscored),
        "mass_shift": max(float(vals[0]), state.max_unscored_bound()),
    }
    return Certificate.build(kind, estimate, epsilon, witness), size, estimate_at_k


def _final_verdict(state: SearchState, ids: np.ndarray, vals: np.ndarray,
                   k: int, epsilon: float) -> SearchResult:
    """Everything scored, nothing certified: report the exact tail mass."""
    tail, total, _ = _mass_profile(state, vals)
    exact = float(tail[k - 1] / total)
    witness = {"k": k, "n": state.n, "scored": state.scored_count}
    cert = Certificate.build("exact-mass", exact, epsilon, witness)
    return SearchResult(ids=ids[:k].copy(), scored_count=state.scored_count,
                        certificate=cert, certified=cert.passed)


def _run(index: CellIndex, q, k: int, epsilon: float, cfg: BatchConfig,
         use_gap: bool, use_mass: bool, adaptive: bool) -> SearchResult:
    epsilon = check_epsilon(epsilon)
    n = index.store.n
    if not 1 <= k < n:
        raise ValueError(f"k={k} out of range [1, {n - 1}]")
    state = SearchState(index, q)
    trail: list[AuditStep] | None = [] if cfg.audit else None

    warmup = k if cfg.initial_keys is None else max(1, cfg.initial_keys)
    last_cell = -1
    while state.scored_count < min(warmup, n) and state.has_unscored():
        last_cell = state.score_batch(cfg.cell_batch)

    step = 0
    while True:
        ids, vals = state.ranked_scored()
        cert = size = None
        stage = None
        floor = ceiling = estimate = None
        if use_gap:
            cert, floor, ceiling = _check_gap(state, vals, k, epsilon)
            if cert is not None:
                size = k
                stage = "gap"
        if use_mass and cert is None:
            cert, size, estimate = _check_mass(state, vals, k, epsilon, adaptive)
            if cert is not None:
                stage = "mass"
        elif cfg.audit and vals.size >= k:
            _, _, estimate = _check_mass(state, vals, k, epsilon, adaptive=False)
        if trail is not None:
            trail.append(AuditStep(step=step, cell=last_cell,
                                   scored=state.scored_count, kth_score=floor,
                                   outside_bound=ceiling, tail_estimate=estimate))
        step += 1
        if cert is not None:
            return SearchResult(ids=ids[:size].copy(), scored_count=state.scored_count,
                                certificate=cert, certified=True,
                                stage=stage if use_gap and use_mass else None,
                                audit=trail)
        if not state.has_unscored():
            result = _final_verdict(state, ids, vals, k, epsilon)
            return SearchResult(ids=result.ids, scored_count=result.scored_count,
                                certificate=result.certificate,
                                certified=result.certified,
                                stage=None, audit=trail)
        last_cell = state.score_batch(cfg.cell_batch)


def delta_k_search(index: CellIndex, q, k: int, epsilon: float,
                   cfg: BatchConfig = BatchConfig()) -> SearchResult:
    """Certify a fixed Top-k through the boundary-gap rule alone.

    Falls back to the exact tail-mass verdict if every key ends up scored
    without the gap ever clearing the threshold (flat score profiles).
    """
    return _run(index, q, k, epsilon, cfg, use_gap=True, use_mass=False,
                adaptive=False)


def mc_search(index: CellIndex, q, k: int, epsilon: float,
              cfg: BatchConfig = BatchConfig(),
              adaptive_k: bool = False) -> SearchResult:
    """Certify through the mass rule.

    With ``adaptive_k`` the returned set grows (or shrinks) to the smallest
    size whose certified mass meets the budget, so certification always
    succeeds eventually; with a fixed k the result may come back
    not-certified carrying the exact tail mass instead.
    """
    return _run(index, q, k, epsilon, cfg, use_gap=False, use_mass=True,
                adaptive=adaptive_k)


def hybrid_search(index: CellIndex, q, k: int, epsilon: float,
                  cfg: BatchConfig = BatchConfig()) -> SearchResult:
    """Gap rule first, mass rule as the fallback, on one shared scoring pass.

    Both rules are checked after every batch (gap first), so the scored
    state feeds straight into the mass fallback and the search never scores
    more keys than the mass rule alone would.  ``stage`` records which rule
    certified.
    """
    return _run(index, q, k, epsilon, cfg, use_gap=True, use_mass=True,
                adaptive=True)


def min_k_exact(sv: ScoreVector, epsilon: float) -> int:
    """Smallest k whose discarded softmax mass is within the budget.

    Binary search over the suffix masses of the sorted scores (max-shifted
    linear sums, so flat profiles resolve exactly).
    """
    epsilon = check_epsilon(epsilon)
    s = sv.sorted_scores
    w = np.exp(s - s[0])
    prefix = np.cumsum(w)
    total = float(prefix[-1])
    tail = total - prefix  # tail[i] = discarded mass at k = i+1, non-increasing
    # first index where tail <= eps*total, via searchsorted on the reversed array
    count = int(np.searchsorted(tail[::-1], epsilon * total, side="right"))
    return max(1, sv.n - count + 1) if count else sv.n


def write_audit_jsonl(result: SearchResult, path) -> None:
    """Dump the per-step audit trail as JSON Lines."""
    if result.audit is None:
        raise ValueError("search was run without audit recording")
    with open(path, "w", encoding="utf-8") as fh:
        for entry in result.audit:
            fh.write(json.dumps({
                "step": entry.step,
                "cell": entry.cell,
                "scored": entry.scored,
                "kth_score": entry.kth_score,
                "outside_bound": entry.outside_bound,
                "tail_estimate": entry.tail_estimate,
            }) + "\n")
