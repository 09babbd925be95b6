"""Output-level error analysis for attention against a value matrix.

The attention output error caused by Top-k truncation factorizes exactly as
tail_mass * ||tail_mean - head_mean||; this module computes that identity,
the geometric and variance upper bounds around it, and the spanning-tree
cut that minimizes the worst cross-set value distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .truncation import ScoreVector, SoftmaxSummary

__all__ = [
    "attention_output",
    "HeadTailReport",
    "head_tail_report",
    "best_certificate",
    "CutResult",
    "minimax_cut",
    "cut_from_values",
]


def _as_values(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError(f"value matrix must be 2-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("value matrix entries must all be finite")
    return v


def attention_output(weights, values) -> np.ndarray:
    """Probability-weighted sum of value rows."""
    w = np.asarray(weights, dtype=np.float64)
    v = _as_values(values)
    if w.ndim != 1 or w.size != v.shape[0]:
        raise ValueError(f"got {w.size} weights for {v.shape[0]} value rows")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return w @ v


@dataclass(frozen=True)
class HeadTailReport:
    """Exact truncation error of the attention output and every bound on it.

    ``bounds`` holds the four certified upper bounds (cross-set diameter,
    chi-square variance, KL variance, crude norm-cap form); ``best`` is the
    minimum of the diameter, chi-square and crude forms.  The KL form is
    reported for completeness but never beats the chi-square form, whose
    divergence it upper-bounds.
    """

    k: int
    n: int
    tail_mass: float
    head_mean: np.ndarray
    tail_mean: np.ndarray
    exact_error: float
    cross_diameter: float
    full_mean: np.ndarray
    full_variance: float
    head_variance: float
    tail_variance: float
    chi_square: float
    norm_cap: float
    bounds: dict[str, float]
    best: float


def head_tail_report(sv: ScoreVector, k: int, values) -> HeadTailReport:
    """Split the value rows at the Top-k boundary and measure everything.

    The conditional means are computed from log-renormalized weights, so a
    vanishing head or tail mass never divides by ~0.  An empty tail (k = n)
    reports a zero tail mean and zero diameter by convention.
    """
    sv._check_k(k)
    v = _as_values(values)
    if v.shape[0] != sv.n:
        raise ValueError(f"value matrix has {v.shape[0]} rows for {sv.n} scores")
    summary = SoftmaxSummary(sv)
    tau = summary.tail_mass(k)
    head_ids = sv.sort_perm[:k]
    tail_ids = sv.sort_perm[k:]

    head_w = np.exp(sv.scores[head_ids] - summary.log_head(k))
    head_mean = head_w @ v[head_ids]
    head_var = float(head_w @ np.sum((v[head_ids] - head_mean) ** 2, axis=1))
    if tail_ids.size:
        tail_w = np.exp(sv.scores[tail_ids] - summary.log_tail(k))
        tail_mean = tail_w @ v[tail_ids]
        tail_var = float(tail_w @ np.sum((v[tail_ids] - tail_mean) ** 2, axis=1))
        diffs = v[tail_ids][:, None, :] - v[head_ids][None, :, :]
        cross_diam = float(np.sqrt(np.sum(diffs ** 2, axis=2).max()))
    else:
        tail_mean = np.zeros(v.shape[1])
        tail_var = 0.0
        cross_diam = 0.0

    full_w = np.exp(sv.scores - summary.log_total)
    full_mean = full_w @ v
    full_var = float(full_w @ np.sum((v - full_mean) ** 2, axis=1))

    exact_error = float(tau * np.linalg.norm(tail_mean - head_mean))
    # tau / (1 - tau) as a log-space ratio; exact even when tau ~ 1
    chi_square = float(np.exp(summary.log_tail(k) - summary.log_head(k)))
    norm_cap = float(np.sqrt(np.sum(v ** 2, axis=1).max()))

    spread = float(np.sqrt(full_var))
    bounds = {
        "diam": tau * cross_diam,
        "chi2": float(np.sqrt(chi_square)) * spread,
        "kl": float(np.sqrt(np.expm1(summary.log_total - summary.log_head(k)))) * spread,
        "crude": 2.0 * norm_cap * tau,
    }
    best = min(bounds["diam"], bounds["chi2"], bounds["crude"])
    return HeadTailReport(
        k=k, n=sv.n, tail_mass=tau,
        head_mean=head_mean, tail_mean=tail_mean,
        exact_error=exact_error, cross_diameter=cross_diam,
        full_mean=full_mean, full_variance=full_var,
        head_variance=head_var, tail_variance=tail_var,
        chi_square=chi_square, norm_cap=norm_cap,
        bounds=bounds, best=best,
    )


def best_certificate(report: HeadTailReport) -> float:
    """Sharpest certified output-error bound available for this instance."""
    return report.best


# ---------------------------------------------------------------------------
# Minimax cross-set cut via a maximum spanning tree
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CutResult:
    """A bipartition and its cut value (largest weight crossing it).

    The cut value always equals the weight of the spanning-tree edge whose
    removal produced the partition, and no nontrivial bipartition does
    better.
    """

    head: np.ndarray
    rest: np.ndarray
    cut_value: float
    tree_edge: tuple[int, int]


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def minimax_cut(weights) -> CutResult:
    """Bipartition minimizing the largest crossing weight.

    Kruskal over the complete graph in descending weight order builds a
    maximum spanning tree; deleting its lightest edge yields the optimal
    cut, whose value is that edge's weight.  Ties are ordered by
    (weight, smaller endpoint ids) so the result is deterministic.
    """
    w = np.asarray(weights, dtype=np.float64)
    n = w.shape[0]
    if w.ndim != 2 or w.shape[1] != n:
        raise ValueError(f"weight matrix must be square, got shape {w.shape}")
    if n < 2:
        raise ValueError("need at least two items to cut")
    if not np.allclose(w, w.T, atol=0.0):
        raise ValueError("weight matrix must be symmetric")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")

    iu, ju = np.triu_indices(n, k=1)
    order = np.lexsort((ju, iu, -w[iu, ju]))
    uf = _UnionFind(n)
    tree: list[tuple[float, int, int]] = []
    for e in order:
        a, b = int(iu[e]), int(ju[e])
        if uf.union(a, b):
            tree.append((float(w[a, b]), a, b))
            if len(tree) == n - 1:
                break

    _, ca, cb = min(tree)
    # component of the smaller endpoint once the lightest edge is gone
    adj: list[list[int]] = [[] for _ in range(n)]
    for wt, a, b in tree:
        if (a, b) != (ca, cb):
            adj[a].append(b)
            adj[b].append(a)
    in_head = np.zeros(n, dtype=bool)
    stack = [ca]
    in_head[ca] = True
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if not in_head[y]:
                in_head[y] = True
                stack.append(y)

    head = np.flatnonzero(in_head)
    rest = np.flatnonzero(~in_head)
    cut_value = float(w[np.ix_(head, rest)].max())
    return CutResult(head=head, rest=rest, cut_value=cut_value, tree_edge=(ca, cb))


def cut_from_values(values) -> CutResult:
    """Minimax cut of value rows under pairwise Euclidean distance."""
    v = _as_values(values)
    if v.shape[0] < 2:
        raise ValueError("need at least two value rows to cut")
    diffs = v[:, None, :] - v[None, :, :]
    dist = np.sqrt(np.sum(diffs ** 2, axis=2))
    return minimax_cut(dist)
