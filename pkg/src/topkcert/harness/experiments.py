"""The experiment runners behind the CLI.

Every runner returns a ``Report`` with a fixed column order, a violation
counter (any certified verdict that fails its in-run oracle re-check), and
optional plot data.  All randomness flows from the config seed through
per-trial derived seeds, so results are independent of scheduling and
reruns are byte-identical.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import gaussian
from ..cells import KeyStore, build_index
from ..certificates import gap_certificate
from ..search import BatchConfig, delta_k_search, hybrid_search, mc_search, min_k_exact
from ..truncation import ScoreVector, SoftmaxSummary
from .config import ExperimentConfig
from .dump import read_dump, record_scores
from .reportio import Report

__all__ = [
    "Report",
    "run_gauss_validate",
    "run_long_context",
    "run_eps_sweep",
    "run_search_sim",
    "run_audit_dump",
    "run_experiment",
]

# cross-route float slack when an oracle recomputes a certified quantity
# along a different summation path
_ORACLE_SLACK = 1e-12


def _map_ordered(fn, count: int, workers: int) -> list:
    if workers <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def _verify_min_k(sv: ScoreVector, eps: float, k_min: int) -> bool:
    """Oracle re-check of a minimal certified size along the log-space route."""
    summary = SoftmaxSummary(sv)
    ok = summary.tail_mass(k_min) <= eps * (1.0 + _ORACLE_SLACK) + _ORACLE_SLACK
    if k_min > 1:
        ok = ok and summary.tail_mass(k_min - 1) > eps * (1.0 - _ORACLE_SLACK) - _ORACLE_SLACK
    return ok


def run_gauss_validate(cfg: ExperimentConfig) -> Report:
    """Empirical check of the Gaussian design rule on synthetic logits.

    For each (sigma, eps): sample score vectors, take the minimal size whose
    tail mass meets the budget, and compare the mean against the closed-form
    prediction.
    """
    eps_grid = cfg.eps
    rows = []
    violations = 0
    curves: dict[str, list] = {"sigma": [], "eps": [], "theory": [], "empirical": []}
    for sigma in cfg.sigmas:
        model = gaussian.GaussianScoreModel(cfg.mu, sigma, cfg.n)

        def one_trial(t: int, model=model) -> list[int]:
            sv = gaussian.sample_scores(model, cfg.seed + t)
            return [min_k_exact(sv, e) for e in eps_grid]

        per_trial = _map_ordered(one_trial, cfg.trials, cfg.workers)
        for t, sizes in enumerate(per_trial):
            sv = gaussian.sample_scores(model, cfg.seed + t)
            for e, k_min in zip(eps_grid, sizes):
                if not _verify_min_k(sv, e, k_min):
                    violations += 1
        arr = np.asarray(per_trial, dtype=np.float64)
        for j, e in enumerate(eps_grid):
            theory = gaussian.k_eps(model, e)
            emp = float(arr[:, j].mean())
            rel = (emp - theory.size) / theory.size
            rows.append((cfg.n, sigma, e, cfg.trials, theory.expected,
                         theory.size, emp, rel))
            curves["sigma"].append(sigma)
            curves["eps"].append(e)
            curves["theory"].append(theory.expected)
            curves["empirical"].append(emp)
    return Report(
        name="gauss-validate",
        columns=["n", "sigma", "eps", "trials", "theory_expected", "theory_size",
                 "empirical_mean", "rel_deviation"],
        rows=rows, violations=violations, plot_data=curves,
    )


def run_long_context(cfg: ExperimentConfig) -> Report:
    """Certified keep-ratio across context lengths vs the limiting law."""
    eps_grid = cfg.eps
    rows = []
    violations = 0
    curves: dict[str, list] = {"n": [], "eps": [], "ratio": [], "theory": []}
    for n in cfg.lengths:
        model = gaussian.GaussianScoreModel(cfg.mu, cfg.sigma, n)

        def one_trial(t: int, model=model) -> list[int]:
            sv = gaussian.sample_scores(model, cfg.seed + t)
            return [min_k_exact(sv, e) for e in eps_grid]

        per_trial = np.asarray(_map_ordered(one_trial, cfg.trials, cfg.workers))
        for t in range(cfg.trials):
            sv = gaussian.sample_scores(model, cfg.seed + t)
            for j, e in enumerate(eps_grid):
                if not _verify_min_k(sv, e, int(per_trial[t, j])):
                    violations += 1
        for j, e in enumerate(eps_grid):
            theory = gaussian.keep_ratio(cfg.sigma, e)
            ratio = float(per_trial[:, j].mean()) / n
            rows.append((n, cfg.sigma, e, cfg.trials, ratio, theory,
                         abs(ratio - theory)))
            curves["n"].append(n)
            curves["eps"].append(e)
            curves["ratio"].append(ratio)
            curves["theory"].append(theory)
    return Report(
        name="long-context",
        columns=["n", "sigma", "eps", "trials", "ratio_mean", "ratio_theory",
                 "abs_deviation"],
        rows=rows, violations=violations, plot_data=curves,
    )


def run_eps_sweep(cfg: ExperimentConfig) -> Report:
    """Certified size and speedup across the tolerance grid.

    Sources either synthetic Gaussian logits (n, sigma, trials) or an
    ingested dump file.  Per-query sizes must be non-increasing in the
    tolerance; any reversal counts as a violation.
    """
    eps_grid = sorted(cfg.eps)
    violations = 0
    if cfg.input:
        records, _ = read_dump(cfg.input, strict=cfg.strict)
        score_vectors = [record_scores(r) for r in records]
        source = "dump"
    else:
        model = gaussian.GaussianScoreModel(cfg.mu, cfg.sigma, cfg.n)
        score_vectors = [gaussian.sample_scores(model, cfg.seed + t)
                         for t in range(cfg.trials)]
        source = "synthetic"

    def one_query(i: int) -> list[int]:
        return [min_k_exact(score_vectors[i], e) for e in eps_grid]

    sizes = np.asarray(_map_ordered(one_query, len(score_vectors), cfg.workers))
    lengths = np.asarray([sv.n for sv in score_vectors], dtype=np.float64)
    for i, sv in enumerate(score_vectors):
        if np.any(np.diff(sizes[i]) > 0):
            violations += 1  # larger tolerance must never need more keys
        for j, e in enumerate(eps_grid):
            if not _verify_min_k(sv, e, int(sizes[i, j])):
                violations += 1

    rows = []
    curves: dict[str, list] = {"eps": [], "speedup": [], "keep_fraction": []}
    for j, e in enumerate(eps_grid):
        col = sizes[:, j].astype(np.float64)
        mean_k = float(col.mean())
        p95_k = float(np.percentile(col, 95))
        n_mean = float(lengths.mean())
        speedup = n_mean / mean_k
        per_query_speedup = float((lengths / col).mean())
        rows.append((source, n_mean, e, len(score_vectors), mean_k, p95_k,
                     speedup, per_query_speedup))
        curves["eps"].append(e)
        curves["speedup"].append(speedup)
        curves["keep_fraction"].append(mean_k / n_mean)
    return Report(
        name="eps-sweep",
        columns=["source", "n_mean", "eps", "queries", "kmc_mean", "kmc_p95",
                 "speedup", "per_query_speedup"],
        rows=rows, violations=violations, plot_data=curves,
    )


# ---------------------------------------------------------------------------
# Search simulation
# ---------------------------------------------------------------------------

_QUERIES_PER_STORE = 250


def _planted_store(rng: np.random.Generator, n: int, k: int, d: int = 16):
    """k tightly clustered high-score keys, the rest low-norm off-axis noise."""
    keys = np.zeros((n, d))
    keys[:k] = 6.25 * np.eye(d)[0] + 0.02 * rng.normal(size=(k, d))
    noise = 0.15 * rng.normal(size=(n - k, d))
    noise[:, 0] = 0.0
    keys[k:] = noise
    perm = rng.permutation(n)
    return KeyStore(keys[perm])


def _planted_query(rng: np.random.Generator, d: int = 16) -> np.ndarray:
    q = 0.05 * rng.normal(size=d)
    q[0] = 16.0
    return q


def _flat_store(rng: np.random.Generator, n: int, d: int = 16):
    return KeyStore(rng.normal(size=(n, d)))


def _set_tail_mass(scores: np.ndarray, ids: np.ndarray) -> float:
    """Exact discarded mass of keeping exactly ``ids``, max-shifted."""
    w = np.exp(scores - scores.max())
    return float(1.0 - w[ids].sum() / w.sum())


def run_search_sim(cfg: ExperimentConfig) -> Report:
    """Run all three searches on planted-gap and flat synthetic stores.

    Every certified result is re-verified against the exhaustive softmax
    oracle; the violation counter must stay at zero.  ``trials`` is the
    number of queries per regime.
    """
    eps = cfg.eps[0]
    k = cfg.k
    regimes = {
        "planted": {"n": max(cfg.n, 4 * k)},
        "flat": {"n": max(cfg.n // 2, 4 * k)},
    }
    algos = ("delta", "mc", "hybrid")
    rows = []
    violations_total = 0
    plot: dict[str, list] = {"regime": [], "algo": [], "scored_fraction": []}
    for ridx, (regime, regime_cfg) in enumerate(regimes.items()):
        n = regime_cfg["n"]
        num_stores = math.ceil(cfg.trials / _QUERIES_PER_STORE)
        stats = {a: {"certified": 0, "violations": 0, "scored": 0.0,
                     "kmc": [], "queries": 0} for a in algos}
        for s in range(num_stores):
            store_rng = np.random.default_rng([cfg.seed, ridx, s])
            if regime == "planted":
                store = _planted_store(store_rng, n, k)
            else:
                store = _flat_store(store_rng, n)
            index = build_index(store, min(cfg.cells, store.n), seed=cfg.seed + s)
            first = s * _QUERIES_PER_STORE
            count = min(_QUERIES_PER_STORE, cfg.trials - first)

            def one_query(t: int) -> list[tuple]:
                q_rng = np.random.default_rng([cfg.seed, ridx, s, first + t])
                if regime == "planted":
                    q = _planted_query(q_rng)
                else:
                    q = q_rng.normal(size=store.d)
                full = store.keys @ q / np.sqrt(store.d)
                out = []
                for algo in algos:
                    if algo == "delta":
                        res = delta_k_search(index, q, k, eps)
                    elif algo == "mc":
                        res = mc_search(index, q, k, eps, adaptive_k=True)
                    else:
                        res = hybrid_search(index, q, k, eps)
                    bad = res.certified and (
                        _set_tail_mass(full, res.ids) > eps + _ORACLE_SLACK)
                    out.append((algo, res.certified, bad,
                                res.scored_count / store.n, res.k))
                return out

            for results in _map_ordered(one_query, count, cfg.workers):
                for algo, certified, bad, frac, kquery in results:
                    st = stats[algo]
                    st["queries"] += 1
                    st["certified"] += int(certified)
                    st["violations"] += int(bad)
                    st["scored"] += frac
                    if certified:
                        st["kmc"].append(kquery)
        for algo in algos:
            st = stats[algo]
            scored_mean = st["scored"] / st["queries"]
            kmc_mean = float(np.mean(st["kmc"])) if st["kmc"] else float("nan")
            rows.append((regime, algo, st["queries"], st["certified"],
                         st["certified"] / st["queries"], st["violations"],
                         scored_mean, kmc_mean))
            violations_total += st["violations"]
            plot["regime"].append(regime)
            plot["algo"].append(algo)
            plot["scored_fraction"].append(scored_mean)
    return Report(
        name="search-sim",
        columns=["regime", "algo", "queries", "certified", "certified_rate",
                 "violations", "scored_fraction_mean", "kmc_mean"],
        rows=rows, violations=violations_total, plot_data=plot,
    )


def run_audit_dump(cfg: ExperimentConfig) -> Report:
    """Per-head and aggregate certification statistics for a dump file.

    Per record: exact tail mass at the adjusted k, the gap-certificate
    verdict at the primary tolerance, and the minimal certified size per
    tolerance.  Malformed records are skipped and counted unless strict.
    """
    if not cfg.input:
        raise ValueError("audit-dump needs an input dump file")
    records, skipped = read_dump(cfg.input, strict=cfg.strict)
    if not records:
        raise ValueError(f"no parseable records in {cfg.input}")
    eps_grid = sorted(cfg.eps)
    primary = eps_grid[0]
    violations = 0
    per_record = []
    for rec in records:
        sv = record_scores(rec)
        k_adj = min(cfg.k, sv.n - 1)
        tv = SoftmaxSummary(sv).tail_mass(k_adj)
        gap_pass = gap_certificate(sv, k_adj, primary).passed
        kmc = [min_k_exact(sv, e) for e in eps_grid]
        for e, k_min in zip(eps_grid, kmc):
            if not _verify_min_k(sv, e, k_min):
                violations += 1
        per_record.append((rec, sv.n, k_adj, tv, gap_pass, kmc))

    def aggregate(items) -> list[tuple]:
        tvs = np.array([it[3] for it in items])
        gaps = np.array([it[4] for it in items], dtype=np.float64)
        ns = np.array([it[1] for it in items], dtype=np.float64)
        out = []
        for j, e in enumerate(eps_grid):
            ks = np.array([it[5][j] for it in items], dtype=np.float64)
            out.append((
                len(items), e,
                float(tvs.mean()), float(np.median(tvs)),
                float(np.percentile(tvs, 95)), float(gaps.mean()),
                float(ks.mean()), float(np.percentile(ks, 95)),
                float((ns / ks).mean()),
            ))
        return out

    rows = []
    for agg in aggregate(per_record):
        rows.append(("overall", None, None, skipped) + agg)
    heads = sorted({(it[0].layer, it[0].head) for it in per_record})
    for layer, head in heads:
        items = [it for it in per_record if (it[0].layer, it[0].head) == (layer, head)]
        for agg in aggregate(items):
            rows.append(("head", layer, head, 0) + agg)

    plot = {"layer": [], "head": [], "gap_pass_rate": [], "speedup": []}
    for row in rows:
        if row[0] == "head" and row[5] == primary:
            plot["layer"].append(row[1])
            plot["head"].append(row[2])
            plot["gap_pass_rate"].append(row[9])
            plot["speedup"].append(row[12])

    report = Report(
        name="audit-dump",
        columns=["scope", "layer", "head", "skipped", "rows", "eps", "tv_mean",
                 "tv_median", "tv_p95", "gap_pass_rate", "kmc_mean", "kmc_p95",
                 "speedup_mean"],
        rows=rows, violations=violations, plot_data=plot,
    )
    report.extras["records"] = [
        {"layer": rec.layer, "head": rec.head, "query": rec.query, "n": n,
         "k_adj": k_adj, "tv": tv, "gap_pass": gap_pass,
         "eps": list(eps_grid), "kmc": [int(x) for x in kmc]}
        for rec, n, k_adj, tv, gap_pass, kmc in per_record
    ]
    return report


_RUNNERS = {
    "gauss-validate": run_gauss_validate,
    "long-context": run_long_context,
    "eps-sweep": run_eps_sweep,
    "search-sim": run_search_sim,
    "audit-dump": run_audit_dump,
}


def run_experiment(cfg: ExperimentConfig) -> Report:
    return _RUNNERS[cfg.experiment](cfg)
