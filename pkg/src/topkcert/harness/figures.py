"""Figure rendering for experiment reports.

The experiment runners only emit data; this module turns a report's plot
data into a PNG next to the delimited output when figures are requested.
Rendering is headless (Agg) and never part of the violation accounting.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reportio import Report

__all__ = ["render_figure"]


def _gauss_validate(data: dict, ax) -> None:
    eps_values = sorted(set(data["eps"]))
    for e in eps_values:
        idx = [i for i, x in enumerate(data["eps"]) if x == e]
        sig = [data["sigma"][i] for i in idx]
        ax.plot(sig, [data["theory"][i] for i in idx], "-", label=f"theory eps={e:g}")
        ax.plot(sig, [data["empirical"][i] for i in idx], "o", ms=4,
                label=f"empirical eps={e:g}")
    ax.set_xlabel("score deviation")
    ax.set_ylabel("certified size")
    ax.set_title("Gaussian design rule vs measurement")
    ax.legend(fontsize=8)


def _long_context(data: dict, ax) -> None:
    eps_values = sorted(set(data["eps"]))
    for e in eps_values:
        idx = [i for i, x in enumerate(data["eps"]) if x == e]
        ns = [data["n"][i] for i in idx]
        ax.plot(ns, [data["ratio"][i] for i in idx], "o-", label=f"eps={e:g}")
        ax.axhline(data["theory"][idx[0]], ls="--", lw=0.8, color="gray")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("context length")
    ax.set_ylabel("certified keep ratio")
    ax.set_title("Keep ratio is length independent")
    ax.legend(fontsize=8)


def _eps_sweep(data: dict, ax) -> None:
    ax.plot(data["eps"], data["speedup"], "o-", color="tab:blue", label="speedup")
    ax.set_xscale("log")
    ax.set_xlabel("tolerance")
    ax.set_ylabel("speedup (n / mean certified size)")
    twin = ax.twinx()
    twin.plot(data["eps"], data["keep_fraction"], "s--", color="tab:orange",
              label="keep fraction")
    twin.set_ylabel("keep fraction")
    ax.set_title("Accuracy-efficiency tradeoff")
    handles, labels = ax.get_legend_handles_labels()
    h2, l2 = twin.get_legend_handles_labels()
    ax.legend(handles + h2, labels + l2, fontsize=8)


def _search_sim(data: dict, ax) -> None:
    labels = [f"{r}/{a}" for r, a in zip(data["regime"], data["algo"])]
    x = np.arange(len(labels))
    ax.bar(x, data["scored_fraction"], color="tab:blue")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("mean scored fraction")
    ax.set_title("Keys scored before certification")


def _audit_dump(data: dict, ax) -> None:
    ax.scatter(data["gap_pass_rate"], data["speedup"], s=18)
    ax.set_xlabel("gap-certificate pass rate")
    ax.set_ylabel("mean speedup")
    ax.set_title("Per-head certification profile")


_RENDERERS = {
    "gauss-validate": _gauss_validate,
    "long-context": _long_context,
    "eps-sweep": _eps_sweep,
    "search-sim": _search_sim,
    "audit-dump": _audit_dump,
}


def render_figure(report: Report, path) -> None:
    if report.plot_data is None:
        raise ValueError(f"report {report.name} carries no plot data")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    _RENDERERS[report.name](report.plot_data, ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
