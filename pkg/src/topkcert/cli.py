"""Command-line entry point.

One subcommand per experiment.  Each run writes a CSV report; plot data
goes to a sibling ``.plot.json`` and, with ``--figures``, a rendered PNG.
The exit code is nonzero whenever any in-run oracle re-check failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness.config import ExperimentConfig
from .harness.experiments import run_experiment
from .harness.reportio import write_csv, write_plot_json

__all__ = ["main", "build_parser"]


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--eps", type=float, action="append", default=None,
                     help="tolerance in (0,1); repeat for a grid")
    sub.add_argument("--trials", type=int, default=None)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--output", type=str, default=None,
                     help="CSV report path (default: <experiment>.csv)")
    sub.add_argument("--figures", action="store_true",
                     help="render a PNG figure next to the CSV")
    sub.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topkcert",
        description="Certified Top-k truncation experiments",
    )
    subs = parser.add_subparsers(dest="experiment", required=True)

    p = subs.add_parser("gauss-validate", help="design rule vs synthetic logits")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--sigma", type=float, action="append", default=None,
                   help="score deviation; repeat for a grid")
    p.add_argument("--mu", type=float, default=0.0)
    _add_common(p)

    p = subs.add_parser("long-context", help="keep ratio across context lengths")
    p.add_argument("--n", type=int, action="append", default=None,
                   help="context length; repeat for a grid")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=0.0)
    _add_common(p)

    p = subs.add_parser("eps-sweep", help="certified size across tolerances")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--input", type=str, default=None,
                   help="dump file to sweep instead of synthetic logits")
    p.add_argument("--strict", action="store_true")
    _add_common(p)

    p = subs.add_parser("search-sim", help="certified searches vs oracle")
    p.add_argument("--n", type=int, default=1024, help="planted-regime store size")
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--cells", type=int, default=32)
    _add_common(p)

    p = subs.add_parser("audit-dump", help="analyze an attention dump file")
    p.add_argument("--input", type=str, required=True)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--strict", action="store_true")
    _add_common(p)
    return parser


_DEFAULT_EPS = {
    "gauss-validate": [0.01],
    "long-context": [0.001, 0.01, 0.05],
    "eps-sweep": [0.001, 0.005, 0.01, 0.02, 0.05],
    "search-sim": [0.001],
    "audit-dump": [0.01],
}

_DEFAULT_TRIALS = {
    "gauss-validate": 100,
    "long-context": 50,
    "eps-sweep": 100,
    "search-sim": 500,
    "audit-dump": 1,
}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    exp = args.experiment
    cfg = ExperimentConfig(
        experiment=exp,
        eps=args.eps if args.eps else _DEFAULT_EPS[exp],
        trials=args.trials if args.trials is not None else _DEFAULT_TRIALS[exp],
        seed=args.seed,
        output=args.output,
        figures=args.figures,
        workers=args.workers,
    )
    if exp == "gauss-validate":
        cfg.n = args.n
        cfg.sigma_list = args.sigma if args.sigma else [0.5, 1.0, 2.0, 3.0]
        cfg.mu = args.mu
    elif exp == "long-context":
        cfg.n_list = args.n if args.n else [4096, 8192, 16384]
        cfg.sigma = args.sigma
        cfg.mu = args.mu
    elif exp == "eps-sweep":
        cfg.n = args.n
        cfg.sigma = args.sigma
        cfg.mu = args.mu
        cfg.input = args.input
        cfg.strict = args.strict
    elif exp == "search-sim":
        cfg.n = args.n
        cfg.k = args.k
        cfg.cells = args.cells
    elif exp == "audit-dump":
        cfg.input = args.input
        cfg.k = args.k
        cfg.strict = args.strict
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    report = run_experiment(cfg)

    out = Path(cfg.output) if cfg.output else Path(f"{cfg.experiment}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(report, out)
    written = [str(out)]
    if report.plot_data is not None:
        plot_path = out.with_suffix(".plot.json")
        write_plot_json(report, plot_path)
        written.append(str(plot_path))
    if "records" in report.extras:
        rec_path = out.with_suffix(".records.jsonl")
        with open(rec_path, "w", encoding="utf-8") as fh:
            for rec in report.extras["records"]:
                fh.write(json.dumps(rec) + "\n")
        written.append(str(rec_path))
    if cfg.figures:
        from .harness.figures import render_figure

        fig_path = out.with_suffix(".png")
        render_figure(report, fig_path)
        written.append(str(fig_path))

    print(f"{cfg.experiment}: {len(report.rows)} rows, "
          f"{report.violations} oracle violations")
    for path in written:
        print(f"  wrote {path}")
    return 0 if report.violations == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
