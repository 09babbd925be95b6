"""Experiment harness: reproducible runs, delimited reports, figures."""

from .config import ExperimentConfig
from .dump import AttentionDumpRecord, DumpFormatError, read_dump, record_scores
from .experiments import (
    Report,
    run_audit_dump,
    run_eps_sweep,
    run_experiment,
    run_gauss_validate,
    run_long_context,
    run_search_sim,
)
from .reportio import write_csv, write_plot_json
