"""Deterministic report serialization.

All numbers go through one canonical formatter (shortest round-trip repr),
so a rerun with the same config and seed reproduces every output file byte
for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

__all__ = ["Report", "fmt", "write_csv", "write_plot_json"]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (int,)) or (hasattr(value, "dtype") and getattr(value, "dtype").kind in "iu"):
        return str(int(value))
    return repr(float(value))


@dataclass
class Report:
    """One experiment's tabular result plus optional plot data."""

    name: str
    columns: list[str]
    rows: list[tuple]
    violations: int = 0
    plot_data: dict | None = None
    extras: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]


def write_csv(report: Report, path) -> None:
    lines = [",".join(report.columns)]
    for row in report.rows:
        if len(row) != len(report.columns):
            raise ValueError(f"row width {len(row)} != {len(report.columns)} columns")
        lines.append(",".join(fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_plot_json(report: Report, path) -> None:
    if report.plot_data is None:
        raise ValueError(f"report {report.name} carries no plot data")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.plot_data, fh, indent=2, sort_keys=True)
        fh.write("\n")
