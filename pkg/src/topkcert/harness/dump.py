"""Attention dump ingestion.

The shared JSONL contract, one record per attention row:

    {"layer": int, "head": int, "query": int,
     "mode": "probs" | "logits", "values": [float, ...]}

Probability rows must be non-negative and sum to 1 within 1e-5; logits rows
just need finite entries.  Log-probabilities are valid scores because every
certificate is invariant to a global score shift.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ..truncation import ScoreVector

__all__ = ["AttentionDumpRecord", "DumpFormatError", "parse_record", "read_dump",
           "record_scores"]

# smallest positive double; zero probabilities are floored here so their log
# stays finite (perturbs the row mass by < n * 5e-324, far below any budget)
_PROB_FLOOR = 5e-324


class DumpFormatError(ValueError):
    pass


@dataclass(frozen=True)
class AttentionDumpRecord:
    layer: int
    head: int
    query: int
    mode: str
    values: np.ndarray


def parse_record(line: str) -> AttentionDumpRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DumpFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise DumpFormatError("record must be a JSON object")
    for key in ("layer", "head", "query", "mode", "values"):
        if key not in obj:
            raise DumpFormatError(f"missing field {key!r}")
    for key in ("layer", "head", "query"):
        if not isinstance(obj[key], int) or isinstance(obj[key], bool):
            raise DumpFormatError(f"field {key!r} must be an integer")
    mode = obj["mode"]
    if mode not in ("probs", "logits"):
        raise DumpFormatError(f"mode must be 'probs' or 'logits', got {mode!r}")
    values = np.asarray(obj["values"], dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise DumpFormatError("values must be a flat list with at least 2 entries")
    if not np.all(np.isfinite(values)):
        raise DumpFormatError("values must be finite")
    if mode == "probs":
        if np.any(values < 0):
            raise DumpFormatError("probability values must be non-negative")
        total = float(values.sum())
        if not math.isclose(total, 1.0, abs_tol=1e-5, rel_tol=0.0):
            raise DumpFormatError(f"probability row sums to {total!r}, not 1 +- 1e-5")
    return AttentionDumpRecord(layer=obj["layer"], head=obj["head"],
                               query=obj["query"], mode=mode, values=values)


def read_dump(path, strict: bool = False) -> tuple[list[AttentionDumpRecord], int]:
    """Parse a dump file; returns (records, skipped_count).

    Strict mode raises on the first malformed record instead of skipping.
    """
    records: list[AttentionDumpRecord] = []
    skipped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(parse_record(line))
            except DumpFormatError as exc:
                if strict:
                    raise DumpFormatError(f"{path}:{lineno}: {exc}") from exc
                skipped += 1
    return records, skipped


def record_scores(record: AttentionDumpRecord) -> ScoreVector:
    """Scores for one record: logits pass through, probabilities go to logs."""
    if record.mode == "logits":
        return ScoreVector(record.values)
    return ScoreVector(np.log(np.maximum(record.values, _PROB_FLOOR)))
