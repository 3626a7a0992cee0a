"""Flat-file output: CSV tables and JSON reports.

Formatting rules (fixed so reruns are byte-identical):

* CSV: one header row, comma separator, ``\\n`` line ends, reals written
  with ``format(x, ".17g")`` (round-trips every double), integers plain.
* JSON: ``json.dumps(obj, indent=2, sort_keys=True)`` plus a trailing
  newline; floats use Python's shortest round-trip repr; every report
  carries ``"schema_version": "1"``.
* Files are written to a temporary sibling and renamed into place, so a
  failed run never leaves a partial file.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .montecarlo import McEstimate
from .rates import RateCurve

SCHEMA_VERSION = "1"
TAIL_HEADER = ("n", "mean", "std_error", "replicas", "seed")


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def json_text(report: dict) -> str:
    body = {"schema_version": SCHEMA_VERSION, **report}
    return json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n"


def emit(text: str, out: str | Path | None) -> None:
    """Write to ``out`` atomically, or to stdout when ``out`` is None/'-'."""
    if out is None or str(out) == "-":
        sys.stdout.write(text)
        return
    path = Path(out)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def tail_rows(cuts: Sequence[int], estimates: Sequence[McEstimate]) -> list[tuple]:
    return [(int(n), e.mean, e.std_error, e.replicas, e.master_seed) for n, e in zip(cuts, estimates)]


def parse_tail_csv(text: str) -> list[tuple[int, McEstimate]]:
    """Rows of a tail-error CSV; raises ValueError on any malformed content."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty CSV") from None
    if tuple(h.strip() for h in header) != TAIL_HEADER:
        raise ValueError(f"expected header {','.join(TAIL_HEADER)}, got {','.join(header)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(TAIL_HEADER):
            raise ValueError(f"line {lineno}: expected {len(TAIL_HEADER)} fields")
        try:
            n = int(rec[0])
            mean, se = float(rec[1]), float(rec[2])
            reps, seed = int(rec[3]), int(rec[4])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if not (math.isfinite(mean) and math.isfinite(se)) or se < 0 or mean < 0:
            raise ValueError(f"line {lineno}: invalid estimate")
        rows.append((n, McEstimate(mean, se, reps, seed)))
    if not rows:
        raise ValueError("CSV has no data rows")
    return rows


def curve_from_rows(rows: Sequence[tuple[int, McEstimate]], **metadata) -> tuple[RateCurve, list[int]]:
    """Rate curve from CSV rows, dropping empty tails (mean 0) and n < 3."""
    kept = [(n, e) for n, e in rows if e.mean > 0 and n >= 3]
    dropped = [n for n, e in rows if not (e.mean > 0 and n >= 3)]
    if not kept:
        raise ValueError("no usable rows (need mean > 0 and n >= 3)")
    return RateCurve([n for n, _ in kept], [e for _, e in kept], dict(metadata)), dropped
