"""Run reports and their CSV / JSON encodings.

CSV files may start with ``#`` metadata lines; data cells are
``format(v, '.17g')`` so every float parses back to the identical value.
Booleans are written as 0/1 and missing values as ``nan``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence


@dataclass
class RunReport:
    problem: str
    method: str
    config: dict[str, Any]
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> list[float]:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]


def _cell(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    return format(float(v), ".17g")


def to_csv(report: RunReport, metadata: dict[str, Any] | None = None) -> str:
    buf = io.StringIO()
    meta = {"problem": report.problem, "method": report.method, **report.config}
    if metadata:
        meta.update(metadata)
    for key, value in meta.items():
        buf.write(f"# {key}: {value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.columns)
    for row in report.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def read_csv(text: str) -> tuple[list[str], list[list[float]]]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    columns = next(reader)
    rows = [[float(c) for c in row] for row in reader]
    return columns, rows


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {str(k): _jsonable(val) for k, val in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):  # numpy scalar
        return _jsonable(v.item())
    return v


def to_json(report: RunReport, metadata: dict[str, Any] | None = None) -> str:
    doc = {
        "problem": report.problem,
        "method": report.method,
        "config": report.config,
        "columns": report.columns,
        "rows": report.rows,
        "summary": report.summary,
    }
    if metadata:
        doc["metadata"] = metadata
    return json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n"


def error_summary(values: Sequence[Sequence[float]], reference: Sequence[Sequence[float]]) -> dict[str, float]:
    """Max absolute and max relative deviation over all cells."""
    max_abs = 0.0
    max_rel = 0.0
    for row, ref in zip(values, reference):
        for v, r in zip(row, ref):
            d = abs(v - r)
            max_abs = max(max_abs, d)
            max_rel = max(max_rel, d / abs(r) if r != 0.0 else (0.0 if d == 0.0 else math.inf))
    return {"max_abs_err": max_abs, "max_rel_err": max_rel}
