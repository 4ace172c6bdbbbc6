"""Writing and reading run reports."""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .errors import ReportIOError

__all__ = ["write_report", "read_report", "report_tables", "dumps", "FORMATS"]

FORMATS = ("json", "csv")

OCCUPANCY_COLUMNS = ("level_index", "salary", "log_salary", "count", "fraction", "effective_utility")
TRACE_COLUMNS = ("step", "level_index", "count")
SWEEP_COLUMNS = ("param", "value", "status", "quantity", "result", "error")
CHECK_COLUMNS = ("name", "status", "value", "tolerance", "detail")


def dumps(report) -> str:
    # floats are written with repr, so json.loads gives back the same doubles
    return json.dumps(report, indent=2) + "\n"


def report_tables(report):
    """Tidy tables carried by a report, as ``{name: (columns, rows)}``."""
    res = report.get("results", {})
    tables = {}
    command = report.get("command")
    method = res.get("primary")
    if method and method in res:
        sol = res[method]
        grid = res["grid"]
        rows = [
            (i, s, ls, c, f, u)
            for i, (s, ls, c, f, u) in enumerate(zip(
                grid["salaries"], grid["log_salaries"], sol["counts"], sol["fractions"], sol["effective_utility"]
            ))
        ]
        tables["occupancy"] = (OCCUPANCY_COLUMNS, rows)
    if command == "simulate":
        trace = res.get("trace", {})
        rows = [
            (step, i, c)
            for step, counts in zip(trace.get("steps", []), trace.get("counts", []))
            for i, c in enumerate(counts)
        ]
        tables["trace"] = (TRACE_COLUMNS, rows)
    if command == "sweep":
        tables["sweep"] = (SWEEP_COLUMNS, [tuple(r[c] for c in SWEEP_COLUMNS) for r in res.get("rows", [])])
    if command == "verify":
        tables["checks"] = (CHECK_COLUMNS, [tuple(c[k] for k in CHECK_COLUMNS) for c in res.get("checks", [])])
    return tables


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_report(report, fmt, path):
    """Write ``report`` to ``path``. CSV output writes one file per table,
    named ``<stem>_<table>.csv`` beside ``path``. Returns the paths written."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    path = Path(path)
    written = []
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            path.write_text(dumps(report), encoding="utf-8")
            return [path]
        stem = path.stem if path.suffix else path.name
        for name, (columns, rows) in report_tables(report).items():
            target = path.parent / f"{stem}_{name}.csv"
            with open(target, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(columns)
                for row in rows:
                    writer.writerow([_cell(v) for v in row])
            written.append(target)
    except OSError as exc:
        raise ReportIOError(path, exc.strerror or str(exc)) from exc
    return written


def read_report(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
