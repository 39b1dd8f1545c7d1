"""Writers and readers for sweep records and summary reports.

``summary.csv`` has one row per (backend, value) cell, columns in
``CELL_COLUMNS`` order; empty fields mean the cell had no data.
``cross.csv`` holds the best/worst backend ratio per value. ``summary.json``
carries both tables plus the report note and validates against
``REPORT_SCHEMA``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

from mcprice.bench.summary import CellSummary, CrossRatio, Report
from mcprice.bench.sweep import RunRecord

CELL_COLUMNS = [f.name for f in fields(CellSummary)]
CROSS_COLUMNS = [f.name for f in fields(CrossRatio)]
RECORD_COLUMNS = [f.name for f in fields(RunRecord)]
FORMATS = ("csv", "json", "dat", "png")

_NUM = {"type": ["number", "null"]}
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "note", "axis", "cells", "cross"],
    "properties": {
        "schema": {"const": "mcprice.bench.report/1"},
        "note": {"type": "string"},
        "axis": {"type": "string"},
        "cells": {
            "type": "array",
            "items": {
                "type": "object",
                "required": CELL_COLUMNS,
                "additionalProperties": False,
                "properties": {
                    "backend": {"type": "string"},
                    "axis": {"type": "string"},
                    "value": {"type": "integer"},
                    "cold_count": {"type": "integer", "minimum": 0},
                    "hot_count": {"type": "integer", "minimum": 0},
                    "missing": {"type": "boolean"},
                    **{c: _NUM for c in CELL_COLUMNS
                       if c not in ("backend", "axis", "value", "cold_count", "hot_count", "missing")},
                },
            },
        },
        "cross": {
            "type": "array",
            "items": {
                "type": "object",
                "required": CROSS_COLUMNS,
                "additionalProperties": False,
                "properties": {
                    "axis": {"type": "string"},
                    "value": {"type": "integer"},
                    "basis": {"enum": ["hot", "cold"]},
                    "best_backend": {"type": "string"},
                    "worst_backend": {"type": "string"},
                    "best_e2e_s": {"type": "number"},
                    "worst_e2e_s": {"type": "number"},
                    "ratio": {"type": "number"},
                },
            },
        },
    },
}


def _open_for_write(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> Path:
    with _open_for_write(path) as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])
    return path


def report_to_dict(report: Report) -> dict:
    return {
        "schema": "mcprice.bench.report/1",
        "note": report.note,
        "axis": report.axis,
        "cells": [asdict(c) for c in report.cells],
        "cross": [asdict(x) for x in report.cross],
    }


def report_from_dict(d: dict) -> Report:
    return Report(
        axis=d["axis"],
        cells=[CellSummary(**c) for c in d["cells"]],
        cross=[CrossRatio(**x) for x in d["cross"]],
        note=d["note"],
    )


def write_gnuplot(report: Report, out_dir: Path) -> list[Path]:
    """One whitespace-separated file per backend; ``NaN`` marks missing values."""
    paths = []
    for backend in dict.fromkeys(c.backend for c in report.cells):
        path = out_dir / f"{backend}.dat"
        with _open_for_write(path) as fh:
            fh.write(f"# backend={backend} axis={report.axis}\n")
            fh.write("# value cold_processing_s cold_e2e_s hot_gmean_processing_s hot_gmean_e2e_s p95_e2e_s\n")
            for c in report.cells:
                if c.backend != backend:
                    continue
                cols = [c.cold_processing_s, c.cold_e2e_s, c.hot_gmean_processing_s, c.hot_gmean_e2e_s, c.p95_e2e_s]
                fh.write(" ".join([str(c.value)] + ["NaN" if v is None else repr(v) for v in cols]) + "\n")
        paths.append(path)
    return paths


def emit(report: Report, out_dir, formats: Sequence[str] = ("csv", "json")) -> list[Path]:
    """Write the report in each requested format; returns the files written."""
    if not report.cells:
        raise ValueError("empty report")
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown formats {sorted(unknown)}; choose from {FORMATS}")
    out_dir = Path(out_dir)
    written = []
    if "csv" in formats:
        written.append(_write_csv(out_dir / "summary.csv", CELL_COLUMNS, (asdict(c) for c in report.cells)))
        written.append(_write_csv(out_dir / "cross.csv", CROSS_COLUMNS, (asdict(x) for x in report.cross)))
    if "json" in formats:
        path = out_dir / "summary.json"
        with _open_for_write(path) as fh:
            json.dump(report_to_dict(report), fh, indent=2)
            fh.write("\n")
        written.append(path)
    if "dat" in formats:
        written.extend(write_gnuplot(report, out_dir))
    if "png" in formats:
        from mcprice.bench.plots import plot_report

        written.extend(plot_report(report, out_dir))
    return written


def write_records(records: Sequence[RunRecord], out_dir) -> Path:
    return _write_csv(Path(out_dir) / "records.csv", RECORD_COLUMNS, (asdict(r) for r in records))


def read_records(path) -> list[RunRecord]:
    path = Path(path)
    if path.is_dir():
        path = path / "records.csv"
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(RunRecord(
                backend=row["backend"],
                axis=row["axis"],
                value=int(row["value"]),
                repetition=int(row["repetition"]),
                processing_s=float(row["processing_s"]),
                e2e_s=float(row["e2e_s"]),
                cold=row["cold"] == "True",
                client_s=float(row["client_s"] or 0.0),
            ))
    return out


def read_summary_csv(path) -> list[dict]:
    """Parse ``summary.csv`` back into typed dicts (``None`` for empty fields)."""
    ints = {"value", "cold_count", "hot_count"}
    strs = {"backend", "axis"}
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            typed: dict[str, Optional[object]] = {}
            for k, v in row.items():
                if k in strs:
                    typed[k] = v
                elif k == "missing":
                    typed[k] = v == "True"
                elif v == "":
                    typed[k] = None
                elif k in ints:
                    typed[k] = int(v)
                else:
                    typed[k] = float(v)
            rows.append(typed)
    return rows
