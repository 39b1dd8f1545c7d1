"""Per-cell cold/hot statistics and cross-backend ratios."""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from mcprice.bench.sweep import RunRecord

REPORT_NOTE = (
    "Times are wall-clock on the measuring host. Absolute values are not comparable "
    "across machines; read the shapes and ratios."
)


@dataclass
class CellSummary:
    backend: str
    axis: str
    value: int
    cold_count: int = 0
    hot_count: int = 0
    cold_processing_s: Optional[float] = None
    cold_e2e_s: Optional[float] = None
    hot_gmean_processing_s: Optional[float] = None
    hot_gmean_e2e_s: Optional[float] = None
    hot_mean_e2e_s: Optional[float] = None
    p50_e2e_s: Optional[float] = None
    p95_e2e_s: Optional[float] = None
    p99_e2e_s: Optional[float] = None
    cold_hot_ratio_processing: Optional[float] = None
    cold_hot_ratio_e2e: Optional[float] = None
    missing: bool = False


@dataclass
class CrossRatio:
    axis: str
    value: int
    basis: str  # "hot" compares geometric means, "cold" compares first runs
    best_backend: str
    worst_backend: str
    best_e2e_s: float
    worst_e2e_s: float
    ratio: float


@dataclass
class Report:
    axis: str
    cells: list[CellSummary]
    cross: list[CrossRatio] = field(default_factory=list)
    note: str = REPORT_NOTE

    def cell(self, backend: str, value: int) -> CellSummary:
        for c in self.cells:
            if c.backend == backend and c.value == value:
                return c
        raise KeyError((backend, value))


def geometric_mean(xs: Sequence[float]) -> float:
    return statistics.geometric_mean(xs)


def _ratio(a: Optional[float], b: Optional[float]) -> Optional[float]:
    if a is None or not b:
        return None
    return a / b


def summarize_cell(backend: str, axis: str, value: int, records: Sequence[RunRecord]) -> CellSummary:
    cell = CellSummary(backend, axis, value)
    cold = [r for r in records if r.cold]
    hot = [r for r in records if not r.cold]
    cell.cold_count = len(cold)
    if cold:
        # One sample by default; several are combined like the hot runs.
        cell.cold_processing_s = geometric_mean([r.processing_s for r in cold])
        cell.cold_e2e_s = geometric_mean([r.e2e_s for r in cold])
    cell.hot_count = len(hot)
    if not hot:
        cell.missing = True
        return cell
    e2e = np.array([r.e2e_s for r in hot])
    cell.hot_gmean_processing_s = geometric_mean([r.processing_s for r in hot])
    cell.hot_gmean_e2e_s = geometric_mean(e2e.tolist())
    cell.hot_mean_e2e_s = float(e2e.mean())
    cell.p50_e2e_s, cell.p95_e2e_s, cell.p99_e2e_s = (float(v) for v in np.percentile(e2e, [50, 95, 99]))
    cell.cold_hot_ratio_processing = _ratio(cell.cold_processing_s, cell.hot_gmean_processing_s)
    cell.cold_hot_ratio_e2e = _ratio(cell.cold_e2e_s, cell.hot_gmean_e2e_s)
    return cell


def _cross(axis: str, value: int, cells: Sequence[CellSummary], basis: str) -> Optional[CrossRatio]:
    attr = "hot_gmean_e2e_s" if basis == "hot" else "cold_e2e_s"
    present = [(getattr(c, attr), c.backend) for c in cells if getattr(c, attr) is not None]
    if len(present) < 2:
        return None
    best, worst = min(present), max(present)
    return CrossRatio(axis, value, basis, best[1], worst[1], best[0], worst[0], worst[0] / best[0])


def summarize(records: Iterable[RunRecord], backends: Optional[Sequence[str]] = None,
              values: Optional[Sequence[int]] = None) -> Report:
    """Group records into (backend, value) cells.

    When ``backends``/``values`` are given, every combination gets a row and
    cells without hot data are flagged ``missing`` rather than filled in.
    """
    records = list(records)
    if not records and not (backends and values):
        raise ValueError("no records to summarize")
    axes = {r.axis for r in records}
    if len(axes) > 1:
        raise ValueError(f"records mix axes {sorted(axes)}")
    axis = axes.pop() if axes else ""
    groups: dict[tuple[str, int], list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.backend, r.value), []).append(r)
    backends = list(backends) if backends else list(dict.fromkeys(r.backend for r in records))
    values = sorted(values) if values else sorted({r.value for r in records})
    cells = [summarize_cell(b, axis, v, groups.get((b, v), [])) for b in backends for v in values]
    cross = []
    for v in values:
        at_v = [c for c in cells if c.value == v]
        for basis in ("hot", "cold"):
            x = _cross(axis, v, at_v, basis)
            if x is not None:
                cross.append(x)
    return Report(axis, cells, cross)
