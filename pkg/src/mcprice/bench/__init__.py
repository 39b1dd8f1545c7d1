from mcprice.bench.report import emit, read_records, write_records
from mcprice.bench.summary import CellSummary, CrossRatio, Report, summarize
from mcprice.bench.sweep import Axis, RunRecord, ServiceClient, SweepResult, SweepSpec, run_sweep

__all__ = [
    "Axis", "CellSummary", "CrossRatio", "Report", "RunRecord", "ServiceClient", "SweepResult",
    "SweepSpec", "emit", "read_records", "run_sweep", "summarize", "write_records",
]
