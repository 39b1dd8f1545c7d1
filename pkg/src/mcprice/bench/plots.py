from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from mcprice.bench.summary import Report  # noqa: E402

AXIS_LABEL = {"paths": "Monte-Carlo paths per option", "batch": "options per request"}

_STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (8.0, 3.4),
}


def plot_report(report: Report, out_dir) -> list[Path]:
    """Processing and end-to-end time against the swept axis, log-log, one line per backend.

    Solid lines are hot geometric means, dashed lines the cold (first) run.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    backends = list(dict.fromkeys(c.backend for c in report.cells))
    with plt.rc_context(_STYLE):
        fig, (ax_proc, ax_e2e) = plt.subplots(1, 2, sharex=True)
        for i, backend in enumerate(backends):
            cells = [c for c in report.cells if c.backend == backend and not c.missing]
            if not cells:
                continue
            color = f"C{i}"
            xs = [c.value for c in cells]
            ax_proc.plot(xs, [c.hot_gmean_processing_s for c in cells], "o-", color=color, label=f"{backend} hot")
            ax_e2e.plot(xs, [c.hot_gmean_e2e_s for c in cells], "o-", color=color, label=f"{backend} hot")
            cold = [(c.value, c.cold_processing_s, c.cold_e2e_s) for c in cells if c.cold_e2e_s is not None]
            if cold:
                ax_proc.plot([c[0] for c in cold], [c[1] for c in cold], "x--", color=color, label=f"{backend} cold")
                ax_e2e.plot([c[0] for c in cold], [c[2] for c in cold], "x--", color=color, label=f"{backend} cold")
        for ax, title in ((ax_proc, "worker processing"), (ax_e2e, "end-to-end")):
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_xlabel(AXIS_LABEL.get(report.axis, report.axis))
            ax.set_title(title)
        ax_proc.set_ylabel("time [s]")
        ax_e2e.legend(loc="best")
        fig.tight_layout()
        path = out_dir / f"times_vs_{report.axis or 'value'}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
    return [path]
