"""Rendering of benchmark reports: fixed-order CSV, plain-text table, and
matplotlib figures written alongside the delimited output."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .bench import BenchReport, MethodResult

COLUMNS = [
    "method",
    "summary_avg_s",
    "summary_max_s",
    "summary_bytes",
    "clustering_time_s",
    "clustering_method",
    "clients_timed",
    "note",
]


def _row(m: MethodResult) -> list[str]:
    def fmt(v) -> str:
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        return str(v)

    return [
        m.method,
        fmt(m.summary_avg),
        fmt(m.summary_max),
        fmt(m.summary_bytes),
        fmt(m.clustering_time),
        m.clustering_method,
        str(m.clients_timed),
        m.note,
    ]


def render_report(report: BenchReport, format: str = "table") -> str:
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for m in report.methods:
            writer.writerow(_row(m))
        return buf.getvalue()

    if format == "table":
        rows = [COLUMNS] + [_row(m) for m in report.methods]
        widths = [max(len(r[i]) for r in rows) for i in range(len(COLUMNS))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
        lines.append("")
        lines.append(f"machine: {report.machine}")
        lines.append(f"total wall time: {report.total_wall:.3f}s")
        return "\n".join(lines) + "\n"

    raise ValueError(f"unknown report format {format!r}")


def parse_csv_report(text: str) -> list[dict[str, str]]:
    reader = csv.DictReader(io.StringIO(text))
    return list(reader)


def save_figures(report: BenchReport, out_dir) -> list[Path]:
    """Render bar charts of summary time, summary size, and clustering time."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = [m.method for m in report.methods]
    paths = []

    def bar_chart(filename: str, values, title: str, ylabel: str, extra=None):
        fig, ax = plt.subplots(figsize=(6, 4))
        xs = list(range(len(names)))
        plotted = [v if v is not None else 0.0 for v in values]
        if extra:
            label, extra_values = extra
            ax.bar(xs, [v if v is not None else 0.0 for v in extra_values],
                   color="#ee854a", label=label)
            ax.bar(xs, plotted, width=0.5, color="#4878d0", label="avg")
            ax.legend()
        else:
            ax.bar(xs, plotted, color="#4878d0")
        ax.set_xticks(xs)
        ax.set_xticklabels(names)
        ax.set_title(title)
        ax.set_ylabel(ylabel)
        if max(plotted, default=0) > 0:
            ax.set_yscale("log")
        fig.tight_layout()
        path = out_dir / filename
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)

    bar_chart(
        "summary_times.png",
        [m.summary_avg for m in report.methods],
        "Per-client summary time",
        "seconds",
        extra=("max", [m.summary_max for m in report.methods]),
    )
    bar_chart(
        "summary_sizes.png",
        [m.summary_bytes for m in report.methods],
        "Serialized summary size",
        "bytes",
    )
    bar_chart(
        "clustering_times.png",
        [m.clustering_time for m in report.methods],
        "Clustering wall time",
        "seconds",
    )
    return paths
