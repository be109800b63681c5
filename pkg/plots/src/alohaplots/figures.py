"""Figure rendering over experiment CSVs.

Rendering is strictly read-only over the CSV: analytic series become
lines, simulated points become markers with error bars, and rows whose
analytic value is the ``unbounded`` sentinel become shaded regions.  No
model value is ever recomputed here.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import groupby

import matplotlib
from matplotlib.figure import Figure

from .reader import UNBOUNDED, Row, SchemaError, read_rows

matplotlib.rcParams["svg.hashsalt"] = "alohaplots"

__all__ = ["FIGURE_IDS", "FigureJob", "build_figure", "render"]

FIGURE_IDS = ("fig3", "fig9", "fig11", "fig12", "fig13")

#: Metrics each figure id expects to find in its CSV.
_REQUIRED_METRICS = {
    "fig3": {"throughput_sat"},
    "fig9": {"qk"},
    "fig11": {"wait_mean"},
    "fig12": {"wait_mean"},
    "fig13": {"wait_mean"},
}

_COLORS = ("C0", "C1", "C2", "C3", "C4", "C5")


@dataclass(frozen=True)
class FigureJob:
    csv_path: str
    figure_id: str
    output_image: str
    log_y: bool | None = None  # default: log scale for the delay figures

    def wants_log_y(self) -> bool:
        if self.log_y is not None:
            return self.log_y
        return self.figure_id in ("fig11", "fig12", "fig13")


def _check_metric_mix(job: FigureJob, rows: list[Row]) -> None:
    present = {row.metric for row in rows}
    required = _REQUIRED_METRICS[job.figure_id]
    if not required <= present:
        raise SchemaError(
            f"{job.csv_path}: metric mix {sorted(present)} does not match "
            f"{job.figure_id} (needs {sorted(required)})"
        )


def _finite(value) -> bool:
    return isinstance(value, float)


def _panel_grid(fig: Figure, count: int):
    axes = fig.subplots(1, count, squeeze=False)[0]
    return list(axes)


def _unbounded_spans(points: list[Row]):
    """Contiguous runs of sentinel rows along the r axis."""
    spans = []
    for is_unbounded, chunk in groupby(points, key=lambda p: p.analytic_value == UNBOUNDED):
        chunk = list(chunk)
        if is_unbounded:
            spans.append((chunk[0].r, chunk[-1].r))
    return spans


def _build_fig3(job: FigureJob, rows: list[Row]) -> Figure:
    data = [r for r in rows if r.metric == "throughput_sat"]
    ns = sorted({r.n for r in data})
    fig = Figure(figsize=(5.5 * len(ns), 4.2))
    for ax, n in zip(_panel_grid(fig, len(ns)), ns):
        panel = [r for r in data if r.n == n]
        for color, m in zip(_COLORS, sorted({r.m for r in panel}, key=lambda s: float("inf") if s == "inf" else float(s))):
            series = sorted((r for r in panel if r.m == m), key=lambda r: r.r)
            xs = [r.r for r in series]
            ax.plot(xs, [r.analytic_value for r in series], color=color,
                    label=f"M={m}")
            sim = [r for r in series if r.sim_mean is not None]
            if sim:
                ax.errorbar([r.r for r in sim], [r.sim_mean for r in sim],
                            yerr=[r.sim_ci or 0.0 for r in sim], color=color,
                            fmt="o", ms=4, ls="none", capsize=2)
        ax.set_xscale("log")
        ax.set_xlabel("transmission probability r")
        ax.set_ylabel("saturated throughput (packets/slot)")
        ax.set_title(f"n = {n}")
        ax.set_ylim(0.0, 1.05)
        ax.legend(fontsize=8)
    return fig


def _build_fig9(job: FigureJob, rows: list[Row]) -> Figure:
    data = [r for r in rows if r.metric == "qk" and r.k is not None]
    if not data:
        raise SchemaError(f"{job.csv_path}: no per-k queue-distribution rows")
    combos = sorted({(r.m, r.r) for r in data}, key=lambda c: (float("inf") if c[0] == "inf" else float(c[0]), c[1]))
    fig = Figure(figsize=(4.5 * len(combos), 3.8))
    for ax, (m, r_val) in zip(_panel_grid(fig, len(combos)), combos):
        series = sorted((r for r in data if r.m == m and r.r == r_val), key=lambda r: r.k)
        ks = [r.k for r in series]
        ax.bar(ks, [r.sim_mean for r in series], width=0.8, alpha=0.45,
               label="simulated")
        ax.plot(ks, [r.analytic_value for r in series], "C3o-", ms=3,
                label="geometric law")
        ax.set_xlabel("queue length at busy-period start, k")
        ax.set_ylabel("probability")
        ax.set_title(f"M = {m}, r = {r_val:g}")
        ax.legend(fontsize=8)
    return fig


def _build_delay(job: FigureJob, rows: list[Row]) -> Figure:
    data = [r for r in rows if r.metric == "wait_mean"]
    ns = sorted({r.n for r in data})
    fig = Figure(figsize=(5.5 * len(ns), 4.2))
    for ax, n in zip(_panel_grid(fig, len(ns)), ns):
        panel = [r for r in data if r.n == n]
        loads = sorted({r.lambda_hat for r in panel})
        for color, lh in zip(_COLORS, loads):
            series = sorted((r for r in panel if r.lambda_hat == lh), key=lambda r: r.r)
            finite = [r for r in series if _finite(r.analytic_value)]
            ax.plot([r.r for r in finite], [r.analytic_value for r in finite],
                    color=color, label=f"load {lh:g}")
            corrected = [r for r in finite if _finite(r.analytic_corrected)]
            if corrected:
                ax.plot([r.r for r in corrected],
                        [r.analytic_corrected for r in corrected],
                        color=color, ls="--", lw=1.0,
                        label=f"load {lh:g} (finite-n)")
            sim = [r for r in series if r.sim_mean is not None]
            if sim:
                ax.errorbar([r.r for r in sim], [r.sim_mean for r in sim],
                            yerr=[r.sim_ci or 0.0 for r in sim], color=color,
                            fmt="o", ms=4, ls="none", capsize=2)
            for lo, hi in _unbounded_spans(series):
                ax.axvspan(lo, hi, color=color, alpha=0.08)
        ax.set_xscale("log")
        if job.wants_log_y():
            ax.set_yscale("log")
        ax.set_xlabel("transmission probability r")
        ax.set_ylabel("mean waiting time (slots)")
        ax.set_title(f"n = {n}")
        ax.legend(fontsize=8)
    return fig


def build_figure(job: FigureJob) -> Figure:
    """Validate the CSV against the figure id and build the figure."""
    if job.figure_id not in FIGURE_IDS:
        raise SchemaError(f"unknown figure id {job.figure_id!r}; expected one of {FIGURE_IDS}")
    rows = read_rows(job.csv_path)
    _check_metric_mix(job, rows)
    if job.figure_id == "fig3":
        return _build_fig3(job, rows)
    if job.figure_id == "fig9":
        return _build_fig9(job, rows)
    return _build_delay(job, rows)


def render(job: FigureJob) -> str:
    """Render the job to its output image (PNG or SVG by extension)."""
    fig = build_figure(job)
    fig.savefig(job.output_image, dpi=150, metadata={"Date": None}
                if job.output_image.endswith(".svg") else None)
    return job.output_image
