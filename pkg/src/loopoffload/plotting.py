"""Figures rendered next to a written report.

``<stem>.speedup.png`` has one bar per measured program; ``<stem>.trace.png``
shows every measured pattern's time against the all-CPU baseline.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_PNG_META = {"Software": None}  # keeps the files byte-stable


def _stem(report_path) -> Path:
    p = Path(report_path)
    return p.with_suffix("") if p.suffix else p


def plot_speedups(report, path) -> Path:
    runs = [r for r in report.runs if r.outcome is not None]
    fig, ax = plt.subplots(figsize=(max(3.5, 1.2 * len(runs) + 2), 3.2))
    names = [r.name for r in runs]
    values = [r.outcome.speedup for r in runs]
    bars = ax.bar(names, values, color="#4c72b0", width=0.6)
    for bar, v in zip(bars, values):
        ax.annotate(f"{v:.2f}x", (bar.get_x() + bar.get_width() / 2, v),
                    ha="center", va="bottom", fontsize=9, xytext=(0, 2), textcoords="offset points")
    ax.axhline(1.0, color="0.4", lw=0.8, ls="--")
    ax.set_ylabel("speedup vs all-CPU")
    ax.set_ylim(0, max(values + [1.0]) * 1.2)
    ax.spines[["top", "right"]].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return Path(path)


def plot_traces(report, path) -> Path:
    runs = [r for r in report.runs if r.outcome is not None]
    fig, axes = plt.subplots(1, max(1, len(runs)), figsize=(4.2 * max(1, len(runs)), 3.4), squeeze=False)
    for ax, run in zip(axes[0], runs):
        o = run.outcome
        done = [p for p in o.trace if p.status == "measured"]
        labels = ["{" + ",".join(map(str, p.loop_ids)) + "}" for p in done]
        colors = ["#dd8452" if p.round == 2 else "#4c72b0" for p in done]
        colors = ["#55a868" if p.pattern_id == o.best_pattern else c for p, c in zip(done, colors)]
        ax.bar(range(len(done)), [p.wall_time_ms for p in done], color=colors)
        ax.axhline(o.baseline_ms, color="0.3", lw=1, ls="--", label="all-CPU")
        ax.set_xticks(range(len(done)), labels, rotation=30, ha="right", fontsize=8)
        ax.set_ylabel("time (ms)")
        ax.set_title(run.name, fontsize=10)
        ax.legend(fontsize=8, frameon=False)
        ax.spines[["top", "right"]].set_visible(False)
    if not runs:
        axes[0][0].set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return Path(path)


def render_figures(report, report_path) -> list:
    """Write both figures beside ``report_path``; nothing is drawn without measurements."""
    if not any(r.outcome is not None for r in report.runs):
        return []
    stem = _stem(report_path)
    return [
        plot_speedups(report, f"{stem}.speedup.png"),
        plot_traces(report, f"{stem}.trace.png"),
    ]
