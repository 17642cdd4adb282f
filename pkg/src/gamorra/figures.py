"""Figure rendering for benchmark curves and comparison reports.

Every figure lands next to the delimited output it illustrates; the
CSV/JSON files stay the canonical machine-readable artifacts.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import ModelResult  # noqa: E402
from .perf import PerfModel  # noqa: E402

_MODEL_COLORS = {
    "gm-h": "#1f77b4",
    "gm-of": "#17becf",
    "ar": "#ff7f0e",
    "fcm": "#2ca02c",
    "frq": "#d62728",
}


def render_perf_model(model: PerfModel, path: str | Path) -> Path:
    """Per-stage performance functions on a grid, one panel per stage."""
    stages = list(model.functions)
    cols = 4
    rows = (len(stages) + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(4 * cols, 3 * rows))
    for ax, stage in zip(axes.flat, stages):
        fn = model.functions[stage]
        xs = [x for x, _ in fn.breakpoints]
        ys = [y for _, y in fn.breakpoints]
        ax.plot(xs, ys, marker="o", markersize=3)
        ax.set_title(stage)
        ax.set_xlabel("load")
        ax.set_ylabel("ms")
    for ax in axes.flat[len(stages):]:
        ax.set_visible(False)
    fig.suptitle(f"stage performance functions (omega={model.omega})")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_frametimes(results: list[ModelResult], path: str | Path,
                      title: str = "") -> Path:
    """Estimated and actual frametimes over the evaluated frames."""
    fig, ax = plt.subplots(figsize=(12, 5))
    drew_actual = False
    for result in results:
        frames = [r.frame for r in result.log.rows]
        if not drew_actual:
            ax.plot(frames, result.log.actuals, color="black", lw=1.2, label="actual")
            drew_actual = True
        ax.plot(frames, result.log.estimates, lw=0.9, alpha=0.85,
                color=_MODEL_COLORS.get(result.log.model),
                label=result.log.model)
    ax.set_xlabel("frame")
    ax.set_ylabel("frametime (ms)")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", ncol=3, fontsize=9)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_error_summary(results: list[ModelResult], path: str | Path) -> Path:
    """Mean absolute error and missed-frame rate per model."""
    labels = [r.log.model for r in results]
    rows = [r.metrics_row() for r in results]
    colors = [_MODEL_COLORS.get(m, "#7f7f7f") for m in labels]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.bar(labels, [r["mean_abs_ms"] for r in rows], color=colors)
    ax1.set_ylabel("mean |error| (ms)")
    ax2.bar(labels, [r["mfr_pct"] for r in rows], color=colors)
    ax2.set_ylabel("missed-frame rate (%)")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
