"""Evaluation metrics and the deterministic comparison report.

The headline metric is the missed-frame rate: the percentage of frames
whose estimate lands strictly below the actual time (scaled by an
optional safety margin), i.e. frames a scheduler trusting the estimate
would have mispredicted as faster than they were.  Error statistics are
absolute-millisecond and relative summaries over a run.

Report CSV rows keep a fixed column order and 6-decimal floats so a
re-run over identical inputs is byte-identical.  Runtime overhead and
resident-set columns are measured quantities: they are written as zero
unless the caller explicitly measured them, keeping the default report
path deterministic.
"""

from __future__ import annotations

import resource
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .trainer import RunLog

REPORT_COLUMNS = (
    "model", "scenario", "seed", "mfr_pct", "mean_abs_ms", "max_abs_ms",
    "min_abs_ms", "mean_pct", "overhead_ms", "overhead_pct", "rss_mb",
)


def mfr(estimates, actuals, margin: float = 0.0) -> float:
    """Missed-frame rate in percent: estimates strictly below the actual.

    ``margin`` shrinks the actual before comparing, so a positive margin
    forgives small underestimates; the default counts every one.
    """
    e, a = _aligned(estimates, actuals)
    if not 0.0 <= margin < 1.0:
        raise ValueError("margin must sit in [0, 1)")
    return 100.0 * float(np.count_nonzero(e < a * (1.0 - margin))) / e.size


def error_stats(estimates, actuals) -> dict[str, float]:
    """Absolute and relative error summary over one run."""
    e, a = _aligned(estimates, actuals)
    if np.any(a <= 0):
        raise ValueError("actual frame times must be positive")
    abs_err = np.abs(e - a)
    return {
        "mean_abs_ms": float(abs_err.mean()),
        "max_abs_ms": float(abs_err.max()),
        "min_abs_ms": float(abs_err.min()),
        "mean_pct": float((abs_err / a).mean() * 100.0),
    }


def overhead_stats(predict_ms, actuals) -> dict[str, float]:
    """Estimator cost per frame, absolute and relative to the frame time."""
    p = np.asarray(predict_ms, dtype=float)
    a = np.asarray(actuals, dtype=float)
    if p.size == 0 or p.shape != a.shape:
        raise ValueError("need one timing sample per frame")
    return {
        "overhead_ms": float(p.mean()),
        "overhead_pct": float((p / a).mean() * 100.0),
    }


def rss_mb() -> float:
    """Approximate peak resident set of this process in megabytes."""
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def _aligned(estimates, actuals) -> tuple[np.ndarray, np.ndarray]:
    e = np.asarray(estimates, dtype=float)
    a = np.asarray(actuals, dtype=float)
    if e.size == 0 or e.shape != a.shape:
        raise ValueError("estimates and actuals must be equal-length and non-empty")
    return e, a


@dataclass
class ModelResult:
    """One model's run over one scenario, plus optional cost measurements."""

    scenario: str
    seed: int
    log: RunLog
    overhead_ms: float = 0.0
    overhead_pct: float = 0.0
    rss_mb: float = 0.0

    def metrics_row(self) -> dict:
        est, act = self.log.estimates, self.log.actuals
        row = {"model": self.log.model, "scenario": self.scenario, "seed": self.seed,
               "mfr_pct": mfr(est, act)}
        row.update(error_stats(est, act))
        row.update(overhead_ms=self.overhead_ms, overhead_pct=self.overhead_pct,
                   rss_mb=self.rss_mb)
        return row


def build_report_csv(results: list[ModelResult]) -> str:
    """Fixed-order, fixed-precision CSV text for a set of model results."""
    lines = [",".join(REPORT_COLUMNS)]
    for result in results:
        row = result.metrics_row()
        cells = []
        for col in REPORT_COLUMNS:
            value = row[col]
            cells.append(f"{value:.6f}" if isinstance(value, float) else str(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def build_report_text(results: list[ModelResult]) -> str:
    """Human-oriented summary table of the same numbers."""
    header = f"{'model':8} {'scenario':16} {'seed':>4} {'mfr%':>8} {'mean|e|':>9} {'max|e|':>9} {'mean%':>8}"
    lines = [header, "-" * len(header)]
    for result in results:
        row = result.metrics_row()
        lines.append(
            f"{row['model']:8} {row['scenario']:16} {row['seed']:>4} "
            f"{row['mfr_pct']:8.3f} {row['mean_abs_ms']:9.4f} "
            f"{row['max_abs_ms']:9.4f} {row['mean_pct']:8.3f}"
        )
    return "\n".join(lines) + "\n"


def emit_report(results: list[ModelResult], out_dir: str | Path,
                formats: tuple[str, ...] = ("csv", "text")) -> list[Path]:
    """Write the report files and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = out_dir / "report.csv"
        path.write_text(build_report_csv(results), encoding="utf-8")
        written.append(path)
    if "text" in formats:
        path = out_dir / "summary.txt"
        path.write_text(build_report_text(results), encoding="utf-8")
        written.append(path)
    return written
