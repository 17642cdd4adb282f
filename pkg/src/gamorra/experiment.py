"""End-to-end experiment wiring: fit, run, and compare models on a trace.

The evaluation protocol mirrors deployment: offline weights come from
the leading training window of the sequence, every model then runs over
the remaining frames, and metrics are computed on those frames only.
Recursive predictors (autoregression, clock-ratio) warm up through the
training window as well, since they would be running from stream start
in practice; their metrics still cover only the evaluation span.
"""

from __future__ import annotations

import logging

from .baselines import fcm_calibrate, run_ar, run_fcm, run_frq
from .configio import ConfigError
from .metrics import ModelResult, overhead_stats, rss_mb
from .mlr import ModelWeights
from .perf import PerfModel
from .trace import FrameSequence
from .trainer import RunLog, TrainConfig, frame_dataset, offline_train, run_hybrid

log = logging.getLogger(__name__)

MODEL_NAMES = ("gm-h", "gm-of", "ar", "fcm", "frq")


def training_split(seq: FrameSequence, config: TrainConfig) -> int:
    """Number of leading frames used for offline training."""
    n = len(seq.frames)
    if n <= config.rmse_window + 1:
        raise ConfigError(f"sequence of {n} frames is too short to train and evaluate")
    return min(config.offline_frame_count, n // 2)


def fit_offline(
    seq: FrameSequence,
    actuals: dict[int, float],
    model: PerfModel,
    config: TrainConfig,
    frame_limit: int | None = None,
) -> tuple[ModelWeights, dict]:
    """Offline-train on the leading window of a sequence."""
    limit = config.offline_frame_count if frame_limit is None else frame_limit
    frames = seq.frames[:limit] if limit else seq.frames
    dataset = frame_dataset(seq, actuals, model, frames=frames)
    return offline_train(dataset, config)


def _slice_log(runlog: RunLog, first_frame: int) -> RunLog:
    return RunLog(
        model=runlog.model,
        rows=[r for r in runlog.rows if r.frame >= first_frame],
        predict_ms=runlog.predict_ms,
    )


def compare_models(
    seq: FrameSequence,
    actuals: dict[int, float],
    perf_model: PerfModel,
    config: TrainConfig,
    models: tuple[str, ...] = MODEL_NAMES,
    freqs: dict[int, float] | None = None,
    scenario: str = "scenario",
    seed: int = 0,
    measure_overhead: bool = False,
) -> tuple[list[ModelResult], dict]:
    """Run every requested model over one sequence and collect results."""
    unknown = set(models) - set(MODEL_NAMES)
    if unknown:
        raise ConfigError(f"unknown model names {sorted(unknown)} (choose from {MODEL_NAMES})")
    train_n = training_split(seq, config)
    eval_frames = seq.frames[train_n:]
    eval_start = eval_frames[0].frame_index
    log.info("training on %d frames, evaluating on %d", train_n, len(eval_frames))

    weights = None
    train_report: dict = {}
    if "gm-h" in models or "gm-of" in models:
        weights, train_report = fit_offline(seq, actuals, perf_model, config, frame_limit=train_n)

    if freqs is None:
        freqs = {f.frame_index: 1000.0 for f in seq.frames}

    results: list[ModelResult] = []
    for name in models:
        if name == "gm-h":
            runlog = run_hybrid(seq, actuals, perf_model, weights, config,
                                frames=eval_frames, measure_overhead=measure_overhead)
        elif name == "gm-of":
            runlog = run_hybrid(seq, actuals, perf_model, weights, config,
                                frames=eval_frames, measure_overhead=measure_overhead,
                                adapt=False)
        elif name == "ar":
            runlog = _slice_log(run_ar(seq.frames, actuals), eval_start)
        elif name == "fcm":
            fcm = fcm_calibrate(seq.frames[:train_n], actuals)
            runlog = run_fcm(eval_frames, actuals, fcm)
        else:
            runlog = _slice_log(run_frq(seq.frames, actuals, freqs), eval_start)
        result = ModelResult(scenario=scenario, seed=seed, log=runlog)
        if measure_overhead and runlog.predict_ms:
            result_overhead = overhead_stats(runlog.predict_ms, runlog.actuals)
            result.overhead_ms = result_overhead["overhead_ms"]
            result.overhead_pct = result_overhead["overhead_pct"]
            result.rss_mb = rss_mb()
        results.append(result)
    return results, train_report
