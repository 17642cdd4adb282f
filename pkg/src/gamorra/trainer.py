"""Hybrid offline/online training and the per-frame estimation loop.

Offline training fits the regression on a recorded trace with ground
truth times.  Online training refines a copy of those weights at
runtime with per-batch least-mean-squares steps on standardized
features.  A two-mode controller arbitrates:

* Offline mode watches the offline estimator's sliding-window RMSE and
  enters online mode once it exceeds the threshold;
* Online mode counts violation frames in which the window RMSE both
  exceeds the threshold and is worse than the offline shadow; past the
  patience budget it falls back to the offline weights and resets.

Only frame-level actual times are observable, while the regression
wants one observation per batch, so frame time is apportioned across
batches proportionally to their currently predicted times (uniformly
when no prediction is positive).  Offline, the apportioning predictor
is a preliminary fit on frame-averaged rows; that bootstrap is exact on
data the model family can represent, because the frame average is
itself a valid observation row.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .configio import ConfigError, load_config
from .mlr import (
    InsufficientData,
    ModelWeights,
    ObservationSet,
    RmseWindow,
    fit_svd,
    predict_frame,
)
from .perf import PerfModel
from .trace import FrameRecord, FrameSequence
from .workload import FrameAnalyzer

log = logging.getLogger(__name__)

OFFLINE = "offline"
ONLINE = "online"


@dataclass
class TrainConfig:
    """Training hyperparameters; defaults follow the published setup."""

    initial_lr: float = 0.01
    offline_epochs: int = 200
    offline_batch_size: int = 32
    train_test_split: float = 0.3
    patience: int = 10
    rmse_threshold: float = 0.5
    rmse_window: int = 10
    offline_frame_count: int = 720
    solver: str = "svd"
    seed: int = 0
    apportion_rounds: int = 3

    def __post_init__(self) -> None:
        if self.solver not in ("svd", "sgd"):
            raise ConfigError(f"solver must be 'svd' or 'sgd', got {self.solver!r}")
        if not 0.0 < self.train_test_split < 1.0:
            raise ConfigError("train_test_split must sit in (0, 1)")
        if self.patience < 0 or self.rmse_window < 1:
            raise ConfigError("patience must be >= 0 and rmse_window >= 1")
        if self.apportion_rounds < 1:
            raise ConfigError("apportion_rounds must be >= 1")

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TrainConfig":
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(f"malformed train config: {exc}") from None


def load_train_config(path: str | Path) -> TrainConfig:
    return TrainConfig.from_json_obj(load_config(path))


@dataclass
class FrameDataset:
    """Explanatory matrices and actual times for a span of frames."""

    matrices: list[np.ndarray]
    actuals: np.ndarray
    include_cs: bool

    def __len__(self) -> int:
        return len(self.matrices)


def frame_dataset(
    seq: FrameSequence,
    actuals: dict[int, float],
    model: PerfModel,
    frames: list[FrameRecord] | None = None,
    include_cs: bool | None = None,
) -> FrameDataset:
    """Pair each frame's batch matrix with its observed time.

    The compute slot joins the model automatically when any batch in the
    trace dispatches compute work.
    """
    if include_cs is None:
        include_cs = any(b.cs_shader is not None for f in seq.frames for b in f.batches)
    analyzer = FrameAnalyzer(model, seq.shader_store, include_cs=include_cs)
    frames = seq.frames if frames is None else frames
    matrices, y = [], []
    for frame in frames:
        if frame.frame_index not in actuals:
            raise ConfigError(f"no actual time recorded for frame {frame.frame_index}")
        matrices.append(analyzer.frame_matrix(frame))
        y.append(actuals[frame.frame_index])
    return FrameDataset(matrices=matrices, actuals=np.array(y, dtype=float), include_cs=include_cs)


def apportion_frame_time(matrix: np.ndarray, actual: float, weights: ModelWeights) -> np.ndarray:
    """Split one frame's actual time into per-batch targets.

    Shares follow the current per-batch predictions, clamped to zero;
    when nothing predicts positive time the split is uniform.
    """
    n = matrix.shape[0]
    preds = np.maximum(matrix @ weights.beta, 0.0)
    total = preds.sum()
    if total <= 0.0:
        return np.full(n, actual / n)
    return actual * preds / total


def build_observation_set(dataset: FrameDataset, bootstrap: ModelWeights | None = None) -> ObservationSet:
    """Per-batch observations with apportioned targets for a whole dataset."""
    if bootstrap is None:
        bootstrap = _frame_mean_fit(dataset)
    rows, targets = [], []
    for matrix, actual in zip(dataset.matrices, dataset.actuals):
        if matrix.shape[0] == 0:
            continue
        rows.append(matrix)
        targets.append(apportion_frame_time(matrix, actual, bootstrap))
    if not rows:
        raise InsufficientData("dataset holds no non-empty frames")
    return ObservationSet(W=np.vstack(rows), Y=np.concatenate(targets))


def _frame_mean_fit(dataset: FrameDataset) -> ModelWeights:
    """Preliminary fit on frame-averaged rows (average target per batch)."""
    rows = [m.mean(axis=0) for m in dataset.matrices if m.shape[0] > 0]
    y = [a / m.shape[0] for m, a in zip(dataset.matrices, dataset.actuals) if m.shape[0] > 0]
    return fit_svd(ObservationSet(W=np.array(rows), Y=np.array(y)))


def offline_train(dataset: FrameDataset, config: TrainConfig) -> tuple[ModelWeights, dict]:
    """Fit offline weights on a recorded dataset, leaving a held-out split.

    Frames (not batches) are split into train and test so targets from
    one frame never leak across the boundary.  Returns the weights and a
    report with frame-level mean absolute errors.
    """
    m = len(dataset)
    if m < 2:
        raise InsufficientData(f"need at least 2 frames to split, got {m}")
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(m)
    n_test = max(1, round(m * config.train_test_split))
    if n_test >= m:
        n_test = m - 1
    test_idx, train_idx = order[:n_test], order[n_test:]

    train = FrameDataset(
        matrices=[dataset.matrices[i] for i in train_idx],
        actuals=dataset.actuals[train_idx],
        include_cs=dataset.include_cs,
    )
    # Re-apportioning with each round's fit converges the per-batch
    # targets toward a self-consistent split under noise; on data the
    # model represents exactly, every round returns the same weights.
    bootstrap = None
    for _ in range(config.apportion_rounds):
        obs = build_observation_set(train, bootstrap)
        if config.solver == "svd":
            weights = fit_svd(obs)
        else:
            weights = _sgd_fit(obs, config, dataset, test_idx)
        bootstrap = weights

    if np.any(weights.beta[1:] < -1e-9):
        log.warning("negative stage coefficients fitted: %s", weights.beta.round(6).tolist())

    def frame_mae(idx) -> float:
        errs = [abs(predict_frame(weights, dataset.matrices[i]) - dataset.actuals[i]) for i in idx]
        return float(np.mean(errs))

    report = {
        "solver": config.solver,
        "samples": obs.m,
        "train_frames": len(train_idx),
        "test_frames": len(test_idx),
        "train_mae_ms": frame_mae(train_idx),
        "test_mae_ms": frame_mae(test_idx),
    }
    weights.meta.update(report)
    return weights, report


def _sgd_fit(obs: ObservationSet, config: TrainConfig, dataset: FrameDataset, test_idx) -> ModelWeights:
    """Mini-batch gradient fit on standardized features with early stopping."""
    mean = obs.W.mean(axis=0)
    std = obs.W.std(axis=0)
    mean[0], std[0] = 0.0, 1.0
    std[std == 0.0] = 1.0
    weights = ModelWeights(
        beta=np.zeros(obs.dim), scaler_mean=mean, scaler_std=std,
        meta={"solver": "sgd", "samples": obs.m},
    )
    Z = (obs.W - mean) / std
    rng = np.random.default_rng(config.seed)
    b = np.zeros(obs.dim)
    best_b, best_err, stale = b.copy(), np.inf, 0
    epochs_run = 0
    for epoch in range(config.offline_epochs):
        order = rng.permutation(obs.m)
        for start in range(0, obs.m, config.offline_batch_size):
            idx = order[start:start + config.offline_batch_size]
            err = obs.Y[idx] - Z[idx] @ b
            b += config.initial_lr * (Z[idx].T @ err) / idx.size
        epochs_run = epoch + 1
        weights.set_std_coefs(b)
        test_err = float(np.mean([
            abs(predict_frame(weights, dataset.matrices[i]) - dataset.actuals[i])
            for i in test_idx
        ]))
        if test_err < best_err - 1e-12:
            best_err, best_b, stale = test_err, b.copy(), 0
        else:
            stale += 1
            if stale > config.patience:
                break
    weights.set_std_coefs(best_b)
    weights.meta["epochs_run"] = epochs_run
    return weights


# -- online arbitration -------------------------------------------------


@dataclass
class TrainerState:
    """Mutable runtime state of the hybrid estimator."""

    offline_weights: ModelWeights
    online_weights: ModelWeights
    config: TrainConfig
    mode: str = OFFLINE
    n_v: int = 0
    window_on: RmseWindow = field(init=False)
    window_off: RmseWindow = field(init=False)

    def __post_init__(self) -> None:
        self.window_on = RmseWindow(self.config.rmse_window)
        self.window_off = RmseWindow(self.config.rmse_window)


def make_state(offline_weights: ModelWeights, config: TrainConfig) -> TrainerState:
    return TrainerState(
        offline_weights=offline_weights,
        online_weights=offline_weights.copy(),
        config=config,
    )


def decide_from_rmse(state: TrainerState, rmse_on: float, rmse_off: float) -> None:
    """Mode transition rules on already-computed window RMSE values.

    In online mode the violation counter moves only on frames whose
    online RMSE breaches the threshold; the patience comparison sits in
    that same branch, so recovery frames freeze the counter rather than
    reset it.
    """
    cfg = state.config
    if state.mode == ONLINE:
        if rmse_on > cfg.rmse_threshold:
            if rmse_on > rmse_off:
                state.n_v += 1
            if state.n_v > cfg.patience:
                state.mode = OFFLINE
                state.n_v = 0
                state.online_weights = state.offline_weights.copy()
    else:
        if rmse_off > cfg.rmse_threshold:
            state.mode = ONLINE
            state.n_v = 0
            state.online_weights = state.offline_weights.copy()


def mode_decide(state: TrainerState, estimate_on: float, estimate_off: float, actual: float) -> tuple[float, float]:
    """Feed one frame's estimates into the windows and arbitrate the mode."""
    state.window_on.push(estimate_on, actual)
    state.window_off.push(estimate_off, actual)
    rmse_on = state.window_on.value()
    rmse_off = state.window_off.value()
    decide_from_rmse(state, rmse_on, rmse_off)
    return rmse_on, rmse_off


def online_step(state: TrainerState, frame_matrix: np.ndarray, actual: float) -> None:
    """Exactly one LMS pass over the current frame's batch observations."""
    if state.mode != ONLINE:
        raise RuntimeError("online_step requires online mode")
    if frame_matrix.shape[0] == 0:
        return
    targets = apportion_frame_time(frame_matrix, actual, state.online_weights)
    b = state.online_weights.std_coefs()
    Z = state.online_weights.standardize(frame_matrix)
    lr = state.config.initial_lr
    for z, y in zip(Z, targets):
        # Plain LMS diverges once lr exceeds 2/|z|^2; cap the step for
        # outlier rows far outside the training distribution.
        norm_sq = float(z @ z)
        step = lr if lr * norm_sq <= 1.0 else 1.0 / norm_sq
        b += step * (y - float(b @ z)) * z
    state.online_weights.set_std_coefs(b)


# -- estimation loops ----------------------------------------------------


@dataclass
class LogRow:
    frame: int
    mode: str
    estimate_on: float
    estimate_off: float
    actual: float
    rmse_on: float
    rmse_off: float
    n_v: int

    @property
    def estimate(self) -> float:
        return self.estimate_on if self.mode == ONLINE else self.estimate_off


@dataclass
class RunLog:
    """Per-frame estimation record of one model over one sequence."""

    model: str
    rows: list[LogRow] = field(default_factory=list)
    predict_ms: list[float] = field(default_factory=list)

    @property
    def estimates(self) -> np.ndarray:
        return np.array([r.estimate for r in self.rows])

    @property
    def actuals(self) -> np.ndarray:
        return np.array([r.actual for r in self.rows])


def run_hybrid(
    seq: FrameSequence,
    actuals: dict[int, float],
    model: PerfModel,
    offline_weights: ModelWeights,
    config: TrainConfig,
    frames: list[FrameRecord] | None = None,
    include_cs: bool | None = None,
    measure_overhead: bool = False,
    adapt: bool = True,
) -> RunLog:
    """Run the estimator frame by frame, adapting online when allowed.

    With ``adapt`` off, this degrades to the static offline estimator
    evaluated over the same frames (the two-mode machinery stays idle).
    """
    if include_cs is None:
        include_cs = any(b.cs_shader is not None for f in seq.frames for b in f.batches)
    analyzer = FrameAnalyzer(model, seq.shader_store, include_cs=include_cs)
    frames = seq.frames if frames is None else frames
    state = make_state(offline_weights, config)
    runlog = RunLog(model="gm-h" if adapt else "gm-of")
    for frame in frames:
        actual = actuals.get(frame.frame_index)
        if actual is None:
            raise ConfigError(f"no actual time recorded for frame {frame.frame_index}")
        t0 = time.perf_counter() if measure_overhead else 0.0
        matrix = analyzer.frame_matrix(frame)
        estimate_off = predict_frame(state.offline_weights, matrix)
        estimate_on = predict_frame(state.online_weights, matrix) if adapt else estimate_off
        if measure_overhead:
            runlog.predict_ms.append((time.perf_counter() - t0) * 1e3)
        mode_before = state.mode
        rmse_on, rmse_off = mode_decide(state, estimate_on, estimate_off, actual)
        if adapt and state.mode == ONLINE:
            online_step(state, matrix, actual)
        elif not adapt:
            state.mode, state.n_v = OFFLINE, 0
        runlog.rows.append(LogRow(
            frame=frame.frame_index,
            mode=mode_before,
            estimate_on=estimate_on,
            estimate_off=estimate_off,
            actual=actual,
            rmse_on=rmse_on,
            rmse_off=rmse_off,
            n_v=state.n_v,
        ))
    return runlog


LOG_HEADER = "frame,mode,estimate_on,estimate_off,actual,rmse_on,rmse_off,n_v"


def write_run_log(log: RunLog, path: str | Path) -> None:
    lines = [LOG_HEADER]
    for r in log.rows:
        lines.append(
            f"{r.frame},{r.mode},{r.estimate_on:.6f},{r.estimate_off:.6f},"
            f"{r.actual:.6f},{r.rmse_on:.6f},{r.rmse_off:.6f},{r.n_v}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_train_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
