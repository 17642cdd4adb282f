"""Baseline frametime predictors to compare the workload model against.

* AR: order-10 autoregression over the last observed frametimes with a
  normalized least-mean-squares coefficient update per frame.
* FCM: frame-complexity model, a fixed equal-thirds blend of total
  vertices, total input bytes, and command count, with per-unit
  normalizers calibrated by least squares on the training window.
* FRQ: clock-ratio extrapolation of the previous frametime, with the
  sensitivity exponent adapted online and clipped to [0, 1].

All three consume only quantities observable outside the pipeline
(past frametimes, frame summary counts, clock), which is exactly why
they miss workload shifts the stage-level model resolves.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .mlr import RmseWindow
from .trace import FrameRecord, FrameSequence
from .trainer import LogRow, RunLog


@dataclass
class ArState:
    """Autoregressive LMS predictor over recent frametimes."""

    order: int = 10
    lr: float = 0.5
    coefs: np.ndarray = field(default=None)
    history: deque = field(default=None)

    def __post_init__(self) -> None:
        if self.coefs is None:
            self.coefs = np.full(self.order, 1.0 / self.order)
        if self.history is None:
            self.history = deque(maxlen=self.order)

    def predict(self) -> float:
        if len(self.history) < self.order:
            return self.history[-1] if self.history else 0.0
        return float(self.coefs @ np.asarray(self.history))

    def update(self, actual: float) -> None:
        """Normalized LMS step, then absorb the new observation."""
        if len(self.history) == self.order:
            x = np.asarray(self.history)
            err = actual - float(self.coefs @ x)
            self.coefs = self.coefs + self.lr * err * x / (float(x @ x) + 1e-9)
        self.history.append(actual)


def run_ar(frames: list[FrameRecord], actuals: dict[int, float], state: ArState | None = None,
           window: int = 10) -> RunLog:
    state = state or ArState()
    log = RunLog(model="ar")
    rw = RmseWindow(window)
    for frame in frames:
        actual = actuals[frame.frame_index]
        est = state.predict()
        state.update(actual)
        rw.push(est, actual)
        log.rows.append(LogRow(frame.frame_index, "ar", est, est, actual, rw.value(), rw.value(), 0))
    return log


def frame_complexity_features(frame: FrameRecord) -> np.ndarray:
    """FCM inputs: total vertices, total input bytes, command count."""
    v = sum(b.vertex_count for b in frame.batches)
    t = sum(b.ia_bytes for b in frame.batches)
    c = len(frame.batches)
    return np.array([v / 3.0, t / 3.0, c / 3.0])


@dataclass
class FcmModel:
    """Calibrated frame-complexity predictor (equal-thirds feature blend)."""

    coefs: np.ndarray
    intercept: float = 0.0

    def predict(self, features: np.ndarray) -> float:
        return float(self.coefs @ features) + self.intercept


def fcm_calibrate(frames: list[FrameRecord], actuals: dict[int, float],
                  intercept: bool = True) -> FcmModel:
    """Least squares fit of the per-unit normalizers on a training window."""
    X = np.array([frame_complexity_features(f) for f in frames])
    y = np.array([actuals[f.frame_index] for f in frames])
    if intercept:
        X = np.hstack([X, np.ones((len(X), 1))])
    sol, *_ = np.linalg.lstsq(X, y, rcond=None)
    if intercept:
        return FcmModel(coefs=sol[:3], intercept=float(sol[3]))
    return FcmModel(coefs=sol, intercept=0.0)


def run_fcm(frames: list[FrameRecord], actuals: dict[int, float], model: FcmModel,
            window: int = 10) -> RunLog:
    log = RunLog(model="fcm")
    rw = RmseWindow(window)
    for frame in frames:
        actual = actuals[frame.frame_index]
        est = model.predict(frame_complexity_features(frame))
        rw.push(est, actual)
        log.rows.append(LogRow(frame.frame_index, "fcm", est, est, actual, rw.value(), rw.value(), 0))
    return log


@dataclass
class FrqState:
    """Clock-ratio predictor with adaptive sensitivity exponent."""

    sensitivity: float = 1.0
    lr: float = 0.05
    last_ft: float | None = None
    last_mhz: float | None = None

    def predict(self, mhz: float) -> float:
        if self.last_ft is None:
            return 0.0
        return self.last_ft * (self.last_mhz / mhz) ** self.sensitivity

    def update(self, mhz: float, actual: float) -> None:
        """Gradient step on squared error with respect to the exponent."""
        if self.last_ft is not None:
            pred = self.predict(mhz)
            ratio = self.last_mhz / mhz
            if pred > 0.0 and ratio > 0.0:
                grad = (actual - pred) * pred * math.log(ratio)
                self.sensitivity = float(np.clip(self.sensitivity + self.lr * grad, 0.0, 1.0))
        self.last_ft = actual
        self.last_mhz = mhz


def run_frq(frames: list[FrameRecord], actuals: dict[int, float], freqs: dict[int, float],
            state: FrqState | None = None, window: int = 10) -> RunLog:
    state = state or FrqState()
    log = RunLog(model="frq")
    rw = RmseWindow(window)
    for frame in frames:
        actual = actuals[frame.frame_index]
        mhz = freqs[frame.frame_index]
        est = state.predict(mhz)
        state.update(mhz, actual)
        rw.push(est, actual)
        log.rows.append(LogRow(frame.frame_index, "frq", est, est, actual, rw.value(), rw.value(), 0))
    return log
