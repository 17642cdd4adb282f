"""Multiple linear regression core: closed-form fit, prediction, RMSE.

The fit standardizes every non-intercept feature to zero mean and unit
variance, solves the least squares problem through the singular value
decomposition with a relative cutoff, then folds the scaling back into
raw-feature coefficients.  The cutoff makes rank-deficient systems well
defined (inactive stages produce all-zero columns, which simply get a
zero coefficient) at the price of the minimum-norm solution when
features are collinear.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_RCOND = 1e-10


class InsufficientData(ValueError):
    """Fewer observations than coefficients to fit."""


@dataclass
class ObservationSet:
    """Design matrix plus observed times; rows are per-batch vectors."""

    W: np.ndarray
    Y: np.ndarray

    def __post_init__(self) -> None:
        self.W = np.asarray(self.W, dtype=float)
        self.Y = np.asarray(self.Y, dtype=float)
        if self.W.ndim != 2 or self.Y.ndim != 1 or self.W.shape[0] != self.Y.shape[0]:
            raise ValueError(f"shape mismatch: W {self.W.shape}, Y {self.Y.shape}")
        if self.W.shape[0] and not np.all(self.W[:, 0] == 1.0):
            raise ValueError("every observation row must carry w_0 = 1")

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]


@dataclass
class ModelWeights:
    """Raw-feature coefficients plus the scaler used while fitting."""

    beta: np.ndarray
    scaler_mean: np.ndarray
    scaler_std: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.beta = np.asarray(self.beta, dtype=float)
        self.scaler_mean = np.asarray(self.scaler_mean, dtype=float)
        self.scaler_std = np.asarray(self.scaler_std, dtype=float)
        if not (self.beta.shape == self.scaler_mean.shape == self.scaler_std.shape):
            raise ValueError("beta and scaler arrays must share one shape")
        if self.scaler_mean[0] != 0.0 or self.scaler_std[0] != 1.0:
            raise ValueError("intercept slot must keep mean 0, std 1")
        if np.any(self.scaler_std <= 0):
            raise ValueError("scaler stddevs must be positive")

    @property
    def dim(self) -> int:
        return self.beta.shape[0]

    def copy(self) -> "ModelWeights":
        return ModelWeights(
            beta=self.beta.copy(),
            scaler_mean=self.scaler_mean.copy(),
            scaler_std=self.scaler_std.copy(),
            meta=dict(self.meta),
        )

    def standardize(self, w: np.ndarray) -> np.ndarray:
        """Map raw rows into the scaler's feature space (intercept exempt)."""
        return (np.asarray(w, dtype=float) - self.scaler_mean) / self.scaler_std

    def std_coefs(self) -> np.ndarray:
        """Coefficients over standardized features, equivalent to beta."""
        b = self.beta * self.scaler_std
        b[0] = self.beta[0] + float(self.beta[1:] @ self.scaler_mean[1:])
        return b

    def set_std_coefs(self, b: np.ndarray) -> None:
        """Inverse of std_coefs: store coefficients back in raw space."""
        b = np.asarray(b, dtype=float)
        beta = b / self.scaler_std
        beta[0] = b[0] - float((b[1:] / self.scaler_std[1:]) @ self.scaler_mean[1:])
        self.beta = beta

    def to_json_obj(self) -> dict:
        return {
            "beta": self.beta.tolist(),
            "scaler": {"mean": self.scaler_mean.tolist(), "std": self.scaler_std.tolist()},
            "dim": self.dim,
            "meta": self.meta,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ModelWeights":
        return cls(
            beta=np.array(obj["beta"], dtype=float),
            scaler_mean=np.array(obj["scaler"]["mean"], dtype=float),
            scaler_std=np.array(obj["scaler"]["std"], dtype=float),
            meta=dict(obj.get("meta", {})),
        )


def fit_svd(obs: ObservationSet, rcond: float = DEFAULT_RCOND) -> ModelWeights:
    """Least squares fit via SVD on standardized features.

    Singular values below ``rcond`` times the largest are zeroed, so
    degenerate directions get no weight instead of exploding.
    """
    if obs.m < obs.dim:
        raise InsufficientData(f"need at least {obs.dim} observations, got {obs.m}")
    mean = obs.W.mean(axis=0)
    std = obs.W.std(axis=0)
    mean[0] = 0.0
    std[0] = 1.0
    std[std == 0.0] = 1.0

    Z = (obs.W - mean) / std
    U, S, Vt = np.linalg.svd(Z, full_matrices=False)
    cutoff = rcond * (S[0] if S.size else 0.0)
    inv = np.where(S > cutoff, 1.0 / np.where(S > cutoff, S, 1.0), 0.0)
    b_std = Vt.T @ (inv * (U.T @ obs.Y))

    beta = b_std / std
    beta[0] = b_std[0] - float((b_std[1:] / std[1:]) @ mean[1:])
    residual = float(np.linalg.norm(Z @ b_std - obs.Y))
    weights = ModelWeights(
        beta=beta,
        scaler_mean=mean,
        scaler_std=std,
        meta={
            "solver": "svd",
            "samples": obs.m,
            "rank": int(np.sum(S > cutoff)),
            "residual_norm": residual,
        },
    )
    return weights


def predict_batch(weights: ModelWeights, w: np.ndarray) -> float:
    """Estimated time of one batch from its explanatory vector."""
    return float(weights.beta @ np.asarray(w, dtype=float))


def predict_frame(weights: ModelWeights, frame_matrix: np.ndarray) -> float:
    """Estimated frame time: sum over the frame's batch rows; empty -> 0."""
    W = np.asarray(frame_matrix, dtype=float)
    if W.size == 0:
        return 0.0
    return float(W.sum(axis=0) @ weights.beta)


def rmse(estimates, actuals) -> float:
    e = np.asarray(estimates, dtype=float)
    a = np.asarray(actuals, dtype=float)
    if e.shape != a.shape or e.size == 0:
        raise ValueError("estimates and actuals must be equal-length and non-empty")
    return float(np.sqrt(np.mean((e - a) ** 2)))


def sliding_rmse(estimates, actuals, window: int = 10) -> np.ndarray:
    """Windowed RMSE series: entry i covers the last <= window frames up to i."""
    if window < 1:
        raise ValueError("window must be >= 1")
    e = np.asarray(estimates, dtype=float)
    a = np.asarray(actuals, dtype=float)
    if e.shape != a.shape:
        raise ValueError("estimates and actuals must be equal-length")
    sq = (e - a) ** 2
    out = np.empty_like(sq)
    csum = np.cumsum(sq)
    for i in range(sq.size):
        lo = max(0, i - window + 1)
        total = csum[i] - (csum[lo - 1] if lo else 0.0)
        out[i] = np.sqrt(total / (i - lo + 1))
    return out


class RmseWindow:
    """Incremental sliding-window RMSE over (estimate, actual) pairs."""

    def __init__(self, window: int = 10):
        if window < 1:
            raise ValueError("window must be >= 1")
        self._sq: deque[float] = deque(maxlen=window)

    def push(self, estimate: float, actual: float) -> None:
        self._sq.append((estimate - actual) ** 2)

    def value(self) -> float:
        if not self._sq:
            return 0.0
        return float(np.sqrt(sum(self._sq) / len(self._sq)))

    def __len__(self) -> int:
        return len(self._sq)


def save_weights(weights: ModelWeights, path: str | Path) -> None:
    Path(path).write_text(json.dumps(weights.to_json_obj(), indent=2) + "\n", encoding="utf-8")


def load_weights(path: str | Path) -> ModelWeights:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return ModelWeights.from_json_obj(obj)
