"""Hand-built fixtures shared across test modules.

The linear model builder gives tests an analytically known performance
model: every stage maps load L to slope*L exactly, so expected
explanatory vectors and frame estimates can be written down by hand
instead of trusting the benchmark harness.
"""

from __future__ import annotations

import numpy as np

from gamorra.perf import PerfFunction, PerfModel
from gamorra.stages import CS_STAGE, PERF_STAGES

# One big anchor keeps evaluation inside the first segment for any load
# the tests use; the tail extrapolates at the same slope anyway.
_ANCHOR = 1e15

DEFAULT_SLOPES = {
    "ia": 1e-6, "vs": 1.0, "hs": 1.0, "pcf": 1.0, "tess": 2e-5,
    "ds": 1.0, "gs": 1.0, "ras": 3e-6, "ps": 1.0, "om": 1e-9, "cs": 1.0,
}

UNIT_COSTS = {op: 1.0 for op in ("add", "mul", "mad", "mov")}


def linear_fn(stage: str, slope: float) -> PerfFunction:
    return PerfFunction(stage=stage, breakpoints=[(0.0, 0.0), (_ANCHOR, slope * _ANCHOR)])


def make_linear_model(
    omega: int = 1,
    slopes: dict[str, float] | None = None,
    costs: dict[str, dict[str, float]] | None = None,
    include_cs: bool = True,
    beta0: float = 5.0,
    metadata: dict | None = None,
) -> PerfModel:
    slopes = dict(DEFAULT_SLOPES if slopes is None else slopes)
    stages = PERF_STAGES + ((CS_STAGE,) if include_cs else ())
    if costs is None:
        costs = {s: dict(UNIT_COSTS) for s in ("vs", "hs", "ds", "gs", "ps", "cs")}
        costs["ps"]["sample"] = 1.0
    return PerfModel(
        omega=omega,
        beta0_baseline_ms=beta0,
        functions={s: linear_fn(s, slopes[s]) for s in stages},
        opcode_costs=costs,
        metadata=dict(metadata or {}),
    )


def random_observations(rng: np.random.Generator, m: int, dim: int,
                        noise: float = 0.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Well-conditioned regression system with a unit intercept column."""
    W = rng.normal(loc=2.0, scale=1.0, size=(m, dim))
    W[:, 0] = 1.0
    beta = rng.uniform(0.5, 3.0, size=dim) * rng.choice([-1.0, 1.0], size=dim)
    Y = W @ beta
    if noise:
        Y = Y + rng.normal(scale=noise, size=m)
    return W, Y, beta
