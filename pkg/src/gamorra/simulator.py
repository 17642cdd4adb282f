"""Deterministic synthetic GPU pipeline used as ground truth.

A profile hides per-stage cost curves, true opcode costs, a parallelism
divisor, and disturbance knobs (noise, drift, clock schedule).  Frame
time is the profile overhead plus every batch's summed stage curve
values (drift-scaled, divided by the parallelism factor), scaled by the
clock factor, times truncated multiplicative Gaussian noise:

    t = (overhead + sum_b sum_s curve_s(load_s) * drift_s / omega)
        * (base_mhz / mhz) ** sensitivity * (1 + sigma * clip(z, -4, 4))

Loads come from the same formulas the estimator uses, but with the
profile's hidden opcode costs, so a noise-free, drift-free profile with
linear curves generates data the regression family represents exactly.
The post-transform cache (indexed draws) and early-z culling
(depth-only batches) perturb effective invocation counts on the
simulator side only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .configio import ConfigError, load_config
from .ilasm import complexity, parse_program
from .stages import COST_TABLE_STAGES, CS_STAGE
from .trace import BatchRecord, FrameRecord, FrameSequence
from .workload import LOAD_COLUMNS, stage_loads

# Opcode vocabularies used for profile factories and shader generation.
ALU_OPCODES = (
    "add", "mul", "mad", "dp3", "dp4", "min", "max", "mov",
    "cmp", "frc", "rsq", "sqrt", "div", "exp", "log",
)
PS_ONLY_OPCODES = ("sample", "sample_l", "discard")


def curve_value(spec: dict, load: float) -> float:
    """Evaluate one hidden cost curve; every kind maps 0 -> 0 monotonically."""
    kind = spec.get("kind", "linear")
    if kind == "linear":
        return spec["slope"] * load
    if kind == "knee":
        knee = spec["knee"]
        if load <= knee:
            return spec["slope"] * load
        return spec["slope"] * knee + spec["slope2"] * (load - knee)
    if kind == "power":
        return spec["coeff"] * load ** spec["exponent"]
    raise ConfigError(f"unknown curve kind {kind!r}")


@dataclass
class GpuProfile:
    """Hidden ground-truth machine model."""

    name: str
    omega: int
    overhead_ms: float
    curves: dict[str, dict]
    opcode_costs: dict[str, dict[str, float]]
    noise_stddev: float = 0.0
    early_z_cull: float = 0.6
    post_transform_cache_hit: float = 0.3
    base_mhz: float = 1000.0
    frequency_sensitivity: float = 1.0
    frequency_schedule: dict = field(default_factory=lambda: {"kind": "constant", "mhz": 1000.0})

    def __post_init__(self) -> None:
        if self.omega < 1:
            raise ConfigError(f"omega must be >= 1, got {self.omega}")
        if not 0.0 <= self.noise_stddev < 0.25:
            raise ConfigError("noise_stddev must sit in [0, 0.25) for positive frame times")
        for frac_name in ("early_z_cull", "post_transform_cache_hit"):
            frac = getattr(self, frac_name)
            if not 0.0 <= frac < 1.0:
                raise ConfigError(f"{frac_name} must sit in [0, 1)")
        missing = [s for s in LOAD_COLUMNS if s not in self.curves]
        if missing:
            raise ConfigError(f"profile curves missing stages {missing}")
        for stage in COST_TABLE_STAGES + (CS_STAGE,):
            if stage not in self.opcode_costs:
                raise ConfigError(f"profile opcode_costs missing stage {stage!r}")

    def frequency_series(self, frame_count: int, rng: np.random.Generator) -> np.ndarray:
        """Clock value per frame according to the schedule."""
        sched = self.frequency_schedule
        kind = sched.get("kind", "constant")
        if kind == "constant":
            return np.full(frame_count, float(sched.get("mhz", self.base_mhz)))
        if kind == "steps":
            levels = [float(x) for x in sched["mhz"]]
            every = int(sched["every"])
            idx = (np.arange(frame_count) // every) % len(levels)
            return np.array(levels)[idx]
        if kind == "walk":
            step = float(sched["step"])
            lo, hi = float(sched["lo"]), float(sched["hi"])
            out = np.empty(frame_count)
            mhz = float(sched.get("mhz", self.base_mhz))
            for i in range(frame_count):
                mhz = float(np.clip(mhz * math.exp(step * rng.standard_normal()), lo, hi))
                out[i] = mhz
            return out
        raise ConfigError(f"unknown frequency schedule kind {kind!r}")

    def to_json_obj(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GpuProfile":
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(f"malformed profile: {exc}") from None


def load_profile(path: str | Path) -> GpuProfile:
    return GpuProfile.from_json_obj(load_config(path))


def save_profile(profile: GpuProfile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(profile.to_json_obj(), indent=2) + "\n", encoding="utf-8")


@dataclass
class DriftEvent:
    """Multiplies the hidden curves of some stages from a frame onward."""

    frame: int
    stages: list[str]
    multiplier: float

    def __post_init__(self) -> None:
        if self.frame < 0 or self.multiplier <= 0:
            raise ConfigError(f"bad drift event frame={self.frame} multiplier={self.multiplier}")
        unknown = set(self.stages) - set(LOAD_COLUMNS)
        if unknown:
            raise ConfigError(f"drift event names unknown stages {sorted(unknown)}")


class SimSession:
    """Stateful frame-by-frame evaluation of one profile over one trace.

    Owns the parsed-shader cache, the cumulative drift multipliers, and
    the noise stream, so replaying the same inputs with the same seed
    reproduces frame times bit for bit.
    """

    def __init__(
        self,
        profile: GpuProfile,
        shader_store: dict[str, str],
        drift_events: list[DriftEvent] | None = None,
        seed: int = 0,
    ):
        self.profile = profile
        self._sources = shader_store
        self._events = sorted(drift_events or [], key=lambda e: e.frame)
        self._next_event = 0
        self.drift = {stage: 1.0 for stage in LOAD_COLUMNS}
        self.noise_rng = np.random.default_rng(seed)
        self._programs: dict[str, object] = {}
        self._complexity: dict[tuple[str, str], float] = {}

    def complexity_of(self, stage: str, shader_id: str) -> float:
        key = (stage, shader_id)
        value = self._complexity.get(key)
        if value is None:
            prog = self._programs.get(shader_id)
            if prog is None:
                prog = parse_program(self._sources[shader_id], name=shader_id)
                self._programs[shader_id] = prog
            table_stage = "hs" if stage == "pcf" else stage
            value = complexity(prog, self.profile.opcode_costs[table_stage], stage)
            self._complexity[key] = value
        return value

    def advance_drift(self, frame_index: int) -> None:
        while self._next_event < len(self._events) and self._events[self._next_event].frame <= frame_index:
            event = self._events[self._next_event]
            for stage in event.stages:
                self.drift[stage] *= event.multiplier
            self._next_event += 1

    def frame_time(self, frame: FrameRecord, mhz: float | None = None) -> float:
        self.advance_drift(frame.frame_index)
        return simulate_frame(
            self.profile,
            frame,
            self.complexity_of,
            drift=self.drift,
            rng=self.noise_rng,
            mhz=mhz,
        )


def simulate_frame(
    profile: GpuProfile,
    frame: FrameRecord,
    complexity_of,
    drift: dict[str, float] | None = None,
    rng: np.random.Generator | None = None,
    mhz: float | None = None,
) -> float:
    """One frame's ground-truth time in milliseconds."""
    total = profile.overhead_ms
    cull_keep = 1.0 - profile.early_z_cull
    cache_keep = 1.0 - profile.post_transform_cache_hit
    for batch in frame.batches:
        loads = stage_loads(batch, complexity_of, early_z_discount=cull_keep)
        if batch.indexed and cache_keep < 1.0:
            loads.vs *= cache_keep
            loads.hs *= cache_keep
        for stage in LOAD_COLUMNS:
            load = getattr(loads, stage)
            if load == 0.0:
                continue
            t = curve_value(profile.curves[stage], load)
            if drift is not None:
                t *= drift[stage]
            total += t / profile.omega
    if mhz is not None and mhz != profile.base_mhz:
        total *= (profile.base_mhz / mhz) ** profile.frequency_sensitivity
    if profile.noise_stddev > 0.0:
        if rng is None:
            raise ValueError("noisy profile needs an rng")
        z = float(np.clip(rng.standard_normal(), -4.0, 4.0))
        total *= 1.0 + profile.noise_stddev * z
    return total


def reference_profile() -> GpuProfile:
    """Noise-free linear fixture calibrated to the benchmark anchors.

    The empty pipeline costs 6.966 ms.  Slopes put the 100 ms sweep cap
    near 1.5e9 input-assembly bytes, 1.3e8 vertex-shader add ops, 6.5e6
    tessellation points, 2.7e7 rasterized fragments, and 2.5e7
    output-merger units; 1e8 pixel-shader ops land well past the cap.
    """
    marginal = 100.0 - 6.966
    unit = {op: 1.0 for op in ALU_OPCODES}

    def scaled(factor: float, extra: dict[str, float] | None = None) -> dict[str, float]:
        table = {op: factor * w for op, w in unit.items()}
        # Rough relative weights: transcendental-style ops cost more.
        for op in ("rsq", "sqrt", "div", "exp", "log"):
            table[op] *= 4.0
        for op in ("dp3", "dp4", "mad"):
            table[op] *= 2.0
        if extra:
            table.update(extra)
        return table

    ps_factor = marginal / 1.2e8          # 1e8 add ops -> ~120% of the cap margin
    return GpuProfile(
        name="reference",
        omega=1,
        overhead_ms=6.966,
        noise_stddev=0.0,
        early_z_cull=0.6,
        post_transform_cache_hit=0.3,
        curves={
            "ia": {"kind": "linear", "slope": marginal / 1.5e9},
            "vs": {"kind": "linear", "slope": 1.0},
            "hs": {"kind": "linear", "slope": 1.0},
            "pcf": {"kind": "linear", "slope": 1.0},
            "tess": {"kind": "linear", "slope": marginal / 6.5e6},
            "ds": {"kind": "linear", "slope": 1.0},
            "gs": {"kind": "linear", "slope": 1.0},
            "ras": {"kind": "linear", "slope": marginal / 2.7e7},
            "ps": {"kind": "linear", "slope": 1.0},
            "om": {"kind": "linear", "slope": marginal / 2.5e7},
            "cs": {"kind": "linear", "slope": 1.0},
        },
        opcode_costs={
            "vs": scaled(marginal / 1.3e8),
            "hs": scaled(1.1 * marginal / 1.3e8),
            "ds": scaled(1.05 * marginal / 1.3e8),
            "gs": scaled(1.5 * marginal / 1.3e8),
            "ps": scaled(ps_factor, {op: ps_factor * 6.0 for op in PS_ONLY_OPCODES}),
            "cs": scaled(1.2 * marginal / 1.3e8),
        },
    )


def game_profile(
    name: str = "game",
    noise_stddev: float = 0.10,
    omega: int = 4,
    knees: bool = True,
) -> GpuProfile:
    """Noisy profile with game-scale slopes for scenario experiments."""

    def table(factor: float, spread: tuple[float, ...], extra: dict[str, float] | None = None):
        costs = {op: factor * spread[i % len(spread)] for i, op in enumerate(ALU_OPCODES)}
        if extra:
            costs.update(extra)
        return costs

    spread = (1.0, 1.4, 2.2, 1.8, 0.7, 1.1, 2.6, 0.9, 1.3, 1.6, 3.0, 2.4, 3.6, 2.8, 2.0)
    curves = {
        "ia": {"kind": "linear", "slope": 1.0e-5},
        "vs": {"kind": "linear", "slope": 1.0},
        "hs": {"kind": "linear", "slope": 1.0},
        "pcf": {"kind": "linear", "slope": 1.0},
        "tess": {"kind": "linear", "slope": 4.0e-4},
        "ras": {"kind": "linear", "slope": 2.5e-5},
        "ds": {"kind": "linear", "slope": 1.0},
        "gs": {"kind": "linear", "slope": 1.0},
        "ps": {"kind": "linear", "slope": 1.0},
        "om": {"kind": "linear", "slope": 2.0e-10},
        "cs": {"kind": "linear", "slope": 1.0},
    }
    if knees:
        curves["ras"] = {"kind": "knee", "slope": 2.5e-5, "knee": 1.0e5, "slope2": 3.3e-5}
        curves["ia"] = {"kind": "knee", "slope": 1.0e-5, "knee": 3.0e5, "slope2": 1.4e-5}
    return GpuProfile(
        name=name,
        omega=omega,
        overhead_ms=5.4,
        noise_stddev=noise_stddev,
        early_z_cull=0.55,
        post_transform_cache_hit=0.35,
        curves=curves,
        opcode_costs={
            "vs": table(1.0e-6 * omega, spread),
            "hs": table(1.1e-6 * omega, spread),
            "ds": table(6.0e-7 * omega, spread),
            "gs": table(1.5e-6 * omega, spread),
            "ps": table(9.0e-8 * omega, spread, {"sample": 6.0e-7 * omega, "sample_l": 7.5e-7 * omega, "discard": 5.0e-8 * omega}),
            "cs": table(9.0e-7 * omega, spread),
        },
    )
