"""Per-stage performance functions and the benchmark-derived model bundle.

A performance function maps a stage load to milliseconds of processing
time before parallelism division: piecewise linear between measured
breakpoints, anchored at (0, 0), extended past the last breakpoint at
the final segment slope.  The bundle adds per-opcode costs for the
programmable stages, the parallelism divisor applied at estimate time,
and the empty-pipeline baseline it was measured against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .stages import COST_TABLE_STAGES, CS_STAGE, PERF_STAGES


class PerfModelError(ValueError):
    """Structurally invalid performance function or model bundle."""


@dataclass
class PerfFunction:
    """Monotone piecewise-linear load -> milliseconds mapping for one stage."""

    stage: str
    breakpoints: list[tuple[float, float]]

    def __post_init__(self) -> None:
        pts = [(float(x), float(y)) for x, y in self.breakpoints]
        if len(pts) < 2:
            raise PerfModelError(f"{self.stage}: need at least 2 breakpoints, got {len(pts)}")
        if pts[0] != (0.0, 0.0):
            raise PerfModelError(f"{self.stage}: first breakpoint must be (0, 0), got {pts[0]}")
        loads = [x for x, _ in pts]
        times = [y for _, y in pts]
        if any(b <= a for a, b in zip(loads, loads[1:])):
            raise PerfModelError(f"{self.stage}: breakpoint loads must strictly increase")
        if any(b < a for a, b in zip(times, times[1:])):
            raise PerfModelError(f"{self.stage}: breakpoint times must be non-decreasing")
        self.breakpoints = pts
        self._loads = np.array(loads)
        self._times = np.array(times)

    @property
    def tail_slope(self) -> float:
        """Slope of the last segment, used for extrapolation."""
        (x0, y0), (x1, y1) = self.breakpoints[-2], self.breakpoints[-1]
        return (y1 - y0) / (x1 - x0)

    @property
    def max_load(self) -> float:
        return self.breakpoints[-1][0]


def eval_perf(fn: PerfFunction, load):
    """Evaluate a performance function at scalar or array loads (>= 0)."""
    arr = np.asarray(load, dtype=float)
    if np.any(arr < 0):
        raise ValueError(f"{fn.stage}: load must be >= 0")
    inside = np.interp(arr, fn._loads, fn._times)
    x_max, y_max = fn.breakpoints[-1]
    out = np.where(arr > x_max, y_max + fn.tail_slope * (arr - x_max), inside)
    return float(out) if np.isscalar(load) or arr.ndim == 0 else out


def build_perf_function(
    stage: str,
    samples: list[tuple[float, float]],
    baseline_ms: float,
    scale: float = 1.0,
) -> PerfFunction:
    """Turn sweep measurements into a performance function.

    Each sample is (load, total frame time); the baseline is subtracted
    so breakpoints hold marginal stage time, negatives from measurement
    noise clamp to zero, and a running maximum enforces monotonicity.
    ``scale`` multiplies the marginal times (used to store times before
    parallelism division when the measuring profile divides by omega).
    """
    if len(samples) < 2:
        raise PerfModelError(f"{stage}: need at least 2 sweep samples, got {len(samples)}")
    loads = [float(x) for x, _ in samples]
    if len(set(loads)) != len(loads):
        raise PerfModelError(f"{stage}: sweep sample loads must be distinct")
    if any(x <= 0 for x in loads):
        raise PerfModelError(f"{stage}: sweep sample loads must be positive")
    pts = sorted((x, max(0.0, (float(t) - baseline_ms)) * scale) for x, t in samples)
    running = 0.0
    monotone = []
    for x, y in pts:
        running = max(running, y)
        monotone.append((x, running))
    return PerfFunction(stage=stage, breakpoints=[(0.0, 0.0)] + monotone)


@dataclass
class PerfModel:
    """Benchmark output bundle: perf functions, opcode costs, divisor, baseline."""

    omega: int
    beta0_baseline_ms: float
    functions: dict[str, PerfFunction]
    opcode_costs: dict[str, dict[str, float]]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.omega, int) or self.omega < 1:
            raise PerfModelError(f"omega must be an int >= 1, got {self.omega!r}")
        if self.beta0_baseline_ms < 0:
            raise PerfModelError("beta0_baseline_ms must be >= 0")
        missing = [s for s in PERF_STAGES if s not in self.functions]
        if missing:
            raise PerfModelError(f"missing performance functions for stages {missing}")
        for stage, table in self.opcode_costs.items():
            if stage not in COST_TABLE_STAGES and stage != CS_STAGE:
                raise PerfModelError(f"unexpected opcode table for stage {stage!r}")
            for opcode, cost in table.items():
                if cost <= 0:
                    raise PerfModelError(f"{stage}/{opcode}: opcode cost must be > 0, got {cost}")
                if opcode.startswith("sample") and stage != "ps":
                    raise PerfModelError(f"sampling opcode {opcode!r} only allowed in the ps table")

    @property
    def has_cs(self) -> bool:
        return CS_STAGE in self.functions

    def costs_for(self, stage: str) -> dict[str, float]:
        """Opcode table for a programmable stage; patch-constant uses hull's."""
        table_stage = "hs" if stage == "pcf" else stage
        try:
            return self.opcode_costs[table_stage]
        except KeyError:
            raise PerfModelError(f"no opcode cost table for stage {stage!r}") from None

    def to_json_obj(self) -> dict:
        stages_obj = {}
        for stage in PERF_STAGES + ((CS_STAGE,) if self.has_cs else ()):
            fn = self.functions[stage]
            table_stage = "hs" if stage == "pcf" else stage
            stages_obj[stage] = {
                "breakpoints": [[x, y] for x, y in fn.breakpoints],
                "opcodes": dict(sorted(self.opcode_costs.get(table_stage, {}).items()))
                if stage not in ("ia", "tess", "ras", "om")
                else {},
            }
        obj = {
            "omega": self.omega,
            "beta0_baseline_ms": self.beta0_baseline_ms,
            "stages": stages_obj,
        }
        if self.metadata:
            obj["metadata"] = self.metadata
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "PerfModel":
        try:
            stages_obj = obj["stages"]
            functions = {
                stage: PerfFunction(stage=stage, breakpoints=[tuple(p) for p in entry["breakpoints"]])
                for stage, entry in stages_obj.items()
            }
            opcode_costs = {}
            for stage, entry in stages_obj.items():
                table_stage = "hs" if stage == "pcf" else stage
                if entry.get("opcodes") and table_stage not in opcode_costs:
                    opcode_costs[table_stage] = dict(entry["opcodes"])
            return cls(
                omega=obj["omega"],
                beta0_baseline_ms=float(obj["beta0_baseline_ms"]),
                functions=functions,
                opcode_costs=opcode_costs,
                metadata=dict(obj.get("metadata", {})),
            )
        except (KeyError, TypeError) as exc:
            raise PerfModelError(f"malformed performance model JSON: {exc!r}") from None


def save_perf_model(model: PerfModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_json_obj(), indent=2) + "\n", encoding="utf-8")


def load_perf_model(path: str | Path) -> PerfModel:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PerfModelError(f"invalid performance model JSON: {exc}") from None
    return PerfModel.from_json_obj(obj)
