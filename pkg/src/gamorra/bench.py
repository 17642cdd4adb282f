"""Synthetic micro-benchmark harness that derives a performance model.

The harness drives the simulated pipeline with single-batch frames in
which exactly one stage carries load and every other stage passes
through, mirroring how one isolates stages on real hardware:

* baseline: empty pipeline, median of nine repetitions;
* per-opcode costs: a shader of N copies of one opcode, measured against
  a pass-through scaffold of the same fixture so rasterization and
  merge work cancel out of the difference;
* per-stage sweeps: load grows geometrically (factor 1.5) from a
  stage-appropriate minimum until a sample exceeds the time cap; that
  sample is kept and ends the sweep.

Sweep loads are expressed in estimator units (opcode-cost times
invocations for programmable stages), so the resulting breakpoints line
up exactly with the loads the analyzer computes from traces.  Marginal
times are stored multiplied by the parallelism factor; dividing by it
at estimate time recovers the measured machine.
"""

from __future__ import annotations

import logging
import statistics

import numpy as np

from .ilasm import complexity, parse_program
from .perf import PerfFunction, PerfModel, build_perf_function
from .simulator import ALU_OPCODES, PS_ONLY_OPCODES, GpuProfile, SimSession
from .stages import COST_TABLE_STAGES, CS_STAGE, PERF_STAGES
from .trace import BatchRecord, FrameRecord

log = logging.getLogger(__name__)

DEFAULT_CAP_MS = 100.0
GROWTH = 1.5
MAX_STEPS = 64

# Geometric sweep starting points, in invocations (or raw load units for
# the fixed-function stages).
SWEEP_MINIMUMS = {
    "ia": 1024,      # bytes
    "vs": 64,        # vertices
    "hs": 64,        # vertices
    "pcf": 64,       # patches
    "tess": 1024,    # tessellation points
    "ds": 64,        # domain vertices
    "gs": 64,        # primitives
    "ras": 4096,     # fragments
    "ps": 64,        # fragments
    "om": 4,         # fragments at 32x32 target -> 4096 load units
    "cs": 64,        # dispatch inputs
}

# Opcode counts of the fixed sweep shaders per programmable stage.
SWEEP_SHADER_OPS = {"vs": 16, "hs": 16, "pcf": 256, "ds": 16, "gs": 16, "ps": 64, "cs": 64}

OM_SWEEP_RT = 32


class BenchmarkError(RuntimeError):
    """A benchmark could not produce a usable measurement."""


def _repeat_shader(opcode: str, count: int) -> str:
    line = f"{opcode} r0, r1, c0"
    return "\n".join([line] * count) + "\n"


class BenchHarness:
    """One benchmarking run against one profile; owns the noise stream."""

    def __init__(
        self,
        profile: GpuProfile,
        cap_ms: float = DEFAULT_CAP_MS,
        reps: int = 5,
        baseline_reps: int = 9,
        opcode_reps: int = 9,
        iterations: int = 1024,
        seed: int = 0,
    ):
        if cap_ms <= 0:
            raise BenchmarkError(f"cap must be positive, got {cap_ms}")
        self.profile = profile
        self.cap_ms = cap_ms
        self.reps = reps
        self.baseline_reps = baseline_reps
        self.opcode_reps = opcode_reps
        self.iterations = iterations
        self.seed = seed
        self._store: dict[str, str] = {}
        self._session = SimSession(profile, self._store, seed=seed)
        self._est_costs: dict[str, dict[str, float]] = {}
        self.baseline_ms = self.measure_baseline()

    # -- raw measurement -------------------------------------------------

    def _measure(self, batches: list[BatchRecord], reps: int) -> float:
        frame = FrameRecord(frame_index=0, batches=batches)
        return statistics.median(self._session.frame_time(frame) for _ in range(reps))

    def _shader(self, name: str, source: str) -> str:
        self._store[name] = source
        return name

    # -- operations -------------------------------------------------------

    def measure_baseline(self) -> float:
        """Empty-pipeline frame time, median of nine runs."""
        return self._measure([], self.baseline_reps)

    def bench_opcode(self, stage: str, opcode: str, iterations: int | None = None) -> float:
        """Cost of one opcode execution in one shader invocation.

        Measures `iterations` textual copies of the opcode against a
        pass-through scaffold of the same fixture.  Invocation count is
        amplified (deterministically) until the marginal time clears the
        noise floor, and divided back out.
        """
        iterations = iterations or self.iterations
        sid = self._shader(f"bench_{stage}_{opcode}", _repeat_shader(opcode, iterations))
        scaffold_sid = self._shader(f"bench_{stage}_empty", "")
        invocations = 1
        for _ in range(24):
            loaded = self._measure([self._opcode_fixture(stage, sid, invocations)], self.opcode_reps)
            if loaded - self.baseline_ms >= 30.0 or loaded >= 4.0 * self.cap_ms:
                break
            invocations *= 8
        else:
            raise BenchmarkError(f"{stage}/{opcode}: could not reach a measurable load")
        scaffold = self._measure([self._opcode_fixture(stage, scaffold_sid, invocations)], self.opcode_reps)
        cost = (loaded - scaffold) / (iterations * invocations)
        if cost <= 0:
            log.warning("%s/%s marginal time vanished in noise; clamping", stage, opcode)
            cost = 1e-12
        return cost

    def _opcode_fixture(self, stage: str, shader_id: str, invocations: int) -> BatchRecord:
        if stage == "vs":
            return BatchRecord(vertex_count=invocations, vs_shader=shader_id)
        if stage == "hs":
            empty = self._shader("bench_hs_empty", "")
            return BatchRecord(vertex_count=invocations, hs_shader=shader_id,
                               pcf_shader=empty, ds_shader=empty)
        if stage == "pcf":
            return BatchRecord(patch_count=invocations, pcf_shader=shader_id,
                               tess_points_per_patch=[0] * invocations)
        if stage == "ds":
            return BatchRecord(ds_vertex_count=invocations, ds_shader=shader_id)
        if stage == "gs":
            return BatchRecord(gs_vertex_count=invocations, gs_shader=shader_id)
        if stage == "ps":
            return BatchRecord(vertex_count=4, fragment_count=invocations,
                               rt_width=1, rt_height=1, ps_shader=shader_id)
        if stage == "cs":
            return BatchRecord(cs_input_count=invocations, cs_shader=shader_id)
        raise BenchmarkError(f"no opcode fixture for stage {stage!r}")

    def bench_cost_tables(self, include_cs: bool = True) -> dict[str, dict[str, float]]:
        stages = list(COST_TABLE_STAGES) + ([CS_STAGE] if include_cs else [])
        tables: dict[str, dict[str, float]] = {}
        for stage in stages:
            vocab = ALU_OPCODES + (PS_ONLY_OPCODES if stage == "ps" else ())
            tables[stage] = {op: self.bench_opcode(stage, op) for op in vocab}
            log.info("benchmarked %d opcodes for %s", len(tables[stage]), stage)
        self._est_costs = tables
        return tables

    def _est_table(self, stage: str) -> dict[str, float]:
        table_stage = "hs" if stage == "pcf" else stage
        if table_stage not in self._est_costs:
            vocab = ALU_OPCODES + (PS_ONLY_OPCODES if table_stage == "ps" else ())
            self._est_costs[table_stage] = {op: self.bench_opcode(table_stage, op) for op in vocab}
        return self._est_costs[table_stage]

    def sweep_stage(self, stage: str) -> list[tuple[float, float]]:
        """Geometric load sweep; ends with exactly one above-cap sample."""
        if stage not in SWEEP_MINIMUMS:
            raise BenchmarkError(f"unknown sweep stage {stage!r}")
        samples: list[tuple[float, float]] = []
        count = float(SWEEP_MINIMUMS[stage])
        for _ in range(MAX_STEPS):
            invocations = round(count)
            batch, load = self._sweep_fixture(stage, invocations)
            t = self._measure([batch], self.reps)
            samples.append((load, t))
            if t > self.cap_ms:
                if len(samples) < 2:
                    raise BenchmarkError(
                        f"{stage}: first sweep sample already exceeds cap {self.cap_ms} ms")
                return samples
            count *= GROWTH
        raise BenchmarkError(
            f"{stage}: cap {self.cap_ms} ms unreachable within {MAX_STEPS} sweep steps")

    def _sweep_fixture(self, stage, invocations) -> tuple[BatchRecord, float]:
        if stage == "ia":
            return BatchRecord(ia_bytes=invocations), float(invocations)
        if stage == "tess":
            return (
                BatchRecord(patch_count=1, tess_points_per_patch=[invocations]),
                float(invocations),
            )
        if stage == "ras":
            return (
                BatchRecord(vertex_count=4, fragment_count=invocations, rt_width=1, rt_height=1),
                float(invocations),
            )
        if stage == "om":
            return (
                BatchRecord(vertex_count=4, fragment_count=invocations,
                            rt_width=OM_SWEEP_RT, rt_height=OM_SWEEP_RT),
                float(OM_SWEEP_RT * OM_SWEEP_RT * invocations),
            )
        # Programmable stages: fixed shader, swept invocation count.  All
        # companion-stage time in these fixtures is proportional to the
        # swept count, so it folds into the stored slope instead of
        # bending the function away from the origin.
        ops = SWEEP_SHADER_OPS[stage]
        sid = self._shader(f"sweep_{stage}", _repeat_shader("add", ops))
        unit_cost = complexity(parse_program(self._store[sid], sid), self._est_table(stage), stage)
        load = unit_cost * invocations
        if stage == "vs":
            return BatchRecord(vertex_count=invocations, vs_shader=sid), load
        if stage == "hs":
            empty = self._shader("bench_hs_empty", "")
            return BatchRecord(vertex_count=invocations, hs_shader=sid,
                               pcf_shader=empty, ds_shader=empty), load
        if stage == "pcf":
            return BatchRecord(patch_count=invocations, pcf_shader=sid,
                               tess_points_per_patch=[0] * invocations), load
        if stage == "ds":
            return BatchRecord(ds_vertex_count=invocations, ds_shader=sid), load
        if stage == "gs":
            return BatchRecord(gs_vertex_count=invocations, gs_shader=sid), load
        if stage == "ps":
            return BatchRecord(vertex_count=4, fragment_count=invocations, rt_width=1,
                               rt_height=1, ps_shader=sid), load
        if stage == "cs":
            return BatchRecord(cs_input_count=invocations, cs_shader=sid), load
        raise BenchmarkError(f"no sweep fixture for stage {stage!r}")

    def early_z_discount(self) -> float:
        """Marginal-time ratio of a depth-only pass to a full shading pass."""
        sid = self._shader("bench_early_z", _repeat_shader("add", 2048))
        kwargs = dict(vertex_count=4, fragment_count=65536, rt_width=OM_SWEEP_RT,
                      rt_height=OM_SWEEP_RT, ps_shader=sid)
        full = self._measure([BatchRecord(**kwargs)], self.reps)
        depth = self._measure([BatchRecord(depth_only=True, **kwargs)], self.reps)
        ratio = (depth - self.baseline_ms) / (full - self.baseline_ms)
        return float(min(1.0, max(ratio, 0.0)))

    def run_suite(self, include_cs: bool = True) -> PerfModel:
        """Full benchmark: baseline, opcode tables, sweeps, early-z probe."""
        tables = self.bench_cost_tables(include_cs=include_cs)
        functions: dict[str, PerfFunction] = {}
        stages = list(PERF_STAGES) + ([CS_STAGE] if include_cs else [])
        for stage in stages:
            samples = self.sweep_stage(stage)
            functions[stage] = build_perf_function(
                stage, samples, self.baseline_ms, scale=float(self.profile.omega))
            log.info("swept %s across %d samples", stage, len(samples))
        return PerfModel(
            omega=self.profile.omega,
            beta0_baseline_ms=self.baseline_ms,
            functions=functions,
            opcode_costs=tables,
            metadata={
                "early_z_ps_discount": self.early_z_discount(),
                "cap_ms": self.cap_ms,
                "seed": self.seed,
                "profile": self.profile.name,
            },
        )


def measure_baseline(profile: GpuProfile, reps: int = 9, seed: int = 0) -> float:
    return BenchHarness(profile, baseline_reps=reps, seed=seed).baseline_ms


def sweep_stage(profile: GpuProfile, stage: str, cap_ms: float = DEFAULT_CAP_MS,
                seed: int = 0) -> list[tuple[float, float]]:
    return BenchHarness(profile, cap_ms=cap_ms, seed=seed).sweep_stage(stage)


def bench_opcode(profile: GpuProfile, stage: str, opcode: str,
                 iterations: int = 1024, seed: int = 0) -> float:
    return BenchHarness(profile, iterations=iterations, seed=seed).bench_opcode(stage, opcode)


def run_suite(profile: GpuProfile, cap_ms: float = DEFAULT_CAP_MS,
              include_cs: bool = True, seed: int = 0) -> PerfModel:
    return BenchHarness(profile, cap_ms=cap_ms, seed=seed).run_suite(include_cs=include_cs)
