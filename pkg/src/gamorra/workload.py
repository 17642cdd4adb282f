"""Per-stage load extraction and explanatory vector assembly.

Loads quantify submitted work per stage for one batch: bytes fetched by
input assembly, shader complexity times invocation count for the
programmable stages, raw counts for the fixed-function ones.  A stage
with no shader bound (or nothing to process) contributes zero.  The
output-merger load follows the render-target-area times fragment-count
product measured by the benchmark, so it shares the fragment count with
the pixel stage by design.

Explanatory vectors map loads through the per-stage performance
functions and divide by the parallelism factor; slot 0 is always 1 so
the intercept rides along in every regression.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ilasm import ShaderProgram, complexity, parse_program
from .perf import PerfModel, eval_perf
from .stages import CS_STAGE, PERF_STAGES, REGRESSOR_STAGES, model_dim
from .trace import BatchRecord, FrameRecord

# Columns of the internal load matrix: perf stages then compute.
LOAD_COLUMNS = PERF_STAGES + (CS_STAGE,)
_COL = {stage: i for i, stage in enumerate(LOAD_COLUMNS)}

# complexity_of(stage, shader_id) -> static cost of one invocation
ComplexityFn = Callable[[str, str], float]


@dataclass
class StageLoads:
    """Named per-stage loads for one batch (pcf kept separate from hs)."""

    ia: float = 0.0
    vs: float = 0.0
    hs: float = 0.0
    pcf: float = 0.0
    tess: float = 0.0
    ds: float = 0.0
    gs: float = 0.0
    ras: float = 0.0
    ps: float = 0.0
    om: float = 0.0
    cs: float = 0.0

    def __post_init__(self) -> None:
        for stage in LOAD_COLUMNS:
            if getattr(self, stage) < 0:
                raise ValueError(f"{stage} load must be >= 0")

    def as_row(self) -> np.ndarray:
        return np.array([getattr(self, stage) for stage in LOAD_COLUMNS])


def stage_loads(
    batch: BatchRecord,
    complexity_of: ComplexityFn,
    early_z_discount: float = 1.0,
) -> StageLoads:
    """Compute all stage loads for one batch.

    ``early_z_discount`` scales the fragment count feeding the pixel and
    output-merger stages for depth-only batches, mirroring fragments
    culled before shading; rasterization still sees the full count.
    """
    frag = float(batch.fragment_count)
    frag_shaded = frag * early_z_discount if batch.depth_only else frag
    return StageLoads(
        ia=float(batch.ia_bytes),
        vs=_program_load(batch.vs_shader, "vs", batch.vertex_count, complexity_of),
        hs=_program_load(batch.hs_shader, "hs", batch.vertex_count, complexity_of),
        pcf=_program_load(batch.pcf_shader, "pcf", batch.patch_count, complexity_of),
        tess=float(sum(batch.tess_points_per_patch)),  # field is source of truth here
        ds=_program_load(batch.ds_shader, "ds", batch.ds_vertex_count, complexity_of),
        gs=_program_load(batch.gs_shader, "gs", batch.gs_vertex_count, complexity_of),
        ras=frag,
        ps=_program_load(batch.ps_shader, "ps", frag_shaded, complexity_of),
        om=float(batch.rt_width) * float(batch.rt_height) * frag_shaded,
        cs=_program_load(batch.cs_shader, "cs", batch.cs_input_count, complexity_of),
    )


def _program_load(shader_id, stage, invocations, complexity_of: ComplexityFn) -> float:
    if shader_id is None or invocations == 0:
        return 0.0
    return complexity_of(stage, shader_id) * float(invocations)


def explanatory_vector(loads: StageLoads, model: PerfModel, include_cs: bool = False) -> np.ndarray:
    """Map one batch's loads to its regression row [1, w_1..w_9(, w_cs)].

    The hull slot carries hull plus patch-constant time; every slot is
    performance-function output divided by the parallelism factor.
    """
    w = np.empty(model_dim(include_cs))
    w[0] = 1.0
    for i, stage in enumerate(REGRESSOR_STAGES, start=1):
        t = eval_perf(model.functions[stage], getattr(loads, stage))
        if stage == "hs":
            t += eval_perf(model.functions["pcf"], loads.pcf)
        w[i] = t / model.omega
    if include_cs:
        if not model.has_cs:
            raise ValueError("performance model carries no cs stage")
        w[-1] = eval_perf(model.functions[CS_STAGE], loads.cs) / model.omega
    return w


class FrameAnalyzer:
    """Cached trace -> regression-matrix pipeline for one performance model.

    Shader listings parse once per id and complexities memoize per
    (stage, id), so per-frame work is field extraction plus vectorized
    performance-function evaluation.
    """

    def __init__(self, model: PerfModel, shader_store: dict[str, str], include_cs: bool = False):
        self.model = model
        self.include_cs = include_cs
        self._sources = shader_store
        self._programs: dict[str, ShaderProgram] = {}
        self._per_stage: dict[str, _CostCache] = {}
        self.early_z_discount = float(model.metadata.get("early_z_ps_discount", 1.0))

    def program(self, shader_id: str) -> ShaderProgram:
        prog = self._programs.get(shader_id)
        if prog is None:
            try:
                source = self._sources[shader_id]
            except KeyError:
                raise KeyError(f"shader id {shader_id!r} not in store") from None
            prog = parse_program(source, name=shader_id)
            self._programs[shader_id] = prog
        return prog

    def _stage_cache(self, stage: str) -> "_CostCache":
        cache = self._per_stage.get(stage)
        if cache is None:
            cache = _CostCache(self, stage)
            self._per_stage[stage] = cache
        return cache

    def complexity_of(self, stage: str, shader_id: str) -> float:
        return self._stage_cache(stage)[shader_id]

    def batch_loads(self, batch: BatchRecord) -> StageLoads:
        return stage_loads(batch, self.complexity_of, self.early_z_discount)

    def frame_load_matrix(self, frame: FrameRecord) -> np.ndarray:
        """Load rows for a whole frame, laid out as LOAD_COLUMNS.

        Field-wise array assembly instead of per-batch ``stage_loads``
        keeps the prediction path inside its per-frame time envelope on
        batch-heavy frames; both paths must agree (see batch_loads).
        """
        bs = frame.batches
        n = len(bs)
        if n == 0:
            return np.empty((0, len(LOAD_COLUMNS)))
        disc = self.early_z_discount
        vs_c, hs_c, pcf_c, ds_c, gs_c, ps_c, cs_c = (
            self._stage_cache(s) for s in ("vs", "hs", "pcf", "ds", "gs", "ps", "cs"))

        shaded = np.array([
            b.fragment_count * disc if b.depth_only else float(b.fragment_count) for b in bs
        ])
        loads = np.empty((n, len(LOAD_COLUMNS)))
        loads[:, _COL["ia"]] = [float(b.ia_bytes) for b in bs]
        loads[:, _COL["vs"]] = [
            0.0 if b.vs_shader is None else vs_c[b.vs_shader] * b.vertex_count for b in bs]
        loads[:, _COL["hs"]] = [
            0.0 if b.hs_shader is None else hs_c[b.hs_shader] * b.vertex_count for b in bs]
        loads[:, _COL["pcf"]] = [
            0.0 if b.pcf_shader is None else pcf_c[b.pcf_shader] * b.patch_count for b in bs]
        loads[:, _COL["tess"]] = [float(b.tess_points_total) for b in bs]
        loads[:, _COL["ds"]] = [
            0.0 if b.ds_shader is None else ds_c[b.ds_shader] * b.ds_vertex_count for b in bs]
        loads[:, _COL["gs"]] = [
            0.0 if b.gs_shader is None else gs_c[b.gs_shader] * b.gs_vertex_count for b in bs]
        loads[:, _COL["ras"]] = [float(b.fragment_count) for b in bs]
        loads[:, _COL["ps"]] = [
            0.0 if b.ps_shader is None else ps_c[b.ps_shader] for b in bs] * shaded
        loads[:, _COL["om"]] = [float(b.rt_width * b.rt_height) for b in bs] * shaded
        loads[:, _COL["cs"]] = [
            0.0 if b.cs_shader is None else cs_c[b.cs_shader] * b.cs_input_count for b in bs]
        return loads

    def frame_matrix(self, frame: FrameRecord) -> np.ndarray:
        """Explanatory vectors for all batches of a frame, one row each."""
        loads = self.frame_load_matrix(frame)
        n = loads.shape[0]
        dim = model_dim(self.include_cs)
        w = np.empty((n, dim))
        if n == 0:
            return w
        w[:, 0] = 1.0
        for i, stage in enumerate(REGRESSOR_STAGES, start=1):
            t = _eval_column(self.model, stage, loads[:, _COL[stage]])
            if stage == "hs":
                t = t + _eval_column(self.model, "pcf", loads[:, _COL["pcf"]])
            w[:, i] = t / self.model.omega
        if self.include_cs:
            w[:, -1] = _eval_column(self.model, CS_STAGE, loads[:, _COL[CS_STAGE]]) / self.model.omega
        return w


def _eval_column(model: PerfModel, stage: str, loads: np.ndarray) -> np.ndarray:
    out = eval_perf(model.functions[stage], loads)
    return np.atleast_1d(out)


class _CostCache(dict):
    """Per-stage shader-id -> complexity dict, filled on first lookup."""

    def __init__(self, analyzer: FrameAnalyzer, stage: str):
        super().__init__()
        self._analyzer = analyzer
        self._stage = stage

    def __missing__(self, shader_id: str) -> float:
        value = complexity(
            self._analyzer.program(shader_id),
            self._analyzer.model.costs_for(self._stage),
            self._stage,
        )
        self[shader_id] = value
        return value
