"""Workload scenario generation: synthetic traces plus ground-truth times.

A scenario describes a rendering workload statistically: how many draw
batches per frame, which optional pipeline paths are active, load
magnitude ranges, smooth per-frame intensity walks punctuated by scene
changes, and hidden drift events.  Generation is fully deterministic in
the seed; the same scenario and profile always produce byte-identical
traces and actuals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .configio import ConfigError, load_config
from .simulator import (
    ALU_OPCODES,
    PS_ONLY_OPCODES,
    DriftEvent,
    GpuProfile,
    SimSession,
)
from .trace import BatchRecord, FrameRecord, FrameSequence


@dataclass
class ScenarioConfig:
    """Statistical description of one workload."""

    name: str = "scenario"
    frame_count: int = 1000
    seed: int = 0
    batches_per_frame: int = 24
    # Optional pipeline paths.
    tess: bool = False
    gs: bool = False
    cs: bool = False
    # Shader pool shape.
    shaders_per_stage: int = 6
    shader_ops: tuple[int, int] = (5, 291)
    # Load magnitude ranges (log-uniform draws per scene).
    vertex_range: tuple[int, int] = (200, 4000)
    attr_range: tuple[int, int] = (4, 16)
    frag_range: tuple[int, int] = (2000, 60000)
    patch_range: tuple[int, int] = (50, 400)
    tess_pts_range: tuple[int, int] = (3, 16)
    cs_input_range: tuple[int, int] = (500, 4000)
    rt_dims: list[tuple[int, int]] = field(
        default_factory=lambda: [(256, 144), (320, 180), (512, 288), (640, 360), (960, 540)]
    )
    # Dynamics.
    walk_step: float = 0.12
    scene_length: int = 90
    scene_jump: float = 0.45
    batch_jitter: float = 0.08
    depth_only_fraction: float = 0.0
    indexed_fraction: float = 0.0
    drift_events: list[DriftEvent] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.frame_count < 1 or self.batches_per_frame < 1:
            raise ConfigError("frame_count and batches_per_frame must be >= 1")
        if self.scene_length < 1:
            raise ConfigError("scene_length must be >= 1")
        self.shader_ops = tuple(self.shader_ops)
        for name in ("vertex_range", "attr_range", "frag_range", "patch_range",
                     "tess_pts_range", "cs_input_range"):
            setattr(self, name, tuple(getattr(self, name)))
        self.rt_dims = [tuple(d) for d in self.rt_dims]
        self.drift_events = [
            e if isinstance(e, DriftEvent) else DriftEvent(**e) for e in self.drift_events
        ]

    def to_json_obj(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ScenarioConfig":
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(f"malformed scenario: {exc}") from None


def load_scenario(path: str | Path) -> ScenarioConfig:
    return ScenarioConfig.from_json_obj(load_config(path))


def save_scenario(scenario: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario.to_json_obj(), indent=2) + "\n", encoding="utf-8")


def generate_shader_pool(scenario: ScenarioConfig, rng: np.random.Generator) -> dict[str, dict[str, str]]:
    """Random shader listings per programmable stage, keyed by stage then id."""
    stages = ["vs", "ps"]
    if scenario.tess:
        stages += ["hs", "pcf", "ds"]
    if scenario.gs:
        stages.append("gs")
    if scenario.cs:
        stages.append("cs")
    lo, hi = scenario.shader_ops
    pool: dict[str, dict[str, str]] = {}
    for stage in stages:
        vocab = list(ALU_OPCODES) + (list(PS_ONLY_OPCODES) if stage == "ps" else [])
        pool[stage] = {}
        for k in range(scenario.shaders_per_stage):
            n_ops = int(rng.integers(lo, hi + 1))
            ops = rng.choice(vocab, size=n_ops)
            lines = [f"dcl_input v{j}" for j in range(int(rng.integers(1, 4)))]
            lines += [f"{op} r{j % 8}, r{(j + 1) % 8}, c{j % 16}" for j, op in enumerate(ops)]
            pool[stage][f"{stage}_{k:03d}"] = "\n".join(lines) + "\n"
    return pool


@dataclass
class _Material:
    """Per-batch-slot generation state, redrawn at scene changes."""

    vs: str
    ps: str | None
    hs: str | None = None
    pcf: str | None = None
    ds: str | None = None
    gs: str | None = None
    cs: str | None = None
    vertex_base: float = 0.0
    frag_base: float = 0.0
    patch_base: float = 0.0
    tess_pts: int = 0
    cs_base: float = 0.0
    attr_count: int = 4
    rt: tuple[int, int] = (320, 180)
    ds_expansion: float = 1.0
    gs_expansion: float = 1.0
    depth_only: bool = False
    indexed: bool = False
    compute_only: bool = False


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def _draw_material(scenario: ScenarioConfig, pool: dict, rng: np.random.Generator, slot: int) -> _Material:
    def pick(stage: str) -> str:
        ids = sorted(pool[stage])
        return ids[int(rng.integers(0, len(ids)))]

    if scenario.cs and slot >= scenario.batches_per_frame - scenario.batches_per_frame // 8:
        # Tail slots become pure compute dispatches when compute is active.
        return _Material(
            vs=pick("vs"), ps=None, cs=pick("cs"), compute_only=True,
            cs_base=_log_uniform(rng, *scenario.cs_input_range),
        )
    mat = _Material(
        vs=pick("vs"),
        ps=pick("ps"),
        vertex_base=_log_uniform(rng, *scenario.vertex_range),
        frag_base=_log_uniform(rng, *scenario.frag_range),
        attr_count=int(rng.integers(scenario.attr_range[0], scenario.attr_range[1] + 1)),
        rt=scenario.rt_dims[int(rng.integers(0, len(scenario.rt_dims)))],
        depth_only=bool(rng.random() < scenario.depth_only_fraction),
        indexed=bool(rng.random() < scenario.indexed_fraction),
    )
    if scenario.tess and rng.random() < 0.5:
        mat.hs, mat.pcf, mat.ds = pick("hs"), pick("pcf"), pick("ds")
        mat.patch_base = _log_uniform(rng, *scenario.patch_range)
        mat.tess_pts = int(rng.integers(scenario.tess_pts_range[0], scenario.tess_pts_range[1] + 1))
        # Domain-vertex count is tied to tessellator output but not equal
        # to it (edge sharing, duplication); an independent factor keeps
        # the two regressor columns distinguishable.
        mat.ds_expansion = _log_uniform(rng, 0.8, 1.8)
    if scenario.gs and rng.random() < 0.5:
        mat.gs = pick("gs")
        mat.gs_expansion = _log_uniform(rng, 0.5, 3.0)
    if scenario.cs and rng.random() < 0.4:
        # Async compute riding alongside a draw; keeps the compute column
        # populated even when there are too few slots for a dispatch tail.
        mat.cs = pick("cs")
        mat.cs_base = _log_uniform(rng, *scenario.cs_input_range)
    return mat


_WALK_KEYS = ("geo", "frag", "tess", "gs", "cs")


def generate_sequence(
    profile: GpuProfile,
    scenario: ScenarioConfig,
) -> tuple[FrameSequence, np.ndarray, np.ndarray]:
    """Produce (trace, actual frame times in ms, clock MHz per frame)."""
    root = np.random.SeedSequence(scenario.seed)
    gen_seed, noise_seed, freq_seed = root.spawn(3)
    rng = np.random.default_rng(gen_seed)

    pool = generate_shader_pool(scenario, rng)
    store = {sid: src for stage in pool.values() for sid, src in stage.items()}

    materials: list[_Material] = []
    intensity = {key: 1.0 for key in _WALK_KEYS}
    frames: list[FrameRecord] = []
    for i in range(scenario.frame_count):
        if i % scenario.scene_length == 0:
            materials = [_draw_material(scenario, pool, rng, s) for s in range(scenario.batches_per_frame)]
            # Fresh intensity draw per scene: levels stay stationary over
            # long traces and per-scene deviations are independent.
            for key in intensity:
                intensity[key] = float(np.clip(
                    math.exp(scenario.scene_jump * rng.standard_normal()), 0.25, 4.0))
        for key in intensity:
            intensity[key] = float(np.clip(
                intensity[key] * math.exp(scenario.walk_step * rng.standard_normal()), 0.25, 4.0))

        batches = []
        for mat in materials:
            jitter = math.exp(scenario.batch_jitter * rng.standard_normal())
            if mat.compute_only:
                batches.append(BatchRecord(
                    cs_shader=mat.cs,
                    cs_input_count=max(1, round(mat.cs_base * intensity["cs"] * jitter)),
                ))
                continue
            vertex_count = max(3, round(mat.vertex_base * intensity["geo"] * jitter))
            frag_count = max(16, round(mat.frag_base * intensity["frag"] * jitter))
            kwargs: dict = dict(
                ia_bytes=vertex_count * mat.attr_count * 4,
                vertex_count=vertex_count,
                attr_count=mat.attr_count,
                vs_shader=mat.vs,
                ps_shader=mat.ps,
                fragment_count=frag_count,
                rt_width=mat.rt[0],
                rt_height=mat.rt[1],
                depth_only=mat.depth_only,
                indexed=mat.indexed,
            )
            if mat.hs is not None:
                patch_count = max(1, round(mat.patch_base * intensity["tess"] * jitter))
                pts = rng.integers(max(1, mat.tess_pts - 2), mat.tess_pts + 3, size=patch_count)
                kwargs.update(
                    hs_shader=mat.hs, pcf_shader=mat.pcf, ds_shader=mat.ds,
                    patch_count=patch_count,
                    tess_points_per_patch=[int(p) for p in pts],
                    ds_vertex_count=max(1, round(int(pts.sum()) * mat.ds_expansion)),
                )
            if mat.gs is not None:
                kwargs.update(
                    gs_shader=mat.gs,
                    gs_vertex_count=max(1, round(vertex_count * mat.gs_expansion * intensity["gs"] / 3.0)),
                )
            if mat.cs is not None:
                kwargs.update(
                    cs_shader=mat.cs,
                    cs_input_count=max(1, round(mat.cs_base * intensity["cs"] * jitter)),
                )
            batches.append(BatchRecord(**kwargs))
        frames.append(FrameRecord(frame_index=i, batches=batches))

    seq = FrameSequence(frames=frames, shader_store=store)
    freqs = profile.frequency_series(scenario.frame_count, np.random.default_rng(freq_seed))
    session = SimSession(
        profile, store, drift_events=scenario.drift_events,
        seed=noise_seed.generate_state(1)[0],
    )
    actuals = np.array([session.frame_time(f, mhz=freqs[k]) for k, f in enumerate(seq.frames)])
    return seq, actuals, freqs


def write_actuals(path: str | Path, actuals: np.ndarray, frames: list[FrameRecord]) -> None:
    """Parallel CSV of ground-truth times; full float precision for replay."""
    lines = ["frame,actual_ms"]
    for frame, ms in zip(frames, actuals):
        lines.append(f"{frame.frame_index},{float(ms)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_frequency(path: str | Path, freqs: np.ndarray, frames: list[FrameRecord]) -> None:
    lines = ["frame,mhz"]
    for frame, mhz in zip(frames, freqs):
        lines.append(f"{frame.frame_index},{float(mhz)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_frequency(path: str | Path) -> dict[int, float]:
    text = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not text or text[0].strip() != "frame,mhz":
        raise ConfigError(f"{path}: expected header 'frame,mhz'")
    out: dict[int, float] = {}
    for line_no, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        try:
            frame_s, mhz_s = line.split(",")
            out[int(frame_s)] = float(mhz_s)
        except ValueError:
            raise ConfigError(f"{path}: bad frequency row at line {line_no}: {line!r}") from None
    return out


def read_actuals(path: str | Path) -> dict[int, float]:
    text = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not text or text[0].strip() != "frame,actual_ms":
        raise ConfigError(f"{path}: expected header 'frame,actual_ms'")
    out: dict[int, float] = {}
    for line_no, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        try:
            frame_s, ms_s = line.split(",")
            out[int(frame_s)] = float(ms_s)
        except ValueError:
            raise ConfigError(f"{path}: bad actuals row at line {line_no}: {line!r}") from None
    return out
