"""Frame trace data model and its JSON Lines serialization.

A trace is UTF-8 JSON Lines: the first line is a header object
``{"format": "gamorra-trace", "version": 1}`` and every following line
is one frame.  Shader listings ride in a sidecar directory of
``<shader-id>.il`` files next to the trace (``shaders/`` by default).

Counts describe work submitted to the pipeline for one draw batch.
Stages with no shader bound are inactive and contribute nothing; the
tessellation invariant (hull shader implies patch-constant and domain
shaders) is enforced at construction time so downstream load math can
trust it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import IO, Iterable

TRACE_FORMAT = "gamorra-trace"
TRACE_VERSION = 1

SHADER_SLOTS = (
    "vs_shader",
    "hs_shader",
    "pcf_shader",
    "ds_shader",
    "gs_shader",
    "ps_shader",
    "cs_shader",
)

_COUNT_FIELDS = (
    "ia_bytes",
    "vertex_count",
    "attr_count",
    "patch_count",
    "ds_vertex_count",
    "gs_vertex_count",
    "fragment_count",
    "rt_width",
    "rt_height",
    "cs_input_count",
)


class TraceFormatError(ValueError):
    """Structurally invalid trace input."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass
class BatchRecord:
    """One draw or dispatch batch: counts per stage plus bound shader ids."""

    ia_bytes: int = 0
    vertex_count: int = 0
    attr_count: int = 0
    vs_shader: str | None = None
    hs_shader: str | None = None
    pcf_shader: str | None = None
    ds_shader: str | None = None
    gs_shader: str | None = None
    ps_shader: str | None = None
    cs_shader: str | None = None
    patch_count: int = 0
    tess_points_per_patch: list[int] = field(default_factory=list)
    ds_vertex_count: int = 0
    gs_vertex_count: int = 0
    fragment_count: int = 0
    rt_width: int = 0
    rt_height: int = 0
    cs_input_count: int = 0
    depth_only: bool = False
    indexed: bool = False

    def __post_init__(self) -> None:
        for name in _COUNT_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise TraceFormatError(f"{name} must be a non-negative int, got {value!r}")
        if self.fragment_count > 0 and (self.rt_width < 1 or self.rt_height < 1):
            raise TraceFormatError(
                "rt_width and rt_height must be >= 1 when fragment_count > 0"
            )
        if len(self.tess_points_per_patch) != self.patch_count:
            raise TraceFormatError(
                f"tess_points_per_patch has {len(self.tess_points_per_patch)} entries "
                f"for patch_count {self.patch_count}"
            )
        total = 0
        for pts in self.tess_points_per_patch:
            if not isinstance(pts, int) or isinstance(pts, bool) or pts < 0:
                raise TraceFormatError(f"tess point count must be a non-negative int, got {pts!r}")
            total += pts
        # Derived once here; treat the record as immutable after creation.
        self.tess_points_total = total
        for slot in SHADER_SLOTS:
            sid = getattr(self, slot)
            if sid is not None and (not isinstance(sid, str) or not sid):
                raise TraceFormatError(f"{slot} must be a non-empty string or absent")
        if self.hs_shader is not None and (self.pcf_shader is None or self.ds_shader is None):
            raise TraceFormatError("hs_shader requires pcf_shader and ds_shader")

    def shader_ids(self) -> list[str]:
        return [sid for slot in SHADER_SLOTS if (sid := getattr(self, slot)) is not None]

    def to_json_obj(self) -> dict:
        obj: dict = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in SHADER_SLOTS and value is None:
                continue
            if f.name in ("depth_only", "indexed") and not value:
                continue
            obj[f.name] = value
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict, line_no: int | None = None) -> "BatchRecord":
        if not isinstance(obj, dict):
            raise TraceFormatError("batch must be a JSON object", line_no)
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise TraceFormatError(f"unknown batch fields {sorted(unknown)}", line_no)
        try:
            return cls(**obj)
        except TraceFormatError as exc:
            raise TraceFormatError(str(exc), line_no) from None


@dataclass
class FrameRecord:
    """All batches submitted for one frame."""

    frame_index: int
    batches: list[BatchRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not isinstance(self.frame_index, int) or self.frame_index < 0:
            raise TraceFormatError(f"frame_index must be a non-negative int, got {self.frame_index!r}")

    def to_json_obj(self) -> dict:
        return {
            "frame_index": self.frame_index,
            "batches": [b.to_json_obj() for b in self.batches],
        }


@dataclass
class FrameSequence:
    """Parsed trace: ordered frames plus the shader id -> listing text store."""

    frames: list[FrameRecord] = field(default_factory=list)
    shader_store: dict[str, str] = field(default_factory=dict)

    def referenced_shader_ids(self) -> set[str]:
        ids: set[str] = set()
        for frame in self.frames:
            for batch in frame.batches:
                ids.update(batch.shader_ids())
        return ids


def parse_trace(stream: IO[str] | Iterable[str], shader_store: dict[str, str] | None = None) -> FrameSequence:
    """Parse JSON Lines trace text into a FrameSequence.

    When a shader store is given, every referenced shader id must resolve
    in it.  Frame indices must be strictly increasing.
    """
    lines = iter(enumerate(stream, start=1))
    try:
        line_no, header_line = next(lines)
    except StopIteration:
        raise TraceFormatError("empty trace: missing header line") from None
    header = _parse_json_line(header_line, line_no)
    if not isinstance(header, dict) or header.get("format") != TRACE_FORMAT or header.get("version") != TRACE_VERSION:
        raise TraceFormatError(
            f"bad header {header!r}: expected format {TRACE_FORMAT!r} version {TRACE_VERSION}",
            line_no,
        )

    frames: list[FrameRecord] = []
    last_index = -1
    for line_no, line in lines:
        if not line.strip():
            continue
        obj = _parse_json_line(line, line_no)
        if not isinstance(obj, dict) or "frame_index" not in obj:
            raise TraceFormatError("frame object must carry frame_index", line_no)
        extra = set(obj) - {"frame_index", "batches"}
        if extra:
            raise TraceFormatError(f"unknown frame fields {sorted(extra)}", line_no)
        batches_obj = obj.get("batches", [])
        if not isinstance(batches_obj, list):
            raise TraceFormatError("batches must be a list", line_no)
        frame = FrameRecord(
            frame_index=obj["frame_index"],
            batches=[BatchRecord.from_json_obj(b, line_no) for b in batches_obj],
        )
        if frame.frame_index <= last_index:
            raise TraceFormatError(
                f"frame_index {frame.frame_index} not strictly increasing after {last_index}",
                line_no,
            )
        last_index = frame.frame_index
        frames.append(frame)

    seq = FrameSequence(frames=frames, shader_store=dict(shader_store or {}))
    if shader_store is not None:
        missing = seq.referenced_shader_ids() - set(seq.shader_store)
        if missing:
            raise TraceFormatError(f"unresolved shader ids {sorted(missing)}")
    return seq


def write_trace(seq: FrameSequence, stream: IO[str]) -> None:
    """Write the header plus one frame object per line."""
    stream.write(json.dumps({"format": TRACE_FORMAT, "version": TRACE_VERSION}) + "\n")
    for frame in seq.frames:
        stream.write(json.dumps(frame.to_json_obj(), separators=(", ", ": ")) + "\n")


def load_trace(trace_path: str | Path, shader_dir: str | Path | None = None) -> FrameSequence:
    """Load a trace file and its shader sidecar directory.

    The sidecar defaults to ``shaders/`` next to the trace file; a trace
    that references no shaders loads fine without one.
    """
    trace_path = Path(trace_path)
    if shader_dir is None:
        shader_dir = trace_path.parent / "shaders"
    store = load_shader_dir(shader_dir) if Path(shader_dir).is_dir() else {}
    with open(trace_path, encoding="utf-8") as fh:
        return parse_trace(fh, shader_store=store)


def save_trace(seq: FrameSequence, trace_path: str | Path, shader_dir: str | Path | None = None) -> None:
    """Write the trace file and the shader sidecar directory."""
    trace_path = Path(trace_path)
    trace_path.parent.mkdir(parents=True, exist_ok=True)
    with open(trace_path, "w", encoding="utf-8", newline="\n") as fh:
        write_trace(seq, fh)
    if shader_dir is None:
        shader_dir = trace_path.parent / "shaders"
    save_shader_dir(seq.shader_store, shader_dir)


def load_shader_dir(shader_dir: str | Path) -> dict[str, str]:
    store: dict[str, str] = {}
    for path in sorted(Path(shader_dir).glob("*.il")):
        store[path.stem] = path.read_text(encoding="utf-8")
    return store


def save_shader_dir(store: dict[str, str], shader_dir: str | Path) -> None:
    shader_dir = Path(shader_dir)
    shader_dir.mkdir(parents=True, exist_ok=True)
    for sid in sorted(store):
        (shader_dir / f"{sid}.il").write_text(store[sid], encoding="utf-8")


def _parse_json_line(line: str, line_no: int):
    try:
        return json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"invalid JSON: {exc.msg}", line_no) from None
