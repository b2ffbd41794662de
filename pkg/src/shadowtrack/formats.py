"""File formats and configuration for the pipeline.

Frame stacks are stored in a small binary container: ASCII magic "VSR1",
three little-endian uint32 (T, H, W), then T*H*W little-endian float32
samples in [0, 1], frame-major and row-major. A directory of 8-bit binary
PGM files named frame_%06d.pgm is accepted as an alternative input,
mapped to [0, 1] by /255.

Detections, tracks and ground truth share the MOT CSV convention: one
record per line, `frame,id,x,y,w,h,conf,-1,-1,-1`, frames 1-based,
id -1 for detections and positive for tracks, floats printed with six
decimals, lines sorted by (frame, id).

Configuration is a JSON object with one block per parameter group;
unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import BBox, Detection, FrameStack, Trajectory
from .decompose import DecomposeParams
from .interpolate import GsiParams
from .simulate import PathSpec, SceneConfig
from .track import AssocConfig

VSR1_MAGIC = b"VSR1"


class FormatError(ValueError):
    """Malformed data file (bad magic, bad field, bad value)."""


class ConfigError(ValueError):
    """Invalid configuration (unknown key, bad type, bad range)."""


# ---------------------------------------------------------------------------
# frame stacks

def write_stack(stack: FrameStack, path) -> None:
    """Write a stack in the VSR1 binary format."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(VSR1_MAGIC)
        fh.write(struct.pack("<III", stack.t, stack.h, stack.w))
        fh.write(stack.data.astype("<f4").tobytes())


def _read_vsr1(path: Path) -> FrameStack:
    raw = path.read_bytes()
    if raw[:4] != VSR1_MAGIC:
        raise FormatError(f"{path}: not a VSR1 stack (bad magic {raw[:4]!r})")
    if len(raw) < 16:
        raise FormatError(f"{path}: truncated VSR1 header")
    t, h, w = struct.unpack("<III", raw[4:16])
    expected = 16 + 4 * t * h * w
    if t < 1 or h < 1 or w < 1:
        raise FormatError(f"{path}: invalid dimensions {t}x{h}x{w}")
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for {t}x{h}x{w}, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=16).reshape(t, h, w)
    try:
        return FrameStack(data)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def _read_pgm(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < 4 and i < len(raw):
        ch = raw[i:i + 1]
        if ch == b"#":
            while i < len(raw) and raw[i:i + 1] != b"\n":
                i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(raw) and not raw[j:j + 1].isspace() and raw[j:j + 1] != b"#":
                j += 1
            tokens.append(raw[i:j])
            i = j
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary (P5) PGM file")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise FormatError(f"{path}: bad PGM header") from exc
    if not (0 < maxval <= 255):
        raise FormatError(f"{path}: only 8-bit PGM supported, maxval {maxval}")
    i += 1  # single whitespace byte after maxval
    pixels = raw[i:i + w * h]
    if len(pixels) != w * h:
        raise FormatError(f"{path}: expected {w * h} pixel bytes, got {len(pixels)}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w) / 255.0


def read_stack(path) -> FrameStack:
    """Read a stack from a VSR1 file or a directory of frame_%06d.pgm files."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("frame_*.pgm"))
        if not files:
            raise FormatError(f"{path}: no frame_*.pgm files found")
        for k, f in enumerate(files, start=1):
            if f.name != f"frame_{k:06d}.pgm":
                raise FormatError(f"{path}: expected frame_{k:06d}.pgm, found {f.name}")
        frames = [_read_pgm(f) for f in files]
        shapes = {fr.shape for fr in frames}
        if len(shapes) != 1:
            raise FormatError(f"{path}: frames disagree in size: {sorted(shapes)}")
        return FrameStack(np.stack(frames))
    return _read_vsr1(path)


def write_pgm_dir(stack: FrameStack, path) -> None:
    """Write a stack as a directory of 8-bit binary PGM frames."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for k in range(stack.t):
        frame = np.round(stack.frame(k) * 255.0).astype(np.uint8)
        header = f"P5\n{stack.w} {stack.h}\n255\n".encode()
        (path / f"frame_{k + 1:06d}.pgm").write_bytes(header + frame.tobytes())


# ---------------------------------------------------------------------------
# MOT CSV

def _format_record(frame: int, ident: int, box: BBox, conf: float) -> str:
    return (f"{frame},{ident},{box.x:.6f},{box.y:.6f},{box.w:.6f},{box.h:.6f},"
            f"{conf:.6f},-1,-1,-1")


def _parse_records(path) -> list[tuple[int, int, BBox, float]]:
    records = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 10:
                raise FormatError(f"{path}:{lineno}: expected 10 fields, got {len(fields)}")
            try:
                frame = int(fields[0])
                ident = int(fields[1])
                x, y, w, h, conf = (float(v) for v in fields[2:7])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            if frame < 1:
                raise FormatError(f"{path}:{lineno}: frame must be >= 1, got {frame}")
            if not (0.0 <= conf <= 1.0):
                raise FormatError(f"{path}:{lineno}: confidence {conf} outside [0, 1]")
            try:
                box = BBox(x, y, w, h)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            records.append((frame, ident, box, conf))
    return records


def _round6(value: float) -> float:
    return float(f"{value:.6f}")


def quantize_detections(dets_by_frame: dict[int, list[Detection]]) -> dict[int, list[Detection]]:
    """Detections as they would come back from a MOT CSV round-trip."""
    out: dict[int, list[Detection]] = {}
    for frame, dets in dets_by_frame.items():
        out[frame] = [
            Detection(d.frame, BBox(_round6(d.box.x), _round6(d.box.y),
                                    _round6(d.box.w), _round6(d.box.h)),
                      _round6(d.confidence))
            for d in dets
        ]
    return out


def quantize_trajectories(trajectories: list[Trajectory]) -> list[Trajectory]:
    """Trajectories as they would come back from a MOT CSV round-trip."""
    return [
        Trajectory(t.id, tuple((f, BBox(_round6(b.x), _round6(b.y),
                                        _round6(b.w), _round6(b.h)))
                               for f, b in t.samples))
        for t in trajectories
    ]


def write_detections(dets_by_frame: dict[int, list[Detection]], path) -> None:
    lines = []
    for frame in sorted(dets_by_frame):
        for det in dets_by_frame[frame]:
            lines.append(_format_record(det.frame, -1, det.box, det.confidence))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="ascii")


def read_detections(path) -> dict[int, list[Detection]]:
    out: dict[int, list[Detection]] = {}
    for frame, _ident, box, conf in _parse_records(path):
        out.setdefault(frame, []).append(Detection(frame=frame, box=box, confidence=conf))
    return out


def write_trajectories(trajectories: list[Trajectory], path) -> None:
    records = []
    for traj in trajectories:
        for frame, box in traj.samples:
            records.append((frame, traj.id, box))
    records.sort(key=lambda r: (r[0], r[1]))
    lines = [_format_record(frame, ident, box, 1.0) for frame, ident, box in records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="ascii")


def read_trajectories(path) -> list[Trajectory]:
    by_id: dict[int, list[tuple[int, BBox]]] = {}
    for frame, ident, box, _conf in _parse_records(path):
        if ident < 1:
            raise FormatError(f"{path}: trajectory id must be positive, got {ident}")
        by_id.setdefault(ident, []).append((frame, box))
    out = []
    for ident in sorted(by_id):
        samples = sorted(by_id[ident], key=lambda s: s[0])
        frames = [f for f, _ in samples]
        if len(set(frames)) != len(frames):
            raise FormatError(f"{path}: duplicate frame for id {ident}")
        out.append(Trajectory(id=ident, samples=tuple(samples)))
    return out


# ---------------------------------------------------------------------------
# evaluation reports

def _format_mota(mota: float | None) -> str:
    return "undefined" if mota is None else f"{mota:.6f}"


def write_report(report, path) -> None:
    text = ("MOTA,FP,FN,IDSW,FM,GT\n"
            f"{_format_mota(report.mota)},{report.fp},{report.fn},"
            f"{report.idsw},{report.fm},{report.gt_boxes}\n")
    Path(path).write_text(text, encoding="ascii")


def report_table(report) -> str:
    rows = [("MOTA", _format_mota(report.mota)), ("FP", str(report.fp)),
            ("FN", str(report.fn)), ("IDSW", str(report.idsw)),
            ("FM", str(report.fm)), ("GT boxes", str(report.gt_boxes))]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class Switches:
    mtsd_on: bool = True
    recall_on: bool = True
    gsi_on: bool = True


@dataclass(frozen=True)
class EvalParams:
    iou_thresh: float = 0.5
    persistent: bool = True

    def __post_init__(self):
        if not (0.0 < self.iou_thresh <= 1.0):
            raise ConfigError(f"iou_thresh must be in (0, 1], got {self.iou_thresh}")


PATH_KEYS = ("frames", "detections_in", "detections_out", "tracks_out",
             "gt", "report_out", "render_out")


@dataclass(frozen=True)
class PipelineConfig:
    decompose: DecomposeParams
    blob: "BlobParams"
    assoc: AssocConfig
    gsi: GsiParams
    switches: Switches
    evaluation: EvalParams
    paths: dict
    scene: SceneConfig | None


def _build(cls, data: dict, block: str):
    if not isinstance(data, dict):
        raise ConfigError(f"config block {block!r} must be an object")
    fields = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - fields
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in config block {block!r}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config block {block!r}: {exc}") from exc


def _build_scene(data: dict) -> SceneConfig:
    data = dict(data)
    if "paths" in data:
        specs = []
        for i, entry in enumerate(data["paths"]):
            if not isinstance(entry, dict):
                raise ConfigError(f"scene.paths[{i}] must be an object")
            entry = {k: tuple(v) if isinstance(v, list) else v for k, v in entry.items()}
            specs.append(_build(PathSpec, entry, f"scene.paths[{i}]"))
        data["paths"] = tuple(specs)
    for key in ("shadow_size",):
        if key in data:
            data[key] = tuple(data[key])
    if "static_boxes" in data:
        data["static_boxes"] = tuple(tuple(b) for b in data["static_boxes"])
    return _build(SceneConfig, data, "scene")


def _set_override(tree: dict, expr: str) -> None:
    if "=" not in expr:
        raise ConfigError(f"override {expr!r} must look like block.key=value")
    target, _, raw = expr.partition("=")
    parts = target.split(".")
    if len(parts) < 2:
        raise ConfigError(f"override target {target!r} must be block.key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = tree
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {target!r} descends into a non-object")
    node[parts[-1]] = value


def load_config(path=None, overrides: list[str] | None = None) -> PipelineConfig:
    """Load a pipeline configuration, then apply block.key=value overrides."""
    from .detect import BlobParams  # local import to avoid a cycle

    tree: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            tree = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
        if not isinstance(tree, dict):
            raise ConfigError(f"{p}: top level must be an object")
    for expr in overrides or []:
        _set_override(tree, expr)

    known = {"decompose", "blob", "assoc", "gsi", "switches", "eval", "paths", "scene"}
    unknown = set(tree) - known
    if unknown:
        raise ConfigError(f"unknown config block {sorted(unknown)[0]!r}")

    paths = tree.get("paths", {})
    if not isinstance(paths, dict):
        raise ConfigError("config block 'paths' must be an object")
    bad = set(paths) - set(PATH_KEYS)
    if bad:
        raise ConfigError(f"unknown key {sorted(bad)[0]!r} in config block 'paths'")

    return PipelineConfig(
        decompose=_build(DecomposeParams, tree.get("decompose", {}), "decompose"),
        blob=_build(BlobParams, tree.get("blob", {}), "blob"),
        assoc=_build(AssocConfig, tree.get("assoc", {}), "assoc"),
        gsi=_build(GsiParams, tree.get("gsi", {}), "gsi"),
        switches=_build(Switches, tree.get("switches", {}), "switches"),
        evaluation=_build(EvalParams, tree.get("eval", {}), "eval"),
        paths={k: str(v) for k, v in paths.items()},
        scene=_build_scene(tree["scene"]) if "scene" in tree else None,
    )
