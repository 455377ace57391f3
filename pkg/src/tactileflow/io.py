"""Plain-text and netpbm file formats used by the CLI.

* recording CSV: header ``t,pdc,e1,...,e24``
* layout table: ``index x y z`` per line, indices 1..24 in order
* key=value files for configs, scenarios and fitted models (``#`` comments)
* frames: 8-bit P5 graymap + ``.mask.pgm`` silhouette + ``.txt`` metadata
* flow CSV ``row,col,vx,vy`` and P6 quiver overlays
* segment CSV ``label,start,end,anchor``
"""

from __future__ import annotations

import dataclasses
import os
import types
import typing
from pathlib import Path

import numpy as np

from .errors import DataValidationError
from .flow import FlowField
from .frames import TactileFrame
from .geometry import N_TAXELS, EllipsoidModel, TaxelLayout
from .segmentation import Segment
from .smoothing import TaxelRecording

RECORDING_HEADER = ["t", "pdc"] + [f"e{i}" for i in range(1, N_TAXELS + 1)]


def _fmt(x: float) -> str:
    return repr(float(x))


# -- recordings ---------------------------------------------------------------


def read_recording(path) -> TaxelRecording:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise DataValidationError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if header != RECORDING_HEADER:
        raise DataValidationError(f"{path}: row 1: header must be {','.join(RECORDING_HEADER)}")
    rows = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(RECORDING_HEADER):
            raise DataValidationError(
                f"{path}: row {n}: expected {len(RECORDING_HEADER)} columns, got {len(cells)}"
            )
        try:
            vals = [float(c) for c in cells]
        except ValueError:
            raise DataValidationError(f"{path}: row {n}: non-numeric value") from None
        if not all(np.isfinite(vals)):
            raise DataValidationError(f"{path}: row {n}: non-finite value")
        if rows and vals[0] <= rows[-1][0]:
            raise DataValidationError(f"{path}: row {n}: time not strictly increasing")
        rows.append(vals)
    if not rows:
        raise DataValidationError(f"{path}: no data rows")
    arr = np.array(rows)
    return TaxelRecording(arr[:, 0], arr[:, 2:], arr[:, 1])


def write_recording(path, rec: TaxelRecording) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(RECORDING_HEADER) + "\n")
        for t, p, e in zip(rec.timestamps, rec.pressure, rec.impedances):
            fh.write(",".join([_fmt(t), _fmt(p)] + [_fmt(v) for v in e]) + "\n")


# -- layouts and models -------------------------------------------------------


def read_layout(path) -> TaxelLayout:
    pts = []
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        cells = line.split()
        if len(cells) != 4:
            raise DataValidationError(f"{path}: line {n}: expected 'index x y z'")
        try:
            idx = int(cells[0])
            xyz = [float(c) for c in cells[1:]]
        except ValueError:
            raise DataValidationError(f"{path}: line {n}: malformed number") from None
        if idx != len(pts) + 1:
            raise DataValidationError(f"{path}: line {n}: expected taxel index {len(pts) + 1}, got {idx}")
        pts.append(xyz)
    return TaxelLayout(np.array(pts, dtype=float).reshape(-1, 3))


def write_layout(path, layout: TaxelLayout, comment: str | None = None) -> None:
    with open(path, "w") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        for i, (x, y, z) in enumerate(layout.positions, start=1):
            fh.write(f"{i} {_fmt(x)} {_fmt(y)} {_fmt(z)}\n")


def model_to_kv(model: EllipsoidModel) -> dict:
    cx, cy, cz = model.centroid
    return {"a": model.a, "b": model.b, "c": model.c, "cx": cx, "cy": cy, "cz": cz}


def model_from_kv(kv: dict) -> EllipsoidModel:
    try:
        return EllipsoidModel(
            float(kv["a"]), float(kv["b"]), float(kv["c"]),
            centroid=[float(kv["cx"]), float(kv["cy"]), float(kv["cz"])],
        )
    except KeyError as exc:
        raise DataValidationError(f"model file lacks key {exc.args[0]!r}") from None


# -- key=value files ----------------------------------------------------------


def read_kv(path) -> dict[str, str]:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataValidationError(f"{path}: line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise DataValidationError(f"{path}: line {n}: empty key")
        out[key] = val
    return out


def write_kv(path, data: dict) -> None:
    with open(path, "w") as fh:
        for k, v in data.items():
            if isinstance(v, float):
                v = _fmt(v)
            elif isinstance(v, (list, tuple)):
                v = ",".join(str(x) for x in v)
            fh.write(f"{k} = {v}\n")


def _coerce(text: str, tp, name: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType) and type(None) in args:
        if text.lower() in ("", "none", "auto"):
            return None
        tp = next(a for a in args if a is not type(None))
        origin = typing.get_origin(tp)
    try:
        if tp is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if tp is int:
            return int(text)
        if tp is float:
            return float(text)
        if tp is str:
            return text
        if origin is tuple:
            sep = "x" if "x" in text and "," not in text else ","
            parts = [p.strip() for p in text.split(sep) if p.strip()]
            inner = typing.get_args(tp)
            if inner and inner[-1] is Ellipsis:
                return tuple(_coerce(p, inner[0], name) for p in parts)
            if inner and len(inner) != len(parts):
                raise ValueError(text)
            return tuple(_coerce(p, t, name) for p, t in zip(parts, inner))
    except (ValueError, StopIteration):
        raise DataValidationError(f"invalid value for {name}: {text!r}") from None
    raise DataValidationError(f"unsupported field type for {name}")


def dataclass_from_kv(cls, kv: dict, prefix: str = ""):
    """Build ``cls`` from string values; unknown keys are rejected by name."""
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, text in kv.items():
        name = key[len(prefix) + 1 :] if prefix else key
        if name not in names:
            raise DataValidationError(f"unknown field {key!r}")
        kwargs[name] = _coerce(text, hints[name], key)
    return cls(**kwargs)


# -- netpbm ------------------------------------------------------------------


def write_pgm(path, img: np.ndarray) -> None:
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def write_ppm(path, img: np.ndarray) -> None:
    img = np.asarray(img, dtype=np.uint8)
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def _read_netpbm(path, magic: bytes, channels: int) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != magic:
        raise DataValidationError(f"{path}: not a {magic.decode()} file")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise DataValidationError(f"{path}: only 8-bit images are supported")
    pixels = np.frombuffer(data[pos + 1 : pos + 1 + w * h * channels], dtype=np.uint8)
    if pixels.size != w * h * channels:
        raise DataValidationError(f"{path}: truncated image data")
    return pixels.reshape((h, w, channels) if channels > 1 else (h, w))


def read_pgm(path) -> np.ndarray:
    return _read_netpbm(path, b"P5", 1)


def read_ppm(path) -> np.ndarray:
    return _read_netpbm(path, b"P6", 3)


# -- frames ------------------------------------------------------------------


def frame_stem(index: int) -> str:
    return f"frame_{index:06d}"


def write_frame(directory, index: int, frame: TactileFrame) -> Path:
    d = Path(directory)
    stem = frame_stem(index)
    write_pgm(d / f"{stem}.pgm", np.round(frame.intensity * 255.0))
    write_pgm(d / f"{stem}.mask.pgm", frame.mask.astype(np.uint8) * 255)
    meta = {
        "projection": frame.projection,
        "norm_lo": float(frame.norm_bounds[0]),
        "norm_hi": float(frame.norm_bounds[1]),
        "timestamp": float(frame.timestamp),
        "index": index,
    }
    meta.update(frame.meta)
    write_kv(d / f"{stem}.txt", meta)
    return d / f"{stem}.pgm"


def read_frame(pgm_path) -> TactileFrame:
    p = Path(pgm_path)
    stem = p.name[: -len(".pgm")]
    meta = read_kv(p.with_name(stem + ".txt"))
    mask_path = p.with_name(stem + ".mask.pgm")
    mask = read_pgm(mask_path) > 0 if mask_path.exists() else None
    try:
        bounds = (float(meta["norm_lo"]), float(meta["norm_hi"]))
        return TactileFrame(
            read_pgm(p) / 255.0, mask, meta["projection"], bounds, float(meta.get("timestamp", 0.0)),
            meta={"index": int(meta.get("index", -1))},
        )
    except KeyError as exc:
        raise DataValidationError(f"{p}: metadata lacks {exc.args[0]!r}") from None


def list_frames(directory) -> list[Path]:
    return sorted(p for p in Path(directory).glob("frame_*.pgm") if not p.name.endswith(".mask.pgm"))


# -- flow --------------------------------------------------------------------


def write_flow_csv(path, flow: FlowField) -> None:
    rows, cols = np.nonzero(flow.mask)
    with open(path, "w") as fh:
        fh.write("row,col,vx,vy\n")
        for r, c in zip(rows, cols):
            fh.write(f"{r},{c},{_fmt(flow.vx[r, c])},{_fmt(flow.vy[r, c])}\n")


def read_flow_csv(path, shape: tuple[int, int]) -> FlowField:
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    vx, vy = np.zeros(shape), np.zeros(shape)
    mask = np.zeros(shape, bool)
    if arr.size:
        r, c = arr[:, 0].astype(int), arr[:, 1].astype(int)
        vx[r, c], vy[r, c], mask[r, c] = arr[:, 2], arr[:, 3], True
    return FlowField(vx, vy, mask)


def quiver_image(frame: TactileFrame, flow: FlowField, step: int = 8, gain: float = 4.0) -> np.ndarray:
    """RGB overlay: grayscale frame with red flow arrows every ``step`` pixels."""
    gray = np.round(frame.intensity * 255).astype(np.uint8)
    img = np.repeat(gray[..., None], 3, axis=2)
    h, w = gray.shape
    for r in range(step // 2, h, step):
        for c in range(step // 2, w, step):
            if not flow.mask[r, c]:
                continue
            ex, ey = c + gain * flow.vx[r, c], r + gain * flow.vy[r, c]
            n = int(max(abs(ex - c), abs(ey - r))) + 1
            xs = np.clip(np.round(np.linspace(c, ex, n + 1)).astype(int), 0, w - 1)
            ys = np.clip(np.round(np.linspace(r, ey, n + 1)).astype(int), 0, h - 1)
            img[ys, xs] = (255, 0, 0)
            img[r, c] = (255, 255, 0)
    return img


# -- ground truth ------------------------------------------------------------

TRUTH_HEADER = "t,theta,phi,x,y,z,vx,vy,vz,load"


def write_truth(path, gt) -> None:
    with open(path, "w") as fh:
        for name, idx in gt.events.items():
            fh.write(f"# event {name}={idx}\n")
        fh.write(TRUTH_HEADER + "\n")
        th, ph = np.broadcast_arrays(gt.contact.theta, gt.contact.phi)
        for k in range(len(gt)):
            vals = [gt.timestamps[k], th[k], ph[k], *gt.points[k], *gt.velocity[k], gt.load[k]]
            fh.write(",".join(_fmt(v) for v in vals) + "\n")


def read_truth(path):
    from .geometry import SurfaceParam
    from .synth import GroundTruth

    events, rows = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# event "):
            name, _, idx = line[len("# event ") :].partition("=")
            events[name] = int(idx)
        elif line and not line.startswith("#") and line != TRUTH_HEADER:
            rows.append([float(c) for c in line.split(",")])
    a = np.array(rows).reshape(-1, 10)
    return GroundTruth(a[:, 0], SurfaceParam(a[:, 1], a[:, 2]), a[:, 3:6], a[:, 6:9], a[:, 9], events)


# -- segments ----------------------------------------------------------------


def write_segments(path, segments: list[Segment]) -> None:
    with open(path, "w") as fh:
        fh.write("label,start,end,anchor\n")
        for s in segments:
            fh.write(f"{s.label},{s.start},{s.end},{s.anchor}\n")


def read_segments(path) -> list[Segment]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "label,start,end,anchor":
        raise DataValidationError(f"{path}: row 1: header must be label,start,end,anchor")
    out = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 4:
            raise DataValidationError(f"{path}: row {n}: expected 4 columns")
        try:
            out.append(Segment(cells[0], int(cells[1]), int(cells[2]), int(cells[3])))
        except ValueError:
            raise DataValidationError(f"{path}: row {n}: malformed segment") from None
    return out


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
