"""File formats: binary PGM frames, `key = value` manifests, CSV outputs and
stimulus description files."""

from __future__ import annotations

import csv
import math
import os
from pathlib import Path

import numpy as np

from .core import ConfigError, ValidationError, parse_key_values
from .stimulus import ClutterParams, GroundTruthTrack, StimulusSpec, Trajectory, target_box

FRAME_PATTERN = "frame_{:05d}.pgm"
MANIFEST = "manifest.txt"
TRUTH_CSV = "truth.csv"
STIMULUS_FILE = "stimulus.txt"


def fmt(value):
    """Floats with enough digits to round-trip."""
    return repr(float(value)) if isinstance(value, (float, np.floating)) else str(value)


# -- PGM ---------------------------------------------------------------------


def write_pgm(path, frame):
    data = np.clip(np.rint(np.asarray(frame, dtype=np.float64)), 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def _pgm_tokens(buf, count, pos):
    tokens = []
    while len(tokens) < count:
        while pos < len(buf) and chr(buf[pos]).isspace():
            pos += 1
        if pos < len(buf) and buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not chr(buf[pos]).isspace():
            pos += 1
        if start == pos:
            raise ValidationError("truncated PGM header")
        tokens.append(buf[start:pos].decode("ascii"))
    return tokens, pos + 1  # exactly one whitespace byte precedes the raster


def read_pgm(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if buf[:2] != b"P5":
        raise ValidationError(f"{path}: not a binary PGM (P5) file")
    (w, h, maxval), pos = _pgm_tokens(buf, 3, 2)
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise ValidationError(f"{path}: maxval {maxval} unsupported, expected 255")
    raster = buf[pos : pos + w * h]
    if len(raster) != w * h:
        raise ValidationError(f"{path}: expected {w * h} pixels, found {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).astype(np.float64)


# -- manifests -----------------------------------------------------------------


def write_manifest(path, items):
    """Write (key, value) pairs; repeated keys are allowed."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in items:
            fh.write(f"{key} = {fmt(value)}\n")


def read_manifest(path):
    """Parse a manifest into a dict; the repeated key ``frame`` becomes a list."""
    text = Path(path).read_text(encoding="utf-8")
    out = {"frame": []}
    for _, key, value in parse_key_values(text):
        if key == "frame":
            out["frame"].append(value)
        else:
            out[key] = value
    return out


class SequenceDir:
    """A generated sequence on disk, read lazily frame by frame."""

    def __init__(self, path):
        self.path = Path(path)
        manifest = self.path / MANIFEST
        if not manifest.is_file():
            raise FileNotFoundError(f"{self.path}: no {MANIFEST} found")
        m = read_manifest(manifest)
        try:
            self.width = int(m["width"])
            self.height = int(m["height"])
            self.sample_rate = float(m["sample_rate"])
            count = int(m["frame_count"])
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"{manifest}: missing or invalid field {exc}") from None
        self.frames = m["frame"]
        if len(self.frames) != count:
            raise ValidationError(f"{manifest}: frame_count is {count} but {len(self.frames)} frames are listed")
        if count == 0:
            raise ValidationError(f"{self.path}: sequence has no frames")
        self.manifest = m

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        for i, name in enumerate(self.frames):
            path = self.path / name
            if not path.is_file():
                raise FileNotFoundError(f"frame {i}: missing file {path}")
            frame = read_pgm(path)
            if frame.shape != (self.height, self.width):
                raise ValidationError(
                    f"frame {i}: shape {frame.shape[1]}x{frame.shape[0]} does not match "
                    f"{self.width}x{self.height}"
                )
            yield frame

    def truth(self):
        path = self.path / self.manifest.get("ground_truth", TRUTH_CSV)
        if not path.is_file():
            return None
        return read_truth_csv(
            path,
            int(self.manifest.get("target_width", 5)),
            int(self.manifest.get("target_height", 5)),
            self.width,
            self.height,
        )


def write_sequence(out_dir, sequence, truth: GroundTruthTrack | None, spec: StimulusSpec | None = None):
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    names = []
    for i, frame in enumerate(sequence):
        name = FRAME_PATTERN.format(i)
        write_pgm(out / name, frame)
        names.append(name)
    items = [
        ("width", sequence.width),
        ("height", sequence.height),
        ("sample_rate", float(sequence.sample_rate)),
        ("frame_count", len(names)),
    ]
    if truth is not None:
        write_truth_csv(out / TRUTH_CSV, truth)
        items += [("ground_truth", TRUTH_CSV), ("target_width", truth.width), ("target_height", truth.height)]
    if spec is not None:
        (out / STIMULUS_FILE).write_text(format_stimulus_spec(spec), encoding="utf-8")
        items += [("seed", spec.seed), ("stimulus", STIMULUS_FILE)]
    items += [("frame", n) for n in names]
    write_manifest(out / MANIFEST, items)
    return out


# -- CSV -------------------------------------------------------------------------


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_truth_csv(path, truth: GroundTruthTrack):
    rows = zip(truth.t.tolist(), truth.x.tolist(), truth.y.tolist(), truth.theta.tolist())
    _write_csv(path, ("t", "x", "y", "theta"), rows)


def read_truth_csv(path, target_width=5, target_height=5, width=None, height=None):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    t = np.array([int(r["t"]) for r in rows])
    x = np.array([float(r["x"]) for r in rows])
    y = np.array([float(r["y"]) for r in rows])
    theta = np.array([float(r["theta"]) for r in rows])
    visible = np.ones(len(rows), dtype=bool)
    if width is not None and height is not None:
        for i in range(len(rows)):
            x0, x1, y0, y1 = target_box(x[i], y[i], target_width, target_height)
            visible[i] = x0 >= 0 and y0 >= 0 and x1 <= width and y1 <= height
    return GroundTruthTrack(t, x, y, theta, target_width, target_height, visible)


def write_detections_csv(path, detections):
    rows = ((d.t, d.x, d.y, float(d.direction), float(d.response)) for d in detections)
    _write_csv(path, ("t", "x", "y", "theta", "response"), rows)


def write_roc_csv(path, roc):
    _write_csv(path, ("beta", "fa", "dr"), ((float(b), float(f), float(d)) for b, f, d in roc))


def write_tuning_csv(path, curve):
    rows = ((float(v), float(s), float(l)) for v, s, l in zip(curve.values, curve.stmd, curve.lptc))
    _write_csv(path, ("value", "stmd", "lptc"), rows)


# -- stimulus description files ------------------------------------------------------

_SPEC_FIELDS = {
    "width": int,
    "height": int,
    "duration": int,
    "sample_rate": float,
    "background": str,
    "seed": int,
    "background_luminance": float,
    "background_velocity": float,
    "target": "bool",
    "target_luminance": float,
    "target_width": int,
    "target_height": int,
    "allow_offscreen": "bool",
}
_TRAJ_FIELDS = {"x0": float, "y0": float, "velocity": float, "direction": float, "scale": float}
_CLUTTER_FIELDS = {f: float for f in ClutterParams.__dataclass_fields__}


def _parse_bool(raw):
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _parse_waypoints(raw):
    points = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if chunk:
            t, x, y = (float(v) for v in chunk.split(":"))
            points.append((t, x, y))
    return tuple(points)


def parse_stimulus_spec(text: str) -> StimulusSpec:
    """Parse a stimulus description. Keys are StimulusSpec fields, plus
    ``trajectory`` (kind), ``trajectory_<field>``, ``waypoints = t:x:y; ...`` and
    ``clutter_<field>``."""
    kwargs, traj, clutter = {}, {}, {}
    for lineno, key, raw in parse_key_values(text):
        try:
            if key in _SPEC_FIELDS:
                kind = _SPEC_FIELDS[key]
                kwargs[key] = _parse_bool(raw) if kind == "bool" else kind(raw)
            elif key == "trajectory":
                traj["kind"] = raw
            elif key == "waypoints":
                traj["waypoints"] = _parse_waypoints(raw)
            elif key.startswith("trajectory_") and key[11:] in _TRAJ_FIELDS:
                traj[key[11:]] = float(raw)
            elif key.startswith("clutter_") and key[8:] in _CLUTTER_FIELDS:
                clutter[key[8:]] = float(raw)
            else:
                raise ConfigError(f"unknown stimulus key {key!r}", line=lineno, field=key)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{key}: cannot parse {raw!r}", line=lineno, field=key) from None
    return StimulusSpec(**kwargs, trajectory=Trajectory(**traj), clutter=ClutterParams(**clutter))


def format_stimulus_spec(spec: StimulusSpec) -> str:
    lines = []
    for key in _SPEC_FIELDS:
        value = getattr(spec, key)
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {fmt(value)}")
    tr = spec.trajectory
    lines.append(f"trajectory = {tr.kind}")
    for key in _TRAJ_FIELDS:
        lines.append(f"trajectory_{key} = {fmt(float(getattr(tr, key)))}")
    if tr.waypoints:
        lines.append("waypoints = " + "; ".join(":".join(fmt(float(v)) for v in p) for p in tr.waypoints))
    for key in _CLUTTER_FIELDS:
        lines.append(f"clutter_{key} = {fmt(float(getattr(spec.clutter, key)))}")
    return "\n".join(lines) + "\n"


def parse_grid(text, allow_inf=False):
    """``a:b:step`` (inclusive of b) or a comma list; must be ascending."""
    text = text.strip()
    if ":" in text:
        try:
            a, b, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise ValidationError(f"grid {text!r} is not of the form a:b:step") from None
        if step <= 0 or b < a:
            raise ValidationError(f"grid {text!r} must be ascending (a <= b, step > 0)")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        values = [a + i * step for i in range(n)]
    else:
        try:
            values = [float(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise ValidationError(f"grid {text!r} is not a comma-separated list of numbers") from None
    if not values:
        raise ValidationError("grid is empty")
    if any(math.isnan(v) or (math.isinf(v) and not allow_inf) for v in values):
        raise ValidationError(f"grid {text!r} contains non-finite values")
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValidationError(f"grid {text!r} must be sorted ascending")
    return values
