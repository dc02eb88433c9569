"""Shared types, direction quantization and the model configuration."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np


class ValidationError(ValueError):
    """A value violates a documented invariant."""


class ConfigError(ValidationError):
    """A configuration document could not be parsed or validated."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StreamError(ValidationError):
    """A frame stream changed shape or arrived out of order."""


def as_frame(data, *, check_range=False) -> np.ndarray:
    """Validate a 2-D luminance grid and return it as float64."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValidationError(f"frame must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("frame contains non-finite values")
    if check_range and (arr.min() < 0 or arr.max() > 255):
        raise ValidationError("input frame values must lie in [0, 255]")
    return arr


@dataclass
class ImageSequence:
    """Frames stacked as (T, H, W) float64, plus the sampling rate in Hz."""

    frames: np.ndarray
    sample_rate: float = 1000.0

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3:
            raise ValidationError("frames must be stacked as (T, H, W)")
        if self.sample_rate <= 0:
            raise ValidationError("sample_rate must be positive")
        self.frames = frames

    def __len__(self):
        return self.frames.shape[0]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.frames)

    @property
    def height(self):
        return self.frames.shape[1]

    @property
    def width(self):
        return self.frames.shape[2]


@dataclass(frozen=True)
class DirectionSet:
    count: int
    angles: tuple

    def index_of(self, angle: float, atol: float = 1e-9) -> int:
        """Index of the quantized direction equal to `angle` (mod 2*pi)."""
        for i, a in enumerate(self.angles):
            diff = (angle - a + math.pi) % (2 * math.pi) - math.pi
            if abs(diff) <= atol:
                return i
        raise ValidationError(f"angle {angle!r} is not in the direction set")

    def nearest(self, angle: float) -> int:
        step = 2 * math.pi / self.count
        return int(round((angle % (2 * math.pi)) / step)) % self.count

    def __len__(self):
        return self.count


def direction_set(count: int) -> DirectionSet:
    if int(count) != count or count < 2:
        raise ValidationError(f"direction count must be an integer >= 2, got {count!r}")
    count = int(count)
    return DirectionSet(count, tuple(2 * math.pi * i / count for i in range(count)))


@dataclass
class ResponseVolume:
    """One frame of a directional response: values has shape (n_directions, H, W)."""

    values: np.ndarray
    directions: DirectionSet

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.shape[0] != self.directions.count:
            raise ValidationError(
                f"values shape {self.values.shape} does not match {self.directions.count} directions"
            )

    @property
    def height(self):
        return self.values.shape[1]

    @property
    def width(self):
        return self.values.shape[2]

    def channel(self, angle: float) -> np.ndarray:
        return self.values[self.directions.index_of(angle)]


@dataclass(frozen=True)
class Detection:
    t: int
    x: int
    y: int
    direction: float
    response: float


@dataclass(frozen=True)
class ModelConfig:
    # ommatidia blur
    sigma1: float = 1.0
    # LMC band-pass
    n1: int = 2
    tau1: float = 3.0
    n2: int = 6
    tau2: float = 9.0
    # STMD delays
    n3: int = 3
    tau3: float = 15.0
    n4: int = 5
    tau4: float = 25.0
    n5: int = 8
    tau5: float = 40.0
    alpha1: float = 3.0
    # lateral inhibition
    A: float = 1.0
    B: float = 3.0
    sigma2: float = 1.5
    sigma3: float = 3.0
    e: float = 1.0
    rho: float = 0.0
    # LPTC delay
    n6: int = 5
    tau6: float = 15.0
    # TSDN
    alpha2: float = 3.5
    # thresholds
    beta: float = 150.0
    gamma: float = 1000.0
    # discretization
    direction_count: int = 8
    kernel_truncation_factor: float = 5.0
    spatial_kernel_radius_factor: float = 3.0
    peak_radius: int = 3

    def __post_init__(self):
        validate_config(self)

    @property
    def directions(self) -> DirectionSet:
        return direction_set(self.direction_count)

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)

    def delay_pairs(self):
        return {
            "stmd_on": (self.n3, self.tau3),
            "stmd_off_near": (self.n4, self.tau4),
            "stmd_off_far": (self.n5, self.tau5),
            "lptc": (self.n6, self.tau6),
        }


_INT_FIELDS = {"n1", "n2", "n3", "n4", "n5", "n6", "direction_count", "peak_radius"}
FIELD_NAMES = tuple(f.name for f in dataclasses.fields(ModelConfig))


def validate_config(cfg: ModelConfig):
    def bad(name, why):
        raise ConfigError(f"{name} {why} (got {getattr(cfg, name)!r})", field=name)

    for name in FIELD_NAMES:
        value = getattr(cfg, name)
        if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
            bad(name, "must be numeric")
        if not math.isfinite(value) and name not in ("beta", "gamma"):
            bad(name, "must be finite")
        if math.isnan(value):
            bad(name, "must not be NaN")
    for name in ("sigma1", "sigma2", "sigma3"):
        if getattr(cfg, name) <= 0:
            bad(name, "must be > 0")
    for name in ("tau1", "tau2", "tau3", "tau4", "tau5", "tau6"):
        if getattr(cfg, name) <= 0:
            bad(name, "must be > 0")
    for name in _INT_FIELDS:
        value = getattr(cfg, name)
        if int(value) != value:
            bad(name, "must be an integer")
    for name in ("n1", "n2", "n3", "n4", "n5", "n6"):
        if getattr(cfg, name) < 1:
            bad(name, "must be >= 1")
    if cfg.alpha1 <= 0:
        bad("alpha1", "must be > 0")
    if cfg.alpha2 < 0:
        bad("alpha2", "must be >= 0")
    if cfg.direction_count < 2:
        bad("direction_count", "must be >= 2")
    if cfg.kernel_truncation_factor <= 0:
        bad("kernel_truncation_factor", "must be > 0")
    if cfg.spatial_kernel_radius_factor < 2:
        bad("spatial_kernel_radius_factor", "must be >= 2")
    if cfg.sigma3 <= cfg.sigma2:
        bad("sigma3", "must exceed sigma2")
    if cfg.peak_radius < 1:
        bad("peak_radius", "must be >= 1")


def _coerce(name: str, raw: str, line: int):
    try:
        if name in _INT_FIELDS:
            as_float = float(raw)
            if not as_float.is_integer():
                raise ValueError
            return int(as_float)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as a number", line=line, field=name) from None


def parse_key_values(text: str) -> list[tuple[int, str, str]]:
    """Split a `key = value` document into (line number, key, value) triples."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {line.strip()!r}", line=lineno)
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not key or not value:
            raise ConfigError(f"expected 'key = value', got {line.strip()!r}", line=lineno)
        out.append((lineno, key, value))
    return out


def parse_config(text: str) -> ModelConfig:
    values = {}
    lines = {}
    for lineno, key, raw in parse_key_values(text):
        if key not in FIELD_NAMES:
            raise ConfigError(f"unknown key {key!r}", line=lineno, field=key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", line=lineno, field=key)
        values[key] = _coerce(key, raw, lineno)
        lines[key] = lineno
    try:
        return ModelConfig(**values)
    except ConfigError as exc:
        raise ConfigError(str(exc), line=lines.get(exc.field), field=exc.field) from None


def format_config(cfg: ModelConfig) -> str:
    lines = []
    for name in FIELD_NAMES:
        value = getattr(cfg, name)
        lines.append(f"{name} = {value!r}" if name not in _INT_FIELDS else f"{name} = {int(value)}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ModelConfig:
    if path is None:
        return ModelConfig()
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def stack_channels(channels: Sequence[np.ndarray], directions: DirectionSet) -> ResponseVolume:
    return ResponseVolume(np.stack(channels), directions)
