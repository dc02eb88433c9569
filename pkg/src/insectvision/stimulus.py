"""Synthetic scenes with ground truth: a translating cluttered background and a
small opaque rectangular target on a known trajectory."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ImageSequence, ValidationError

TRAJECTORY_KINDS = ("linear", "paper_sinusoid", "waypoints")


def paper_sinusoid(t, scale=1.0):
    """Target centre at time ``t`` ms, t in [0, 1000]; ``scale`` shrinks the scene."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0) or np.any(t_arr > 1000):
        raise ValidationError(f"paper_sinusoid is defined for 0 <= t <= 1000 ms, got {t!r}")
    s = (t_arr + 300.0) / 1000.0
    x = scale * (500.0 - 250.0 * s)
    y = scale * (125.0 + 15.0 * np.sin(4.0 * math.pi * s))
    if np.ndim(t) == 0:
        return float(x), float(y)
    return x, y


@dataclass
class Trajectory:
    """Target path. ``kind`` selects the formula:

    * ``linear``: from (x0, y0) at ``velocity`` px/s along ``direction`` radians
    * ``paper_sinusoid``: the sinusoidal path, spatially scaled by ``scale``
    * ``waypoints``: piecewise-linear through (t_ms, x, y) triples
    """

    kind: str = "paper_sinusoid"
    x0: float = 0.0
    y0: float = 0.0
    velocity: float = 0.0
    direction: float = 0.0
    scale: float = 1.0
    waypoints: tuple = ()

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ValidationError(f"unknown trajectory kind {self.kind!r}")
        if self.kind == "waypoints":
            if len(self.waypoints) < 2:
                raise ValidationError("a waypoint trajectory needs at least two points")
            ts = [p[0] for p in self.waypoints]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValidationError("waypoint times must be strictly increasing")

    def position(self, t_ms):
        t_ms = np.asarray(t_ms, dtype=np.float64)
        if self.kind == "linear":
            d = self.velocity * t_ms / 1000.0
            return self.x0 + d * math.cos(self.direction), self.y0 + d * math.sin(self.direction)
        if self.kind == "paper_sinusoid":
            return paper_sinusoid(t_ms, self.scale)
        pts = np.asarray(self.waypoints, dtype=np.float64)
        return np.interp(t_ms, pts[:, 0], pts[:, 1]), np.interp(t_ms, pts[:, 0], pts[:, 2])

    def heading(self, t_ms):
        """Instantaneous motion direction, atan2(dy, dx)."""
        t_ms = np.asarray(t_ms, dtype=np.float64)
        if self.kind == "linear":
            return np.full(t_ms.shape, math.atan2(math.sin(self.direction), math.cos(self.direction)))
        if self.kind == "paper_sinusoid":
            s = (t_ms + 300.0) / 1000.0
            dx = -250.0 * np.ones_like(s)
            dy = 15.0 * 4.0 * math.pi * np.cos(4.0 * math.pi * s)
            return np.arctan2(dy, dx)
        pts = np.asarray(self.waypoints, dtype=np.float64)
        seg = np.clip(np.searchsorted(pts[:, 0], t_ms, side="right") - 1, 0, len(pts) - 2)
        return np.arctan2(pts[seg + 1, 2] - pts[seg, 2], pts[seg + 1, 1] - pts[seg, 1])


@dataclass
class ClutterParams:
    spectral_slope: float = 1.0  # amplitude ~ 1/f**slope, as in natural images
    contrast: float = 45.0  # std of the textured layer, grey levels
    shape_density: float = 15.0  # shapes per 10,000 px
    min_size: float = 2.0
    max_size: float = 24.0
    mean_luminance: float = 128.0


@dataclass
class StimulusSpec:
    width: int = 500
    height: int = 250
    duration: int = 1000  # frames
    sample_rate: float = 1000.0
    background: str = "procedural"  # "procedural", "uniform" or a PGM panorama path
    seed: int = 0
    clutter: ClutterParams = field(default_factory=ClutterParams)
    background_luminance: float = 255.0  # used by "uniform"
    background_velocity: float = 250.0  # px/s, positive = rightward
    target: bool = True
    target_luminance: float = 0.0
    target_width: int = 5
    target_height: int = 5
    trajectory: Trajectory = field(default_factory=Trajectory)
    allow_offscreen: bool = False

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("frame dimensions must be positive")
        if self.duration <= 0:
            raise ValidationError("duration must be positive")
        if self.sample_rate <= 0:
            raise ValidationError("sample_rate must be positive")
        if not 0 <= self.target_luminance <= 255:
            raise ValidationError("target_luminance must lie in [0, 255]")
        if self.target_width < 1 or self.target_height < 1:
            raise ValidationError("target size must be at least 1x1")

    def times_ms(self):
        return np.arange(self.duration) * 1000.0 / self.sample_rate


@dataclass
class GroundTruthTrack:
    t: np.ndarray  # frame indices
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    width: int = 5
    height: int = 5
    visible: np.ndarray | None = None

    def __len__(self):
        return len(self.t)

    def __post_init__(self):
        if self.visible is None:
            self.visible = np.ones(len(self.t), dtype=bool)


def pink_noise(rng, height, width, slope=1.0):
    """Zero-mean, unit-std noise with a 1/f**slope amplitude spectrum (periodic)."""
    ky = np.fft.fftfreq(height)[:, None]
    kx = np.fft.fftfreq(width)[None, :]
    f = np.hypot(kx, ky)
    f[0, 0] = np.inf
    spectrum = np.fft.fft2(rng.standard_normal((height, width))) / f**slope
    noise = np.real(np.fft.ifft2(spectrum))
    return (noise - noise.mean()) / max(noise.std(), 1e-12)


def procedural_background(seed, width, height, clutter: ClutterParams | None = None):
    """Cluttered grey panorama, periodic in x so it can wrap while translating.

    A 1/f textured layer plus rectangles and ellipses of random size whose grey
    levels follow the same luminance distribution; the small ones act as
    target-like distractors.
    """
    if width <= 0 or height <= 0:
        raise ValidationError("panorama dimensions must be positive")
    c = clutter or ClutterParams()
    rng = np.random.default_rng(seed)
    pano = c.mean_luminance + c.contrast * pink_noise(rng, height, width, c.spectral_slope)

    yy, xx = np.mgrid[0:height, 0:width]
    n_shapes = rng.poisson(c.shape_density * width * height / 10_000.0)
    for _ in range(n_shapes):
        # log-uniform sizes: many small distractors, a few large objects
        sw = math.exp(rng.uniform(math.log(c.min_size), math.log(c.max_size)))
        sh = math.exp(rng.uniform(math.log(c.min_size), math.log(c.max_size)))
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        level = c.mean_luminance + c.contrast * rng.standard_normal()
        ddx = (xx - cx + width / 2) % width - width / 2
        ddy = yy - cy
        if rng.random() < 0.5:
            mask = (np.abs(ddx) <= sw / 2) & (np.abs(ddy) <= sh / 2)
        else:
            mask = (ddx / (sw / 2)) ** 2 + (ddy / (sh / 2)) ** 2 <= 1.0
        pano[mask] = level
    return np.clip(pano, 0.0, 255.0)


def sample_panorama(pano, width, shift):
    """Columns of ``pano`` seen through a ``width`` window translated by ``shift`` px.

    Content moves towards +x as ``shift`` grows; wraps around horizontally and
    linearly interpolates sub-pixel shifts.
    """
    wp = pano.shape[1]
    src = (np.arange(width) - shift) % wp
    i0 = np.floor(src).astype(int)
    frac = src - i0
    i1 = (i0 + 1) % wp
    return pano[:, i0] * (1.0 - frac) + pano[:, i1] * frac


def target_box(x, y, w, h):
    """Pixel bounds (x0, x1, y0, y1), half-open, of a w x h target centred at (x, y)."""
    x0 = int(np.rint(x - (w - 1) / 2.0))
    y0 = int(np.rint(y - (h - 1) / 2.0))
    return x0, x0 + w, y0, y0 + h


def _load_panorama(spec: StimulusSpec, min_width: int):
    if spec.background == "procedural":
        return procedural_background(spec.seed, max(min_width, spec.width), spec.height, spec.clutter)
    if spec.background == "uniform":
        return np.full((spec.height, spec.width), float(spec.background_luminance))
    from .io import read_pgm

    pano = read_pgm(spec.background)
    if pano.shape[0] != spec.height:
        raise ValidationError(f"panorama height {pano.shape[0]} does not match frame height {spec.height}")
    if pano.shape[1] < min_width:
        raise ValidationError(
            f"panorama {spec.background} is {pano.shape[1]} px wide; at least {min_width} px needed"
        )
    return pano


def ground_truth(spec: StimulusSpec) -> GroundTruthTrack:
    times = spec.times_ms()
    x, y = spec.trajectory.position(times)
    x = np.broadcast_to(np.asarray(x, dtype=np.float64), times.shape).copy()
    y = np.broadcast_to(np.asarray(y, dtype=np.float64), times.shape).copy()
    theta = np.asarray(spec.trajectory.heading(times), dtype=np.float64)
    visible = np.zeros(len(times), dtype=bool)
    for i in range(len(times)):
        x0, x1, y0, y1 = target_box(x[i], y[i], spec.target_width, spec.target_height)
        visible[i] = spec.target and x0 >= 0 and y0 >= 0 and x1 <= spec.width and y1 <= spec.height
    return GroundTruthTrack(
        t=np.arange(spec.duration),
        x=x,
        y=y,
        theta=theta,
        width=spec.target_width,
        height=spec.target_height,
        visible=visible,
    )


def render_frame(pano, spec: StimulusSpec, i, truth: GroundTruthTrack | None):
    shift = spec.background_velocity * i / spec.sample_rate
    if spec.background == "uniform":
        frame = pano.copy()
    else:
        frame = sample_panorama(pano, spec.width, shift)
    if spec.target and truth is not None:
        x0, x1, y0, y1 = target_box(truth.x[i], truth.y[i], spec.target_width, spec.target_height)
        frame[max(y0, 0) : max(y1, 0), max(x0, 0) : max(x1, 0)] = spec.target_luminance
    return frame


def generate(spec: StimulusSpec):
    """Render the scene; returns (ImageSequence, GroundTruthTrack)."""
    min_width = spec.width + int(math.ceil(abs(spec.background_velocity) * spec.duration / spec.sample_rate))
    truth = ground_truth(spec)
    if spec.target and not spec.allow_offscreen and not truth.visible.all():
        first = int(np.argmin(truth.visible))
        raise ValidationError(f"target leaves the frame at frame {first}")
    pano = _load_panorama(spec, min_width)
    frames = np.empty((spec.duration, spec.height, spec.width))
    for i in range(spec.duration):
        frames[i] = render_frame(pano, spec, i, truth)
    return ImageSequence(frames, spec.sample_rate), truth


def iter_frames(spec: StimulusSpec):
    """Lazily rendered frames, for sequences too long to hold in memory."""
    min_width = spec.width + int(math.ceil(abs(spec.background_velocity) * spec.duration / spec.sample_rate))
    truth = ground_truth(spec)
    pano = _load_panorama(spec, min_width)
    for i in range(spec.duration):
        yield render_frame(pano, spec, i, truth)


def drifting_texture(width, height, duration, velocity, direction, seed=0, sample_rate=1000.0, scale=2.0):
    """Full-field band-limited noise translating along ``direction`` at ``velocity`` px/s.

    The texture is periodic, so sub-pixel shifts are exact phase ramps.
    """
    rng = np.random.default_rng(seed)
    ky = np.fft.fftfreq(height)[:, None]
    kx = np.fft.fftfreq(width)[None, :]
    envelope = np.exp(-2.0 * (math.pi * scale) ** 2 * (kx**2 + ky**2))
    spectrum = np.fft.fft2(rng.standard_normal((height, width))) * envelope
    base = np.real(np.fft.ifft2(spectrum))
    gain = 50.0 / base.std()
    frames = np.empty((duration, height, width))
    for i in range(duration):
        d = velocity * i / sample_rate
        sx, sy = d * math.cos(direction), d * math.sin(direction)
        shifted = np.real(np.fft.ifft2(spectrum * np.exp(-2j * math.pi * (kx * sx + ky * sy))))
        frames[i] = np.clip(128.0 + gain * shifted, 0.0, 255.0)
    return ImageSequence(frames, sample_rate)
