"""Weber contrast, detection scoring, ROC sweeps and tuning-curve experiments."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Detection, ModelConfig, ValidationError
from .pipeline import Pipeline, warmup_frames
from .stimulus import StimulusSpec, Trajectory, generate, target_box
from .stmd import find_peaks, peaks_to_detections
from .tsdn import tsdn_peaks

TUNING_ATTRIBUTES = ("weber_contrast", "velocity", "width", "height")


def weber_contrast(frame, center, w, h, d=10):
    """|mean(target) - mean(surround)| / 255.

    The surround is the (w + 2d) x (h + 2d) rectangle around the target minus
    the target itself.
    """
    frame = np.asarray(frame, dtype=np.float64)
    x0, x1, y0, y1 = target_box(center[0], center[1], w, h)
    bx0, bx1, by0, by1 = x0 - d, x1 + d, y0 - d, y1 + d
    hgt, wid = frame.shape
    if bx0 < 0 or by0 < 0 or bx1 > wid or by1 > hgt:
        raise ValidationError("target or background rectangle extends outside the frame")
    box = frame[by0:by1, bx0:bx1]
    target = frame[y0:y1, x0:x1]
    mu_t = target.mean()
    mu_b = (box.sum() - target.sum()) / (box.size - target.size)
    return abs(mu_t - mu_b) / 255.0


@dataclass
class MatchRecord:
    t: int
    true_detection: Detection | None
    distance: float | None
    false_detections: int


@dataclass
class EvalReport:
    detection_rate: float
    false_alarm_rate: float
    frames: int
    targets: int
    true_detections: int
    false_detections: int
    records: list = field(default_factory=list)


def _by_frame(detections):
    if isinstance(detections, dict):
        return detections
    return {t: dets for t, dets in enumerate(detections)}


def match_and_score(detections, truth, radius=5.0, warmup=0) -> EvalReport:
    """Score detections against the ground-truth track.

    ``detections`` is a list indexed by frame or a dict frame -> detections.
    Within ``radius`` of the true centre the nearest detection counts as the
    single true detection for that frame (ties: larger response, then list
    order); every other detection is false.
    """
    if radius <= 0:
        raise ValidationError("matching radius must be positive")
    by_frame = _by_frame(detections)
    records = []
    targets = true_count = false_count = 0
    for t in range(warmup, len(truth)):
        dets = by_frame.get(t, [])
        visible = bool(truth.visible[t])
        targets += visible
        best, best_key = None, None
        if visible:
            for i, det in enumerate(dets):
                dist = math.hypot(det.x - truth.x[t], det.y - truth.y[t])
                if dist <= radius:
                    key = (dist, -det.response, i)
                    if best_key is None or key < best_key:
                        best, best_key = det, key
        n_false = len(dets) - (best is not None)
        true_count += best is not None
        false_count += n_false
        records.append(MatchRecord(t, best, None if best_key is None else best_key[0], n_false))
    frames = len(records)
    return EvalReport(
        detection_rate=true_count / targets if targets else 0.0,
        false_alarm_rate=false_count / frames if frames else 0.0,
        frames=frames,
        targets=targets,
        true_detections=true_count,
        false_detections=false_count,
        records=records,
    )


def roc_sweep(peaks_per_frame, truth, beta_grid, radius=5.0, warmup=0):
    """(beta, F_A, D_R) for every threshold in ``beta_grid``.

    ``peaks_per_frame[t]`` holds the threshold-free candidates of frame t as
    returned by :func:`insectvision.stmd.find_peaks`; detecting at beta keeps
    candidates with value > beta, so one pass serves the whole grid.
    """
    betas = np.asarray(list(beta_grid), dtype=np.float64)
    if betas.size == 0:
        raise ValidationError("beta grid must not be empty")
    if np.any(np.diff(betas) < 0):
        raise ValidationError("beta grid must be sorted ascending")
    n_det = np.zeros(len(betas))
    n_true = np.zeros(len(betas))
    frames = targets = 0
    for t in range(warmup, len(truth)):
        frames += 1
        xs, ys, _, vals = peaks_per_frame[t]
        above = vals[None, :] > betas[:, None]
        n_det += above.sum(axis=1)
        if truth.visible[t]:
            targets += 1
            near = np.hypot(xs - truth.x[t], ys - truth.y[t]) <= radius
            n_true += (above & near[None, :]).any(axis=1)
    fa = (n_det - n_true) / frames if frames else np.zeros(len(betas))
    dr = n_true / targets if targets else np.zeros(len(betas))
    return [(float(b), float(f), float(d)) for b, f, d in zip(betas, fa, dr)]


def _envelope(curve):
    """Sorted unique F_A with the best D_R at each."""
    pts = sorted((fa, dr) for fa, dr in curve)
    fas, drs = [], []
    for fa, dr in pts:
        if fas and fa == fas[-1]:
            drs[-1] = max(drs[-1], dr)
        else:
            fas.append(fa)
            drs.append(dr)
    return np.array(fas), np.maximum.accumulate(np.array(drs))


def roc_dominance(curve_a, curve_b, tolerance=0.02):
    """Compare two ROC curves given as (F_A, D_R) points.

    Over the common F_A range, with linear interpolation, returns the minimum
    of ``D_R_a - D_R_b`` (checked at every point of either curve), whether A
    dominates B within ``tolerance``, and how many of A's own points lie
    strictly above B.
    """
    fa_a, dr_a = _envelope(curve_a)
    fa_b, dr_b = _envelope(curve_b)
    lo, hi = max(fa_a[0], fa_b[0]), min(fa_a[-1], fa_b[-1])
    common = np.unique(np.concatenate([fa_a, fa_b]))
    common = common[(common >= lo) & (common <= hi)]
    if common.size == 0:
        return {"dominates": False, "min_margin": float("nan"), "strict_points": 0, "common_points": 0}
    margin = np.interp(common, fa_a, dr_a) - np.interp(common, fa_b, dr_b)
    own = (fa_a >= lo) & (fa_a <= hi)
    strict = int(np.sum(dr_a[own] > np.interp(fa_a[own], fa_b, dr_b) + 1e-12))
    return {
        "dominates": bool(margin.min() >= -tolerance),
        "min_margin": float(margin.min()),
        "strict_points": strict,
        "common_points": int(common.size),
    }


@dataclass
class TuningCurve:
    swept_attribute: str
    values: list
    stmd: np.ndarray
    lptc: np.ndarray
    stmd_raw: np.ndarray
    lptc_raw: np.ndarray


def tuning_base_spec(width=100, height=100, duration=500):
    """Clutter-free stimulus at the reference point: contrast 1, 250 px/s, 5 x 5."""
    return StimulusSpec(
        width=width,
        height=height,
        duration=duration,
        background="uniform",
        background_luminance=255.0,
        background_velocity=0.0,
        target_luminance=0.0,
        trajectory=Trajectory("linear", velocity=250.0, direction=math.pi),
        allow_offscreen=True,
    )


def _centre_crossing(spec: StimulusSpec, warmup):
    """Point the linear trajectory so the target crosses the frame centre midway
    through the steady-state frames."""
    traj = spec.trajectory
    t_mid_ms = (warmup + spec.duration) / 2.0 * 1000.0 / spec.sample_rate
    travel = traj.velocity * t_mid_ms / 1000.0
    cx, cy = (spec.width - 1) / 2.0, (spec.height - 1) / 2.0
    traj.x0 = cx - travel * math.cos(traj.direction)
    traj.y0 = cy - travel * math.sin(traj.direction)


def tuning_spec(attribute, value, base_spec: StimulusSpec, warmup):
    if attribute not in TUNING_ATTRIBUTES:
        raise ValidationError(f"unknown tuning attribute {attribute!r}; expected one of {TUNING_ATTRIBUTES}")
    spec = copy.deepcopy(base_spec)
    if base_spec.background != "uniform":
        raise ValidationError("tuning experiments need a uniform background")
    if attribute == "weber_contrast":
        if not 0 <= value <= 1:
            raise ValidationError("Weber contrast must lie in [0, 1]")
        bg = spec.background_luminance
        spec.target_luminance = bg - 255.0 * value if bg - 255.0 * value >= 0 else bg + 255.0 * value
        if not 0 <= spec.target_luminance <= 255:
            raise ValidationError(f"contrast {value} is unreachable on background {bg}")
    elif attribute == "velocity":
        spec.trajectory.velocity = float(value)
    elif attribute == "width":
        spec.target_width = int(value)
    else:
        spec.target_height = int(value)
    _centre_crossing(spec, warmup)
    return spec


def path_window(truth, t, spec: StimulusSpec, margin=5, half_width=1.0):
    """Pixels on the target's path: within ``half_width`` px of the line through
    the target centre along its heading, and within half the target extent plus
    ``margin`` along it. These are the neurons the target sweeps across."""
    x, y, theta = truth.x[t], truth.y[t], truth.theta[t]
    reach = max(spec.target_width, spec.target_height) / 2.0 + margin
    x0, x1 = max(int(math.floor(x - reach)), 0), min(int(math.ceil(x + reach)) + 1, spec.width)
    y0, y1 = max(int(math.floor(y - reach)), 0), min(int(math.ceil(y + reach)) + 1, spec.height)
    py, px = np.mgrid[y0:y1, x0:x1]
    along = (px - x) * math.cos(theta) + (py - y) * math.sin(theta)
    orth = -(px - x) * math.sin(theta) + (py - y) * math.cos(theta)
    mask = (np.abs(orth) <= half_width) & (np.abs(along) <= spec.target_width / 2.0 + margin)
    return (slice(y0, y1), slice(x0, x1)), mask


def peak_responses(spec: StimulusSpec, cfg: ModelConfig, margin=5, warmup=None):
    """Largest E and F over directions, steady-state frames and the pixels on
    the target's path (see :func:`path_window`)."""
    if warmup is None:
        warmup = warmup_frames(cfg)
    seq, truth = generate(spec)
    pipe = Pipeline(cfg)
    best_e = best_f = 0.0
    for res in pipe.run(seq):
        t = res.t
        if t < warmup or not truth.visible[t]:
            continue
        (ys, xs), mask = path_window(truth, t, spec, margin)
        if not mask.any():
            continue
        best_e = max(best_e, float(res.e.values[:, ys, xs][:, mask].max()))
        best_f = max(best_f, float(res.f.values[:, ys, xs][:, mask].max()))
    return best_e, best_f


def tuning_experiment(attribute, sample_grid, base_spec: StimulusSpec | None = None, cfg: ModelConfig | None = None):
    if attribute not in TUNING_ATTRIBUTES:
        raise ValidationError(f"unknown tuning attribute {attribute!r}; expected one of {TUNING_ATTRIBUTES}")
    cfg = cfg or ModelConfig()
    base_spec = base_spec or tuning_base_spec()
    warmup = warmup_frames(cfg)
    if base_spec.duration <= warmup:
        raise ValidationError(f"duration {base_spec.duration} must exceed the {warmup}-frame warm-up")
    values = list(sample_grid)
    raw = [peak_responses(tuning_spec(attribute, v, base_spec, warmup), cfg, warmup=warmup) for v in values]
    stmd_raw = np.array([r[0] for r in raw])
    lptc_raw = np.array([r[1] for r in raw])

    def normalize(a):
        peak = a.max() if a.size else 0.0
        return a / peak if peak > 0 else np.zeros_like(a)

    return TuningCurve(attribute, values, normalize(stmd_raw), normalize(lptc_raw), stmd_raw, lptc_raw)


@dataclass
class SceneCandidates:
    """Threshold-free candidates of a whole scene, one entry per frame
    (``None`` during warm-up), for the STMD and the TSDN read-outs."""

    stmd: list
    tsdn: list
    background_direction: list
    pipeline: Pipeline
    warmup: int


def collect_candidates(frames, cfg: ModelConfig | None = None, warmup=None, radius=None) -> SceneCandidates:
    cfg = cfg or ModelConfig()
    if warmup is None:
        warmup = warmup_frames(cfg)
    radius = cfg.peak_radius if radius is None else radius
    pipe = Pipeline(cfg)
    stmd, tsdn, psi = [], [], []
    for res in pipe.run(frames):
        psi.append(res.background_direction)
        if res.t < warmup:
            stmd.append(None)
            tsdn.append(None)
            continue
        stmd.append(find_peaks(res.e.values, radius))
        tsdn.append(tsdn_peaks(res.t_volume, res.e, radius))
    return SceneCandidates(stmd, tsdn, psi, pipe, warmup)


def candidates_to_detections(candidates, directions, beta):
    """Per-frame detection lists at threshold ``beta``."""
    out = []
    for t, peaks in enumerate(candidates):
        if peaks is None:
            out.append([])
            continue
        xs, ys, dirs, vals = peaks
        keep = vals > beta
        out.append(peaks_to_detections((xs[keep], ys[keep], dirs[keep], vals[keep]), directions, t))
    return out
