"""Independent reference implementations and scene builders shared by the tests."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from insectvision import ModelConfig
from insectvision.evaluation import path_window, tuning_base_spec, tuning_spec
from insectvision.pipeline import Pipeline, warmup_frames
from insectvision.stimulus import StimulusSpec, Trajectory, generate
from insectvision.stmd import find_peaks
from insectvision.tsdn import tsdn_peaks


def brute_correlate_clamped(frame, kernel):
    """out[y, x] = sum k[i, j] * frame[clamp(y + i - r), clamp(x + j - r)], nested loops."""
    h, w = frame.shape
    r = kernel.shape[0] // 2
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(kernel.shape[0]):
                for j in range(kernel.shape[1]):
                    yy = min(max(y + i - r, 0), h - 1)
                    xx = min(max(x + j - r, 0), w - 1)
                    acc += kernel[i, j] * frame[yy, xx]
            out[y, x] = acc
    return out


def brute_convolve_clamped(frame, kernel):
    """True convolution (flipped kernel) with clamp-to-edge borders, nested loops."""
    return brute_correlate_clamped(frame, kernel[::-1, ::-1])


def brute_causal(signal, kernel):
    """y[t] = sum_k kernel[k] * x[t - k] for each pixel, explicit loops over time."""
    out = np.zeros_like(signal, dtype=np.float64)
    for t in range(signal.shape[0]):
        for k in range(min(len(kernel), t + 1)):
            out[t] += kernel[k] * signal[t - k]
    return out


def gamma_oracle(n, tau, length):
    """Gamma kernel as the Gamma(n + 1, tau / n) probability density."""
    return stats.gamma.pdf(np.arange(length, dtype=np.float64), a=n + 1, scale=tau / n)


def gaussian_oracle(sigma, radius):
    out = np.empty((2 * radius + 1, 2 * radius + 1))
    for i in range(2 * radius + 1):
        for j in range(2 * radius + 1):
            dy, dx = i - radius, j - radius
            out[i, j] = math.exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) / (2 * math.pi * sigma * sigma)
    return out


def rightward_target_spec(velocity=250.0, size=100, duration=500):
    """Clutter-free scene: 5 x 5 black target on white moving along +x."""
    base = tuning_base_spec(size, size, duration)
    base.trajectory = Trajectory("linear", velocity=velocity, direction=0.0)
    return tuning_spec("velocity", velocity, base, warmup_frames(ModelConfig()))


def target_direction_scores(spec, cfg=None):
    """Per direction: E summed over steady-state frames and the target's path,
    the peak E there, and E summed over whole frames."""
    cfg = cfg or ModelConfig()
    warm = warmup_frames(cfg)
    seq, truth = generate(spec)
    path_sum = np.zeros(cfg.direction_count)
    path_max = np.full(cfg.direction_count, -np.inf)
    frame_sum = np.zeros(cfg.direction_count)
    for res in Pipeline(cfg).run(seq):
        if res.t < warm or not truth.visible[res.t]:
            continue
        (ys, xs), mask = path_window(truth, res.t, spec)
        on_path = res.e.values[:, ys, xs][:, mask]
        path_sum += on_path.sum(axis=1)
        path_max = np.maximum(path_max, on_path.max(axis=1))
        frame_sum += res.e.values.reshape(cfg.direction_count, -1).sum(axis=1)
    return path_sum, path_max, frame_sum


def half_scale_spec(seed, duration=1000):
    """Cluttered 250 x 125 scene with the background moving right."""
    return StimulusSpec(
        width=250,
        height=125,
        duration=duration,
        seed=seed,
        background="procedural",
        background_velocity=250.0,
        trajectory=Trajectory("paper_sinusoid", scale=0.5),
    )


def mirror_channel_index(k, count):
    """Channel of direction pi - theta_k in an evenly spaced set."""
    return (count // 2 - k) % count


def random_sequence(rng, frames, height, width):
    return rng.uniform(0.0, 255.0, size=(frames, height, width))


def check_structural_invariants(seq, cfg=None, betas=(0.0, 10.0, 100.0, 1e3, 1e4)):
    """Run the pipeline and return the worst violation of each invariant."""
    cfg = cfg or ModelConfig()
    out = {"min_d": np.inf, "min_f": np.inf, "max_tm3_tm2": 0.0, "max_t_minus_e_off_psi": 0.0, "monotone": True}
    for res in Pipeline(cfg).run(seq):
        out["min_d"] = min(out["min_d"], float(res.d.values.min()))
        out["min_f"] = min(out["min_f"], float(res.f.values.min()))
        out["max_tm3_tm2"] = max(out["max_tm3_tm2"], float(np.abs(res.medulla.tm3 * res.medulla.tm2).max()))
        k = res.e.directions.index_of(res.background_direction)
        off = np.ones(cfg.direction_count, dtype=bool)
        off[k] = False
        diff = np.abs(res.t_volume.values[off] - res.e.values[off]).max()
        out["max_t_minus_e_off_psi"] = max(out["max_t_minus_e_off_psi"], float(diff))
        for count_at in (
            lambda b: len(find_peaks(res.e.values, cfg.peak_radius, b)[0]),
            lambda b: len(tsdn_peaks(res.t_volume, res.e, cfg.peak_radius, b)[0]),
        ):
            counts = [count_at(b) for b in betas]
            out["monotone"] &= all(a >= b for a, b in zip(counts, counts[1:]))
    return out


def mirror_symmetry_error(seq, cfg=None):
    """Max |E(theta)(x) - E'(pi - theta)(W - 1 - x)| for the
    horizontally mirrored input, and the same for D and F."""
    cfg = cfg or ModelConfig()
    n = cfg.direction_count
    perm = [mirror_channel_index(k, n) for k in range(n)]
    worst = 0.0
    for a, b in zip(Pipeline(cfg).run(seq), Pipeline(cfg).run(seq[:, :, ::-1])):
        for va, vb in ((a.d.values, b.d.values), (a.e.values, b.e.values), (a.f.values, b.f.values)):
            mirrored = vb[perm][:, :, ::-1]
            worst = max(worst, float(np.abs(va - mirrored).max()))
    return worst
