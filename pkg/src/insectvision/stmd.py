"""Directionally selective small target motion detector.

Correlates the medulla channels at a pixel with delayed channels at a partner
pixel ``alpha1`` away, applies lateral inhibition per direction and extracts
supra-threshold detections.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage, signal

from .core import Detection, DirectionSet, ModelConfig, ResponseVolume
from .kernels import cfg_inhibition_kernel
from .medulla import MedullaOutputs


def partner_offset(theta, alpha1):
    """Integer (dx, dy) from a pixel to its correlation partner.

    The partner sits upstream of the preferred direction ``theta``, so a
    feature moving along ``theta`` crosses the partner first.
    """
    return int(np.rint(-alpha1 * math.cos(theta))), int(np.rint(-alpha1 * math.sin(theta)))


def sample_partner(channel, dx, dy):
    """out[y, x] = channel[y + dy, x + dx]; partners outside the frame give 0."""
    h, w = channel.shape
    out = np.zeros_like(channel)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    src_y = slice(max(dy, 0), h + min(dy, 0))
    dst_y = slice(max(-dy, 0), h + min(-dy, 0))
    src_x = slice(max(dx, 0), w + min(dx, 0))
    dst_x = slice(max(-dx, 0), w + min(-dx, 0))
    out[dst_y, dst_x] = channel[src_y, src_x]
    return out


def correlate(medulla: MedullaOutputs, directions: DirectionSet, cfg: ModelConfig) -> ResponseVolume:
    tm3 = medulla.tm3
    off_near = medulla.tm1(cfg.n4, cfg.tau4)
    on_partner = medulla.mi1(cfg.n3, cfg.tau3)
    off_partner = medulla.tm1(cfg.n5, cfg.tau5)
    out = np.empty((directions.count,) + tm3.shape)
    for i, theta in enumerate(directions.angles):
        dx, dy = partner_offset(theta, cfg.alpha1)
        out[i] = (
            tm3
            * (off_near + sample_partner(on_partner, dx, dy))
            * sample_partner(off_partner, dx, dy)
        )
    return ResponseVolume(out, directions)


def convolve_clamped(stack, kernel):
    """Per-channel 2-D convolution of (C, H, W) with clamp-to-edge borders."""
    r = kernel.shape[0] // 2
    padded = np.pad(stack, ((0, 0), (r, r), (r, r)), mode="edge")
    return signal.fftconvolve(padded, kernel[None], mode="valid", axes=(1, 2))


def inhibit(d: ResponseVolume, cfg: ModelConfig, kernel=None) -> ResponseVolume:
    if kernel is None:
        kernel = cfg_inhibition_kernel(cfg)
    return ResponseVolume(convolve_clamped(d.values, kernel), d.directions)


def find_peaks(values, radius=3, floor=-np.inf):
    """Local maxima of the direction-wise maximum of a (C, H, W) stack.

    A pixel is a peak when no pixel in its (2r+1)^2 window is larger; among
    equal-valued neighbours the first in raster order wins. Peaks do not depend
    on any threshold, so thresholding them is monotone.

    Returns arrays ``(x, y, direction_index, value)`` for peaks with value > floor.
    """
    best = values.max(axis=0)
    best_dir = values.argmax(axis=0)
    size = 2 * radius + 1
    window_max = ndimage.maximum_filter(best, size=size, mode="constant", cval=-np.inf)
    ring = np.ones((size, size), dtype=bool)
    ring[radius, radius] = False
    others_max = ndimage.maximum_filter(best, footprint=ring, mode="constant", cval=-np.inf)
    is_peak = (best == window_max) & (best > floor)
    strict = is_peak & (best > others_max)
    ties = np.argwhere(is_peak & ~strict)
    keep = strict.copy()
    if len(ties):
        for y, x in ties:  # argwhere is raster ordered
            y0, y1 = max(y - radius, 0), y + radius + 1
            x0, x1 = max(x - radius, 0), x + radius + 1
            if not keep[y0:y1, x0:x1].any():
                keep[y, x] = True
    ys, xs = np.nonzero(keep)
    return xs, ys, best_dir[ys, xs], best[ys, xs]


def peaks_to_detections(peaks, directions: DirectionSet, t=0):
    xs, ys, dirs, vals = peaks
    return [
        Detection(t=int(t), x=int(x), y=int(y), direction=directions.angles[int(d)], response=float(v))
        for x, y, d, v in zip(xs, ys, dirs, vals)
    ]


def extract_detections(volume: ResponseVolume, threshold, t=0, radius=3):
    return peaks_to_detections(find_peaks(volume.values, radius, threshold), volume.directions, t)


def detect_stmd(e: ResponseVolume, beta, t=0, radius=3):
    return extract_detections(e, beta, t, radius)


class STMD:
    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        self.directions = cfg.directions
        self.kernel = cfg_inhibition_kernel(cfg)

    def push(self, medulla: MedullaOutputs):
        d = correlate(medulla, self.directions, self.cfg)
        return d, inhibit(d, self.cfg, self.kernel)
