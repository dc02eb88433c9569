"""Integration of STMD and LPTC outputs in target-selective descending neurons."""

from __future__ import annotations

import numpy as np

from .core import ModelConfig, ResponseVolume, ValidationError
from .stmd import extract_detections, find_peaks, peaks_to_detections


def estimate_background_direction(f: ResponseVolume) -> float:
    """Direction whose LPTC response summed over the whole frame is largest.

    Ties go to the smallest direction index, so an all-zero F yields angle 0.
    """
    totals = f.values.reshape(f.directions.count, -1).sum(axis=1)
    return f.directions.angles[int(np.argmax(totals))]


def integrate(e: ResponseVolume, f: ResponseVolume, psi_star, cfg: ModelConfig) -> ResponseVolume:
    """Subtract ``alpha2 * F(psi)`` from the STMD channel matching psi; others pass."""
    if e.values.shape != f.values.shape or e.directions != f.directions:
        raise ValidationError("E and F must share dimensions and direction set")
    k = e.directions.index_of(psi_star)
    t = e.values.copy()
    if cfg.alpha2 != 0:
        t[k] = e.values[k] - cfg.alpha2 * f.values[k]
    return ResponseVolume(t, e.directions)


def tsdn_peaks(t_volume: ResponseVolume, e: ResponseVolume, radius=3, floor=-np.inf):
    """STMD peaks re-scored with T along the direction the STMD assigned them.

    An object's direction is the STMD's preferred direction at its peak; the
    TSDN keeps it while T in that direction stays above threshold. Returns
    ``(x, y, direction_index, value)`` like :func:`find_peaks`.
    """
    xs, ys, dirs, _ = find_peaks(e.values, radius)
    vals = t_volume.values[dirs, ys, xs]
    keep = vals > floor
    return xs[keep], ys[keep], dirs[keep], vals[keep]


def detect_tsdn(t_volume: ResponseVolume, beta, e: ResponseVolume | None = None, t=0, radius=3):
    """Detections from T.

    With the STMD volume ``e``, candidate objects and their directions come
    from the STMD and survive if T > beta in that direction, so the result is
    always a subset of :func:`detect_stmd`. Without it, T is read out exactly
    like E.
    """
    if e is None:
        return extract_detections(t_volume, beta, t, radius)
    return peaks_to_detections(tsdn_peaks(t_volume, e, radius, beta), t_volume.directions, t)
