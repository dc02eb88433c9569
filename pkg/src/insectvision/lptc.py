"""Wide-field motion: two-quadrant detector over the medulla channels."""

from __future__ import annotations

import numpy as np

from .core import DirectionSet, ModelConfig, ResponseVolume
from .medulla import MedullaOutputs
from .stmd import extract_detections, partner_offset, sample_partner


def lptc_correlate(medulla: MedullaOutputs, directions: DirectionSet, cfg: ModelConfig) -> ResponseVolume:
    """ON x delayed-ON plus OFF x delayed-OFF at the upstream partner."""
    on_delayed = medulla.mi1(cfg.n6, cfg.tau6)
    off_delayed = medulla.tm1(cfg.n6, cfg.tau6)
    out = np.empty((directions.count,) + medulla.tm3.shape)
    for i, psi in enumerate(directions.angles):
        dx, dy = partner_offset(psi, cfg.alpha1)
        out[i] = medulla.tm3 * sample_partner(on_delayed, dx, dy) + medulla.tm2 * sample_partner(
            off_delayed, dx, dy
        )
    return ResponseVolume(out, directions)


def detect_background(f: ResponseVolume, gamma, t=0, radius=3):
    return extract_detections(f, gamma, t, radius)
