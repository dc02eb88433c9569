"""Frame-at-a-time execution of the full model."""

from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .core import ModelConfig, ResponseVolume, as_frame
from .lptc import lptc_correlate
from .medulla import Medulla, MedullaOutputs
from .retina import LMC, ommatidia
from .stmd import STMD
from .tsdn import estimate_background_direction, integrate

STAGES = ("ommatidia", "lmc", "medulla", "stmd", "lptc", "tsdn")


@dataclass
class FrameResult:
    t: int
    d: ResponseVolume
    e: ResponseVolume
    f: ResponseVolume
    t_volume: ResponseVolume
    background_direction: float
    lmc: np.ndarray
    medulla: MedullaOutputs


def warmup_frames(cfg: ModelConfig) -> int:
    """Frames until the zero-history start-up transient has left every stage.

    The LMC and the longest medulla delay are cascaded, so their lengths add.
    """
    pipe = Pipeline(cfg)
    return pipe.lmc.length + max(pipe.medulla._on.length, pipe.medulla._off.length)


class Pipeline:
    def __init__(self, cfg: ModelConfig | None = None):
        self.cfg = cfg or ModelConfig()
        self.directions = self.cfg.directions
        self.lmc = LMC(self.cfg)
        self.medulla = Medulla(self.cfg)
        self.stmd = STMD(self.cfg)
        self.timing = defaultdict(float)
        self.frames_processed = 0

    @property
    def resident_frames(self):
        """Frames held in ring buffers; independent of sequence length."""
        return self.lmc.length + self.medulla.history_frames

    def push(self, frame) -> FrameResult:
        clock = time.perf_counter
        t0 = clock()
        p = ommatidia(as_frame(frame), self.cfg)
        t1 = clock()
        lmc_out = self.lmc.push(p)
        t2 = clock()
        med = self.medulla.push(lmc_out)
        t3 = clock()
        d, e = self.stmd.push(med)
        t4 = clock()
        f = lptc_correlate(med, self.directions, self.cfg)
        t5 = clock()
        psi = estimate_background_direction(f)
        t_vol = integrate(e, f, psi, self.cfg)
        t6 = clock()
        for name, dt in zip(STAGES, (t1 - t0, t2 - t1, t3 - t2, t4 - t3, t5 - t4, t6 - t5)):
            self.timing[name] += dt
        result = FrameResult(self.frames_processed, d, e, f, t_vol, psi, lmc_out, med)
        self.frames_processed += 1
        return result

    def run(self, frames: Iterable[np.ndarray]) -> Iterator[FrameResult]:
        for frame in frames:
            yield self.push(frame)

    def frames_per_second(self):
        return {
            name: (self.frames_processed / self.timing[name] if self.timing[name] > 0 else float("inf"))
            for name in STAGES
        }
