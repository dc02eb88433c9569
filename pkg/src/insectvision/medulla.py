"""ON/OFF rectification (Tm3/Tm2) and Gamma-delayed copies (Mi1/Tm1)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .core import ConfigError, ModelConfig
from .kernels import gamma_kernel
from .retina import TemporalFilterBank


def rectify(lmc_frame):
    lmc_frame = np.asarray(lmc_frame, dtype=np.float64)
    return np.maximum(lmc_frame, 0.0), np.maximum(-lmc_frame, 0.0)


@dataclass
class MedullaOutputs:
    tm3: np.ndarray
    tm2: np.ndarray
    delayed_on: dict = field(default_factory=dict)  # (n, tau) -> Mi1
    delayed_off: dict = field(default_factory=dict)  # (n, tau) -> Tm1

    def mi1(self, n, tau):
        try:
            return self.delayed_on[(n, tau)]
        except KeyError:
            raise ConfigError(f"no Mi1 delay channel for (n={n}, tau={tau})") from None

    def tm1(self, n, tau):
        try:
            return self.delayed_off[(n, tau)]
        except KeyError:
            raise ConfigError(f"no Tm1 delay channel for (n={n}, tau={tau})") from None


class DelayLine:
    """One Gamma delay on one channel."""

    def __init__(self, n, tau, truncation_factor=5.0):
        self.kernel = gamma_kernel(n, tau, truncation_factor)
        self._bank = TemporalFilterBank([self.kernel])

    def push(self, frame):
        return self._bank.push(frame)[0]


def delay(stream: Iterable[np.ndarray], n, tau, cfg: ModelConfig) -> Iterator[np.ndarray]:
    line = DelayLine(n, tau, cfg.kernel_truncation_factor)
    for frame in stream:
        yield line.push(frame)


def required_delays(cfg: ModelConfig):
    """(n, tau) pairs needed on the ON and OFF channels by the STMD and LPTC."""
    on = {(cfg.n3, cfg.tau3), (cfg.n6, cfg.tau6)}
    off = {(cfg.n4, cfg.tau4), (cfg.n5, cfg.tau5), (cfg.n6, cfg.tau6)}
    return sorted(on), sorted(off)


class Medulla:
    """Streaming medulla stage.

    All delays of one channel share a single ring buffer, and both detectors
    read the same cached outputs.
    """

    def __init__(self, cfg: ModelConfig, on_pairs=None, off_pairs=None):
        default_on, default_off = required_delays(cfg)
        self.on_pairs = list(default_on if on_pairs is None else on_pairs)
        self.off_pairs = list(default_off if off_pairs is None else off_pairs)
        f = cfg.kernel_truncation_factor
        self._on = TemporalFilterBank([gamma_kernel(n, tau, f) for n, tau in self.on_pairs])
        self._off = TemporalFilterBank([gamma_kernel(n, tau, f) for n, tau in self.off_pairs])

    @property
    def history_frames(self):
        return self._on.length + self._off.length

    def push(self, lmc_frame) -> MedullaOutputs:
        tm3, tm2 = rectify(lmc_frame)
        on = self._on.push(tm3)
        off = self._off.push(tm2)
        return MedullaOutputs(
            tm3=tm3,
            tm2=tm2,
            delayed_on=dict(zip(self.on_pairs, on)),
            delayed_off=dict(zip(self.off_pairs, off)),
        )
