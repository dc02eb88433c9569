"""Ommatidium blur and LMC band-pass, plus the ring-buffered temporal filter
shared by every causal convolution in the pipeline."""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import ndimage

from .core import ModelConfig, StreamError, as_frame
from .kernels import gaussian1d, lmc_kernel


def ommatidia(frame, cfg: ModelConfig) -> np.ndarray:
    """Gaussian blur with clamp-to-edge borders, done as two 1-D passes."""
    frame = as_frame(frame)
    w = gaussian1d(cfg.sigma1, cfg.spatial_kernel_radius_factor)
    out = ndimage.correlate1d(frame, w, axis=0, mode="nearest")
    return ndimage.correlate1d(out, w, axis=1, mode="nearest")


class TemporalFilterBank:
    """Causal FIR filters sharing one ring buffer of past input frames.

    ``push(frame)`` returns one output frame per kernel:
    ``out[j] = sum_k kernels[j][k] * input[t - k]`` with zero history before
    the first frame. Only ``max(len(kernel))`` frames are ever held.
    """

    def __init__(self, kernels: Sequence[np.ndarray]):
        if not kernels:
            raise ValueError("at least one kernel is required")
        self.length = max(len(k) for k in kernels)
        taps = np.zeros((len(kernels), self.length))
        for j, k in enumerate(kernels):
            taps[j, : len(k)] = k
        self.taps = taps
        self.shape = None
        self._ring = None
        self._head = -1  # slot of the most recent frame
        self.frames_seen = 0

    def reset(self):
        self.shape = None
        self._ring = None
        self._head = -1
        self.frames_seen = 0

    def push(self, frame: np.ndarray) -> np.ndarray:
        frame = np.asarray(frame, dtype=np.float64)
        if self._ring is None:
            self.shape = frame.shape
            self._ring = np.zeros((self.length,) + frame.shape)
        elif frame.shape != self.shape:
            raise StreamError(
                f"frame {self.frames_seen} has shape {frame.shape}, stream started with {self.shape}"
            )
        self._head = (self._head + 1) % self.length
        self._ring[self._head] = frame
        self.frames_seen += 1
        # weight for ring slot s is taps[(head - s) mod L]
        lag = (self._head - np.arange(self.length)) % self.length
        weights = self.taps[:, lag]
        flat = self._ring.reshape(self.length, -1)
        return (weights @ flat).reshape((len(self.taps),) + self.shape)


def causal_convolve(signal: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Whole-signal causal convolution along axis 0 (reference for the ring buffer)."""
    signal = np.asarray(signal, dtype=np.float64)
    out = np.zeros_like(signal)
    for k, tap in enumerate(kernel):
        if k >= len(signal):
            break
        if k == 0:
            out += tap * signal
        else:
            out[k:] += tap * signal[:-k]
    return out


class LMC:
    """Streaming LMC stage: per-pixel band-pass of the ommatidium output."""

    def __init__(self, cfg: ModelConfig):
        self.kernel = lmc_kernel(cfg)
        self._bank = TemporalFilterBank([self.kernel])

    def push(self, frame):
        return self._bank.push(frame)[0]

    @property
    def length(self):
        return self._bank.length


def lmc(stream: Iterable[np.ndarray], cfg: ModelConfig) -> Iterator[np.ndarray]:
    stage = LMC(cfg)
    for frame in stream:
        yield stage.push(frame)
