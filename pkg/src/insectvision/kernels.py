"""Filter kernels: spatial Gaussians, Gamma delays, the LMC band-pass and the
lateral-inhibition kernel.

Spatial kernels are square arrays of side ``2 * radius + 1`` indexed as
``[dy + radius, dx + radius]``. Temporal kernels are 1-D arrays of causal taps,
``taps[k]`` being the weight at lag ``k`` frames.
"""

from __future__ import annotations

import math

import numpy as np

from .core import ValidationError


def gaussian_value(dx, dy, sigma):
    """Isotropic 2-D Gaussian density with unit integral."""
    return np.exp(-(np.square(dx) + np.square(dy)) / (2.0 * sigma**2)) / (2.0 * math.pi * sigma**2)


def kernel_radius(sigma, radius_factor):
    return int(math.ceil(radius_factor * sigma))


def gaussian1d(sigma, radius_factor=3.0):
    """Unit-sum 1-D Gaussian; its outer product with itself is ``gaussian2d``."""
    if sigma <= 0:
        raise ValidationError(f"sigma must be > 0, got {sigma!r}")
    r = kernel_radius(sigma, radius_factor)
    x = np.arange(-r, r + 1, dtype=np.float64)
    w = np.exp(-(x**2) / (2.0 * sigma**2))
    return w / w.sum()


def gaussian2d(sigma, radius_factor=3.0, normalize=True):
    if sigma <= 0:
        raise ValidationError(f"sigma must be > 0, got {sigma!r}")
    if radius_factor < 2:
        raise ValidationError(f"radius_factor must be >= 2, got {radius_factor!r}")
    r = kernel_radius(sigma, radius_factor)
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1].astype(np.float64)
    w = gaussian_value(dx, dy, sigma)
    if normalize:
        w = w / w.sum()
    return w


def gamma_kernel(n, tau, truncation_factor=5.0):
    """Raw samples of the Gamma kernel at integer lags; not renormalized.

    The continuous kernel integrates to one and peaks at lag ``tau``.
    """
    if int(n) != n or n < 1:
        raise ValidationError(f"Gamma order n must be an integer >= 1, got {n!r}")
    if tau <= 0:
        raise ValidationError(f"Gamma time constant tau must be > 0, got {tau!r}")
    if truncation_factor <= 0:
        raise ValidationError("truncation_factor must be > 0")
    n = int(n)
    length = max(1, int(math.ceil(truncation_factor * tau)))
    t = np.arange(length, dtype=np.float64)
    # log-space keeps (n t)^n finite for large orders
    with np.errstate(divide="ignore"):
        log_taps = n * np.log(n * t) - n * t / tau - math.lgamma(n) - (n + 1) * math.log(tau)
    return np.exp(log_taps)


def bandpass_kernel(n1, tau1, n2, tau2, truncation_factor=5.0, balance=True):
    """Difference of two Gamma kernels, zero-padded to the longer length.

    With ``balance`` each Gamma kernel is scaled to unit tap sum first, so the
    discrete filter has exactly zero DC gain (the continuous one does too;
    truncation otherwise leaves a residual of a few 1e-3).
    """
    fast = gamma_kernel(n1, tau1, truncation_factor)
    slow = gamma_kernel(n2, tau2, truncation_factor)
    if balance:
        fast = fast / fast.sum()
        slow = slow / slow.sum()
    taps = np.zeros(max(len(fast), len(slow)))
    taps[: len(fast)] += fast
    taps[: len(slow)] -= slow
    return taps


def inhibition_kernel(sigma2, sigma3, e, rho, A, B, radius_factor=3.0):
    """A * [g]+ + B * [g]- with g = G(sigma2) - e * G(sigma3) - rho."""
    if sigma2 <= 0:
        raise ValidationError(f"sigma2 must be > 0, got {sigma2!r}")
    if sigma3 <= sigma2:
        raise ValidationError(f"sigma3 ({sigma3!r}) must exceed sigma2 ({sigma2!r})")
    r = kernel_radius(sigma3, radius_factor)
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1].astype(np.float64)
    g = gaussian_value(dx, dy, sigma2) - e * gaussian_value(dx, dy, sigma3) - rho
    return A * np.maximum(g, 0.0) + B * np.minimum(g, 0.0)


def ommatidia_kernel(cfg):
    return gaussian2d(cfg.sigma1, cfg.spatial_kernel_radius_factor)


def lmc_kernel(cfg):
    return bandpass_kernel(cfg.n1, cfg.tau1, cfg.n2, cfg.tau2, cfg.kernel_truncation_factor)


def cfg_inhibition_kernel(cfg):
    return inhibition_kernel(
        cfg.sigma2, cfg.sigma3, cfg.e, cfg.rho, cfg.A, cfg.B, cfg.spatial_kernel_radius_factor
    )
