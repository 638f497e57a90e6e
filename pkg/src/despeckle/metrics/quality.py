"""Image-quality measures: PSNR, SSIM, MSR, CNR.

Definitions used throughout (stated once, applied consistently):

* standard deviations and variances are population statistics;
* MSR = mean(signal) / std(signal);
* CNR = (mean(signal) - mean(background)) / sqrt(var(signal) + var(background));
* zero-MSE and zero-std cases return an infinity sentinel rather than
  raising, so aggregation code can exclude them explicitly.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import convolve2d

from ..data import BScan

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DATA_RANGE = 1.0


def psnr(a: BScan, b: BScan) -> float:
    """10*log10(1/MSE) with data range 1.0; identical images give +inf."""
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(f"shape mismatch: {a.pixels.shape} vs {b.pixels.shape}")
    mse = float(np.mean((a.pixels - b.pixels) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(DATA_RANGE**2 / mse)


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(a: BScan, b: BScan) -> float:
    """Mean structural similarity with an 11x11 Gaussian window (sigma 1.5).

    Local statistics are computed on fully valid windows only, so inputs
    must be at least the window size in each dimension.
    """
    x = a.pixels
    y = b.pixels
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(f"images must be at least {SSIM_WINDOW}px per side for SSIM")
    win = _gaussian_window()
    mu_x = convolve2d(x, win, mode="valid")
    mu_y = convolve2d(y, win, mode="valid")
    var_x = convolve2d(x * x, win, mode="valid") - mu_x**2
    var_y = convolve2d(y * y, win, mode="valid") - mu_y**2
    cov = convolve2d(x * y, win, mode="valid") - mu_x * mu_y
    c1 = (SSIM_K1 * DATA_RANGE) ** 2
    c2 = (SSIM_K2 * DATA_RANGE) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def msr(scan: BScan, signal: np.ndarray) -> float:
    """Mean-to-standard-deviation ratio over the signal mask."""
    values = scan.pixels[np.asarray(signal, dtype=bool)]
    if values.size == 0:
        raise ValueError("signal mask is empty")
    sd = float(values.std())
    if sd == 0.0:
        return math.inf
    return float(values.mean()) / sd


def cnr(scan: BScan, signal: np.ndarray, background: np.ndarray) -> float:
    """Contrast-to-noise ratio between signal and background masks."""
    s = scan.pixels[np.asarray(signal, dtype=bool)]
    b = scan.pixels[np.asarray(background, dtype=bool)]
    if s.size == 0 or b.size == 0:
        raise ValueError("signal and background masks must both be non-empty")
    num = float(s.mean() - b.mean())
    den = math.sqrt(float(s.var()) + float(b.var()))
    if den == 0.0:
        if num == 0.0:
            return 0.0
        return math.copysign(math.inf, num)
    return num / den
