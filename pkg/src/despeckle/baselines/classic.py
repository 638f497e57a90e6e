"""Window-based classical denoisers: median, bilateral, non-local means.

All three use reflect boundary handling and are convex combinations of
input intensities, so outputs stay within the input's intensity range.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage
from scipy.signal import convolve2d

from ..data import BScan
from ..errors import ConfigError


def _require_odd(name: str, value: int) -> None:
    if value < 1 or value % 2 == 0:
        raise ConfigError(f"{name} must be an odd integer >= 1, got {value}")


def _require_positive(name: str, value: float) -> None:
    if not value > 0:
        raise ConfigError(f"{name} must be > 0, got {value}")


def median_denoise(scan: BScan, window: int = 3) -> BScan:
    """Median over a square window."""
    _require_odd("window", window)
    if window == 1:
        return scan
    out = ndimage.median_filter(scan.pixels, size=window, mode="mirror")
    return scan.with_pixels(out)


def bilateral_denoise(scan: BScan, sigma_spatial: float = 1.5, sigma_range: float = 0.15) -> BScan:
    """Gaussian weighting in space times Gaussian weighting in intensity."""
    _require_positive("sigma_spatial", sigma_spatial)
    _require_positive("sigma_range", sigma_range)
    radius = int(3.0 * sigma_spatial + 0.5)
    img = scan.pixels
    h, w = img.shape
    padded = np.pad(img, radius, mode="reflect")
    num = np.zeros_like(img)
    den = np.zeros_like(img)
    inv_2ss = 1.0 / (2.0 * sigma_spatial**2)
    inv_2sr = 1.0 / (2.0 * sigma_range**2)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            w_spatial = math.exp(-(dy * dy + dx * dx) * inv_2ss)
            neighbor = padded[radius + dy : radius + dy + h, radius + dx : radius + dx + w]
            weight = w_spatial * np.exp(-((neighbor - img) ** 2) * inv_2sr)
            num += weight * neighbor
            den += weight
    # convex combination; clip only guards float round-off at the range ends
    return scan.with_pixels(np.clip(num / den, 0.0, 1.0))


def _patch_kernel(patch: int) -> np.ndarray:
    half = (patch - 1) / 2.0
    coords = np.arange(patch) - half
    sigma = max(patch / 4.0, 0.5)
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def nlmeans_denoise(scan: BScan, patch: int = 5, search: int = 13, h: float = 0.1) -> BScan:
    """Weighted average over the search window; weights fall off with the
    Gaussian-kernelized squared distance between the two pixels' patches."""
    _require_odd("patch", patch)
    _require_odd("search", search)
    _require_positive("h", h)
    if patch > search:
        raise ConfigError(f"patch ({patch}) must not exceed search ({search})")
    img = scan.pixels
    hh, ww = img.shape
    pr = patch // 2
    sr = search // 2
    pad = pr + sr
    ext = np.pad(img, pad, mode="reflect")
    kernel = _patch_kernel(patch)
    inv_h2 = 1.0 / (h * h)
    num = np.zeros_like(img)
    den = np.zeros_like(img)
    base = ext[sr : sr + hh + 2 * pr, sr : sr + ww + 2 * pr]
    for dy in range(-sr, sr + 1):
        for dx in range(-sr, sr + 1):
            offset = ext[
                sr + dy : sr + dy + hh + 2 * pr,
                sr + dx : sr + dx + ww + 2 * pr,
            ]
            dist2 = convolve2d((base - offset) ** 2, kernel, mode="valid")
            weight = np.exp(-dist2 * inv_h2)
            values = ext[pad + dy : pad + dy + hh, pad + dx : pad + dx + ww]
            num += weight * values
            den += weight
    return scan.with_pixels(np.clip(num / den, 0.0, 1.0))
