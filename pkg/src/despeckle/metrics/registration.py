"""Translation estimation by phase correlation and shift application.

Convention: ``register_translation(ref, moving)`` returns the displacement
of ``moving`` relative to ``ref`` (positive dy moves content down, positive
dx right). Aligning ``moving`` onto ``ref`` therefore applies the negated
shift; :func:`align_to` does both steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.signal.windows import hann

from ..data import BScan

_EPS = 1e-12


@dataclass(frozen=True)
class Shift:
    dy: float
    dx: float
    peak_confidence: float

    def negated(self) -> "Shift":
        return Shift(-self.dy, -self.dx, self.peak_confidence)


def _wrap(index: int, size: int) -> float:
    return index - size if index > size // 2 else index


def _quadratic_peak_offset(m1: float, c: float, p1: float) -> float:
    """Sub-sample offset of a parabola through three samples around a peak."""
    denom = m1 + p1 - 2.0 * c
    if abs(denom) < _EPS:
        return 0.0
    offset = 0.5 * (m1 - p1) / denom
    return float(np.clip(offset, -0.5, 0.5))


def _taper(img: np.ndarray) -> np.ndarray:
    # Hann taper: otherwise the periodic-extension seam at the frame edge is
    # shared by both images and votes for a spurious zero shift.
    window = np.outer(hann(img.shape[0]), hann(img.shape[1]))
    return (img - img.mean()) * window


def register_translation(ref: BScan, moving: BScan, subpixel: bool = False) -> Shift:
    """Phase correlation: peak of the inverse normalized cross-power spectrum.

    Degenerate (constant) inputs return shift (0, 0) with confidence 0.
    """
    a = ref.pixels
    b = moving.pixels
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.std() < _EPS or b.std() < _EPS:
        return Shift(0.0, 0.0, 0.0)
    fa = np.fft.fft2(_taper(a))
    fb = np.fft.fft2(_taper(b))
    cross = fb * np.conj(fa)
    cross /= np.maximum(np.abs(cross), _EPS)
    corr = np.fft.ifft2(cross).real
    h, w = corr.shape
    py, px = np.unravel_index(int(np.argmax(corr)), corr.shape)
    peak = corr[py, px]
    # confidence: peak against the strongest response outside its 3x3 patch
    masked = corr.copy()
    ys = (np.arange(py - 1, py + 2)) % h
    xs = (np.arange(px - 1, px + 2)) % w
    masked[np.ix_(ys, xs)] = -np.inf
    runner_up = masked.max()
    confidence = float(peak / max(runner_up, _EPS)) if runner_up > 0 else float("inf")
    dy = float(_wrap(py, h))
    dx = float(_wrap(px, w))
    if subpixel:
        dy += _quadratic_peak_offset(corr[(py - 1) % h, px], peak, corr[(py + 1) % h, px])
        dx += _quadratic_peak_offset(corr[py, (px - 1) % w], peak, corr[py, (px + 1) % w])
    return Shift(dy, dx, confidence)


def apply_shift(scan: BScan, shift: Shift) -> BScan:
    """Translate by (dy, dx) with reflect fill; bilinear for fractional shifts."""
    if shift.dy == 0.0 and shift.dx == 0.0:
        return scan
    out = ndimage.shift(scan.pixels, (shift.dy, shift.dx), order=1, mode="mirror")
    return scan.with_pixels(np.clip(out, 0.0, 1.0))


def overlap_slices(shape: tuple[int, int], applied: Shift) -> tuple[slice, slice]:
    """Region unaffected by boundary fill after ``apply_shift(img, applied)``.

    Shifting content down by dy leaves the top ceil(dy) rows filled, and
    symmetrically for the other directions.
    """
    h, w = shape
    top = int(np.ceil(max(applied.dy, 0.0)))
    bottom = int(np.ceil(max(-applied.dy, 0.0)))
    left = int(np.ceil(max(applied.dx, 0.0)))
    right = int(np.ceil(max(-applied.dx, 0.0)))
    return slice(top, h - bottom), slice(left, w - right)


def align_to(ref: BScan, moving: BScan, subpixel: bool = True) -> tuple[BScan, BScan, Shift]:
    """Register ``moving`` onto ``ref`` and crop both to the valid overlap."""
    shift = register_translation(ref, moving, subpixel=subpixel)
    aligned = apply_shift(moving, shift.negated())
    rows, cols = overlap_slices(aligned.pixels.shape, shift.negated())
    ref_c = ref.with_pixels(ref.pixels[rows, cols])
    mov_c = aligned.with_pixels(aligned.pixels[rows, cols])
    return ref_c, mov_c, shift
