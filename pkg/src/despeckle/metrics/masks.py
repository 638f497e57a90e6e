"""Signal/background mask extraction via iso-contours.

Pipeline: smooth the image, trace iso-contours at the retina level and fill
the largest closed one to get the retina region; the background is its
complement eroded by a safety margin; a second contour pass at a higher
level inside the retina yields the signal mask. Levels default to automatic
rules (Otsu for the retina, 75th in-retina percentile for the signal) so the
pipeline is dataset-independent; both can be overridden.

Smoothing treats the outside of the image as black (constant 0), matching
the dark background of b-scans and keeping masks stable under black-border
padding. Contours are traced on a 1-px zero-padded copy so regions touching
the image edge (retinal layers usually span the full width) still produce
closed contours.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import binary_erosion, gaussian_filter
from skimage.draw import polygon
from skimage.filters import threshold_otsu
from skimage.measure import find_contours

from ..data import BScan
from ..errors import MaskExtractionError

SMOOTH_SIGMA = 3.0
BACKGROUND_MARGIN_PX = 3
SIGNAL_PERCENTILE = 75.0
_CONTOUR_PAD = 1


@dataclass(frozen=True)
class MaskPair:
    signal: np.ndarray
    background: np.ndarray
    level_retina: float
    level_signal: float


def _closed_contours(image: np.ndarray, level: float) -> list[np.ndarray]:
    return [c for c in find_contours(image, level) if np.array_equal(c[0], c[-1])]


def _fill(contour: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    rr, cc = polygon(contour[:, 0], contour[:, 1], shape)
    mask[rr, cc] = True
    return mask


def _filled_regions(smoothed: np.ndarray, level: float) -> list[np.ndarray]:
    """Filled interiors of all closed iso-contours, traced on a zero-padded
    copy so edge-touching regions close."""
    p = _CONTOUR_PAD
    field = np.pad(smoothed, p, mode="constant")
    return [
        _fill(contour, field.shape)[p:-p, p:-p]
        for contour in _closed_contours(field, level)
    ]


def extract_masks(
    scan: BScan,
    level_retina: float | None = None,
    level_signal: float | None = None,
) -> MaskPair:
    """Disjoint signal and background masks for CNR/MSR.

    Raises MaskExtractionError when no closed retina contour exists or
    either mask comes out empty; callers exclude such images from
    aggregates.
    """
    smoothed = gaussian_filter(scan.pixels, sigma=SMOOTH_SIGMA, mode="constant", cval=0.0)
    if level_retina is None:
        try:
            level_retina = float(threshold_otsu(smoothed))
        except ValueError as exc:
            raise MaskExtractionError(f"cannot pick a retina level: {exc}") from exc
    regions = _filled_regions(smoothed, level_retina)
    if not regions:
        raise MaskExtractionError(f"no closed contour at retina level {level_retina:.4g}")
    retina = max(regions, key=np.count_nonzero)
    if not retina.any():
        raise MaskExtractionError("retina contour encloses no pixels")

    background = binary_erosion(
        ~retina, iterations=BACKGROUND_MARGIN_PX, border_value=1
    )

    if level_signal is None:
        level_signal = float(np.percentile(smoothed[retina], SIGNAL_PERCENTILE))
    signal = np.zeros_like(retina)
    for region in _filled_regions(smoothed, level_signal):
        signal |= region
    signal &= retina

    if not signal.any() or not background.any():
        raise MaskExtractionError("empty signal or background mask")
    return MaskPair(
        signal=signal,
        background=background,
        level_retina=float(level_retina),
        level_signal=float(level_signal),
    )


def write_mask_overlay(path: str, scan: BScan, masks: MaskPair) -> None:
    """Debug rendering: background tinted blue, signal tinted red."""
    gray = np.repeat(scan.pixels[:, :, None], 3, axis=2)
    out = gray.copy()
    out[masks.background] = 0.6 * gray[masks.background] + 0.4 * np.array([0.1, 0.3, 1.0])
    out[masks.signal] = 0.6 * gray[masks.signal] + 0.4 * np.array([1.0, 0.2, 0.1])
    arr = np.round(np.clip(out, 0.0, 1.0) * 255).astype(np.uint8)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(path)
