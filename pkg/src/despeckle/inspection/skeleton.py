"""Layer skeletonization and retinal-thickness estimation.

A feature map (upscaled to scan size) is multiplied with the b-scan,
thresholded at the product's mean, median-filtered, and thinned to
1-px curves. The two longest curves, ordered by mean row, are taken as
the inner (ilm) and outer (rpe) boundary; their per-column separation is
the thickness estimate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage
from skimage.measure import label as label_components
from skimage.morphology import skeletonize

from ..data.bscan import BScan
from ..errors import InsufficientStructureError
from .features import FeatureMapSet

MIN_CURVE_FRACTION = 0.2  # of image width


@dataclass(frozen=True)
class LayerSkeleton:
    """Per-column row positions of the two detected boundary curves.

    Positions are float rows with NaN where the curve is undefined.
    Columns where the outer curve would sit above the inner one are
    treated as undefined (the assignment is by mean row over the whole
    curve, so local crossings are dropped rather than reported as
    negative thickness).
    """

    ilm_curve: np.ndarray
    rpe_curve: np.ndarray
    thickness: np.ndarray = field(init=False)

    def __post_init__(self):
        ilm = np.asarray(self.ilm_curve, dtype=np.float64)
        rpe = np.asarray(self.rpe_curve, dtype=np.float64)
        if ilm.shape != rpe.shape or ilm.ndim != 1:
            raise ValueError("curves must be 1D arrays of equal length")
        both = ~np.isnan(ilm) & ~np.isnan(rpe)
        bad = both & (rpe < ilm)
        if bad.any():
            ilm = ilm.copy()
            rpe = rpe.copy()
            ilm[bad] = np.nan
            rpe[bad] = np.nan
        thickness = np.full(ilm.shape, np.nan)
        both = ~np.isnan(ilm) & ~np.isnan(rpe)
        thickness[both] = rpe[both] - ilm[both]
        object.__setattr__(self, "ilm_curve", ilm)
        object.__setattr__(self, "rpe_curve", rpe)
        object.__setattr__(self, "thickness", thickness)

    @property
    def n_columns(self) -> int:
        return self.ilm_curve.shape[0]


def curve_pixels(curve: np.ndarray) -> list[tuple[int, int]]:
    """Rendered (row, col) pixels of a per-column curve."""
    return [
        (int(round(row)), col) for col, row in enumerate(curve) if not math.isnan(row)
    ]


def _component_curve(mask: np.ndarray, width: int) -> np.ndarray:
    rows, cols = np.nonzero(mask)
    curve = np.full(width, np.nan)
    for col in np.unique(cols):
        curve[col] = rows[cols == col].mean()
    return curve


def skeletonize_layers(img: BScan, map2d: np.ndarray) -> LayerSkeleton:
    """Boundary curves from the product of a scan and an upscaled map."""
    map2d = np.asarray(map2d, dtype=np.float64)
    if map2d.shape != img.pixels.shape:
        raise ValueError(
            f"map shape {map2d.shape} must match image shape {img.pixels.shape}; "
            "upscale the map first"
        )
    product = img.pixels * map2d
    binary = product > product.mean()
    filtered = ndimage.median_filter(binary.astype(np.uint8), size=3) > 0
    thin = skeletonize(filtered)

    height, width = thin.shape
    labels, n = label_components(thin, connectivity=2, return_num=True)
    min_pixels = int(np.ceil(MIN_CURVE_FRACTION * width))
    candidates = []
    for idx in range(1, n + 1):
        mask = labels == idx
        size = int(mask.sum())
        if size >= min_pixels:
            candidates.append((size, idx, mask))
    if len(candidates) < 2:
        raise InsufficientStructureError(
            f"found {len(candidates)} curve(s) of length >= {min_pixels}px; need 2"
        )
    candidates.sort(key=lambda item: (-item[0], item[1]))
    masks = [candidates[0][2], candidates[1][2]]
    curves = [_component_curve(m, width) for m in masks]
    mean_rows = [np.nanmean(c) for c in curves]
    if mean_rows[0] > mean_rows[1]:
        curves.reverse()
    return LayerSkeleton(ilm_curve=curves[0], rpe_curve=curves[1])


@dataclass(frozen=True)
class ThicknessProfile:
    """Per-column thickness series with summary statistics.

    ``values`` holds one entry per defined column (NaN columns dropped);
    stats are None when the series is empty. ``unit`` is "px" or "um".
    """

    values: np.ndarray
    unit: str
    mean: float | None
    minimum: float | None
    maximum: float | None


def thickness_profile(
    skel: LayerSkeleton, scale_um_per_px: float | None = None
) -> ThicknessProfile:
    values = skel.thickness[~np.isnan(skel.thickness)]
    unit = "px"
    if scale_um_per_px is not None:
        values = values * scale_um_per_px
        unit = "um"
    if values.size == 0:
        return ThicknessProfile(values=values, unit=unit, mean=None, minimum=None, maximum=None)
    return ThicknessProfile(
        values=values,
        unit=unit,
        mean=float(values.mean()),
        minimum=float(values.min()),
        maximum=float(values.max()),
    )


def write_thickness_csv(skel: LayerSkeleton, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["column_index", "ilm_row", "rpe_row", "thickness_px"])
        for col in range(skel.n_columns):
            ilm, rpe, thick = skel.ilm_curve[col], skel.rpe_curve[col], skel.thickness[col]
            writer.writerow(
                [
                    col,
                    "" if math.isnan(ilm) else f"{ilm:.2f}",
                    "" if math.isnan(rpe) else f"{rpe:.2f}",
                    "" if math.isnan(thick) else f"{thick:.2f}",
                ]
            )
    return path


def rank_tracker_channels(
    feature_set: FeatureMapSet, img: BScan, reference: LayerSkeleton
) -> list[tuple[int, float]]:
    """Rank channels by how well their skeleton tracks reference curves.

    Layer indices are not transferable across trainings, so tracker
    candidates are surfaced by agreement instead: the score is the
    negative mean absolute row deviation from the reference over columns
    where both are defined (higher is better); channels yielding no usable
    skeleton, or sharing no defined columns with the reference, score -inf.
    """
    h, w = img.pixels.shape
    scores = []
    for channel in range(len(feature_set)):
        map2d = feature_set.maps[channel]
        if map2d.shape != (h, w):
            map2d = feature_set.upscaled_to(h, w).maps[channel]
        try:
            skel = skeletonize_layers(img, map2d)
        except InsufficientStructureError:
            scores.append((channel, float("-inf")))
            continue
        deviations = []
        for ours, ref in (
            (skel.ilm_curve, reference.ilm_curve),
            (skel.rpe_curve, reference.rpe_curve),
        ):
            both = ~np.isnan(ours) & ~np.isnan(ref)
            if both.any():
                deviations.append(np.abs(ours[both] - ref[both]).mean())
        if not deviations:
            scores.append((channel, float("-inf")))
            continue
        scores.append((channel, -float(np.mean(deviations))))
    scores.sort(key=lambda item: (-item[1], item[0]))
    return scores
