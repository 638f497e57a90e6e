"""Pseudo-color overlays of feature maps on b-scans."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from ..data.bscan import BScan
from ..errors import ConfigError
from .features import FeatureMapSet, upscale_map

# Perceptual dark-blue-to-yellow ramp (11 anchor colors, linearly
# interpolated). Values are RGB in [0, 1] at evenly spaced stops.
_STOPS = np.array(
    [
        [0.267, 0.005, 0.329],
        [0.283, 0.141, 0.458],
        [0.254, 0.265, 0.530],
        [0.207, 0.372, 0.553],
        [0.164, 0.471, 0.558],
        [0.128, 0.567, 0.551],
        [0.135, 0.659, 0.518],
        [0.267, 0.749, 0.441],
        [0.478, 0.821, 0.318],
        [0.741, 0.873, 0.150],
        [0.993, 0.906, 0.144],
    ]
)


def colormap(values: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] to RGB; out-of-range values are clipped."""
    x = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    positions = np.linspace(0.0, 1.0, len(_STOPS))
    channels = [np.interp(x, positions, _STOPS[:, c]) for c in range(3)]
    return np.stack(channels, axis=-1)


def overlay(img: BScan, map2d: np.ndarray, alpha: float = 0.5) -> np.ndarray:
    """Alpha-blend a pseudo-colored map onto the grayscale scan.

    The map is bilinearly upscaled to the scan size and normalized to
    [0, 1] before coloring. Returns an (H, W, 3) float array in [0, 1].
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must be in [0, 1], got {alpha}")
    pixels = img.pixels
    resized = upscale_map(np.asarray(map2d, dtype=np.float64), pixels.shape)
    lo, hi = resized.min(), resized.max()
    normed = (resized - lo) / (hi - lo) if hi > lo else np.zeros_like(resized)
    gray = np.repeat(pixels[:, :, None], 3, axis=2)
    return (1.0 - alpha) * gray + alpha * colormap(normed)


_LABEL_HEIGHT = 14


def write_overlay_grid(
    path: str | Path,
    img: BScan,
    feature_set: FeatureMapSet,
    channels: list[int] | None = None,
    alpha: float = 0.5,
) -> Path:
    """PNG grid with one row per channel: input | overlay | map.

    Each row carries a small label strip naming the layer and channel.
    """
    channels = list(range(len(feature_set))) if channels is None else list(channels)
    for c in channels:
        if not 0 <= c < len(feature_set):
            raise ConfigError(
                f"channel {c} out of range for {feature_set.layer_name!r} "
                f"with {len(feature_set)} channels"
            )
    h, w = img.pixels.shape
    gray = np.repeat(img.pixels[:, :, None], 3, axis=2)
    rows = []
    for c in channels:
        blended = overlay(img, feature_set.maps[c], alpha)
        map_rgb = colormap(
            upscale_map(feature_set.maps[c], (h, w))
            if feature_set.maps[c].shape != (h, w)
            else feature_set.maps[c]
        )
        rows.append(np.concatenate([gray, blended, map_rgb], axis=1))
    canvas = Image.new(
        "RGB", (3 * w, len(channels) * (h + _LABEL_HEIGHT)), color=(0, 0, 0)
    )
    draw = ImageDraw.Draw(canvas)
    for i, c in enumerate(channels):
        top = i * (h + _LABEL_HEIGHT)
        row_img = Image.fromarray(
            (np.clip(rows[i], 0.0, 1.0) * 255.0).round().astype(np.uint8)
        )
        canvas.paste(row_img, (0, top + _LABEL_HEIGHT))
        draw.text(
            (4, top + 2),
            f"{feature_set.layer_name} / channel {c} (input | overlay | map)",
            fill=(255, 255, 255),
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    canvas.save(path, format="PNG")
    return path
