"""The core image type: a single b-scan with a noise-domain tag."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

MIN_DIM = 8


class Domain(str, Enum):
    HIGH_NOISE = "hn"
    LOW_NOISE = "ln"
    GENERATED = "generated"
    CLEAN = "clean"


@dataclass(frozen=True, eq=False)
class BScan:
    """A 2D grayscale image with intensities in [0, 1].

    ``source_id`` records provenance (volume/slice or phantom seed); it is
    opaque to every consumer.
    """

    pixels: np.ndarray
    domain: Domain
    source_id: str = ""

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2:
            raise ValueError(f"b-scan pixels must be 2D, got shape {px.shape}")
        if px.shape[0] < MIN_DIM or px.shape[1] < MIN_DIM:
            raise ValueError(f"b-scan must be at least {MIN_DIM}x{MIN_DIM}, got {px.shape}")
        if not np.isfinite(px).all():
            raise ValueError("b-scan contains non-finite pixels")
        lo, hi = float(px.min()), float(px.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"b-scan intensities must lie in [0, 1], got [{lo}, {hi}]")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def with_pixels(self, pixels: np.ndarray, domain: Domain | None = None) -> "BScan":
        """New b-scan with replaced pixels, keeping provenance."""
        return BScan(pixels, self.domain if domain is None else domain, self.source_id)
