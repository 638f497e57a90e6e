"""Padding to meet the network's divisibility requirement, with exact undo."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .bscan import BScan

PAD_MODES = ("reflect", "zero")


@dataclass(frozen=True)
class PadRecord:
    top: int
    bottom: int
    left: int
    right: int


def pad_to_multiple(scan: BScan, multiple: int, mode: str = "reflect") -> tuple[BScan, PadRecord]:
    """Pad to the smallest height/width >= input dims divisible by ``multiple``.

    The extra rows/columns are split evenly (extra pixel goes to the
    bottom/right). The returned record allows exact cropping back.
    """
    if multiple < 1:
        raise ConfigError(f"multiple must be >= 1, got {multiple}")
    if mode not in PAD_MODES:
        raise ConfigError(f"mode must be one of {PAD_MODES}, got {mode!r}")
    h, w = scan.height, scan.width
    th = ((h + multiple - 1) // multiple) * multiple
    tw = ((w + multiple - 1) // multiple) * multiple
    top = (th - h) // 2
    bottom = th - h - top
    left = (tw - w) // 2
    right = tw - w - left
    rec = PadRecord(top, bottom, left, right)
    if (top, bottom, left, right) == (0, 0, 0, 0):
        return scan, rec
    widths = ((top, bottom), (left, right))
    if mode == "reflect":
        padded = np.pad(scan.pixels, widths, mode="reflect")
    else:
        padded = np.pad(scan.pixels, widths, mode="constant", constant_values=0.0)
    return scan.with_pixels(padded), rec


def crop_to_record(scan: BScan, rec: PadRecord) -> BScan:
    """Inverse of :func:`pad_to_multiple`."""
    h, w = scan.height, scan.width
    px = scan.pixels[rec.top : h - rec.bottom, rec.left : w - rec.right]
    return scan.with_pixels(px)
