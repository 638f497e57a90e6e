"""Image and dataset I/O.

Dataset directory layout::

    <root>/<domain:hn|ln>/<volume_id>/<slice_index>.png

Split files are line-delimited volume ids. Only lossless single-channel
formats are supported: PNG and single-page grayscale TIFF, 8- or 16-bit.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import DataError, FormatError
from .bscan import BScan, Domain

_SUPPORTED_SUFFIXES = (".png", ".tif", ".tiff")


def load_bscan(path: str | os.PathLike, domain: Domain) -> BScan:
    """Load a single-channel 8/16-bit image and scale it to [0, 1].

    Intensities are divided by the bit-depth maximum (255 or 65535), so a
    saturated pixel maps to exactly 1.0.
    """
    with Image.open(path) as img:
        if getattr(img, "n_frames", 1) != 1:
            raise FormatError(f"{path}: multi-page images are not supported")
        if img.mode == "L":
            arr = np.asarray(img, dtype=np.float64) / 255.0
        elif img.mode in ("I;16", "I;16B", "I;16L"):
            arr = np.asarray(img, dtype=np.float64) / 65535.0
        elif img.mode == "I":
            arr = np.asarray(img, dtype=np.float64)
            if arr.max() > 65535 or arr.min() < 0:
                raise FormatError(f"{path}: integer image exceeds 16-bit range")
            arr = arr / 65535.0
        else:
            raise FormatError(f"{path}: expected single-channel 8/16-bit image, got mode {img.mode!r}")
    return BScan(arr, domain, source_id=str(path))


def save_bscan(path: str | os.PathLike, scan: BScan, bit_depth: int = 8) -> None:
    """Write a b-scan as a grayscale PNG/TIFF at the requested bit depth."""
    if bit_depth == 8:
        arr = np.round(scan.pixels * 255.0).astype(np.uint8)
        img = Image.fromarray(arr, mode="L")
    elif bit_depth == 16:
        arr = np.round(scan.pixels * 65535.0).astype(np.uint16)
        img = Image.fromarray(arr)
    else:
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    img.save(path)


def list_volumes(root: str | os.PathLike, domain: Domain) -> list[str]:
    """Sorted volume ids present under ``root/<domain>``."""
    base = Path(root) / domain.value
    if not base.is_dir():
        raise DataError(f"no {domain.value!r} directory under {root}")
    return sorted(p.name for p in base.iterdir() if p.is_dir())


def load_volume(root: str | os.PathLike, domain: Domain, volume_id: str) -> list[BScan]:
    """All slices of one volume, ordered by slice index."""
    vol = Path(root) / domain.value / volume_id
    if not vol.is_dir():
        raise DataError(f"volume {volume_id!r} not found under {root}/{domain.value}")
    files = sorted(
        (p for p in vol.iterdir() if p.suffix.lower() in _SUPPORTED_SUFFIXES),
        key=lambda p: (len(p.stem), p.stem),
    )
    if not files:
        raise DataError(f"volume {volume_id!r} contains no images")
    return [load_bscan(p, domain) for p in files]


def load_domain_images(
    root: str | os.PathLike, domain: Domain, volumes: list[str] | None = None
) -> list[BScan]:
    """Flat list of all slices for the given volumes (default: all volumes)."""
    if volumes is None:
        volumes = list_volumes(root, domain)
    scans: list[BScan] = []
    for vol in volumes:
        scans.extend(load_volume(root, domain, vol))
    return scans


def read_split_file(path: str | os.PathLike) -> list[str]:
    lines = Path(path).read_text().splitlines()
    return [ln.strip() for ln in lines if ln.strip()]


def write_split_file(path: str | os.PathLike, volume_ids: list[str]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("".join(f"{v}\n" for v in volume_ids))
