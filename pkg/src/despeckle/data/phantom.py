"""Synthetic speckle phantom: layered bands plus frame-averaged multiplicative noise.

The clean image is a stack of curved horizontal bands with distinct
reflectivities over a dark background. A noisy acquisition with N averaged
frames multiplies each pixel by the mean of N i.i.d. unit-mean exponential
draws; that mean is Gamma(N, 1/N)-distributed, which is how it is sampled
here. Variance of the multiplicative factor is exactly 1/N.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from ..errors import ConfigError
from .bscan import BScan, Domain

BACKGROUND_LEVEL = 0.05
MIN_PHANTOM_DIM = 32
_EDGE_MARGIN = 4


@dataclass(frozen=True)
class PhantomConfig:
    height: int = 64
    width: int = 64
    n_layers: int = 3
    curvature: float = 6.0
    reflectivities: tuple[float, ...] = (0.75, 0.45, 0.9)
    frames_hn: int = 12
    frames_ln: int = 60
    seed: int = 0

    def __post_init__(self):
        if self.height < MIN_PHANTOM_DIM or self.width < MIN_PHANTOM_DIM:
            raise ConfigError(f"phantom dims must be >= {MIN_PHANTOM_DIM}, got {self.height}x{self.width}")
        if self.n_layers < 2:
            raise ConfigError(f"n_layers must be >= 2, got {self.n_layers}")
        if len(self.reflectivities) != self.n_layers:
            raise ConfigError(
                f"need one reflectivity per layer: {self.n_layers} layers, "
                f"{len(self.reflectivities)} reflectivities"
            )
        if any(not (0.0 < r <= 1.0) for r in self.reflectivities):
            raise ConfigError("reflectivities must lie in (0, 1]")
        if not (0 < self.frames_hn < self.frames_ln):
            raise ConfigError(
                f"frames_hn must be positive and < frames_ln, got {self.frames_hn}/{self.frames_ln}"
            )
        if self.curvature < 0 or self.curvature > 0.2 * self.height:
            raise ConfigError(f"curvature must lie in [0, 0.2*height], got {self.curvature}")
        object.__setattr__(self, "reflectivities", tuple(float(r) for r in self.reflectivities))

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "PhantomConfig":
        with open(path) as fh:
            raw = json.load(fh)
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(f"bad phantom config {path}: {exc}") from exc

    def to_json(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2)
            fh.write("\n")


@dataclass(frozen=True, eq=False)
class PhantomSample:
    clean: BScan
    hn: BScan
    ln: BScan
    seed: int
    frames_hn: int
    frames_ln: int


def layer_boundaries(cfg: PhantomConfig, seed: int | None = None) -> np.ndarray:
    """Row position of each band boundary per column, shape (n_layers+1, width).

    Boundary 0 is the top of the stack; boundary n_layers the bottom. The
    same seed reproduces the geometry used by :func:`generate_phantom`.
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    return _boundaries_from_rng(cfg, rng)


def _boundaries_from_rng(cfg: PhantomConfig, rng: np.random.Generator) -> np.ndarray:
    h, w = cfg.height, cfg.width
    total = 0.45 * h
    top0 = 0.30 * h + rng.uniform(-0.04, 0.04) * h
    fractions = 0.8 + 0.4 * rng.random(cfg.n_layers)
    thickness = total * fractions / fractions.sum()
    x = np.arange(w) / max(w - 1, 1)
    curve = cfg.curvature * np.sin(np.pi * x)
    edges = top0 + np.concatenate([[0.0], np.cumsum(thickness)])
    bounds = edges[:, None] + curve[None, :]
    if bounds.min() < _EDGE_MARGIN or bounds.max() > h - _EDGE_MARGIN:
        raise ConfigError("phantom layer stack does not fit inside the image with a safe margin")
    return bounds


def _paint_bands(cfg: PhantomConfig, bounds: np.ndarray) -> np.ndarray:
    h, w = cfg.height, cfg.width
    rows = np.arange(h)[:, None]
    img = np.full((h, w), BACKGROUND_LEVEL)
    for i, refl in enumerate(cfg.reflectivities):
        inside = (rows >= bounds[i][None, :]) & (rows < bounds[i + 1][None, :])
        img[inside] = refl
    # soften band edges so iso-contours are well defined
    return gaussian_filter(img, sigma=0.7, mode="nearest")


def clean_image(cfg: PhantomConfig, seed: int | None = None) -> np.ndarray:
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    return _paint_bands(cfg, _boundaries_from_rng(cfg, rng))


def speckle_average(clean: np.ndarray, n_frames: int, rng: np.random.Generator) -> np.ndarray:
    """N-frame-averaged speckle acquisition of ``clean``, before clipping."""
    if n_frames < 1:
        raise ConfigError(f"n_frames must be >= 1, got {n_frames}")
    factors = rng.gamma(shape=float(n_frames), scale=1.0 / n_frames, size=clean.shape)
    return clean * factors


def generate_phantom(cfg: PhantomConfig, seed: int | None = None) -> PhantomSample:
    """Deterministic (clean, hn, ln) triple for the given seed.

    HN and LN acquisitions use independent speckle realizations, mirroring
    separate acquisitions of the same anatomy. Both are clipped to [0, 1]
    after frame averaging.
    """
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    clean = _paint_bands(cfg, _boundaries_from_rng(cfg, rng))
    hn = np.clip(speckle_average(clean, cfg.frames_hn, rng), 0.0, 1.0)
    ln = np.clip(speckle_average(clean, cfg.frames_ln, rng), 0.0, 1.0)
    sid = f"phantom-{seed}"
    return PhantomSample(
        clean=BScan(clean, Domain.CLEAN, sid),
        hn=BScan(hn, Domain.HIGH_NOISE, sid),
        ln=BScan(ln, Domain.LOW_NOISE, sid),
        seed=seed,
        frames_hn=cfg.frames_hn,
        frames_ln=cfg.frames_ln,
    )


def phantom_batch(cfg: PhantomConfig, n: int, seed0: int | None = None) -> list[PhantomSample]:
    """n phantoms with consecutive seeds starting at seed0 (default cfg.seed)."""
    seed0 = cfg.seed if seed0 is None else seed0
    return [generate_phantom(cfg, seed0 + i) for i in range(n)]
