"""Baseline method registry: frozen default parameters, JSON overrides,
and timed dispatch."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Any

from ..data import BScan
from ..errors import ConfigError, DataError
from .bm3d import Bm3dProfile, bm3d_denoise
from .classic import bilateral_denoise, median_denoise, nlmeans_denoise
from .wavelets import wavelet_denoise

METHODS = ("median", "wavelet", "bilateral", "nlmeans", "bm3d")

# One fixed configuration per method (tuned once on held-out synthetic
# images, then frozen). Callers override via DenoiserParams or a JSON file,
# never per image.
DEFAULT_PARAMS: dict[str, dict[str, Any]] = {
    "median": {"window": 3},
    "wavelet": {"rule": "bayes", "levels": 3, "wavelet": "db2"},
    "bilateral": {"sigma_spatial": 1.5, "sigma_range": 0.15},
    "nlmeans": {"patch": 5, "search": 13, "h": 0.1},
    "bm3d": {"sigma_est": None},
}


@dataclass(frozen=True)
class DenoiserParams:
    """A method name plus its keyword options, validated on construction."""

    method: str
    options: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; options: {METHODS}")
        unknown = set(self.options) - set(DEFAULT_PARAMS[self.method])
        if self.method == "bm3d":
            unknown -= {"profile"}
        if unknown:
            raise ConfigError(
                f"unknown options for {self.method}: {sorted(unknown)}"
            )

    def resolved(self) -> dict[str, Any]:
        return {**DEFAULT_PARAMS[self.method], **self.options}


def load_param_file(path: str) -> dict[str, DenoiserParams]:
    """JSON keyed by method name; values are option mappings."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read parameter file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise DataError(f"parameter file {path} must hold an object keyed by method")
    out = {}
    for method, options in raw.items():
        if not isinstance(options, dict):
            raise DataError(f"options for {method!r} must be an object")
        out[method] = DenoiserParams(method, options)
    return out


_DISPATCH = {
    "median": median_denoise,
    "wavelet": wavelet_denoise,
    "bilateral": bilateral_denoise,
    "nlmeans": nlmeans_denoise,
    "bm3d": bm3d_denoise,
}


def get_denoiser(name: str, params: DenoiserParams | dict | None = None):
    """Bind a method name and options into a single-argument denoiser."""
    if isinstance(params, DenoiserParams):
        if params.method != name:
            raise ConfigError(f"params are for {params.method!r}, not {name!r}")
        spec = params
    else:
        spec = DenoiserParams(name, dict(params or {}))
    options = spec.resolved()
    if name == "bm3d" and isinstance(options.get("profile"), dict):
        options["profile"] = Bm3dProfile(**options["profile"])
    fn = _DISPATCH[name]

    def denoise(scan: BScan) -> BScan:
        return fn(scan, **options)

    denoise.__name__ = f"{name}_denoiser"
    return denoise


def run_baseline(
    name: str, scan: BScan, params: DenoiserParams | dict | None = None
) -> tuple[BScan, float]:
    """Dispatch plus monotonic wall-clock timing of the denoise call only."""
    denoise = get_denoiser(name, params)
    t0 = time.perf_counter()
    out = denoise(scan)
    elapsed = time.perf_counter() - t0
    return out, elapsed
