"""Per-method evaluation over registered pairs, and the runtime benchmark."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..data import BScan
from ..errors import MaskExtractionError
from .masks import extract_masks
from .quality import cnr, msr, psnr, ssim
from .registration import align_to

Denoiser = Callable[[BScan], BScan]

METRIC_NAMES = ("cnr", "msr", "psnr", "ssim")


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return math.nan, math.nan
    arr = np.asarray(finite)
    return float(arr.mean()), float(arr.std())


@dataclass
class MethodRow:
    method: str
    samples: dict[str, list[float]] = field(default_factory=lambda: {m: [] for m in METRIC_NAMES})
    n: int = 0
    excluded: int = 0

    def mean_std(self, metric: str) -> tuple[float, float]:
        return _mean_std(self.samples[metric])


@dataclass
class MetricReport:
    rows: list[MethodRow]

    def row(self, method: str) -> MethodRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_csv(self, path: str) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["method"]
            for m in METRIC_NAMES:
                header += [f"{m}_mean", f"{m}_std"]
            header += ["n", "excluded"]
            writer.writerow(header)
            for r in self.rows:
                record = [r.method]
                for m in METRIC_NAMES:
                    mean, std = r.mean_std(m)
                    record += [f"{mean:.6g}", f"{std:.6g}"]
                record += [r.n, r.excluded]
                writer.writerow(record)


def evaluate_method(
    pairs: Sequence[tuple[BScan, BScan]],
    denoiser: Denoiser,
    method: str = "method",
    subpixel: bool = True,
) -> MethodRow:
    """One report row: denoise each HN image, register to its LN reference,
    and collect PSNR/SSIM (against the reference, on the valid overlap) plus
    CNR/MSR (from masks of the denoised image itself).

    Images whose mask extraction fails are excluded and counted.
    """
    row = MethodRow(method=method)
    for hn, ln_ref in pairs:
        denoised = denoiser(hn)
        try:
            masks = extract_masks(denoised)
        except MaskExtractionError:
            row.excluded += 1
            continue
        ref_c, den_c, _ = align_to(ln_ref, denoised, subpixel=subpixel)
        row.samples["psnr"].append(psnr(ref_c, den_c))
        row.samples["ssim"].append(ssim(ref_c, den_c))
        row.samples["cnr"].append(cnr(denoised, masks.signal, masks.background))
        row.samples["msr"].append(msr(denoised, masks.signal))
        row.n += 1
    if row.n == 0:
        raise MaskExtractionError(f"mask extraction failed for every pair ({method})")
    return row


def evaluate_methods(
    pairs: Sequence[tuple[BScan, BScan]],
    denoisers: dict[str, Denoiser],
    subpixel: bool = True,
) -> MetricReport:
    rows = [evaluate_method(pairs, fn, method=name, subpixel=subpixel) for name, fn in denoisers.items()]
    return MetricReport(rows)


@dataclass
class RuntimeRow:
    method: str
    device: str
    times: list[float]

    @property
    def mean_s(self) -> float:
        return float(np.mean(self.times))

    @property
    def std_s(self) -> float:
        return float(np.std(self.times))

    @property
    def n(self) -> int:
        return len(self.times)


@dataclass
class RuntimeReport:
    rows: list[RuntimeRow]

    def row(self, method: str) -> RuntimeRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_csv(self, path: str) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "device", "mean_s", "std_s", "n"])
            for r in self.rows:
                writer.writerow([r.method, r.device, f"{r.mean_s:.6g}", f"{r.std_s:.6g}", r.n])


def benchmark_runtime(
    methods: dict[str, Denoiser],
    images: Sequence[BScan],
    repeats: int = 1,
    device: str = "cpu",
) -> RuntimeReport:
    """Wall-clock statistics per method over images x repeats.

    One warm-up call per method is excluded from the statistics. All raw
    times are kept so no averaging is hidden from the caller. Timing covers
    the denoise call only.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    if not images:
        raise ValueError("need at least one image")
    rows = []
    for name, fn in methods.items():
        fn(images[0])  # warm-up, not timed
        times: list[float] = []
        for _ in range(repeats):
            for img in images:
                t0 = time.perf_counter()
                fn(img)
                times.append(time.perf_counter() - t0)
        rows.append(RuntimeRow(method=name, device=device, times=times))
    return RuntimeReport(rows)
