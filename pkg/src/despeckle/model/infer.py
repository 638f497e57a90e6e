"""Inference helpers: despeckling with a trained checkpoint and
discriminator score summaries."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import torch

from ..data.bscan import BScan, Domain
from ..errors import DataError
from .checkpoint import Checkpoint
from .nets import Discriminator, Generator
from .train import to_pixels, to_tensor


def build_denoiser(ckpt: Checkpoint) -> Callable[[BScan], BScan]:
    """Load the low-noise generator once and return a reusable callable.

    The callable applies the generator a single time, clips to [0, 1]
    (the network's final layer is linear), and tags the result as
    generated while preserving the source id.
    """
    gen = Generator(ckpt.gen_spec)
    gen.load_state_dict(ckpt.generator_l_params)
    gen.eval()
    divisor = ckpt.gen_spec.divisor

    def denoiser(scan: BScan) -> BScan:
        h, w = scan.pixels.shape
        if h % divisor or w % divisor:
            raise DataError(
                f"image dims ({h}, {w}) must be divisible by {divisor}; pad first"
            )
        with torch.no_grad():
            out = gen(to_tensor(scan))
        pixels = np.clip(to_pixels(out), 0.0, 1.0)
        return BScan(pixels, Domain.GENERATED, scan.source_id)

    return denoiser


def denoise(ckpt: Checkpoint, scan: BScan) -> BScan:
    """One-shot despeckling; see build_denoiser for the batch-friendly form."""
    return build_denoiser(ckpt)(scan)


@dataclass(frozen=True)
class ScoreReport:
    """Mean class probabilities per real input domain.

    ``rows`` maps input domain ("hn" / "ln") to {score name: mean}. For a
    shared discriminator the score names are the three class names; for
    the two-discriminator arrangement they are "<disc>_real"/"<disc>_fake"
    for each per-domain discriminator.
    """

    mode: str
    rows: dict[str, dict[str, float]]

    def entries(self) -> int:
        return sum(len(scores) for scores in self.rows.values())

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["input_domain", "score", "mean"])
            for domain, scores in self.rows.items():
                for name, value in scores.items():
                    writer.writerow([domain, name, f"{value:.6f}"])
        return path


def _mean_probs(disc: Discriminator, images: list[BScan]) -> np.ndarray:
    with torch.no_grad():
        stacked = [disc(to_tensor(scan)).squeeze(0).numpy() for scan in images]
    return np.mean(stacked, axis=0)


def discriminator_score_report(
    ckpt: Checkpoint, hn_set: list[BScan], ln_set: list[BScan]
) -> ScoreReport:
    """Average softmax scores of the checkpoint's discriminator(s) on real
    images from each domain. Every row's scores sum to 1 (softmax output)."""
    if not hn_set or not ln_set:
        raise DataError("score report needs images from both domains")
    mode = ckpt.config.mode
    rows: dict[str, dict[str, float]] = {}
    if mode == "shared_discriminator":
        disc = Discriminator(ckpt.disc_spec)
        disc.load_state_dict(ckpt.discriminator_params["shared"])
        disc.eval()
        class_names = ("hn", "ln", "fake")
        for domain, images in (("hn", hn_set), ("ln", ln_set)):
            probs = _mean_probs(disc, images)
            rows[domain] = {name: float(p) for name, p in zip(class_names, probs)}
    else:
        discs = {}
        for name, params in ckpt.discriminator_params.items():
            d = Discriminator(ckpt.disc_spec)
            d.load_state_dict(params)
            d.eval()
            discs[name] = d
        for domain, images in (("hn", hn_set), ("ln", ln_set)):
            scores: dict[str, float] = {}
            for name, d in discs.items():
                probs = _mean_probs(d, images)
                scores[f"{name}_real"] = float(probs[0])
                scores[f"{name}_fake"] = float(probs[1])
            rows[domain] = scores
    return ScoreReport(mode=mode, rows=rows)
