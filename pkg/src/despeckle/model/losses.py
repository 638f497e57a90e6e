"""Adversarial and cycle-consistency losses.

The discriminator emits probability vectors (post-softmax), so the
cross entropy here is computed directly on probabilities with the log
clamped at ``LOG_EPS`` to keep confident mistakes finite.

Class target vectors are one-hot and pairwise orthogonal: real high-noise,
real low-noise, and generated each get their own class. The generators are
trained to make the shared discriminator assign their outputs to the
corresponding *real* class; the discriminator is trained to assign both
kinds of generated image to the fake class and real images to their domain
class.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import torch

if TYPE_CHECKING:
    from .train import TrainConfig

LOG_EPS = 1e-12


@dataclass(frozen=True)
class ClassTargets:
    """One-hot target vectors for high-noise, low-noise, and fake classes."""

    t_h: torch.Tensor
    t_l: torch.Tensor
    t_f: torch.Tensor

    def __post_init__(self):
        vectors = (self.t_h, self.t_l, self.t_f)
        for t in vectors:
            if t.ndim != 1:
                raise ValueError("class targets must be one-dimensional vectors")
            values = t.tolist()
            if sorted(values) != [0.0] * (len(values) - 1) + [1.0]:
                raise ValueError(f"target {values} is not one-hot")
        for i in range(3):
            for j in range(i + 1, 3):
                if float(vectors[i] @ vectors[j]) != 0.0:
                    raise ValueError("class targets must be pairwise orthogonal")

    @classmethod
    def three_way(cls, dtype: torch.dtype = torch.float32) -> "ClassTargets":
        eye = torch.eye(3, dtype=dtype)
        return cls(t_h=eye[0], t_l=eye[1], t_f=eye[2])


def one_hot(index: int, n_classes: int, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    return torch.eye(n_classes, dtype=dtype)[index]


def cross_entropy(probs: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Cross entropy of one-hot ``target`` against probability vector(s).

    ``probs`` may be a single vector (C,) or a batch (N, C); batches are
    averaged. Probabilities are clamped below at LOG_EPS before the log.
    """
    if probs.shape[-1] != target.shape[-1]:
        raise ValueError(
            f"probability width {probs.shape[-1]} != target width {target.shape[-1]}"
        )
    clamped = torch.clamp(probs, min=LOG_EPS)
    per_sample = -(target * torch.log(clamped)).sum(dim=-1)
    return per_sample.mean()


def generator_loss(
    d_fake_h: torch.Tensor, d_fake_l: torch.Tensor, targets: ClassTargets
) -> torch.Tensor:
    """Generators want their fakes scored as the matching real class."""
    return cross_entropy(d_fake_h, targets.t_h) + cross_entropy(d_fake_l, targets.t_l)


def discriminator_loss(
    d_fake_h: torch.Tensor,
    d_fake_l: torch.Tensor,
    d_real_h: torch.Tensor,
    d_real_l: torch.Tensor,
    targets: ClassTargets,
) -> torch.Tensor:
    """Four terms: both fakes to the fake class, both reals to their own."""
    return (
        cross_entropy(d_fake_h, targets.t_f)
        + cross_entropy(d_fake_l, targets.t_f)
        + cross_entropy(d_real_h, targets.t_h)
        + cross_entropy(d_real_l, targets.t_l)
    )


def _as_tensor(image) -> torch.Tensor:
    if isinstance(image, torch.Tensor):
        return image
    pixels = getattr(image, "pixels", image)
    return torch.as_tensor(pixels)


def cycle_loss(l_img, h_img, l_rec, h_rec) -> torch.Tensor:
    """Mean absolute reconstruction error, summed over both directions."""
    l_img, h_img = _as_tensor(l_img), _as_tensor(h_img)
    l_rec, h_rec = _as_tensor(l_rec), _as_tensor(h_rec)
    if l_img.shape != l_rec.shape:
        raise ValueError(f"shape mismatch {tuple(l_img.shape)} vs {tuple(l_rec.shape)}")
    if h_img.shape != h_rec.shape:
        raise ValueError(f"shape mismatch {tuple(h_img.shape)} vs {tuple(h_rec.shape)}")
    return (l_rec - l_img).abs().mean() + (h_rec - h_img).abs().mean()


def total_loss(loss_g, loss_d, loss_cycle, cfg: "TrainConfig"):
    """Scalar objective: lambda_gan * (L_G + L_D) + lambda_cycle * L_cycle."""
    return cfg.lambda_gan * (loss_g + loss_d) + cfg.lambda_cycle * loss_cycle
