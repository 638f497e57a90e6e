"""Versioned training checkpoints.

A checkpoint stores every tensor needed to resume training bit-exactly:
both generators, the discriminator(s), optimizer state, the training
config, and the per-step loss history. Files are written with torch.save
using only plain containers and tensors so they load under
``weights_only=True``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch

from ..errors import DataError
from .nets import DiscriminatorSpec, GeneratorSpec

CHECKPOINT_VERSION = 1
ARCHIVE_KIND = "despeckle-checkpoint"


@dataclass
class Checkpoint:
    epoch: int
    config: "TrainConfig"
    gen_spec: GeneratorSpec
    disc_spec: DiscriminatorSpec
    generator_h_params: dict
    generator_l_params: dict
    discriminator_params: dict[str, dict]
    optimizer_state: dict
    loss_history: list[dict] = field(default_factory=list)


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> Path:
    path = Path(path)
    payload = {
        "kind": ARCHIVE_KIND,
        "version": CHECKPOINT_VERSION,
        "epoch": int(ckpt.epoch),
        "config": asdict(ckpt.config),
        "gen_spec": asdict(ckpt.gen_spec),
        "disc_spec": asdict(ckpt.disc_spec),
        "generator_h_params": dict(ckpt.generator_h_params),
        "generator_l_params": dict(ckpt.generator_l_params),
        "discriminator_params": {
            name: dict(params) for name, params in ckpt.discriminator_params.items()
        },
        "optimizer_state": ckpt.optimizer_state,
        "loss_history": [dict(row) for row in ckpt.loss_history],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    from .train import TrainConfig

    path = Path(path)
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError:
        raise DataError(f"checkpoint not found: {path}")
    except Exception as exc:
        raise DataError(f"unreadable checkpoint {path}: {exc}")
    if not isinstance(payload, dict) or payload.get("kind") != ARCHIVE_KIND:
        raise DataError(f"{path} is not a checkpoint archive")
    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise DataError(
            f"checkpoint version {version} not supported (expected {CHECKPOINT_VERSION})"
        )
    return Checkpoint(
        epoch=int(payload["epoch"]),
        config=TrainConfig(**payload["config"]),
        gen_spec=GeneratorSpec(**payload["gen_spec"]),
        disc_spec=DiscriminatorSpec(**payload["disc_spec"]),
        generator_h_params=payload["generator_h_params"],
        generator_l_params=payload["generator_l_params"],
        discriminator_params=payload["discriminator_params"],
        optimizer_state=payload["optimizer_state"],
        loss_history=list(payload["loss_history"]),
    )
