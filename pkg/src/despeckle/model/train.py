"""Training loop for the dual-generator translation model.

Each step alternates one generator update and one discriminator update on
a single unpaired (hn, ln) image pair. The generator step minimizes
lambda_gan * L_G + lambda_cycle * L_cycle through a frozen discriminator;
the discriminator step minimizes lambda_gan * L_D with the generated
images treated as constants. Optimizer is Adam with betas (0.9, 0.999)
and a fixed learning rate.

Two discriminator arrangements are supported: a single shared three-class
network scoring {real hn, real ln, fake}, and a conventional pair of
independent two-class (real/fake) networks with identical topology, one
per domain.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import torch

from ..data.bscan import BScan
from ..data.sampler import epoch_pairs
from ..errors import ConfigError, DataError, TrainingError
from .checkpoint import Checkpoint, save_checkpoint
from .losses import (
    ClassTargets,
    cross_entropy,
    cycle_loss,
    generator_loss,
    discriminator_loss,
    one_hot,
)
from .nets import Discriminator, DiscriminatorSpec, Generator, GeneratorSpec

MODES = ("shared_discriminator", "vanilla_two_discriminators")
LOSS_COLUMNS = ("step", "epoch", "L_G", "L_D", "L_cycle", "total")


@dataclass
class TrainConfig:
    lambda_gan: float = 1.0
    lambda_cycle: float = 10.0
    learning_rate: float = 5e-4
    optimizer: str = "adam"
    epochs: int = 245
    batch_size: int = 1
    mode: str = "shared_discriminator"
    seed: int = 0
    checkpoint_every: int = 25

    def __post_init__(self):
        # lambda_gan == 0 is allowed: it cleanly disables the adversarial
        # path (useful for cycle-only ablations and freeze-contract checks).
        if self.lambda_gan < 0:
            raise ConfigError(f"lambda_gan must be >= 0, got {self.lambda_gan}")
        if self.lambda_cycle < 0:
            raise ConfigError(f"lambda_cycle must be >= 0, got {self.lambda_cycle}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.optimizer != "adam":
            raise ConfigError(f"unsupported optimizer {self.optimizer!r}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size != 1:
            raise ConfigError("only batch_size 1 is supported")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.checkpoint_every < 1:
            raise ConfigError(f"checkpoint_every must be >= 1, got {self.checkpoint_every}")

    def to_json_file(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")
        return path

    @classmethod
    def from_json_file(cls, path: str | Path) -> "TrainConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise DataError(f"cannot read train config {path}: {exc}")
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed train config {path}: {exc}")
        if not isinstance(raw, dict):
            raise ConfigError("train config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown train config keys: {', '.join(unknown)}")
        return cls(**raw)


def to_tensor(scan: BScan | np.ndarray, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """(H, W) pixels as a (1, 1, H, W) tensor."""
    pixels = getattr(scan, "pixels", scan)
    return torch.as_tensor(np.asarray(pixels), dtype=dtype).unsqueeze(0).unsqueeze(0)


def to_pixels(tensor: torch.Tensor) -> np.ndarray:
    """(1, 1, H, W) tensor back to float64 (H, W) pixels."""
    return tensor.detach().squeeze(0).squeeze(0).cpu().numpy().astype(np.float64)


@dataclass
class TrainState:
    cfg: TrainConfig
    gen_spec: GeneratorSpec
    disc_spec: DiscriminatorSpec
    gen_h: Generator
    gen_l: Generator
    discs: dict[str, Discriminator]
    opt_g: torch.optim.Optimizer
    opt_d: torch.optim.Optimizer
    step: int = 0
    loss_history: list[dict] = field(default_factory=list)


def build_state(
    cfg: TrainConfig,
    gen_spec: GeneratorSpec | None = None,
    disc_spec: DiscriminatorSpec | None = None,
) -> TrainState:
    """Seeded model + optimizer construction."""
    torch.manual_seed(cfg.seed)
    gen_spec = gen_spec or GeneratorSpec()
    disc_spec = disc_spec or DiscriminatorSpec()
    gen_h = Generator(gen_spec)
    gen_l = Generator(gen_spec)
    if cfg.mode == "shared_discriminator":
        if disc_spec.n_classes != 3:
            raise ConfigError("shared discriminator mode needs n_classes == 3")
        discs = {"shared": Discriminator(disc_spec)}
    else:
        if disc_spec.n_classes != 2:
            raise ConfigError("two-discriminator mode needs n_classes == 2")
        discs = {"hn": Discriminator(disc_spec), "ln": Discriminator(disc_spec)}
    opt_g = torch.optim.Adam(
        itertools.chain(gen_h.parameters(), gen_l.parameters()),
        lr=cfg.learning_rate,
        betas=(0.9, 0.999),
    )
    opt_d = torch.optim.Adam(
        itertools.chain(*(d.parameters() for d in discs.values())),
        lr=cfg.learning_rate,
        betas=(0.9, 0.999),
    )
    return TrainState(
        cfg=cfg,
        gen_spec=gen_spec,
        disc_spec=disc_spec,
        gen_h=gen_h,
        gen_l=gen_l,
        discs=discs,
        opt_g=opt_g,
        opt_d=opt_d,
    )


def _gen_adversarial(state: TrainState, fake_h: torch.Tensor, fake_l: torch.Tensor):
    if state.cfg.mode == "shared_discriminator":
        d = state.discs["shared"]
        return generator_loss(d(fake_h), d(fake_l), ClassTargets.three_way())
    t_real = one_hot(0, 2)
    return cross_entropy(state.discs["hn"](fake_h), t_real) + cross_entropy(
        state.discs["ln"](fake_l), t_real
    )


def _disc_adversarial(
    state: TrainState,
    fake_h: torch.Tensor,
    fake_l: torch.Tensor,
    real_h: torch.Tensor,
    real_l: torch.Tensor,
):
    if state.cfg.mode == "shared_discriminator":
        d = state.discs["shared"]
        return discriminator_loss(
            d(fake_h), d(fake_l), d(real_h), d(real_l), ClassTargets.three_way()
        )
    t_real, t_fake = one_hot(0, 2), one_hot(1, 2)
    d_h, d_l = state.discs["hn"], state.discs["ln"]
    return (
        cross_entropy(d_h(fake_h), t_fake)
        + cross_entropy(d_l(fake_l), t_fake)
        + cross_entropy(d_h(real_h), t_real)
        + cross_entropy(d_l(real_l), t_real)
    )


def generator_step(
    state: TrainState, l: torch.Tensor, h: torch.Tensor, cfg: TrainConfig | None = None
) -> tuple[dict, torch.Tensor, torch.Tensor]:
    """Generator half-step through a frozen discriminator.

    Returns the generator-side loss components plus both generated images,
    detached for reuse by the discriminator half.
    """
    cfg = cfg or state.cfg
    for d in state.discs.values():
        d.requires_grad_(False)
    fake_h = state.gen_h(l)
    fake_l = state.gen_l(h)
    l_rec = state.gen_l(fake_h)
    h_rec = state.gen_h(fake_l)
    loss_g = _gen_adversarial(state, fake_h, fake_l)
    loss_cyc = cycle_loss(l, h, l_rec, h_rec)
    state.opt_g.zero_grad()
    (cfg.lambda_gan * loss_g + cfg.lambda_cycle * loss_cyc).backward()
    state.opt_g.step()
    for d in state.discs.values():
        d.requires_grad_(True)
    return (
        {"L_G": loss_g.item(), "L_cycle": loss_cyc.item()},
        fake_h.detach(),
        fake_l.detach(),
    )


def discriminator_step(
    state: TrainState,
    fake_h: torch.Tensor,
    fake_l: torch.Tensor,
    real_h: torch.Tensor,
    real_l: torch.Tensor,
    cfg: TrainConfig | None = None,
) -> float:
    """Discriminator half-step; generated images are constants here.

    With lambda_gan == 0 the gradient path vanishes, so the update is
    skipped entirely and only the loss value is reported.
    """
    cfg = cfg or state.cfg
    loss_d = _disc_adversarial(state, fake_h.detach(), fake_l.detach(), real_h, real_l)
    if cfg.lambda_gan > 0:
        state.opt_d.zero_grad()
        (cfg.lambda_gan * loss_d).backward()
        state.opt_d.step()
    return loss_d.item()


def train_step(batch, state: TrainState, cfg: TrainConfig | None = None) -> dict:
    """One alternating update on a single (l, h) pair.

    Returns the step's loss components keyed by the loss log columns.
    Raises TrainingError if any component is non-finite.
    """
    cfg = cfg or state.cfg
    l_img, h_img = batch
    l = l_img if isinstance(l_img, torch.Tensor) else to_tensor(l_img)
    h = h_img if isinstance(h_img, torch.Tensor) else to_tensor(h_img)

    g_parts, fake_h, fake_l = generator_step(state, l, h, cfg)
    d_val = discriminator_step(state, fake_h, fake_l, h, l, cfg)

    components = {
        "L_G": g_parts["L_G"],
        "L_D": d_val,
        "L_cycle": g_parts["L_cycle"],
        "total": cfg.lambda_gan * (g_parts["L_G"] + d_val)
        + cfg.lambda_cycle * g_parts["L_cycle"],
    }
    if not all(math.isfinite(v) for v in components.values()):
        raise TrainingError(
            f"non-finite loss at step {state.step + 1}",
            diagnostics={"step": state.step + 1, **components},
        )
    state.step += 1
    return components


def _clone_tree(obj):
    """Deep copy of a nested container of tensors and plain values.

    Optimizer state dicts hold references to live moment tensors, so a
    checkpoint must clone them or later steps corrupt the snapshot.
    """
    if isinstance(obj, torch.Tensor):
        return obj.detach().clone()
    if isinstance(obj, dict):
        return {k: _clone_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        cloned = [_clone_tree(v) for v in obj]
        return cloned if isinstance(obj, list) else tuple(cloned)
    return obj


def make_checkpoint(state: TrainState, epoch: int) -> Checkpoint:
    def copy_sd(module):
        return {k: v.detach().clone() for k, v in module.state_dict().items()}

    return Checkpoint(
        epoch=epoch,
        config=state.cfg,
        gen_spec=state.gen_spec,
        disc_spec=state.disc_spec,
        generator_h_params=copy_sd(state.gen_h),
        generator_l_params=copy_sd(state.gen_l),
        discriminator_params={name: copy_sd(d) for name, d in state.discs.items()},
        optimizer_state={
            "generators": _clone_tree(state.opt_g.state_dict()),
            "discriminators": _clone_tree(state.opt_d.state_dict()),
        },
        loss_history=[dict(row) for row in state.loss_history],
    )


def restore_state(ckpt: Checkpoint) -> TrainState:
    state = build_state(ckpt.config, ckpt.gen_spec, ckpt.disc_spec)
    state.gen_h.load_state_dict(ckpt.generator_h_params)
    state.gen_l.load_state_dict(ckpt.generator_l_params)
    for name, params in ckpt.discriminator_params.items():
        state.discs[name].load_state_dict(params)
    state.opt_g.load_state_dict(ckpt.optimizer_state["generators"])
    state.opt_d.load_state_dict(ckpt.optimizer_state["discriminators"])
    state.loss_history = [dict(row) for row in ckpt.loss_history]
    state.step = ckpt.loss_history[-1]["step"] if ckpt.loss_history else 0
    return state


def train(
    hn_set: list[BScan],
    ln_set: list[BScan],
    cfg: TrainConfig,
    gen_spec: GeneratorSpec | None = None,
    disc_spec: DiscriminatorSpec | None = None,
    checkpoint_dir: str | Path | None = None,
    resume_from: Checkpoint | None = None,
) -> list[Checkpoint]:
    """Full training run; returns the checkpoints it produced.

    A fresh run starts with an initialization checkpoint at epoch 0 (so
    epochs=0 yields exactly that one). Checkpoints are then taken every
    ``checkpoint_every`` epochs and at the final epoch, and written to
    ``checkpoint_dir`` when given. ``resume_from`` continues a previous
    run from its stored epoch with optimizer state intact.
    """
    if not hn_set or not ln_set:
        raise DataError("both training domains must be non-empty")
    out_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
    if resume_from is not None:
        state = restore_state(resume_from)
        start_epoch = resume_from.epoch
        checkpoints = []
    else:
        state = build_state(cfg, gen_spec, disc_spec)
        start_epoch = 0
        checkpoints = [make_checkpoint(state, 0)]
        if out_dir is not None:
            save_checkpoint(checkpoints[0], out_dir / "checkpoint_epoch_0000.pt")

    for epoch in range(start_epoch + 1, cfg.epochs + 1):
        for hn_scan, ln_scan in epoch_pairs(hn_set, ln_set, cfg.seed, epoch):
            components = train_step((to_tensor(ln_scan), to_tensor(hn_scan)), state)
            state.loss_history.append({"step": state.step, "epoch": epoch, **components})
        if epoch % cfg.checkpoint_every == 0 or epoch == cfg.epochs:
            ckpt = make_checkpoint(state, epoch)
            checkpoints.append(ckpt)
            if out_dir is not None:
                save_checkpoint(ckpt, out_dir / f"checkpoint_epoch_{epoch:04d}.pt")
    return checkpoints


def write_loss_log(history: list[dict], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=LOSS_COLUMNS)
        writer.writeheader()
        for row in history:
            writer.writerow({k: row[k] for k in LOSS_COLUMNS})
    return path


def autoencoder_mae(gen: Generator, images: list[BScan]) -> float:
    """Mean absolute reconstruction error over a set, no gradients."""
    with torch.no_grad():
        errors = [float((gen(to_tensor(s)) - to_tensor(s)).abs().mean()) for s in images]
    return float(np.mean(errors))


def pretrain_generator_autoencoder(
    gen: Generator, images: list[BScan], cfg: TrainConfig
) -> dict:
    """Warm-start: train the generator to reproduce its input (mean L1).

    Returns the trained parameter dict (also left loaded in ``gen``).
    """
    if not images:
        raise DataError("autoencoder pretraining needs at least one image")
    opt = torch.optim.Adam(gen.parameters(), lr=cfg.learning_rate, betas=(0.9, 0.999))
    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(len(images))
        for idx in order:
            x = to_tensor(images[idx])
            loss = (gen(x) - x).abs().mean()
            opt.zero_grad()
            loss.backward()
            opt.step()
    return {k: v.detach().clone() for k, v in gen.state_dict().items()}


def _domain_dataset(hn_set: list[BScan], ln_set: list[BScan]):
    return [(scan, 0) for scan in hn_set] + [(scan, 1) for scan in ln_set]


def pretrain_discriminator_classifier(
    disc: Discriminator, hn_set: list[BScan], ln_set: list[BScan], cfg: TrainConfig
) -> dict:
    """Warm-start: supervised hn-vs-ln classification (classes 0 and 1).

    Returns the trained parameter dict (also left loaded in ``disc``).
    """
    if not hn_set or not ln_set:
        raise DataError("classifier pretraining needs images from both domains")
    dataset = _domain_dataset(hn_set, ln_set)
    opt = torch.optim.Adam(disc.parameters(), lr=cfg.learning_rate, betas=(0.9, 0.999))
    n_classes = disc.spec.n_classes
    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(len(dataset))
        for idx in order:
            scan, label = dataset[idx]
            loss = cross_entropy(disc(to_tensor(scan)), one_hot(label, n_classes))
            opt.zero_grad()
            loss.backward()
            opt.step()
    return {k: v.detach().clone() for k, v in disc.state_dict().items()}


def domain_classification_accuracy(
    disc: Discriminator, hn_set: list[BScan], ln_set: list[BScan]
) -> float:
    """Fraction of images whose argmax class matches their domain label."""
    hits = 0
    with torch.no_grad():
        for scan, label in _domain_dataset(hn_set, ln_set):
            probs = disc(to_tensor(scan))
            hits += int(probs.argmax(dim=1).item() == label)
    return hits / (len(hn_set) + len(ln_set))
