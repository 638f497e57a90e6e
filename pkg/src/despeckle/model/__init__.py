"""Dual-generator adversarial despeckling model."""

from .checkpoint import CHECKPOINT_VERSION, Checkpoint, load_checkpoint, save_checkpoint
from .infer import ScoreReport, build_denoiser, denoise, discriminator_score_report
from .losses import (
    LOG_EPS,
    ClassTargets,
    cross_entropy,
    cycle_loss,
    discriminator_loss,
    generator_loss,
    one_hot,
    total_loss,
)
from .nets import (
    Discriminator,
    DiscriminatorSpec,
    Generator,
    GeneratorSpec,
    ResidualBlock,
    count_parameters,
    init_constant_output,
    init_weights_normal,
)
from .train import (
    LOSS_COLUMNS,
    MODES,
    TrainConfig,
    TrainState,
    autoencoder_mae,
    build_state,
    discriminator_step,
    domain_classification_accuracy,
    generator_step,
    make_checkpoint,
    pretrain_discriminator_classifier,
    pretrain_generator_autoencoder,
    restore_state,
    to_pixels,
    to_tensor,
    train,
    train_step,
    write_loss_log,
)

__all__ = [
    "CHECKPOINT_VERSION",
    "Checkpoint",
    "ClassTargets",
    "Discriminator",
    "DiscriminatorSpec",
    "Generator",
    "GeneratorSpec",
    "LOG_EPS",
    "LOSS_COLUMNS",
    "MODES",
    "ResidualBlock",
    "ScoreReport",
    "TrainConfig",
    "TrainState",
    "autoencoder_mae",
    "build_denoiser",
    "build_state",
    "count_parameters",
    "cross_entropy",
    "cycle_loss",
    "denoise",
    "discriminator_loss",
    "discriminator_score_report",
    "discriminator_step",
    "generator_step",
    "domain_classification_accuracy",
    "generator_loss",
    "init_constant_output",
    "init_weights_normal",
    "load_checkpoint",
    "make_checkpoint",
    "one_hot",
    "pretrain_discriminator_classifier",
    "pretrain_generator_autoencoder",
    "restore_state",
    "save_checkpoint",
    "to_pixels",
    "to_tensor",
    "total_loss",
    "train",
    "train_step",
    "write_loss_log",
]
