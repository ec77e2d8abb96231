"""Depth-aware conditional stereo image translator: networks, losses, training."""

from .config import CriticConfig, GeneratorConfig, LossWeights, TrainConfig
from .losses import (
    gradient_penalty,
    loss_l1,
    loss_wgan,
    loss_wmse,
    total_generator_loss,
    weight_map,
    wgan_critic_loss,
    wgan_generator_loss,
)
from .networks import (
    PatchCritic,
    UNetGenerator,
    build_critic,
    build_generator,
    receptive_field,
)
from .training import (
    PainterModel,
    StereoPairs,
    TrainResult,
    TrainState,
    build_model,
    generator_forward,
    identity_baseline_l1,
    load_checkpoint,
    save_checkpoint,
    train,
)

__all__ = [
    "CriticConfig",
    "GeneratorConfig",
    "LossWeights",
    "TrainConfig",
    "PatchCritic",
    "UNetGenerator",
    "build_critic",
    "build_generator",
    "receptive_field",
    "gradient_penalty",
    "loss_l1",
    "loss_wgan",
    "loss_wmse",
    "total_generator_loss",
    "weight_map",
    "wgan_critic_loss",
    "wgan_generator_loss",
    "PainterModel",
    "StereoPairs",
    "TrainResult",
    "TrainState",
    "build_model",
    "generator_forward",
    "identity_baseline_l1",
    "load_checkpoint",
    "save_checkpoint",
    "train",
]
