"""Configuration records for the stereo image translator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..errors import ConfigError


@dataclass(frozen=True)
class GeneratorConfig:
    ngf: int = 64  # features at the first encoder level; doubles per level
    depth_levels: int = 5  # number of down/up levels
    in_channels: int = 9  # left image + both depth contexts
    out_channels: int = 3

    def __post_init__(self):
        if self.ngf < 1:
            raise ConfigError("ngf must be >= 1")
        if self.depth_levels < 1:
            raise ConfigError("depth_levels must be >= 1")
        if 512 % (2**self.depth_levels) != 0:
            raise ConfigError(
                f"512 must be divisible by 2^depth_levels (got {self.depth_levels})"
            )


@dataclass(frozen=True)
class CriticConfig:
    ndf: int = 64
    n_layers: int = 3  # stride-2 blocks; 3 gives a 70x70 receptive field
    leaky_slope: float = 0.2
    in_channels: int = 12  # 9-channel condition + 3-channel candidate

    def __post_init__(self):
        if self.ndf < 1:
            raise ConfigError("ndf must be >= 1")
        if self.n_layers < 1:
            raise ConfigError("n_layers must be >= 1")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ConfigError("leaky_slope must be in (0, 1)")


@dataclass(frozen=True)
class LossWeights:
    lambda_gp: float = 10.0
    loss_alpha: float = 100.0  # L1 term weight
    loss_beta: float = 1.0  # weighted-MSE term weight

    def __post_init__(self):
        if self.lambda_gp < 0 or self.loss_alpha < 0 or self.loss_beta < 0:
            raise ConfigError("loss weights must be nonnegative")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    learning_rate: float = 0.001
    critic_iterations: int = 5  # critic updates per generator update
    max_steps: int = 2000  # generator steps
    early_stop_patience: int = 10  # epochs without validation improvement
    seed: int = 0
    checkpoint_dir: Optional[str] = None
    adam_beta1: float = 0.5
    adam_beta2: float = 0.9
    log_path: Optional[str] = None
    stop_below_val_l1: Optional[float] = None  # stop once validation clears a target

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.critic_iterations < 1:
            raise ConfigError("critic_iterations must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.max_steps < 0:
            raise ConfigError("max_steps must be >= 0")
        if self.early_stop_patience < 1:
            raise ConfigError("early_stop_patience must be >= 1")
