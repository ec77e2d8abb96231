"""Loss components of the adversarial translator.

The critic objective (to maximize) is
    mean(D(real)) - mean(D(fake)) - lambda * GP,
where GP penalizes the squared deviation of the critic's input gradient norm
from 1, measured at random interpolates between real and generated images.
The generator minimizes
    -mean(D(fake)) + alpha * L1 + beta * WMSE,
with WMSE weighting each pixel's squared error by a sigmoid of its absolute
error (the weight is detached: it modulates, it is not optimized).
"""

from __future__ import annotations

from typing import Callable, Optional

import torch

from ..errors import NumericsError, ShapeError
from .config import LossWeights


def loss_l1(fake: torch.Tensor, real: torch.Tensor) -> torch.Tensor:
    """Mean absolute elementwise difference."""
    if fake.shape != real.shape:
        raise ShapeError(f"shape mismatch: {tuple(fake.shape)} vs {tuple(real.shape)}")
    return (fake - real).abs().mean()


def weight_map(fake: torch.Tensor, real: torch.Tensor) -> torch.Tensor:
    """Per-element weight 1 / (1 + exp(-|real - fake|)), detached."""
    if fake.shape != real.shape:
        raise ShapeError(f"shape mismatch: {tuple(fake.shape)} vs {tuple(real.shape)}")
    return torch.sigmoid((real - fake).abs()).detach()


def loss_wmse(fake: torch.Tensor, real: torch.Tensor) -> torch.Tensor:
    """Mean of weight_map(fake, real) * squared error."""
    w = weight_map(fake, real)
    return (w * (real - fake) ** 2).mean()


def gradient_penalty(
    critic: Callable[[torch.Tensor, torch.Tensor], torch.Tensor],
    condition: torch.Tensor,
    real: torch.Tensor,
    fake: torch.Tensor,
    generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """Mean squared deviation of the critic's gradient norm from 1.

    Interpolates x_hat = eps*real + (1-eps)*fake per sample (eps uniform),
    differentiates the critic with respect to x_hat only (the condition is
    held fixed), and takes the L2 norm over all elements of each sample.
    """
    if real.shape != fake.shape:
        raise ShapeError(f"real {tuple(real.shape)} vs fake {tuple(fake.shape)}")
    n = real.shape[0]
    eps = torch.rand(
        (n,) + (1,) * (real.dim() - 1),
        generator=generator,
        dtype=real.dtype,
        device=real.device,
    )
    x_hat = (eps * real + (1.0 - eps) * fake).detach().requires_grad_(True)
    scores = critic(condition.detach(), x_hat)
    if not scores.requires_grad:  # critic ignores its candidate input entirely
        grads = torch.zeros_like(x_hat)
    else:
        grads = torch.autograd.grad(
            outputs=scores.sum(),
            inputs=x_hat,
            create_graph=True,
            allow_unused=True,
        )[0]
        if grads is None:
            grads = torch.zeros_like(x_hat)
    if not torch.isfinite(grads).all():
        raise NumericsError("non-finite gradients in the gradient penalty")
    norms = grads.reshape(n, -1).norm(2, dim=1)
    return ((norms - 1.0) ** 2).mean()


def loss_wgan(
    critic_real_scores: torch.Tensor,
    critic_fake_scores: torch.Tensor,
    gp: torch.Tensor | float,
    lambda_gp: float = 10.0,
) -> torch.Tensor:
    """Critic objective (to maximize): mean(real) - mean(fake) - lambda*gp."""
    if critic_real_scores.shape != critic_fake_scores.shape:
        raise ShapeError("real and fake score maps differ in shape")
    return critic_real_scores.mean() - critic_fake_scores.mean() - lambda_gp * gp


def wgan_critic_loss(
    critic_real_scores: torch.Tensor,
    critic_fake_scores: torch.Tensor,
    gp: torch.Tensor | float,
    lambda_gp: float = 10.0,
) -> torch.Tensor:
    """Critic loss to minimize: the negated objective."""
    return -loss_wgan(critic_real_scores, critic_fake_scores, gp, lambda_gp)


def wgan_generator_loss(critic_fake_scores: torch.Tensor) -> torch.Tensor:
    """Generator adversarial term: -mean(D(fake))."""
    return -critic_fake_scores.mean()


def total_generator_loss(
    adv: torch.Tensor | float,
    l1: torch.Tensor | float,
    wmse: torch.Tensor | float,
    weights: LossWeights = LossWeights(),
) -> torch.Tensor | float:
    """adv + alpha * L1 + beta * WMSE."""
    return adv + weights.loss_alpha * l1 + weights.loss_beta * wmse
