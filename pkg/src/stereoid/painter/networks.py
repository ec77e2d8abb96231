"""Generator and critic architectures.

The generator is a U-Net: each encoder level applies two 3x3 convolutions
(instance norm, ReLU) and then 2x2 stride-2 max pooling; the decoder mirrors
with 2x2 transposed convolutions, skip concatenation, and the same double
convolution. Features double per encoder level from ngf and halve back down;
a 1x1 convolution plus tanh maps to the output channels.

The critic is a Markovian patch critic: stride-2 4x4 conv blocks with
instance norm and LeakyReLU, then a stride-1 block and a 1-channel head,
emitting an unsquashed score per receptive-field patch (70x70 at the default
three stride-2 layers).
"""

from __future__ import annotations

import torch
import torch.nn as nn

from ..errors import ShapeError
from .config import CriticConfig, GeneratorConfig


def _double_conv(in_ch: int, out_ch: int) -> nn.Sequential:
    # bias omitted: instance norm subtracts it straight back out
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, kernel_size=3, padding=1, bias=False),
        nn.InstanceNorm2d(out_ch),
        nn.ReLU(inplace=True),
        nn.Conv2d(out_ch, out_ch, kernel_size=3, padding=1, bias=False),
        nn.InstanceNorm2d(out_ch),
        nn.ReLU(inplace=True),
    )


class UNetGenerator(nn.Module):
    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.cfg = cfg
        levels = cfg.depth_levels
        widths = [cfg.ngf * (2**i) for i in range(levels)]

        self.encoders = nn.ModuleList()
        in_ch = cfg.in_channels
        for w in widths:
            self.encoders.append(_double_conv(in_ch, w))
            in_ch = w
        self.pool = nn.MaxPool2d(kernel_size=2, stride=2)

        self.ups = nn.ModuleList()
        self.decoders = nn.ModuleList()
        prev = widths[-1]  # channels at the bottom (after the last pool)
        for i in range(levels - 1, -1, -1):
            self.ups.append(nn.ConvTranspose2d(prev, prev, kernel_size=2, stride=2))
            out_ch = widths[i - 1] if i >= 1 else cfg.ngf
            self.decoders.append(_double_conv(prev + widths[i], out_ch))
            prev = out_ch
        self.head = nn.Conv2d(prev, cfg.out_channels, kernel_size=1)

    @property
    def encoder_widths(self) -> list[int]:
        return [self.cfg.ngf * (2**i) for i in range(self.cfg.depth_levels)]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        levels = self.cfg.depth_levels
        h, w = x.shape[-2:]
        divisor = 2**levels
        if h % divisor or w % divisor:
            raise ShapeError(
                f"input {h}x{w} not divisible by 2^depth_levels = {divisor}"
            )
        skips = []
        for enc in self.encoders:
            x = enc(x)
            skips.append(x)
            x = self.pool(x)
        for up, dec, skip in zip(self.ups, self.decoders, reversed(skips)):
            x = up(x)
            x = dec(torch.cat([x, skip], dim=1))
        return torch.tanh(self.head(x))


class PatchCritic(nn.Module):
    def __init__(self, cfg: CriticConfig):
        super().__init__()
        self.cfg = cfg
        layers: list[nn.Module] = []
        in_ch = cfg.in_channels
        width = cfg.ndf
        for _ in range(cfg.n_layers):
            layers += [
                nn.Conv2d(in_ch, width, kernel_size=4, stride=2, padding=1, bias=False),
                nn.InstanceNorm2d(width),
                nn.LeakyReLU(cfg.leaky_slope, inplace=True),
            ]
            in_ch = width
            width *= 2
        # stride-1 block, then the unsquashed 1-channel patch-score head
        layers += [
            nn.Conv2d(in_ch, width, kernel_size=4, stride=1, padding=1, bias=False),
            nn.InstanceNorm2d(width),
            nn.LeakyReLU(cfg.leaky_slope, inplace=True),
            nn.Conv2d(width, 1, kernel_size=4, stride=1, padding=1),
        ]
        self.net = nn.Sequential(*layers)

    def forward(self, condition: torch.Tensor, candidate: torch.Tensor) -> torch.Tensor:
        if condition.shape[-2:] != candidate.shape[-2:]:
            raise ShapeError(
                f"condition {tuple(condition.shape)} and candidate "
                f"{tuple(candidate.shape)} disagree spatially"
            )
        return self.net(torch.cat([condition, candidate], dim=1))

    def conv_stack(self) -> list[tuple[int, int]]:
        """(kernel, stride) of every convolution, in order."""
        return [
            (m.kernel_size[0], m.stride[0])
            for m in self.net
            if isinstance(m, nn.Conv2d)
        ]

    def receptive_field(self) -> int:
        return receptive_field(self.conv_stack())


def receptive_field(stack: list[tuple[int, int]]) -> int:
    """Receptive field of one output unit of a conv stack."""
    rf, jump = 1, 1
    for kernel, stride in stack:
        rf += (kernel - 1) * jump
        jump *= stride
    return rf


def build_generator(cfg: GeneratorConfig) -> UNetGenerator:
    return UNetGenerator(cfg)


def build_critic(cfg: CriticConfig) -> PatchCritic:
    return PatchCritic(cfg)
