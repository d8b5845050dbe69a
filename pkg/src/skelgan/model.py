"""Network definitions for the scan-to-skeleton translator.

The generator is a U-Net encoder-decoder: an input image is halved by
strided convolutions down to a 1x1 bottleneck, then mirrored back up
with transposed convolutions, concatenating each encoder activation
onto the decoder level of the same resolution.  Noise enters only as
dropout on the innermost decoder levels, kept active at inference.

The discriminator is a patch classifier: a stack of strided
convolutions that maps a (scan, skeleton) channel pair to an MxM grid
of probabilities, one per receptive-field patch, so realism is judged
at patch scale rather than over the whole image.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


class SkelganError(Exception):
    pass


class ConfigError(SkelganError):
    pass


class DatasetError(SkelganError):
    pass


class CheckpointError(SkelganError):
    pass


#: Channel growth is capped at this multiple of the base width.
MAX_CHANNEL_MULT = 8

#: Innermost decoder levels that keep dropout as the noise source.
DROPOUT_LEVELS = 3

_DROPOUT_P = 0.5
_LEAKY_SLOPE = 0.2
_INIT_STD = 0.02


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters.

    image_size must be a power of two: the generator depth is derived
    from it (one halving per level down to a 1x1 bottleneck).  The
    discriminator needs image_size >= 4 * 2**discriminator_layers so
    its patch head still has spatial extent.
    """

    image_size: int = 256
    lambda_l1: float = 100.0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    discriminator_layers: int = 3
    epochs: int = 5
    batch_size: int = 4
    base_channels: int = 32
    seed: int = 0

    def validate(self) -> None:
        if self.discriminator_layers not in (3, 4, 5, 6):
            raise ConfigError(
                f"discriminator_layers must be in 3..6, got {self.discriminator_layers}")
        size = self.image_size
        if size < 16 or size & (size - 1):
            raise ConfigError(f"image_size must be a power of two >= 16, got {size}")
        if size < 4 * 2 ** self.discriminator_layers:
            raise ConfigError(
                f"image_size {size} too small for {self.discriminator_layers} "
                f"discriminator layers (needs >= {4 * 2 ** self.discriminator_layers})")
        if self.epochs < 1 or self.batch_size < 1 or self.base_channels < 1:
            raise ConfigError("epochs, batch_size and base_channels must be positive")
        if self.lambda_l1 < 0:
            raise ConfigError(f"lambda_l1 must be >= 0, got {self.lambda_l1}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")


def init_weights(module: nn.Module) -> None:
    """Gaussian initialization for convolution and norm layers."""
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
        nn.init.normal_(module.weight, 0.0, _INIT_STD)
        if module.bias is not None:
            nn.init.zeros_(module.bias)
    elif isinstance(module, nn.BatchNorm2d):
        nn.init.normal_(module.weight, 1.0, _INIT_STD)
        nn.init.zeros_(module.bias)


def _level_channels(base: int, depth: int) -> list[int]:
    """Encoder widths outermost-first: base, 2*base, ... capped at 8*base."""
    return [min(base * 2 ** i, base * MAX_CHANNEL_MULT) for i in range(depth)]


class _UnetBlock(nn.Module):
    """One recursive U-Net level: down-conv, inner block, up-conv, skip.

    The forward pass concatenates the level's input onto its upsampled
    output, which realizes the skip between encoder level i and decoder
    level n-i.  The outermost level returns the tanh image instead.
    """

    def __init__(self, outer_ch: int, inner_ch: int, inner: nn.Module | None,
                 *, outermost: bool = False, innermost: bool = False,
                 dropout: bool = False):
        super().__init__()
        self.outermost = outermost

        down: list[nn.Module] = []
        if not outermost:
            down.append(nn.LeakyReLU(_LEAKY_SLOPE))
        down.append(nn.Conv2d(outer_ch, inner_ch, 4, stride=2, padding=1))
        if not outermost and not innermost:
            down.append(nn.BatchNorm2d(inner_ch))

        # Non-innermost levels receive the inner skip concatenation.
        up_in = inner_ch if innermost else inner_ch * 2
        up: list[nn.Module] = [nn.ReLU()]
        if outermost:
            up += [nn.ConvTranspose2d(up_in, outer_ch, 4, stride=2, padding=1),
                   nn.Tanh()]
        else:
            up += [nn.ConvTranspose2d(up_in, outer_ch, 4, stride=2, padding=1),
                   nn.BatchNorm2d(outer_ch)]
            if dropout:
                up.append(nn.Dropout(_DROPOUT_P))

        self.down = nn.Sequential(*down)
        self.inner = inner
        self.up = nn.Sequential(*up)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.down(x)
        if self.inner is not None:
            h = self.inner(h)
        h = self.up(h)
        if self.outermost:
            return h
        return torch.cat([x, h], dim=1)


class UNetGenerator(nn.Module):
    """Grayscale-to-grayscale U-Net with depth log2(image_size)."""

    def __init__(self, image_size: int, base_channels: int):
        super().__init__()
        depth = image_size.bit_length() - 1
        widths = _level_channels(base_channels, depth)

        block = _UnetBlock(widths[depth - 2], widths[depth - 1], None,
                           innermost=True)
        for level in range(depth - 2, 0, -1):
            dropout = level >= depth - 1 - DROPOUT_LEVELS
            block = _UnetBlock(widths[level - 1], widths[level], block,
                               dropout=dropout)
        self.net = _UnetBlock(1, widths[0], block, outermost=True)
        self.apply(init_weights)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class PatchDiscriminator(nn.Module):
    """Patch classifier over concatenated (scan, skeleton) pairs.

    n_layers counts the strided halvings; a stride-1 block and a 1-channel
    head follow, and the sigmoid output is an MxM probability grid.
    """

    def __init__(self, n_layers: int, base_channels: int):
        super().__init__()
        widths = _level_channels(base_channels, n_layers + 1)
        layers: list[nn.Module] = [
            nn.Conv2d(2, widths[0], 4, stride=2, padding=1),
            nn.LeakyReLU(_LEAKY_SLOPE),
        ]
        for i in range(1, n_layers + 1):
            stride = 2 if i < n_layers else 1
            layers += [
                nn.Conv2d(widths[i - 1], widths[i], 4, stride=stride, padding=1),
                nn.BatchNorm2d(widths[i]),
                nn.LeakyReLU(_LEAKY_SLOPE),
            ]
        layers += [nn.Conv2d(widths[-1], 1, 4, stride=1, padding=1), nn.Sigmoid()]
        self.net = nn.Sequential(*layers)
        self.apply(init_weights)

    def forward(self, scan: torch.Tensor, candidate: torch.Tensor) -> torch.Tensor:
        return self.net(torch.cat([scan, candidate], dim=1))


def build_generator(cfg: TrainConfig) -> UNetGenerator:
    cfg.validate()
    return UNetGenerator(cfg.image_size, cfg.base_channels)


def build_discriminator(cfg: TrainConfig) -> PatchDiscriminator:
    cfg.validate()
    return PatchDiscriminator(cfg.discriminator_layers, cfg.base_channels)
