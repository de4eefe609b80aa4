"""Style-based generator and discriminator networks.

The generator has R resolution levels (4x4 up to 4*2^(R-1)) and one
style input location per convolution, i.e. S = 2R slots.  A latent row
enters each slot through a learned affine that modulates an AdaIN
normalization, so low slots steer coarse structure and high slots steer
fine detail.  Per-layer noise is drawn once from the config seed and
registered as a buffer, which makes every forward pass deterministic
given parameters and style code.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

DEFAULT_LR_BUCKETS = {128: 0.0015, 512: 0.002, 1024: 0.003}


def lr_for_resolution(resolution: int) -> float:
    """Learning rate by final training resolution: 0.0015 up to 128,
    0.002 for 256/512, 0.003 for 1024."""
    if resolution <= 128:
        return 0.0015
    if resolution <= 512:
        return 0.002
    return 0.003


@dataclass
class GeneratorConfig:
    levels: int = 4
    latent_dim: int = 64
    base_resolution: int = 4
    minibatch: int = 16
    learning_rate: float | None = None  # None -> lr_for_resolution(final)
    seed: int = 0
    channel_base: int = 512
    channel_max: int = 64
    r1_gamma: float = 1.0

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError("levels must be >= 2")
        if self.base_resolution != 4:
            raise ValueError("base_resolution is fixed at 4")

    @property
    def final_resolution(self) -> int:
        return self.base_resolution * 2 ** (self.levels - 1)

    @property
    def slots(self) -> int:
        return 2 * self.levels

    def channels(self, level: int) -> int:
        return max(8, min(self.channel_max, self.channel_base >> level))

    @property
    def lr(self) -> float:
        return self.learning_rate if self.learning_rate is not None else lr_for_resolution(self.final_resolution)

    def to_dict(self) -> dict:
        return {
            "levels": self.levels,
            "latent_dim": self.latent_dim,
            "base_resolution": self.base_resolution,
            "minibatch": self.minibatch,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
            "channel_base": self.channel_base,
            "channel_max": self.channel_max,
            "r1_gamma": self.r1_gamma,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(**d)


class PixelNorm(nn.Module):
    def forward(self, x):
        return x * torch.rsqrt(torch.mean(x ** 2, dim=1, keepdim=True) + 1e-8)


class MappingNetwork(nn.Module):
    """Latent z -> intermediate style vector w."""

    def __init__(self, cfg: GeneratorConfig, n_layers: int = 3):
        super().__init__()
        d = cfg.latent_dim
        layers: list[nn.Module] = [PixelNorm()]
        for _ in range(n_layers):
            layers += [nn.Linear(d, d), nn.LeakyReLU(0.2)]
        self.net = nn.Sequential(*layers)

    def forward(self, z):
        if not torch.isfinite(z).all():
            raise ValueError("latent input contains non-finite values")
        return self.net(z)


class AdaIN(nn.Module):
    def __init__(self, channels: int, latent_dim: int):
        super().__init__()
        self.affine = nn.Linear(latent_dim, 2 * channels)
        nn.init.zeros_(self.affine.bias)

    def forward(self, x, w):
        mean = x.mean(dim=(2, 3), keepdim=True)
        var = x.var(dim=(2, 3), keepdim=True, unbiased=False)
        x = (x - mean) * torch.rsqrt(var + 1e-8)
        style = self.affine(w)
        gamma, beta = style.chunk(2, dim=1)
        return x * (1 + gamma[:, :, None, None]) + beta[:, :, None, None]


class StyledLayer(nn.Module):
    """Noise injection + activation + AdaIN, consuming one style slot."""

    def __init__(self, channels: int, resolution: int, latent_dim: int, noise_rng: np.random.RandomState):
        super().__init__()
        self.noise_weight = nn.Parameter(torch.zeros(1))
        noise = torch.from_numpy(noise_rng.randn(1, 1, resolution, resolution).astype(np.float32))
        self.register_buffer("noise", noise)
        self.adain = AdaIN(channels, latent_dim)

    def forward(self, x, w):
        x = x + self.noise_weight * self.noise.to(x.dtype)
        x = F.leaky_relu(x, 0.2)
        return self.adain(x, w)


class SynthesisNetwork(nn.Module):
    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.cfg = cfg
        rng = np.random.RandomState(cfg.seed + 1)
        # spatially structured start point so coarse styles have layout to steer
        self.const = nn.Parameter(
            torch.from_numpy(rng.randn(1, cfg.channels(0), 4, 4).astype(np.float32))
        )
        convs = []
        styled = []
        res = 4
        for level in range(cfg.levels):
            ch = cfg.channels(level)
            if level == 0:
                convs.append(nn.Identity())
            else:
                res *= 2
                convs.append(nn.Conv2d(cfg.channels(level - 1), ch, 3, padding=1))
            styled.append(StyledLayer(ch, res, cfg.latent_dim, rng))
            convs.append(nn.Conv2d(ch, ch, 3, padding=1))
            styled.append(StyledLayer(ch, res, cfg.latent_dim, rng))
        self.convs = nn.ModuleList(convs)
        self.styled = nn.ModuleList(styled)
        # per-level RGB skip outputs: each level adds its contribution to an
        # upsampled running image, so early (coarse) styles act through every
        # later level while the last style only adds a fine residual
        self.to_rgb = nn.ModuleList(
            nn.Conv2d(cfg.channels(level), 3, 1) for level in range(cfg.levels)
        )

    def forward(self, codes):
        """codes: (B, S, d) style matrix; returns (B, 3, H, W) in [-1, 1]."""
        if codes.shape[1] != self.cfg.slots:
            raise ValueError(
                f"style code has {codes.shape[1]} rows, expected {self.cfg.slots}"
            )
        x = self.const.to(codes.dtype).expand(codes.shape[0], -1, -1, -1)
        rgb = None
        slot = 0
        for level in range(self.cfg.levels):
            conv_a, conv_b = self.convs[2 * level], self.convs[2 * level + 1]
            if level > 0:
                x = F.interpolate(x, scale_factor=2, mode="nearest")
            x = conv_a(x)
            x = self.styled[slot](x, codes[:, slot])
            slot += 1
            x = conv_b(x)
            x = self.styled[slot](x, codes[:, slot])
            slot += 1
            # halve each finer level's contribution so high slots add detail
            # residuals instead of overriding the coarse image
            contribution = self.to_rgb[level](x) * 3.0 ** -level
            if rgb is None:
                rgb = contribution
            else:
                rgb = F.interpolate(rgb, scale_factor=2, mode="nearest") + contribution
        return torch.tanh(rgb)


class Discriminator(nn.Module):
    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.cfg = cfg
        layers: list[nn.Module] = [nn.Conv2d(3, cfg.channels(cfg.levels - 1), 1), nn.LeakyReLU(0.2)]
        for level in range(cfg.levels - 1, 0, -1):
            layers += [
                nn.Conv2d(cfg.channels(level), cfg.channels(level - 1), 3, padding=1),
                nn.LeakyReLU(0.2),
                nn.AvgPool2d(2),
            ]
        self.body = nn.Sequential(*layers)
        ch = cfg.channels(0)
        self.head = nn.Sequential(
            nn.Flatten(),
            nn.Linear(ch * 16, ch),
            nn.LeakyReLU(0.2),
            nn.Linear(ch, 1),
        )

    def forward(self, images):
        if images.shape[-1] != self.cfg.final_resolution or images.shape[-2] != self.cfg.final_resolution:
            raise ValueError(
                f"discriminator expects {self.cfg.final_resolution}px images, got {tuple(images.shape[-2:])}"
            )
        return self.head(self.body(images)).squeeze(1)


def build_networks(cfg: GeneratorConfig) -> tuple[MappingNetwork, SynthesisNetwork, Discriminator]:
    torch.manual_seed(cfg.seed)
    return MappingNetwork(cfg), SynthesisNetwork(cfg), Discriminator(cfg)
