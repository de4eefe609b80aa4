"""Latent code search: invert an image into the generator's per-slot
style space by plain gradient descent on perceptual loss.

All S rows of the style code are optimized independently (extended
per-slot space), matching how style merging consumes codes.  The loss is
the differentiable counterpart of the perception module's multi-scale
backend; the best iterate seen is returned, not the last.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F

from .gan.model import GanModel
from .perception import _active_factors


@dataclass
class EncodeConfig:
    max_iterations: int = 500
    step_size: float = 1.0
    init_mode: str = "mean_w"  # or "seeded_random"
    loss_floor: float = 0.0
    seed: int = 0
    pixel_weight: float = 0.0  # optional auxiliary pixel-distance term

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        if self.init_mode not in ("mean_w", "seeded_random"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")


@dataclass
class EncodeResult:
    code: np.ndarray  # S x d
    loss_trace: list[float]  # best-so-far loss after each evaluation
    final_loss: float

    def __post_init__(self):
        if not self.loss_trace:
            raise ValueError("loss_trace must be non-empty")
        if self.final_loss != self.loss_trace[-1]:
            raise ValueError("final_loss must equal the last trace entry")


def multiscale_loss(a: torch.Tensor, b: torch.Tensor, pixel_weight: float = 0.0) -> torch.Tensor:
    """Differentiable multi-scale distance between (3, H, W) tensors in
    [0, 1]; numerically identical to the perception module's multiscale
    backend for images up to 256 px."""
    if a.shape != b.shape:
        raise ValueError(f"resolution mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")
    factors = _active_factors(a.shape[1], a.shape[2])
    total = a.new_zeros(())
    for f in factors:
        pa = F.avg_pool2d(a.unsqueeze(0), f) if f > 1 else a.unsqueeze(0)
        pb = F.avg_pool2d(b.unsqueeze(0), f) if f > 1 else b.unsqueeze(0)
        total = total + (pa - pb).abs().mean()
    loss = total / len(factors)
    if pixel_weight:
        loss = loss + pixel_weight * (a - b).abs().mean()
    return loss


def make_loss_fn(model: GanModel, target: np.ndarray, cfg: EncodeConfig | None = None):
    """Loss over a style-code tensor against a fixed uint8 target image."""
    cfg = cfg or EncodeConfig()
    t = torch.from_numpy(np.asarray(target, dtype=np.float64) / 255.0)
    t = t.permute(2, 0, 1).to(model.dtype)
    res = model.cfg.final_resolution
    if t.shape[1] != res or t.shape[2] != res:
        raise ValueError(f"target is {tuple(t.shape[1:])}, generator expects {res}x{res}")

    def loss_fn(code: torch.Tensor) -> torch.Tensor:
        img = model.synthesis(code.unsqueeze(0))[0]
        return multiscale_loss((img + 1) / 2, t, cfg.pixel_weight)

    return loss_fn


def init_code(model: GanModel, cfg: EncodeConfig) -> np.ndarray:
    if cfg.init_mode == "mean_w":
        return model.broadcast(model.mean_w())
    rng = np.random.RandomState(cfg.seed)
    return model.broadcast(model.map_latent(rng.randn(model.cfg.latent_dim)))


def encode(target: np.ndarray, model: GanModel, cfg: EncodeConfig | None = None) -> EncodeResult:
    """Gradient-descent search for the style code whose synthesis best
    matches `target`. Deterministic given cfg.seed."""
    cfg = cfg or EncodeConfig()
    loss_fn = make_loss_fn(model, target, cfg)
    code = torch.from_numpy(init_code(model, cfg).astype(np.float64)).to(model.dtype)
    code.requires_grad_(True)

    with torch.no_grad():
        current = float(loss_fn(code).item())
    best_loss = current
    best_code = code.detach().clone()
    trace = [best_loss]

    for _ in range(cfg.max_iterations):
        loss = loss_fn(code)
        if not torch.isfinite(loss):
            raise RuntimeError(f"non-finite loss during latent search; trace={trace}")
        (grad,) = torch.autograd.grad(loss, code)
        with torch.no_grad():
            code -= cfg.step_size * grad
            current = float(loss_fn(code).item())
        if current < best_loss:
            best_loss = current
            best_code = code.detach().clone()
        trace.append(best_loss)
        if best_loss <= cfg.loss_floor:
            break

    result_code = best_code.cpu().numpy()
    if not np.isfinite(result_code).all():
        raise RuntimeError("latent search produced non-finite code")
    return EncodeResult(code=result_code, loss_trace=trace, final_loss=trace[-1])
