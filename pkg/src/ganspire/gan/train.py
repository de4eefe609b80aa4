"""Adversarial training loop.

Non-saturating logistic loss with R1 regularization on reals; the
discriminator steps once per generator step; optimizer hyperparameters
are refreshed every 4 minibatches; no horizontal-mirror augmentation.
Training stops early when the FID evaluation worsens for three
consecutive evaluations, and the returned checkpoint is the best-FID
snapshot.
"""

from __future__ import annotations

import copy
from typing import Callable, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from .checkpoint import Checkpoint
from .fid import compute_fid, embed_images
from .nets import GeneratorConfig, build_networks

ADJUST_INTERVAL = 4  # minibatches between hyperparameter refreshes
PATIENCE = 3  # consecutive worsening FID evaluations before stopping


def should_stop(fid_values: Sequence[float], patience: int = PATIENCE) -> bool:
    """True once the last `patience` values each exceed their predecessor."""
    if len(fid_values) < patience + 1:
        return False
    tail = fid_values[-(patience + 1):]
    return all(b > a for a, b in zip(tail, tail[1:]))


def run_stopping_rule(fid_values: Sequence[float], patience: int = PATIENCE) -> tuple[int, float]:
    """Feed values in order; return (index after which training stops,
    best value seen). Index is len(values) if the rule never fires."""
    best = float("inf")
    seen: list[float] = []
    for i, v in enumerate(fid_values):
        seen.append(v)
        best = min(best, v)
        if should_stop(seen, patience):
            return i + 1, best
    return len(seen), best


class TrainingDiverged(RuntimeError):
    pass


def train(
    corpus: list[np.ndarray],
    cfg: GeneratorConfig,
    max_steps: int = 500,
    eval_every: int = 50,
    fid_samples: int = 64,
    progress: Callable[[int, dict], None] | None = None,
) -> Checkpoint:
    """Train on a list of uint8 images at cfg.final_resolution; return the
    best-FID checkpoint."""
    if not corpus:
        raise ValueError("training corpus is empty")
    res = cfg.final_resolution
    for i, img in enumerate(corpus):
        if img.shape[:2] != (res, res):
            raise ValueError(f"corpus image {i} is {img.shape[:2]}, expected {(res, res)}")

    torch.manual_seed(cfg.seed)
    mapping, synthesis, discriminator = build_networks(cfg)
    lr = cfg.lr
    opt_g = torch.optim.Adam(
        list(mapping.parameters()) + list(synthesis.parameters()), lr=lr, betas=(0.0, 0.99)
    )
    opt_d = torch.optim.Adam(discriminator.parameters(), lr=lr, betas=(0.0, 0.99))

    data = torch.stack(
        [torch.from_numpy(img.astype(np.float32) / 127.5 - 1).permute(2, 0, 1) for img in corpus]
    )
    rng = np.random.RandomState(cfg.seed + 11)
    fid_rng = np.random.RandomState(cfg.seed + 13)
    real_features = embed_images([corpus[i] for i in range(min(len(corpus), 256))])

    fid_history: list[tuple[int, float]] = []
    best: tuple[float, Checkpoint] | None = None

    def sample_codes(n: int, generator_rng: np.random.RandomState) -> torch.Tensor:
        z = torch.from_numpy(generator_rng.randn(n, cfg.latent_dim).astype(np.float32))
        w = mapping(z)
        return w.unsqueeze(1).expand(-1, cfg.slots, -1)

    def evaluate_fid(step: int) -> float:
        with torch.no_grad():
            codes = sample_codes(fid_samples, np.random.RandomState(cfg.seed + 17))
            fakes = synthesis(codes)
        fake_imgs = [
            ((f.clamp(-1, 1) + 1) * 127.5).round().to(torch.uint8).permute(1, 2, 0).numpy()
            for f in fakes
        ]
        return compute_fid(real_features, embed_images(fake_imgs))

    step = 0
    while step < max_steps:
        step += 1
        idx = rng.choice(len(corpus), size=min(cfg.minibatch, len(corpus)), replace=False)
        real = data[idx]

        # discriminator step
        real.requires_grad_(True)
        d_real = discriminator(real)
        with torch.no_grad():
            fake = synthesis(sample_codes(len(idx), rng))
        d_fake = discriminator(fake)
        grad_real = torch.autograd.grad(d_real.sum(), real, create_graph=True)[0]
        r1 = grad_real.pow(2).sum(dim=(1, 2, 3)).mean()
        loss_d = F.softplus(d_fake).mean() + F.softplus(-d_real).mean() + cfg.r1_gamma / 2 * r1
        opt_d.zero_grad()
        loss_d.backward()
        opt_d.step()
        real.requires_grad_(False)

        # generator step
        fake = synthesis(sample_codes(cfg.minibatch, rng))
        loss_g = F.softplus(-discriminator(fake)).mean()
        opt_g.zero_grad()
        loss_g.backward()
        opt_g.step()

        if not (torch.isfinite(loss_d) and torch.isfinite(loss_g)):
            raise TrainingDiverged(
                f"non-finite loss at step {step}: d={loss_d.item()}, g={loss_g.item()}"
            )

        if step % ADJUST_INTERVAL == 0:
            # hyperparameter refresh tick: re-assert the schedule's lr
            for opt in (opt_g, opt_d):
                for group in opt.param_groups:
                    group["lr"] = lr

        if step % eval_every == 0 or step == max_steps:
            fid = evaluate_fid(step)
            fid_history.append((step, fid))
            if best is None or fid < best[0]:
                best = (
                    fid,
                    Checkpoint.from_modules(
                        cfg, mapping, synthesis, discriminator, step=step,
                        fid_history=list(fid_history),
                    ),
                )
            if progress:
                progress(step, {"fid": fid, "loss_d": loss_d.item(), "loss_g": loss_g.item()})
            if should_stop([v for _, v in fid_history]):
                break

    assert best is not None
    ckpt = best[1]
    ckpt.fid_history = list(fid_history)
    return ckpt
