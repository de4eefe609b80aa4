"""Frechet distance between Gaussian fits of image feature sets.

The feature extractor is a small frozen convolutional embedder with
seeded random weights (numpy RandomState, so the parameter bytes are
identical across platforms and pinned by hash).  The Frechet math is the
standard closed form:

    d^2 = |mu1 - mu2|^2 + tr(C1 + C2 - 2 (C1 C2)^{1/2})
"""

from __future__ import annotations

import hashlib

import numpy as np
import scipy.linalg
import torch
import torch.nn as nn
import torch.nn.functional as F

EMBED_DIM = 64
EMBED_SEED = 97


class FeatureEmbedder(nn.Module):
    """Three strided random convolutions, global-average pooled."""

    def __init__(self, seed: int = EMBED_SEED, dim: int = EMBED_DIM):
        super().__init__()
        rng = np.random.RandomState(seed)
        chans = [3, 32, 48, dim]
        self.convs = nn.ModuleList()
        for cin, cout in zip(chans, chans[1:]):
            conv = nn.Conv2d(cin, cout, 3, stride=2, padding=1)
            w = rng.randn(cout, cin, 3, 3).astype(np.float32) / np.sqrt(cin * 9)
            with torch.no_grad():
                conv.weight.copy_(torch.from_numpy(w))
                conv.bias.zero_()
            conv.weight.requires_grad_(False)
            conv.bias.requires_grad_(False)
            self.convs.append(conv)

    def weights_hash(self) -> str:
        h = hashlib.sha256()
        for conv in self.convs:
            h.update(conv.weight.detach().numpy().tobytes())
            h.update(conv.bias.detach().numpy().tobytes())
        return h.hexdigest()

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        x = images
        for conv in self.convs:
            x = F.leaky_relu(conv(x), 0.2)
        return x.mean(dim=(2, 3))


_embedder: FeatureEmbedder | None = None


def embed_images(images: list[np.ndarray], chunk: int = 64) -> np.ndarray:
    """HxWx3 uint8 (or [0,1] float) images -> (N, EMBED_DIM) features."""
    global _embedder
    if _embedder is None:
        _embedder = FeatureEmbedder()
    from .model import from_uint8

    feats = []
    for i in range(0, len(images), chunk):
        batch = torch.stack([from_uint8(im) for im in images[i:i + chunk]])
        with torch.no_grad():
            feats.append(_embedder(batch).numpy())
    return np.concatenate(feats) if feats else np.zeros((0, EMBED_DIM))


def gaussian_stats(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise ValueError("need at least 2 feature vectors to fit a Gaussian")
    return features.mean(axis=0), np.cov(features, rowvar=False)


def frechet_distance(mu1, sigma1, mu2, sigma2) -> float:
    diff = mu1 - mu2
    covmean, _ = scipy.linalg.sqrtm(sigma1 @ sigma2, disp=False)
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    fid = diff @ diff + np.trace(sigma1) + np.trace(sigma2) - 2 * np.trace(covmean)
    return float(max(fid, 0.0))


def _as_features(x) -> np.ndarray:
    if isinstance(x, np.ndarray) and x.ndim == 2:
        return x
    return embed_images(list(x))


def compute_fid(real, fake) -> float:
    """FID between two sets of images or precomputed feature arrays."""
    f_real, f_fake = _as_features(real), _as_features(fake)
    return frechet_distance(*gaussian_stats(f_real), *gaussian_stats(f_fake))
