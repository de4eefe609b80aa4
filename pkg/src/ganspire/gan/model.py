"""Inference wrapper around a checkpoint: latent mapping, synthesis,
discriminator scoring. Stateless per call; safe for concurrent readers."""

from __future__ import annotations

import numpy as np
import torch

from .checkpoint import Checkpoint


def to_uint8(t: torch.Tensor) -> np.ndarray:
    """(3, H, W) tensor in [-1, 1] -> HxWx3 uint8."""
    arr = ((t.clamp(-1, 1) + 1) * 127.5).round().to(torch.uint8)
    return arr.permute(1, 2, 0).cpu().numpy()


def from_uint8(img: np.ndarray, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """HxWx3 uint8 (or float in [0, 1]) -> (3, H, W) tensor in [-1, 1]."""
    a = np.asarray(img)
    if a.dtype == np.uint8:
        a = a.astype(np.float32) / 255.0
    t = torch.from_numpy(np.ascontiguousarray(a)).to(dtype)
    return t.permute(2, 0, 1) * 2 - 1


class GanModel:
    def __init__(self, ckpt: Checkpoint, dtype: torch.dtype = torch.float32):
        self.ckpt = ckpt
        self.cfg = ckpt.config
        self.dtype = dtype
        self.mapping, self.synthesis, self.discriminator = ckpt.build_modules(dtype)
        self._mean_w: np.ndarray | None = None

    # -- latent mapping -------------------------------------------------

    def map_latent(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.cfg.latent_dim,):
            raise ValueError(f"latent must have shape ({self.cfg.latent_dim},)")
        if not np.isfinite(z).all():
            raise ValueError("latent contains non-finite values")
        with torch.no_grad():
            w = self.mapping(torch.from_numpy(z).to(self.dtype).unsqueeze(0))
        return w.squeeze(0).cpu().numpy()

    def broadcast(self, w: np.ndarray) -> np.ndarray:
        """Lift one w row to a full S x d style code."""
        w = np.asarray(w)
        if w.shape != (self.cfg.latent_dim,):
            raise ValueError(f"w must have shape ({self.cfg.latent_dim},)")
        return np.tile(w, (self.cfg.slots, 1))

    def random_codes(self, k: int, seed: int) -> list[np.ndarray]:
        rng = np.random.RandomState(seed)
        return [
            self.broadcast(self.map_latent(rng.randn(self.cfg.latent_dim)))
            for _ in range(k)
        ]

    def mean_w(self, n: int = 10_000, seed: int = 1234) -> np.ndarray:
        """Mean of w over n mapped random latents (cached)."""
        if self._mean_w is None:
            rng = np.random.RandomState(seed)
            z = torch.from_numpy(rng.randn(n, self.cfg.latent_dim)).to(self.dtype)
            with torch.no_grad():
                w = self.mapping(z)
            self._mean_w = w.mean(dim=0).cpu().numpy()
        return self._mean_w

    # -- synthesis ------------------------------------------------------

    def _check_code(self, code: np.ndarray) -> np.ndarray:
        code = np.asarray(code)
        if code.shape != (self.cfg.slots, self.cfg.latent_dim):
            raise ValueError(
                f"style code must be {self.cfg.slots}x{self.cfg.latent_dim}, got {code.shape}"
            )
        if not np.isfinite(code).all():
            raise ValueError("style code contains non-finite values")
        return code

    def synthesize_tensor(self, codes: torch.Tensor) -> torch.Tensor:
        with torch.no_grad():
            return self.synthesis(codes)

    def synthesize(self, code: np.ndarray) -> np.ndarray:
        """Style code -> HxWx3 uint8 image. Deterministic (noise pinned)."""
        code = self._check_code(code)
        batch = torch.from_numpy(code).to(self.dtype).unsqueeze(0)
        return to_uint8(self.synthesize_tensor(batch)[0])

    # chunk=1: conv results differ at the ulp level across batch sizes,
    # which can flip uint8 rounding; per-sample synthesis keeps images
    # bit-identical however they are grouped.
    def synthesize_batch(self, codes: list[np.ndarray], chunk: int = 1) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        checked = [self._check_code(c) for c in codes]
        for i in range(0, len(checked), chunk):
            batch = torch.from_numpy(np.stack(checked[i:i + chunk])).to(self.dtype)
            imgs = self.synthesize_tensor(batch)
            out.extend(to_uint8(img) for img in imgs)
        return out

    # -- discriminator --------------------------------------------------

    def discriminator_score(self, image: np.ndarray) -> float:
        """Realism logit; higher means the model finds the image more real."""
        t = from_uint8(image, self.dtype).unsqueeze(0)
        with torch.no_grad():
            return float(self.discriminator(t)[0].item())

    def discriminator_scores(self, images: list[np.ndarray], chunk: int = 64) -> list[float]:
        scores: list[float] = []
        for i in range(0, len(images), chunk):
            batch = torch.stack([from_uint8(im, self.dtype) for im in images[i:i + chunk]])
            with torch.no_grad():
                scores.extend(float(v) for v in self.discriminator(batch))
        return scores
