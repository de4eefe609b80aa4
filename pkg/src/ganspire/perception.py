"""Perceptual distance between images.

Every downstream stage (inversion loss, clustering, similarity/diversity
metrics, nearest-real search) consumes the single ``dist(a, b) -> [0, 1]``
interface defined here, so backends are interchangeable.

Two backends are provided:

- ``multiscale``: deterministic multi-scale normalized pixel distance.
  Images are converted to float in [0, 1]; at each scale the image is
  average-pooled by a power-of-two factor and the mean absolute channel
  difference is taken; the final distance is the mean over scales.  The
  value is naturally in [0, 1] (all-black vs all-white = 1.0) so the
  calibration constant is 1.  This backend needs no model weights and is
  exactly reproducible across platforms.
- ``frozenconv``: features from a frozen convolutional embedder with
  seeded random weights, compared by normalized L1.  A stand-in for a
  learned perceptual model when no pretrained weights are available.

Images larger than 256 px on their longest side are average-pooled down
before comparison to bound cost.
"""

from __future__ import annotations

import numpy as np

MAX_SIDE = 256

# Pooling factors defining the scale pyramid; scales whose output would
# drop below 4 px on the short side are skipped.
SCALE_FACTORS = (1, 2, 4, 8)


def _to_float(img: np.ndarray) -> np.ndarray:
    """Accept HxWx3 uint8 or float arrays, return float64 in [0, 1]."""
    a = np.asarray(img)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError(f"expected HxWx3 image, got shape {a.shape}")
    if a.dtype == np.uint8:
        return a.astype(np.float64) / 255.0
    return a.astype(np.float64)


def _avg_pool(a: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return a
    h, w, c = a.shape
    h2, w2 = h - h % factor, w - w % factor
    a = a[:h2, :w2]
    return a.reshape(h2 // factor, factor, w2 // factor, factor, c).mean(axis=(1, 3))


def _active_factors(h: int, w: int) -> list[int]:
    return [f for f in SCALE_FACTORS if min(h, w) // f >= 4] or [1]


class MultiScaleBackend:
    """Deterministic multi-scale pixel-difference distance."""

    id = "multiscale-v1"

    def features(self, images: list[np.ndarray]) -> np.ndarray:
        """Per-image feature vectors whose L1 distance equals dist()."""
        if not images:
            return np.zeros((0, 0))
        prepped = [self._prep(im) for im in images]
        shape = prepped[0].shape
        for i, p in enumerate(prepped):
            if p.shape != shape:
                raise ValueError(
                    f"resolution mismatch: image 0 is {shape[:2]}, image {i} is {p.shape[:2]}"
                )
        factors = _active_factors(shape[0], shape[1])
        feats = []
        for p in prepped:
            parts = []
            for f in factors:
                pooled = _avg_pool(p, f)
                parts.append(pooled.ravel() / (len(factors) * pooled.size))
            feats.append(np.concatenate(parts))
        return np.stack(feats)

    def _prep(self, img: np.ndarray) -> np.ndarray:
        a = _to_float(img)
        side = max(a.shape[0], a.shape[1])
        factor = 1
        while side / factor > MAX_SIDE:
            factor *= 2
        return _avg_pool(a, factor)

    def dist(self, a: np.ndarray, b: np.ndarray) -> float:
        fa, fb = self.features([a, b])
        return float(min(np.abs(fa - fb).sum(), 1.0))

    def pairwise(self, images: list[np.ndarray]) -> np.ndarray:
        feats = self.features(images)
        n = len(images)
        dm = np.zeros((n, n))
        for i in range(n):
            diffs = np.abs(feats[i + 1:] - feats[i]).sum(axis=1)
            dm[i, i + 1:] = diffs
            dm[i + 1:, i] = diffs
        return np.minimum(dm, 1.0)


class FrozenConvBackend:
    """Distance from a frozen random-weight convolutional embedding.

    Channel-normalized feature maps at three scales, compared by mean
    absolute difference and clamped to [0, 1] through a pinned
    calibration constant.
    """

    id = "frozenconv-v1"

    def __init__(self, seed: int = 7, n_filters: int = 24, calibration_max: float = 2.0):
        rng = np.random.RandomState(seed)
        self.kernels = rng.randn(n_filters, 3, 3, 3).astype(np.float64)
        self.kernels /= np.sqrt((self.kernels ** 2).sum(axis=(1, 2, 3), keepdims=True))
        self.calibration_max = calibration_max

    def _conv(self, a: np.ndarray) -> np.ndarray:
        # valid 3x3 convolution via stacked shifts; a is HxWx3
        h, w, _ = a.shape
        patches = np.stack(
            [a[i:h - 2 + i, j:w - 2 + j, :] for i in range(3) for j in range(3)],
            axis=-1,
        )  # (h-2, w-2, 3, 9)
        # kernels are (f, kh, kw, c); patches last axis enumerates (kh, kw)
        kflat = self.kernels.transpose(0, 3, 1, 2).reshape(self.kernels.shape[0], 3, 9)
        out = np.einsum("hwcp,fcp->hwf", patches, kflat)
        # per-channel unit normalization
        norm = np.sqrt((out ** 2).sum(axis=2, keepdims=True)) + 1e-10
        return out / norm

    def _embed(self, img: np.ndarray) -> np.ndarray:
        a = MultiScaleBackend()._prep(img)
        factors = _active_factors(a.shape[0], a.shape[1])[:3]
        parts = []
        for f in factors:
            pooled = _avg_pool(a, f)
            fm = self._conv(pooled)
            parts.append(fm.ravel() / (len(factors) * fm.size))
        return np.concatenate(parts)

    def dist(self, a: np.ndarray, b: np.ndarray) -> float:
        fa, fb = self._embed(a), self._embed(b)
        if fa.shape != fb.shape:
            raise ValueError("resolution mismatch between images")
        raw = np.abs(fa - fb).sum()
        return float(min(raw / self.calibration_max, 1.0))

    def pairwise(self, images: list[np.ndarray]) -> np.ndarray:
        feats = [self._embed(im) for im in images]
        n = len(images)
        dm = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                if feats[i].shape != feats[j].shape:
                    raise ValueError(f"resolution mismatch between images {i} and {j}")
                dm[i, j] = dm[j, i] = min(
                    np.abs(feats[i] - feats[j]).sum() / self.calibration_max, 1.0
                )
        return dm


BACKENDS = {
    "multiscale": MultiScaleBackend,
    "frozenconv": FrozenConvBackend,
}


def get_backend(name: str = "multiscale"):
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ValueError(f"unknown perception backend {name!r}; choose from {sorted(BACKENDS)}")


def validate_distance_matrix(dm: np.ndarray) -> None:
    """Raise if dm violates the distance-matrix contract."""
    dm = np.asarray(dm)
    if dm.ndim != 2 or dm.shape[0] != dm.shape[1]:
        raise ValueError("distance matrix must be square")
    if not np.allclose(dm, dm.T, atol=1e-12):
        raise ValueError("distance matrix must be symmetric")
    if not np.allclose(np.diag(dm), 0.0, atol=1e-12):
        raise ValueError("distance matrix diagonal must be zero")
    if dm.min() < 0 or dm.max() > 1 + 1e-12:
        raise ValueError("distance matrix entries must lie in [0, 1]")
