"""Style merging: enumerate every contiguous slot range and synthesize
one source/target blend per range.

With S slots there are S(S+1)/2 contiguous inclusive ranges (136 for
S=16), spanning coarse structural influence (low slots) through fine
detail (high slots).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gan.model import GanModel


@dataclass(frozen=True, order=True)
class SlotRange:
    start: int
    end: int  # inclusive

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"invalid slot range ({self.start}, {self.end})")

    def contains(self, slot: int) -> bool:
        return self.start <= slot <= self.end


@dataclass
class MergeBatch:
    source_id: str
    target_id: str
    items: list[tuple[SlotRange, np.ndarray]]


GRANULARITIES = ("coarse", "middle", "fine")


def granularity_of(r: SlotRange, slots: int) -> str:
    """Inspiration granularity of a slot range, by thirds of the slot
    axis: coarse = starts in the first third, fine = lies entirely in
    the last third, middle = everything else. The three labels
    partition the range set."""
    third = slots / 3
    if r.start < third:
        return "coarse"
    if r.start >= 2 * third:
        return "fine"
    return "middle"


def enumerate_ranges(slots: int) -> list[SlotRange]:
    """All contiguous inclusive (start, end) ranges, lexicographic order."""
    if slots < 1:
        raise ValueError("slot count must be >= 1")
    return [SlotRange(s, e) for s in range(slots) for e in range(s, slots)]


def merge_codes(source: np.ndarray, target: np.ndarray, r: SlotRange) -> np.ndarray:
    """Row-splice: target rows within r, source rows elsewhere."""
    source = np.asarray(source)
    target = np.asarray(target)
    if source.shape != target.shape:
        raise ValueError(f"code shapes differ: {source.shape} vs {target.shape}")
    if r.end >= source.shape[0]:
        raise ValueError(f"range {r} out of bounds for {source.shape[0]} slots")
    merged = source.copy()
    merged[r.start:r.end + 1] = target[r.start:r.end + 1]
    return merged


def synthesize_pair(
    source: np.ndarray,
    target: np.ndarray,
    model: GanModel,
    source_id: str = "source",
    target_id: str = "target",
) -> MergeBatch:
    """One synthesized image per contiguous slot range."""
    ranges = enumerate_ranges(model.cfg.slots)
    codes = [merge_codes(source, target, r) for r in ranges]
    images = model.synthesize_batch(codes)
    return MergeBatch(source_id=source_id, target_id=target_id,
                      items=list(zip(ranges, images)))


def make_targets(
    mode: str,
    k: int,
    model: GanModel,
    seed: int,
    corpus=None,
    encode_cfg=None,
) -> list[tuple[str, np.ndarray]]:
    """Target style codes for merging: k seeded random latents, or the
    encoded codes of k corpus screenshots sampled without replacement.
    Returns (target_id, code) pairs."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if mode == "random_latent":
        rng = np.random.RandomState(seed)
        out = []
        for i in range(k):
            z = rng.randn(model.cfg.latent_dim)
            out.append((f"latent{i}", model.broadcast(model.map_latent(z))))
        return out
    if mode == "corpus_image":
        from .encoder import EncodeConfig, encode

        if corpus is None or len(corpus) < k:
            raise ValueError(f"corpus with >= {k} screenshots required")
        rng = np.random.RandomState(seed)
        idx = rng.choice(len(corpus), size=k, replace=False)
        cfg = encode_cfg or EncodeConfig()
        out = []
        for i in idx:
            shot = corpus[i]
            result = encode(shot.image, model, cfg)
            out.append((shot.id, result.code))
        return out
    raise ValueError(f"unknown target mode {mode!r}")
