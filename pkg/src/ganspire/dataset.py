"""Corpus ingestion: view hierarchies, complexity filtering, resizing.

A corpus directory holds PNG/JPEG screenshots with sibling JSON view
hierarchies (Rico layout: ``12345.jpg`` + ``12345.json``).  Each
hierarchy is a tree of nodes; the set of distinct node labels is the
screenshot's component-type set, whose cardinality proxies design
complexity and drives filtering and stratification.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

# Node label lookup, in priority order. Rico trees expose the widget
# class under "class"; some exports use "componentLabel" or "label".
LABEL_KEYS = ("class", "componentLabel", "label")
CHILD_KEY = "children"
# Rico wraps the tree as {"activity": {"root": {...}}}; plain exports
# may use {"root": {...}} or put the root node at top level.
ROOT_PATHS = (("activity", "root"), ("root",), ())


class HierarchyError(ValueError):
    """Malformed view-hierarchy record; message names the node path."""


@dataclass
class Screenshot:
    id: str
    image: np.ndarray  # HxWx3 uint8
    labels: frozenset[str]
    source_path: str = ""

    @property
    def label_count(self) -> int:
        return len(self.labels)


@dataclass
class CorpusManifest:
    entries: list[tuple[str, str, int]]  # (id, image path, label count)
    target_resolution: int

    def validate(self, base: Path | None = None) -> None:
        if self.target_resolution < 32 or self.target_resolution & (self.target_resolution - 1):
            raise ValueError("target_resolution must be a power of two >= 32")
        for sid, path, _ in self.entries:
            p = Path(path) if base is None else base / path
            if not p.exists():
                raise FileNotFoundError(f"manifest entry {sid!r}: missing file {p}")

    def save(self, path: Path) -> None:
        payload = {
            "target_resolution": self.target_resolution,
            "entries": [
                {"id": sid, "path": p, "label_count": n} for sid, p, n in self.entries
            ],
        }
        Path(path).write_text(json.dumps(payload, indent=2))

    @classmethod
    def load(cls, path: Path) -> "CorpusManifest":
        payload = json.loads(Path(path).read_text())
        return cls(
            entries=[(e["id"], e["path"], e["label_count"]) for e in payload["entries"]],
            target_resolution=payload["target_resolution"],
        )


def find_root(record: dict) -> dict:
    for path in ROOT_PATHS:
        node = record
        ok = True
        for key in path:
            if isinstance(node, dict) and key in node:
                node = node[key]
            else:
                ok = False
                break
        if ok and isinstance(node, dict):
            return node
    raise HierarchyError("no hierarchy root found at any known key path")


def _node_label(node: dict, path: str) -> str:
    for key in LABEL_KEYS:
        value = node.get(key)
        if isinstance(value, str) and value:
            return value
    raise HierarchyError(f"node at {path} has no non-empty label field")


def iter_labels(root: dict, path: str = "root"):
    if not isinstance(root, dict):
        raise HierarchyError(f"node at {path} is not an object")
    yield _node_label(root, path)
    children = root.get(CHILD_KEY) or []
    if not isinstance(children, list):
        raise HierarchyError(f"children of {path} is not a list")
    for i, child in enumerate(children):
        if child is None:  # Rico emits null children occasionally
            continue
        yield from iter_labels(child, f"{path}.children[{i}]")


def unique_labels(record: dict) -> frozenset[str]:
    return frozenset(iter_labels(find_root(record)))


def count_unique_components(record: dict) -> int:
    """Number of distinct component labels in a hierarchy record."""
    return len(unique_labels(record))


def filter_corpus(entries: list[Screenshot], min_unique: int) -> tuple[list[Screenshot], list[Screenshot]]:
    """Partition entries by label-set size, order preserved."""
    if min_unique < 1:
        raise ValueError("min_unique must be >= 1")
    kept = [e for e in entries if e.label_count >= min_unique]
    removed = [e for e in entries if e.label_count < min_unique]
    return kept, removed


def resize_to_square(image: np.ndarray, resolution: int) -> np.ndarray:
    """Stretch an image to resolution x resolution with bilinear resampling.

    Aspect ratio is not preserved (no padding); resizing an image already
    at the target size is the identity.
    """
    if resolution < 1 or resolution & (resolution - 1):
        raise ValueError("resolution must be a power of two")
    a = np.asarray(image)
    if a.size == 0:
        raise ValueError("cannot resize an empty image")
    if a.shape[0] == resolution and a.shape[1] == resolution:
        return a.copy()
    out = Image.fromarray(a).resize((resolution, resolution), Image.BILINEAR)
    return np.asarray(out)


def histogram_by_label_count(entries: list[Screenshot]) -> dict[int, int]:
    return dict(Counter(e.label_count for e in entries))


IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def load_screenshot(image_path: Path) -> Screenshot:
    record = json.loads(image_path.with_suffix(".json").read_text())
    img = np.asarray(Image.open(image_path).convert("RGB"))
    return Screenshot(
        id=image_path.stem,
        image=img,
        labels=unique_labels(record),
        source_path=str(image_path),
    )


def preprocess(
    src: Path, out: Path, min_unique: int = 3, resolution: int = 64
) -> CorpusManifest:
    """Ingest a corpus directory, filter by complexity, resize, write manifest."""
    src, out = Path(src), Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = sorted(p for p in src.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    entries = [load_screenshot(p) for p in paths if p.with_suffix(".json").exists()]
    kept, _ = filter_corpus(entries, min_unique)
    manifest_entries = []
    for shot in kept:
        resized = resize_to_square(shot.image, resolution)
        dest = out / f"{shot.id}.png"
        Image.fromarray(resized).save(dest)
        manifest_entries.append((shot.id, dest.name, shot.label_count))
    manifest = CorpusManifest(entries=manifest_entries, target_resolution=resolution)
    manifest.save(out / "manifest.json")
    return manifest


def load_corpus(manifest_path: Path) -> list[Screenshot]:
    """Materialize the screenshots referenced by a manifest."""
    manifest_path = Path(manifest_path)
    manifest = CorpusManifest.load(manifest_path)
    base = manifest_path.parent
    shots = []
    for sid, rel, n in manifest.entries:
        img = np.asarray(Image.open(base / rel).convert("RGB"))
        # label sets are not persisted in the manifest; carry count via a
        # synthetic label set of the right cardinality when needed
        shots.append(
            Screenshot(id=sid, image=img, labels=frozenset(f"#{i}" for i in range(n)),
                       source_path=str(base / rel))
        )
    return shots
