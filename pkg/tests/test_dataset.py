import json

import numpy as np
import pytest
from PIL import Image

from ganspire.dataset import (
    CorpusManifest,
    HierarchyError,
    Screenshot,
    count_unique_components,
    filter_corpus,
    histogram_by_label_count,
    load_corpus,
    preprocess,
    resize_to_square,
    unique_labels,
)

from conftest import make_ui_image

LABEL_POOL = [
    "TextView", "ImageView", "Button", "EditText", "CheckBox", "ListView",
    "WebView", "Toolbar", "Switch", "RadioButton", "ProgressBar", "Spinner",
]


def random_hierarchy(rng: np.random.RandomState, n_labels: int) -> dict:
    """Random tree whose node labels are drawn from a pool of exactly
    n_labels distinct values, each used at least once."""
    labels = list(rng.choice(LABEL_POOL, size=n_labels, replace=False))
    pending = list(labels)

    def node(depth: int) -> dict:
        label = pending.pop() if pending else str(rng.choice(labels))
        children = []
        if depth < 3:
            for _ in range(rng.randint(0, 4)):
                children.append(node(depth + 1))
        return {"class": label, "bounds": [0, 0, 10, 10], "children": children}

    root = node(0)
    while pending:  # ensure every label appears
        root["children"].append(
            {"class": pending.pop(), "bounds": [0, 0, 5, 5], "children": []}
        )
    return {"activity": {"root": root}}


def flat_scan_labels(record) -> set[str]:
    """Oracle: scan every dict in the raw record for label fields,
    ignoring tree structure entirely."""
    found = set()

    def walk(obj):
        if isinstance(obj, dict):
            for key in ("class", "componentLabel", "label"):
                v = obj.get(key)
                if isinstance(v, str) and v:
                    found.add(v)
                    break
            for v in obj.values():
                walk(v)
        elif isinstance(obj, list):
            for v in obj:
                walk(v)

    walk(record)
    return found


def test_count_simple_cases():
    h = {"root": {"class": "Text", "children": [
        {"class": "Image", "children": []},
        {"class": "Text", "children": []},
    ]}}
    assert count_unique_components(h) == 2
    assert count_unique_components({"root": {"class": "Button", "children": []}}) == 1


def test_count_matches_flat_scan_oracle():
    rng = np.random.RandomState(0)
    for _ in range(50):
        record = random_hierarchy(rng, rng.randint(1, len(LABEL_POOL) + 1))
        assert unique_labels(record) == frozenset(flat_scan_labels(record))


def test_malformed_hierarchy_names_node_path():
    bad = {"root": {"class": "A", "children": [{"children": []}]}}
    with pytest.raises(HierarchyError, match=r"root\.children\[0\]"):
        count_unique_components(bad)


def _shot(i: int, n_labels: int) -> Screenshot:
    return Screenshot(
        id=f"s{i}",
        image=np.zeros((8, 8, 3), np.uint8),
        labels=frozenset(LABEL_POOL[:n_labels]),
    )


def test_filter_partition():
    entries = [_shot(i, n) for i, n in enumerate(range(1, 11))]
    kept, removed = filter_corpus(entries, 3)
    assert len(kept) == 8 and len(removed) == 2
    assert kept + removed and len(kept) + len(removed) == len(entries)
    assert [s.id for s in kept] == [s.id for s in entries if s.label_count >= 3]


def test_filter_min_one_keeps_all():
    entries = [_shot(i, n) for i, n in enumerate([1, 2, 5])]
    kept, removed = filter_corpus(entries, 1)
    assert kept == entries and removed == []


def test_filter_partition_property():
    rng = np.random.RandomState(1)
    for _ in range(20):
        entries = [_shot(i, rng.randint(1, 12)) for i in range(rng.randint(0, 30))]
        for m in (1, 3, 5):
            kept, removed = filter_corpus(entries, m)
            assert len(kept) + len(removed) == len(entries)


def test_resize_shape_contract():
    img = np.random.RandomState(2).randint(0, 256, (96, 54, 3), np.uint8)
    out = resize_to_square(img, 32)
    assert out.shape == (32, 32, 3)


def test_resize_identity_on_square_input():
    img = np.random.RandomState(3).randint(0, 256, (32, 32, 3), np.uint8)
    assert np.array_equal(resize_to_square(img, 32), img)


def test_resize_constant_color():
    img = np.full((60, 40, 3), (10, 200, 55), np.uint8)
    out = resize_to_square(img, 32)
    assert np.all(out.reshape(-1, 3) == (10, 200, 55))


def test_resize_idempotent():
    img = np.random.RandomState(4).randint(0, 256, (90, 50, 3), np.uint8)
    once = resize_to_square(img, 64)
    assert np.array_equal(resize_to_square(once, 64), once)


def test_resize_rejects_empty_and_bad_resolution():
    with pytest.raises(ValueError):
        resize_to_square(np.zeros((0, 0, 3), np.uint8), 32)
    with pytest.raises(ValueError):
        resize_to_square(np.zeros((8, 8, 3), np.uint8), 48)


def test_histogram_totals():
    entries = [_shot(i, n) for i, n in enumerate([3, 3, 5, 7, 5, 3])]
    hist = histogram_by_label_count(entries)
    assert hist == {3: 3, 5: 2, 7: 1}
    assert sum(hist.values()) == len(entries)
    assert histogram_by_label_count([]) == {}


def test_preprocess_roundtrip(tmp_path):
    rng = np.random.RandomState(5)
    src = tmp_path / "src"
    src.mkdir()
    n_labels = [1, 2, 3, 4, 5, 6]
    for i, n in enumerate(n_labels):
        Image.fromarray(make_ui_image(rng, 48)).save(src / f"shot{i}.png")
        (src / f"shot{i}.json").write_text(json.dumps(random_hierarchy(rng, n)))
    out = tmp_path / "out"
    manifest = preprocess(src, out, min_unique=3, resolution=32)
    assert len(manifest.entries) == 4  # label counts 3..6 survive
    loaded = CorpusManifest.load(out / "manifest.json")
    assert loaded.entries == manifest.entries
    loaded.validate(base=out)
    shots = load_corpus(out / "manifest.json")
    assert all(s.image.shape == (32, 32, 3) for s in shots)
    assert [s.label_count for s in shots] == [3, 4, 5, 6]


def test_manifest_validation(tmp_path):
    m = CorpusManifest(entries=[("a", "missing.png", 3)], target_resolution=64)
    with pytest.raises(FileNotFoundError):
        m.validate(base=tmp_path)
    with pytest.raises(ValueError):
        CorpusManifest(entries=[], target_resolution=48).validate()
