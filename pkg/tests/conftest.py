import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from ganspire.gan import Checkpoint, GanModel, GeneratorConfig
from ganspire.gan.train import train

CACHE_DIR = Path(__file__).parent / ".cache"

TOY_CFG = GeneratorConfig(levels=4, latent_dim=48, seed=7, minibatch=8,
                          channel_base=512, channel_max=48)
TOY_TRAIN_STEPS = 75


def make_ui_image(rng: np.random.RandomState, res: int = 32) -> np.ndarray:
    """Synthetic screenshot: solid background, header bar, a few blocks."""
    img = np.empty((res, res, 3), np.uint8)
    img[:] = rng.randint(150, 256, 3)
    img[: res // 8] = rng.randint(0, 120, 3)  # header
    for _ in range(rng.randint(2, 6)):
        h = rng.randint(2, res // 3)
        w = rng.randint(4, res // 2)
        y = rng.randint(res // 8, res - h)
        x = rng.randint(0, res - w)
        img[y:y + h, x:x + w] = rng.randint(0, 256, 3)
    return img


def make_ui_corpus(n: int, seed: int, res: int = 32) -> list[np.ndarray]:
    rng = np.random.RandomState(seed)
    return [make_ui_image(rng, res) for _ in range(n)]


@pytest.fixture(scope="session")
def ui_corpus():
    return make_ui_corpus(64, seed=100)


@pytest.fixture(scope="session")
def untrained_model():
    from ganspire.gan import build_networks

    mapping, synthesis, disc = build_networks(TOY_CFG)
    return GanModel(Checkpoint.from_modules(TOY_CFG, mapping, synthesis, disc))


def _toy_cache_key() -> str:
    payload = json.dumps({"cfg": TOY_CFG.to_dict(), "steps": TOY_TRAIN_STEPS,
                          "corpus": "ui64-seed100", "arch": "skip-v2",
                          "eval_every": 100}, sort_keys=True)
    return hashlib.sha1(payload.encode()).hexdigest()[:12]


@pytest.fixture(scope="session")
def trained_checkpoint(ui_corpus) -> Checkpoint:
    """Toy model trained briefly on the synthetic corpus; cached on disk."""
    CACHE_DIR.mkdir(exist_ok=True)
    path = CACHE_DIR / f"toy_{_toy_cache_key()}.ckpt"
    if path.exists():
        return Checkpoint.load(path)
    ckpt = train(ui_corpus, TOY_CFG, max_steps=TOY_TRAIN_STEPS, eval_every=100,
                 fid_samples=32)
    ckpt.save(path)
    return ckpt


@pytest.fixture(scope="session")
def trained_model(trained_checkpoint) -> GanModel:
    return GanModel(trained_checkpoint)


def pytest_runtest_logreport(report):
    """One [PASS]/[FAIL] line per acceptance criterion in the live output."""
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        return
    label = CRITERIA.get(report.nodeid.split("::")[-1])
    if label:
        verdict = "PASS" if report.passed else "FAIL"
        print(f"\n[{verdict}] {label}")
