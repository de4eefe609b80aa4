import numpy as np
import pytest

from ganspire.metrics import ExampleSet, diversity, similarity
from ganspire.perception import get_backend

from conftest import make_ui_corpus, make_ui_image


class StubBackend:
    """Distance backend with injected values, keyed by image identity."""

    id = "stub"

    def __init__(self, table):
        self.table = table

    def _key(self, img):
        return int(img[0, 0, 0])

    def dist(self, a, b):
        ka, kb = self._key(a), self._key(b)
        if ka == kb:
            return 0.0
        return self.table[frozenset((ka, kb))]

    def pairwise(self, images):
        n = len(images)
        dm = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                dm[i, j] = dm[j, i] = self.dist(images[i], images[j])
        return dm


def tagged(k):
    img = np.zeros((4, 4, 3), np.uint8)
    img[0, 0, 0] = k
    return img


def test_similarity_of_self_set_is_one():
    backend = get_backend()
    img = make_ui_image(np.random.RandomState(0))
    assert similarity(img, ExampleSet("x", [img.copy()]), backend) == 1.0


def test_similarity_forced_arithmetic():
    backend = StubBackend({frozenset((0, 1)): 0.2, frozenset((0, 2)): 0.4})
    s = similarity(tagged(0), ExampleSet("x", [tagged(1), tagged(2)]), backend)
    assert s == pytest.approx(0.7, abs=1e-12)


def test_similarity_brute_force_oracle():
    backend = get_backend()
    rng = np.random.RandomState(1)
    for _ in range(10):
        input_img = make_ui_image(rng)
        examples = [make_ui_image(rng) for _ in range(5)]
        s = similarity(input_img, ExampleSet("x", examples), backend)
        oracle = 1 - sum(backend.dist(input_img, e) for e in examples) / len(examples)
        assert s == pytest.approx(oracle, abs=1e-12)


def test_diversity_identical_pair_is_zero():
    backend = get_backend()
    img = make_ui_image(np.random.RandomState(2))
    assert diversity(ExampleSet("x", [img, img.copy()]), backend) == 0.0


def test_diversity_forced_arithmetic():
    table = {frozenset((0, 1)): 0.3, frozenset((0, 2)): 0.5, frozenset((1, 2)): 0.7}
    d = diversity(ExampleSet("x", [tagged(0), tagged(1), tagged(2)]), StubBackend(table))
    assert d == pytest.approx(0.5, abs=1e-12)


def test_diversity_brute_force_oracle():
    backend = get_backend()
    rng = np.random.RandomState(3)
    examples = [make_ui_image(rng) for _ in range(6)]
    d = diversity(ExampleSet("x", examples), backend)
    total, count = 0.0, 0
    for i in range(6):
        for j in range(i + 1, 6):
            total += backend.dist(examples[i], examples[j])
            count += 1
    assert count == 15
    assert d == pytest.approx(total / count, abs=1e-12)


def test_metrics_random_fixture_sets_vs_oracle():
    backend = get_backend()
    rng = np.random.RandomState(4)
    for _ in range(100):
        n = rng.randint(2, 7)
        input_img = make_ui_image(rng)
        examples = [make_ui_image(rng) for _ in range(n)]
        es = ExampleSet("x", examples)
        sim_oracle = 1 - np.mean([backend.dist(input_img, e) for e in examples])
        div_oracle = np.mean([
            backend.dist(examples[i], examples[j])
            for i in range(n) for j in range(i + 1, n)
        ])
        assert similarity(input_img, es, backend) == pytest.approx(sim_oracle, abs=1e-9)
        assert diversity(es, backend) == pytest.approx(div_oracle, abs=1e-9)


def test_metrics_in_unit_interval_and_permutation_invariant():
    backend = get_backend()
    rng = np.random.RandomState(5)
    input_img = make_ui_image(rng)
    examples = [make_ui_image(rng) for _ in range(5)]
    s1 = similarity(input_img, ExampleSet("x", examples), backend)
    d1 = diversity(ExampleSet("x", examples), backend)
    assert 0 <= s1 <= 1 and 0 <= d1 <= 1
    shuffled = [examples[i] for i in rng.permutation(5)]
    assert similarity(input_img, ExampleSet("x", shuffled), backend) == pytest.approx(s1, abs=1e-12)
    assert diversity(ExampleSet("x", shuffled), backend) == pytest.approx(d1, abs=1e-12)


def test_duplicate_example_does_not_raise_diversity():
    backend = get_backend()
    rng = np.random.RandomState(6)
    examples = [make_ui_image(rng) for _ in range(4)]
    base = diversity(ExampleSet("x", examples), backend)
    with_dup = diversity(ExampleSet("x", examples + [examples[0].copy()]), backend)
    assert with_dup <= base + 1e-12


def test_input_errors():
    backend = get_backend()
    img = make_ui_image(np.random.RandomState(7))
    with pytest.raises(ValueError):
        similarity(img, ExampleSet("x", []), backend)
    with pytest.raises(ValueError):
        diversity(ExampleSet("x", [img]), backend)
    with pytest.raises(ValueError):
        ExampleSet("x", [img], provenance=["real", "real"])
