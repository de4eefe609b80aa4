import numpy as np
import pytest

from ganspire.perception import (
    FrozenConvBackend,
    MultiScaleBackend,
    get_backend,
    validate_distance_matrix,
)

from conftest import make_ui_corpus, make_ui_image


@pytest.fixture(params=["multiscale", "frozenconv"])
def backend(request):
    return get_backend(request.param)


def test_identity_distance_is_zero(backend):
    img = make_ui_image(np.random.RandomState(0))
    assert backend.dist(img, img) == 0.0


def test_symmetry_exact(backend):
    rng = np.random.RandomState(1)
    for _ in range(20):
        a, b = make_ui_image(rng), make_ui_image(rng)
        assert backend.dist(a, b) == backend.dist(b, a)


def test_range_bounds(backend):
    rng = np.random.RandomState(2)
    for _ in range(20):
        d = backend.dist(make_ui_image(rng), make_ui_image(rng))
        assert 0.0 <= d <= 1.0


def test_black_white_dominates_fixture_corpus():
    backend = MultiScaleBackend()
    black = np.zeros((32, 32, 3), np.uint8)
    white = np.full((32, 32, 3), 255, np.uint8)
    extreme = backend.dist(black, white)
    assert extreme == 1.0
    corpus = make_ui_corpus(20, seed=3)
    for i in range(len(corpus)):
        for j in range(i + 1, len(corpus)):
            assert backend.dist(corpus[i], corpus[j]) <= extreme


def test_pairwise_matches_individual_calls(backend):
    images = make_ui_corpus(5, seed=4)
    dm = backend.pairwise(images)
    for i in range(5):
        for j in range(5):
            assert dm[i, j] == pytest.approx(backend.dist(images[i], images[j]), abs=1e-12)


def test_pairwise_invariants(backend):
    dm = backend.pairwise(make_ui_corpus(8, seed=5))
    validate_distance_matrix(dm)


def test_single_image_matrix():
    backend = MultiScaleBackend()
    dm = backend.pairwise([make_ui_image(np.random.RandomState(6))])
    assert dm.shape == (1, 1) and dm[0, 0] == 0.0


def test_copies_give_zero_matrix():
    backend = MultiScaleBackend()
    img = make_ui_image(np.random.RandomState(7))
    dm = backend.pairwise([img.copy() for _ in range(4)])
    assert np.all(dm == 0.0)


def test_resolution_mismatch_raises():
    backend = MultiScaleBackend()
    a = np.zeros((32, 32, 3), np.uint8)
    b = np.zeros((64, 64, 3), np.uint8)
    with pytest.raises(ValueError, match="mismatch"):
        backend.pairwise([a, b])


def test_large_images_downsampled():
    backend = MultiScaleBackend()
    rng = np.random.RandomState(8)
    a = rng.randint(0, 256, (512, 512, 3), np.uint8)
    d = backend.dist(a, a)
    assert d == 0.0


def test_unknown_backend():
    with pytest.raises(ValueError, match="unknown perception backend"):
        get_backend("nope")


def test_validate_distance_matrix_rejects_bad():
    with pytest.raises(ValueError):
        validate_distance_matrix(np.array([[0.0, 0.5], [0.4, 0.0]]))
    with pytest.raises(ValueError):
        validate_distance_matrix(np.array([[0.1, 0.2], [0.2, 0.1]]))
    with pytest.raises(ValueError):
        validate_distance_matrix(np.array([[0.0, 1.5], [1.5, 0.0]]))
