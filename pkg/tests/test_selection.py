import numpy as np
import pytest

from ganspire.selection import (
    NOISE,
    Clustering,
    dbscan,
    select_by_scores,
    select_from_batch,
    select_representatives,
)

from conftest import make_ui_corpus


def random_distance_matrix(rng: np.random.RandomState, n: int) -> np.ndarray:
    dm = rng.rand(n, n)
    dm = (dm + dm.T) / 2
    np.fill_diagonal(dm, 0.0)
    return dm


def reachability_components(dm: np.ndarray, eps: float) -> list[int]:
    """Oracle: connected components of the graph with edges dist <= eps.
    Valid DBSCAN partition when min_points=1."""
    n = dm.shape[0]
    labels = [-1] * n
    comp = 0
    for i in range(n):
        if labels[i] != -1:
            continue
        stack = [i]
        while stack:
            j = stack.pop()
            if labels[j] != -1:
                continue
            labels[j] = comp
            stack.extend(k for k in range(n) if dm[j, k] <= eps and labels[k] == -1)
        comp += 1
    return labels


def same_partition(a: list[int], b: list[int]) -> bool:
    mapping: dict[int, int] = {}
    for x, y in zip(a, b):
        if mapping.setdefault(x, y) != y:
            return False
    return len(set(a)) == len(set(b))


def test_all_far_apart_gives_singletons():
    n = 6
    dm = np.full((n, n), 0.95)
    np.fill_diagonal(dm, 0.0)
    c = dbscan(dm, eps=0.9, min_points=1)
    assert c.n_clusters == n
    assert sorted(c.assignments) == list(range(n))


def test_all_close_gives_one_cluster():
    n = 7
    dm = np.full((n, n), 0.1)
    np.fill_diagonal(dm, 0.0)
    c = dbscan(dm, eps=0.9)
    assert c.n_clusters == 1
    assert c.assignments == [0] * n


def test_two_blob_fixture_matches_oracle():
    rng = np.random.RandomState(0)
    n = 12
    dm = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            same_blob = (i < 6) == (j < 6)
            dm[i, j] = dm[j, i] = rng.uniform(0.05, 0.15) if same_blob else rng.uniform(0.7, 0.95)
    c = dbscan(dm, eps=0.3, min_points=1)
    assert same_partition(c.assignments, reachability_components(dm, 0.3))
    assert c.n_clusters == 2


def test_matches_reachability_oracle_on_random_matrices():
    rng = np.random.RandomState(1)
    for _ in range(50):
        n = rng.randint(2, 21)
        dm = random_distance_matrix(rng, n)
        eps = rng.uniform(0.1, 0.9)
        c = dbscan(dm, eps=eps, min_points=1)
        assert same_partition(c.assignments, reachability_components(dm, eps))


def test_cluster_ids_contiguous_from_zero():
    rng = np.random.RandomState(2)
    dm = random_distance_matrix(rng, 15)
    c = dbscan(dm, eps=0.3)
    ids = sorted(set(c.assignments))
    assert ids == list(range(len(ids)))


def test_min_points_noise_handling():
    # one outlier far from a tight trio
    dm = np.array([
        [0.0, 0.1, 0.1, 0.9],
        [0.1, 0.0, 0.1, 0.9],
        [0.1, 0.1, 0.0, 0.9],
        [0.9, 0.9, 0.9, 0.0],
    ])
    c = dbscan(dm, eps=0.3, min_points=2)
    assert c.assignments[:3] == [0, 0, 0]
    assert c.assignments[3] == NOISE


def test_eps_monotonicity_on_fixtures():
    rng = np.random.RandomState(3)
    for _ in range(10):
        dm = random_distance_matrix(rng, 12)
        counts = [dbscan(dm, eps=e, min_points=1).n_clusters
                  for e in (0.1, 0.3, 0.5, 0.7, 0.9)]
        assert counts == sorted(counts, reverse=True)


def test_dbscan_input_validation():
    dm = np.zeros((3, 3))
    with pytest.raises(ValueError):
        dbscan(dm, eps=0.0)
    with pytest.raises(ValueError):
        dbscan(dm, eps=1.5)
    with pytest.raises(ValueError):
        dbscan(dm, eps=0.5, min_points=0)
    with pytest.raises(ValueError):
        dbscan(np.ones((3, 3)), eps=0.5)  # nonzero diagonal


def test_injected_scores_argmax_with_ties():
    images = [np.zeros((4, 4, 3), np.uint8)] * 6
    clustering = Clustering(assignments=[0, 0, 0, 1, 2, 2], eps=0.9, min_points=1)
    scores = [0.2, 0.9, 0.5, 0.1, 0.7, 0.7]
    reps = select_by_scores(images, clustering, scores)
    assert reps.member_index_per_cluster == [1, 3, 4]
    assert reps.scores == [0.9, 0.1, 0.7]


def test_noise_points_become_singletons():
    images = [np.zeros((4, 4, 3), np.uint8)] * 4
    clustering = Clustering(assignments=[0, NOISE, 0, NOISE], eps=0.9, min_points=2)
    reps = select_by_scores(images, clustering, [0.1, 0.2, 0.3, 0.4])
    assert reps.member_index_per_cluster == [2, 1, 3]


def test_single_cluster_one_representative(untrained_model):
    images = make_ui_corpus(5, seed=4)
    clustering = Clustering(assignments=[0] * 5, eps=0.9, min_points=1)
    reps = select_representatives(images, clustering, untrained_model)
    assert len(reps.images) == 1


def test_singleton_clusters_keep_everything(untrained_model):
    images = make_ui_corpus(5, seed=5)
    clustering = Clustering(assignments=list(range(5)), eps=0.9, min_points=1)
    reps = select_representatives(images, clustering, untrained_model)
    assert len(reps.images) == 5


def test_representative_score_is_cluster_max(untrained_model):
    from ganspire.perception import get_backend

    images = make_ui_corpus(12, seed=6)
    backend = get_backend()
    dm = backend.pairwise(images)
    clustering = dbscan(dm, eps=0.2)
    scores = untrained_model.discriminator_scores(images)
    reps = select_by_scores(images, clustering, scores)
    for rep_idx, cid in zip(reps.member_index_per_cluster[:clustering.n_clusters],
                            range(clustering.n_clusters)):
        members = [i for i, a in enumerate(clustering.assignments) if a == cid]
        assert scores[rep_idx] == max(scores[i] for i in members)


def test_select_from_batch_identical_images(untrained_model):
    from ganspire.perception import get_backend

    img = make_ui_corpus(1, seed=7)[0]
    reps = select_from_batch([img.copy() for _ in range(10)], untrained_model, get_backend())
    assert len(reps.images) == 1


def test_select_from_batch_matches_manual_stages(untrained_model):
    from ganspire.perception import get_backend

    images = make_ui_corpus(10, seed=8)
    backend = get_backend()
    reps = select_from_batch(images, untrained_model, backend, eps=0.3)
    clustering = dbscan(backend.pairwise(images), eps=0.3)
    manual = select_representatives(images, clustering, untrained_model)
    assert reps.member_index_per_cluster == manual.member_index_per_cluster
