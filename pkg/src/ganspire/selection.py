"""Representative example selection: cluster synthesized images by
perceptual distance (DBSCAN on the precomputed matrix, eps defaulting to
0.9) and keep, per cluster, the image the discriminator scores most
realistic.

With min_points=1 (the default) DBSCAN reduces to eps-reachability
components and produces no noise; with min_points>1 any noise point is
still emitted as its own singleton representative so no generated
example is silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gan.model import GanModel
from .perception import validate_distance_matrix
from .stylemerge import MergeBatch

NOISE = -1
DEFAULT_EPS = 0.9


@dataclass
class Clustering:
    assignments: list[int]  # cluster id per image; NOISE allowed
    eps: float
    min_points: int

    @property
    def n_clusters(self) -> int:
        ids = [a for a in self.assignments if a != NOISE]
        return max(ids) + 1 if ids else 0


@dataclass
class RepresentativeSet:
    images: list[np.ndarray]
    member_index_per_cluster: list[int]
    scores: list[float]


def dbscan(dm: np.ndarray, eps: float = DEFAULT_EPS, min_points: int = 1) -> Clustering:
    """DBSCAN over a precomputed distance matrix, deterministic scan order."""
    validate_distance_matrix(dm)
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if min_points < 1:
        raise ValueError("min_points must be >= 1")
    dm = np.asarray(dm)
    n = dm.shape[0]
    UNVISITED = -2
    labels = np.full(n, UNVISITED, dtype=int)
    cluster = 0
    for i in range(n):
        if labels[i] != UNVISITED:
            continue
        neighbors = np.flatnonzero(dm[i] <= eps)  # includes i
        if len(neighbors) < min_points:
            labels[i] = NOISE
            continue
        labels[i] = cluster
        queue = [j for j in neighbors if j != i]
        while queue:
            j = queue.pop(0)
            if labels[j] == NOISE:
                labels[j] = cluster  # border point claimed by first reachable core
            if labels[j] != UNVISITED:
                continue
            labels[j] = cluster
            j_neighbors = np.flatnonzero(dm[j] <= eps)
            if len(j_neighbors) >= min_points:
                queue.extend(k for k in j_neighbors if labels[k] in (UNVISITED, NOISE))
        cluster += 1
    return Clustering(assignments=labels.tolist(), eps=eps, min_points=min_points)


def select_representatives(
    images: list[np.ndarray], clustering: Clustering, model: GanModel
) -> RepresentativeSet:
    """One representative per cluster: the highest-scoring member, ties
    broken by lowest index. Noise points become singleton representatives."""
    scores = model.discriminator_scores(images)
    return select_by_scores(images, clustering, scores)


def select_by_scores(
    images: list[np.ndarray], clustering: Clustering, scores: list[float]
) -> RepresentativeSet:
    if len(images) != len(clustering.assignments) or len(scores) != len(images):
        raise ValueError("images, assignments, and scores must align")
    picked: list[int] = []
    for cid in range(clustering.n_clusters):
        members = [i for i, a in enumerate(clustering.assignments) if a == cid]
        if not members:
            raise RuntimeError(f"cluster {cid} has no members")
        picked.append(max(members, key=lambda i: (scores[i], -i)))
    picked.extend(i for i, a in enumerate(clustering.assignments) if a == NOISE)
    return RepresentativeSet(
        images=[images[i] for i in picked],
        member_index_per_cluster=picked,
        scores=[scores[i] for i in picked],
    )


def select_from_batch(
    batch_images: list[np.ndarray],
    model: GanModel,
    backend,
    eps: float = DEFAULT_EPS,
    min_points: int = 1,
) -> RepresentativeSet:
    """pairwise distances -> DBSCAN -> per-cluster realism argmax."""
    if not batch_images:
        raise ValueError("empty image batch")
    dm = backend.pairwise(batch_images)
    clustering = dbscan(dm, eps=eps, min_points=min_points)
    return select_representatives(batch_images, clustering, model)
