"""Similarity and diversity of an output example set.

Similarity is 1 minus the mean perceptual distance from the input design
to each example (high values risk fixation); diversity is the mean
pairwise distance among the examples (guards against fixation).  Both
inherit the [0, 1] range from the distance backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ExampleSet:
    input_id: str
    examples: list[np.ndarray]
    provenance: list[str] = field(default_factory=list)  # "generated" | "real" per example

    def __post_init__(self):
        if self.provenance and len(self.provenance) != len(self.examples):
            raise ValueError("provenance must align with examples")


def similarity(input_image: np.ndarray, example_set: ExampleSet, backend) -> float:
    if not example_set.examples:
        raise ValueError("similarity needs at least one example")
    dists = [backend.dist(input_image, e) for e in example_set.examples]
    return 1.0 - float(np.mean(dists))


def diversity(example_set: ExampleSet, backend) -> float:
    n = len(example_set.examples)
    if n < 2:
        raise ValueError("diversity needs at least two examples")
    dm = backend.pairwise(example_set.examples)
    iu = np.triu_indices(n, k=1)
    return float(dm[iu].mean())
