"""Six-condition evaluation harness.

Conditions:
  1. merge the encoded input with 5 random-latent targets, then
     representative selection over the pooled synthesized images
  2. as 1, but targets are 5 encoded corpus screenshots
  3. condition 1, each representative replaced by its nearest real
     screenshot from the search corpus
  4. same replacement applied to condition 2
  5. 25 seeded-random corpus screenshots
  6. the 25 real screenshots nearest to the input

Each (input, condition) cell yields an example set plus its similarity
and diversity; cells are aggregated into CSV/JSON reports and compared
with Kruskal-Wallis and pairwise Mann-Whitney (Bonferroni) tests,
overall and per complexity group.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Screenshot
from .encoder import EncodeConfig, encode
from .gan.model import GanModel
from .metrics import ExampleSet, diversity, similarity
from .selection import DEFAULT_EPS, select_from_batch
from .stats import kruskal_wallis, mannwhitney_bonferroni
from .stylemerge import make_targets, synthesize_pair

CONDITIONS = (1, 2, 3, 4, 5, 6)
RANDOM_SET_SIZE = 25
TOP_K = 25
TARGETS_K = 5


@dataclass
class InputSample:
    screenshots: list[Screenshot]
    strata: dict[int, list[str]]


@dataclass
class ConditionReport:
    condition: int
    input_id: str
    example_set: ExampleSet
    similarity: float
    diversity: float | None  # None when fewer than two examples
    complexity: str
    example_ids: list[str] = field(default_factory=list)


@dataclass
class ExperimentContext:
    model: GanModel
    corpus: list[Screenshot]
    search_corpus: list[Screenshot]
    backend: object
    seed: int = 0
    eps: float = DEFAULT_EPS
    min_points: int = 1
    encode_cfg: EncodeConfig = field(default_factory=EncodeConfig)
    targets_k: int = TARGETS_K
    random_set_size: int = RANDOM_SET_SIZE
    top_k: int = TOP_K
    pooled_selection: bool = True
    dedupe_real: bool = False


def stratified_sample(
    corpus: list[Screenshot],
    counts_range: tuple[int, int],
    per_stratum: int,
    seed: int,
) -> InputSample:
    """per_stratum screenshots per unique-label-count value, sampled
    without replacement under the given seed."""
    lo, hi = counts_range
    rng = np.random.RandomState(seed)
    picked: list[Screenshot] = []
    strata: dict[int, list[str]] = {}
    for count in range(lo, hi + 1):
        members = [s for s in corpus if s.label_count == count]
        if len(members) < per_stratum:
            raise ValueError(
                f"stratum {count} has {len(members)} members, need {per_stratum}"
            )
        idx = rng.choice(len(members), size=per_stratum, replace=False)
        chosen = [members[i] for i in sorted(idx)]
        picked.extend(chosen)
        strata[count] = [s.id for s in chosen]
    return InputSample(screenshots=picked, strata=strata)


def complexity_group(label_count: int) -> str:
    """Complexity bucket by unique component types: <6 low, 6-8 medium, >8 high."""
    if label_count < 6:
        return "low"
    if label_count <= 8:
        return "medium"
    return "high"


def nearest_real(
    image: np.ndarray, search_corpus: list[Screenshot], k: int, backend
) -> list[Screenshot]:
    """The k corpus screenshots with smallest distance to the query,
    ascending, ties broken by corpus index."""
    if len(search_corpus) < k:
        raise ValueError(f"search corpus has {len(search_corpus)} images, need {k}")
    dists = [backend.dist(image, s.image) for s in search_corpus]
    order = sorted(range(len(search_corpus)), key=lambda i: (dists[i], i))
    return [search_corpus[i] for i in order[:k]]


def _cell_seed(base: int, input_id: str, condition: int) -> int:
    h = 0
    for ch in f"{base}:{input_id}:{condition}":
        h = (h * 131 + ord(ch)) % (2 ** 31 - 1)
    return h


def _generated_representatives(
    input_shot: Screenshot, ctx: ExperimentContext, mode: str, seed: int
):
    enc = encode(input_shot.image, ctx.model, ctx.encode_cfg)
    targets = make_targets(
        mode, ctx.targets_k, ctx.model, seed,
        corpus=ctx.corpus, encode_cfg=ctx.encode_cfg,
    )
    if ctx.pooled_selection:
        pooled: list[np.ndarray] = []
        for tid, code in targets:
            batch = synthesize_pair(enc.code, code, ctx.model, input_shot.id, tid)
            pooled.extend(img for _, img in batch.items)
        reps = select_from_batch(pooled, ctx.model, ctx.backend, ctx.eps, ctx.min_points)
        return reps.images
    images: list[np.ndarray] = []
    for tid, code in targets:
        batch = synthesize_pair(enc.code, code, ctx.model, input_shot.id, tid)
        reps = select_from_batch(
            [img for _, img in batch.items], ctx.model, ctx.backend, ctx.eps, ctx.min_points
        )
        images.extend(reps.images)
    return images


def run_condition(c: int, input_shot: Screenshot, ctx: ExperimentContext) -> ConditionReport:
    if c not in CONDITIONS:
        raise ValueError(f"condition must be 1..6, got {c}")
    seed = _cell_seed(ctx.seed, input_shot.id, 1 if c == 3 else 2 if c == 4 else c)
    example_ids: list[str] = []
    if c in (1, 2):
        mode = "random_latent" if c == 1 else "corpus_image"
        images = _generated_representatives(input_shot, ctx, mode, seed)
        provenance = ["generated"] * len(images)
    elif c in (3, 4):
        mode = "random_latent" if c == 3 else "corpus_image"
        generated = _generated_representatives(input_shot, ctx, mode, seed)
        shots = [nearest_real(img, ctx.search_corpus, 1, ctx.backend)[0] for img in generated]
        if ctx.dedupe_real:
            seen: set[str] = set()
            shots = [s for s in shots if not (s.id in seen or seen.add(s.id))]
        images = [s.image for s in shots]
        example_ids = [s.id for s in shots]
        provenance = ["real"] * len(images)
    elif c == 5:
        rng = np.random.RandomState(seed)
        idx = rng.choice(len(ctx.corpus), size=ctx.random_set_size, replace=False)
        shots = [ctx.corpus[i] for i in idx]
        images = [s.image for s in shots]
        example_ids = [s.id for s in shots]
        provenance = ["real"] * len(images)
    else:
        shots = nearest_real(input_shot.image, ctx.search_corpus, ctx.top_k, ctx.backend)
        images = [s.image for s in shots]
        example_ids = [s.id for s in shots]
        provenance = ["real"] * len(images)

    example_set = ExampleSet(input_id=input_shot.id, examples=images, provenance=provenance)
    return ConditionReport(
        condition=c,
        input_id=input_shot.id,
        example_set=example_set,
        similarity=similarity(input_shot.image, example_set, ctx.backend),
        diversity=diversity(example_set, ctx.backend) if len(images) >= 2 else None,
        complexity=complexity_group(input_shot.label_count),
        example_ids=example_ids,
    )


def _stats_block(reports: list[ConditionReport]) -> dict:
    block: dict = {}
    for metric in ("similarity", "diversity"):
        groups = [
            [getattr(r, metric) for r in reports
             if r.condition == c and getattr(r, metric) is not None]
            for c in CONDITIONS
        ]
        present = [g for g in groups if g]
        if len(present) < 2 or any(len(g) == 0 for g in groups):
            continue
        h, p = kruskal_wallis(groups)
        pairwise = mannwhitney_bonferroni(groups)
        block[metric] = {
            "kruskal_wallis": {"H": h, "p": p},
            "pairwise": [
                {
                    "conditions": [CONDITIONS[e.row], CONDITIONS[e.col]],
                    "median_diff": e.median_diff,
                    "U": e.u,
                    "raw_p": e.raw_p,
                    "corrected_p": e.corrected_p,
                    "stars": e.stars,
                }
                for e in pairwise
            ],
        }
    return block


def run_experiment(
    inputs: list[Screenshot],
    ctx: ExperimentContext,
    out_dir: Path | None = None,
    conditions: tuple[int, ...] = CONDITIONS,
) -> dict:
    """Run every input x condition cell, aggregate metrics and stats.

    Partial failures are recorded per cell; completed cells still
    contribute to the aggregates.
    """
    reports: list[ConditionReport] = []
    failures: list[dict] = []
    for shot in inputs:
        for c in conditions:
            try:
                reports.append(run_condition(c, shot, ctx))
            except Exception as exc:  # keep going, report at the end
                failures.append({"input": shot.id, "condition": c, "error": str(exc)})

    agg_rows = [
        {
            "condition": r.condition,
            "input": r.input_id,
            "complexity": r.complexity,
            "n_examples": len(r.example_set.examples),
            "similarity": r.similarity,
            "diversity": r.diversity,
        }
        for r in sorted(reports, key=lambda r: (r.condition, r.input_id))
    ]
    stats = {"overall": _stats_block(reports)}
    for group in ("low", "medium", "high"):
        sub = [r for r in reports if r.complexity == group]
        if sub:
            stats[group] = _stats_block(sub)

    result = {
        "backend_id": getattr(ctx.backend, "id", "unknown"),
        "seed": ctx.seed,
        "cells": agg_rows,
        "stats": stats,
        "failures": failures,
    }
    if out_dir is not None:
        _write_outputs(result, reports, Path(out_dir))
    return result


def aggregate_csv(result: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["condition", "input", "complexity", "n_examples", "similarity", "diversity"])
    for row in result["cells"]:
        writer.writerow([
            row["condition"], row["input"], row["complexity"], row["n_examples"],
            f"{row['similarity']:.9f}",
            "" if row["diversity"] is None else f"{row['diversity']:.9f}",
        ])
    return buf.getvalue()


def long_format_csv(result: dict) -> str:
    """Violin-plot-ready long format: one row per (cell, metric)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["condition", "input", "complexity", "metric", "value"])
    for row in result["cells"]:
        for metric in ("similarity", "diversity"):
            if row[metric] is None:
                continue
            writer.writerow([
                row["condition"], row["input"], row["complexity"], metric,
                f"{row[metric]:.9f}",
            ])
    return buf.getvalue()


def _write_outputs(result: dict, reports: list[ConditionReport], out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    cells_dir = out_dir / "cells"
    cells_dir.mkdir(exist_ok=True)
    for r in reports:
        payload = {
            "input_id": r.input_id,
            "condition": r.condition,
            "complexity": r.complexity,
            "n": len(r.example_set.examples),
            "similarity": r.similarity,
            "diversity": r.diversity,
            "provenance": r.example_set.provenance,
            "example_ids": r.example_ids,
            "backend_id": result["backend_id"],
        }
        (cells_dir / f"{r.input_id}_c{r.condition}.json").write_text(
            json.dumps(payload, indent=2)
        )
    (out_dir / "aggregate.csv").write_text(aggregate_csv(result))
    (out_dir / "long.csv").write_text(long_format_csv(result))
    (out_dir / "stats.json").write_text(json.dumps(result["stats"], indent=2))
    if result["failures"]:
        (out_dir / "failures.json").write_text(json.dumps(result["failures"], indent=2))
