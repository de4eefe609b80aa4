"""Nonparametric group comparisons: Kruskal-Wallis omnibus test and
pairwise two-sided Mann-Whitney U with Bonferroni correction.

Both tests use midranks for ties.  Mann-Whitney p-values come from the
exact U distribution when both samples are small (n <= 8) and tie-free,
otherwise from the normal approximation with tie and continuity
correction.  Pairwise results report the median difference row-minus-
column, so the matrix is antisymmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.stats import chi2, norm

EXACT_MAX_N = 8


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _tie_counts(values: np.ndarray) -> np.ndarray:
    _, counts = np.unique(values, return_counts=True)
    return counts


def kruskal_wallis(groups: list[list[float]]) -> tuple[float, float]:
    """Rank-based H statistic with tie correction; p from chi-squared."""
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    for i, g in enumerate(groups):
        if len(g) == 0:
            raise ValueError(f"group {i} is empty")
    pooled = np.concatenate([np.asarray(g, dtype=float) for g in groups])
    n_total = len(pooled)
    ranks = _midranks(pooled)
    h = 0.0
    offset = 0
    for g in groups:
        r = ranks[offset:offset + len(g)]
        h += r.sum() ** 2 / len(g)
        offset += len(g)
    h = 12 / (n_total * (n_total + 1)) * h - 3 * (n_total + 1)
    ties = _tie_counts(pooled)
    correction = 1 - (ties ** 3 - ties).sum() / (n_total ** 3 - n_total)
    if correction == 0:  # every value identical
        return 0.0, 1.0
    h /= correction
    h = max(h, 0.0)
    p = float(chi2.sf(h, len(groups) - 1))
    return float(h), p


def _exact_u_sf(u_stat: float, n1: int, n2: int) -> float:
    """P(U >= u_stat) under the exact null distribution (no ties).

    Counts rank arrangements by walking the n1+n2 sorted positions and
    assigning each to sample 1 or 2; placing a sample-1 value at a
    position adds the number of sample-2 values already seen to U.
    """
    n = n1 + n2
    u_max = n1 * n2
    # counts[k][u] = arrangements using k sample-1 values so far with partial U = u
    counts = np.zeros((n1 + 1, u_max + 1))
    counts[0][0] = 1.0
    for pos in range(n):
        new = np.zeros_like(counts)
        for k in range(min(pos, n1) + 1):
            row = counts[k]
            if not row.any():
                continue
            y_seen = pos - k
            if k < n1:  # assign this position to sample 1
                new[k + 1, y_seen:] += row[: u_max + 1 - y_seen]
            if y_seen < n2:  # assign to sample 2
                new[k] += row
        counts = new
    dist = counts[n1]
    threshold = math.ceil(u_stat - 1e-9)
    return float(dist[threshold:].sum() / dist.sum())


def mann_whitney(x: list[float], y: list[float]) -> tuple[float, float]:
    """Two-sided Mann-Whitney U test; returns (U for x, p-value)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) == 0 or len(y) == 0:
        raise ValueError("both groups must be non-empty")
    n1, n2 = len(x), len(y)
    pooled = np.concatenate([x, y])
    ranks = _midranks(pooled)
    r1 = ranks[:n1].sum()
    u1 = r1 - n1 * (n1 + 1) / 2
    u2 = n1 * n2 - u1
    has_ties = len(np.unique(pooled)) < len(pooled)
    if not has_ties and max(n1, n2) <= EXACT_MAX_N:
        u_big = max(u1, u2)
        p = min(1.0, 2 * _exact_u_sf(u_big, n1, n2))
        return float(u1), float(p)
    mean_u = n1 * n2 / 2
    ties = _tie_counts(pooled)
    n = n1 + n2
    tie_term = (ties ** 3 - ties).sum() / (n * (n - 1))
    var_u = n1 * n2 / 12 * ((n + 1) - tie_term)
    if var_u <= 0:
        return float(u1), 1.0
    z = (abs(u1 - mean_u) - 0.5) / math.sqrt(var_u)  # continuity corrected
    z = max(z, 0.0)
    p = min(1.0, 2 * float(norm.sf(z)))
    return float(u1), p


def significance_stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


@dataclass
class PairwiseEntry:
    row: int
    col: int
    median_diff: float
    u: float
    raw_p: float
    corrected_p: float
    stars: str


def mannwhitney_bonferroni(groups: list[list[float]], alpha: float = 0.05) -> list[PairwiseEntry]:
    """All pairwise U tests with Bonferroni-corrected p-values and
    row-minus-column median differences."""
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    for i, g in enumerate(groups):
        if len(g) < 1:
            raise ValueError(f"group {i} is empty")
    n_comparisons = len(groups) * (len(groups) - 1) // 2
    medians = [float(np.median(g)) for g in groups]
    entries = []
    for i, j in combinations(range(len(groups)), 2):
        u, raw_p = mann_whitney(groups[i], groups[j])
        corrected = min(1.0, raw_p * n_comparisons)
        entries.append(
            PairwiseEntry(
                row=i, col=j,
                median_diff=medians[i] - medians[j],
                u=u, raw_p=raw_p, corrected_p=corrected,
                stars=significance_stars(corrected),
            )
        )
    return entries


def median_diff_matrix(groups: list[list[float]]) -> np.ndarray:
    medians = np.array([np.median(g) for g in groups])
    return medians[:, None] - medians[None, :]
