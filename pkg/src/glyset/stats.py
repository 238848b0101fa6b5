"""Rank-based tests and correlation used for the healthiness analysis and model comparison."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
from scipy import stats as sps

class StatsError(ValueError):
    pass


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with tied values sharing their mean rank."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    sx = x[order]
    i = 0
    n = len(x)
    while i < n:
        j = i
        while j + 1 < n and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@dataclass(frozen=True)
class RankedSample:
    group_id: Hashable
    values: tuple[float, ...]
    midranks: tuple[float, ...] = ()


@dataclass(frozen=True)
class PairwiseResult:
    group_a: Hashable
    group_b: Hashable
    z: float
    p: float
    adjusted_p: float


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    pairwise: list[PairwiseResult] = field(default_factory=list)


def rank_groups(groups: Sequence[Sequence[float]] | dict, ids: Sequence[Hashable] | None = None) -> list[RankedSample]:
    """Assign midranks jointly over all groups."""
    if isinstance(groups, dict):
        ids = list(groups)
        groups = [groups[k] for k in ids]
    ids = list(range(len(groups))) if ids is None else list(ids)
    flat = np.concatenate([np.asarray(g, dtype=float) for g in groups]) if groups else np.array([])
    ranks = midranks(flat)
    out = []
    start = 0
    for gid, g in zip(ids, groups):
        n = len(g)
        out.append(RankedSample(gid, tuple(float(v) for v in g), tuple(ranks[start : start + n])))
        start += n
    return out


def pearson_r(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Correlation coefficient and two-sided p from Student's t with n-2 df."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise StatsError("x and y must be 1-D and equally long")
    n = len(x)
    if n < 3:
        raise StatsError("need at least 3 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise StatsError("constant input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = float(2.0 * sps.t.sf(abs(t), n - 2))
    return r, min(1.0, p)


def _check_groups(groups: list[RankedSample]) -> None:
    if len(groups) < 2:
        raise StatsError("need at least two groups")
    if any(len(g.values) == 0 for g in groups):
        raise StatsError("empty group")


def _prepare(groups) -> list[RankedSample]:
    if isinstance(groups, dict) or not all(isinstance(g, RankedSample) for g in groups):
        groups = rank_groups(groups)
    elif any(not g.midranks for g in groups):
        groups = rank_groups([g.values for g in groups], [g.group_id for g in groups])
    _check_groups(groups)
    return groups


def _tie_sum(groups: list[RankedSample]) -> tuple[int, float]:
    flat = np.concatenate([np.asarray(g.values, dtype=float) for g in groups])
    _, counts = np.unique(flat, return_counts=True)
    return len(flat), float(np.sum(counts.astype(float) ** 3 - counts))


def kruskal_wallis(groups) -> TestResult:
    """Tie-corrected H with a chi-square(k-1) p-value.

    ``groups`` may be RankedSamples, a list of value lists, or a dict of them.
    """
    groups = _prepare(groups)
    N, ties = _tie_sum(groups)
    correction = 1.0 - ties / (N**3 - N)
    if correction <= 0:
        raise StatsError("degenerate ranks")
    mean_rank = (N + 1) / 2.0
    h = 12.0 / (N * (N + 1)) * sum(len(g.values) * (np.mean(g.midranks) - mean_rank) ** 2 for g in groups)
    h /= correction
    p = float(sps.chi2.sf(h, len(groups) - 1))
    return TestResult(float(h), min(1.0, max(0.0, p)))


def dunn_test(groups, adjustment: str = "bonferroni", pairs: Sequence[tuple[int, int]] | None = None) -> list[PairwiseResult]:
    """Pairwise z on mean ranks with the tie-corrected variance; two-sided normal p.

    ``pairs`` restricts the comparisons (indices into ``groups``); by default
    every pair is tested. Bonferroni multiplies by the number of comparisons.
    """
    if adjustment not in ("none", "bonferroni"):
        raise StatsError(f"unknown adjustment {adjustment!r}")
    groups = _prepare(groups)
    N, ties = _tie_sum(groups)
    if ties == N**3 - N:
        raise StatsError("degenerate ranks")
    base = N * (N + 1) / 12.0 - ties / (12.0 * (N - 1))
    if pairs is None:
        pairs = list(itertools.combinations(range(len(groups)), 2))
    m = len(pairs)
    out = []
    for a, b in pairs:
        ga, gb = groups[a], groups[b]
        se = math.sqrt(base * (1.0 / len(ga.values) + 1.0 / len(gb.values)))
        z = (float(np.mean(ga.midranks)) - float(np.mean(gb.midranks))) / se
        p = min(1.0, float(2.0 * sps.norm.sf(abs(z))))
        adj = min(1.0, p * m) if adjustment == "bonferroni" else p
        out.append(PairwiseResult(ga.group_id, gb.group_id, z, p, adj))
    return out
