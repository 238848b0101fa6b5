import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from glyset.stats import StatsError, dunn_test, kruskal_wallis, midranks, pearson_r, rank_groups


def count_ranks(values):
    """rank = (#smaller) + (#equal + 1) / 2, by direct counting."""
    return [sum(u < v for u in values) + (sum(u == v for u in values) + 1) / 2 for v in values]


def oracle_kw_dunn(groups):
    """Scratch evaluation of tie-corrected H and Dunn z from counted ranks."""
    flat = [v for g in groups for v in g]
    N = len(flat)
    ranks = count_ranks(flat)
    means, start = [], 0
    for g in groups:
        means.append(sum(ranks[start : start + len(g)]) / len(g))
        start += len(g)
    ties = sum(flat.count(v) ** 3 - flat.count(v) for v in set(flat))
    h = 12 / (N * (N + 1)) * sum(len(g) * (m - (N + 1) / 2) ** 2 for g, m in zip(groups, means))
    h /= 1 - ties / (N**3 - N)
    zs = {}
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            var = (N * (N + 1) / 12 - ties / (12 * (N - 1))) * (1 / len(groups[i]) + 1 / len(groups[j]))
            zs[(i, j)] = (means[i] - means[j]) / math.sqrt(var)
    return h, zs


TIED = [[1, 2, 2, 3, 5], [2, 4, 4, 6], [5, 5, 7, 8, 9, 9]]


def test_midranks_distinct_are_permutation():
    x = [3.2, -1, 8, 0.5]
    assert sorted(midranks(x)) == [1, 2, 3, 4]


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=30))
def test_midranks_sum_and_counting(values):
    r = midranks(values)
    assert r.sum() == pytest.approx(len(values) * (len(values) + 1) / 2)
    assert list(r) == count_ranks(values)


def test_rank_groups_joint():
    rs = rank_groups({"a": [1, 3], "b": [2, 3]})
    assert rs[0].midranks == (1.0, 3.5) and rs[1].midranks == (2.0, 3.5)


def test_kw_identical_groups():
    res = kruskal_wallis([[1, 2, 3, 4], [1, 2, 3, 4]])
    assert res.statistic == pytest.approx(0.0, abs=1e-12)
    assert res.p_value == pytest.approx(1.0)


def test_kw_separated_groups():
    res = kruskal_wallis([[1, 2, 3], [101, 102, 103]])
    assert res.statistic == pytest.approx(27 / 7, abs=1e-12)
    assert res.p_value < 0.05


def test_kw_tied_fixture_matches_oracle():
    h, _ = oracle_kw_dunn(TIED)
    res = kruskal_wallis(TIED)
    assert res.statistic == pytest.approx(h, abs=1e-9)
    assert res.statistic == pytest.approx(sps.kruskal(*TIED).statistic, abs=1e-9)
    assert res.p_value == pytest.approx(sps.kruskal(*TIED).pvalue, abs=1e-12)


def test_kw_degenerate():
    with pytest.raises(StatsError, match="degenerate"):
        kruskal_wallis([[2, 2], [2, 2, 2]])


def test_kw_needs_two_groups():
    with pytest.raises(StatsError):
        kruskal_wallis([[1, 2, 3]])
    with pytest.raises(StatsError):
        kruskal_wallis([[1, 2, 3], []])


def test_dunn_tied_fixture_matches_oracle():
    _, zs = oracle_kw_dunn(TIED)
    res = dunn_test(TIED, "none")
    assert len(res) == 3
    for r in res:
        assert r.z == pytest.approx(zs[(r.group_a, r.group_b)], abs=1e-9)
        assert r.p == pytest.approx(2 * sps.norm.sf(abs(r.z)), abs=1e-15)


def test_dunn_identical_groups():
    (r,) = dunn_test([[1, 2, 3], [1, 2, 3]])
    assert r.z == 0.0 and r.p == 1.0 and r.adjusted_p == 1.0


def test_dunn_two_constant_groups():
    (r,) = dunn_test([[0.9] * 5, [0.5] * 5], "bonferroni")
    assert r.z == pytest.approx(3.0, abs=1e-12)
    assert r.adjusted_p < 0.05


@settings(max_examples=60)
@given(st.lists(st.lists(st.integers(0, 9), min_size=1, max_size=6), min_size=3, max_size=4))
def test_dunn_bonferroni_never_below_raw(groups):
    try:
        res = dunn_test(groups, "bonferroni")
    except StatsError:
        return
    for r in res:
        assert r.adjusted_p >= r.p
        assert 0 <= r.adjusted_p <= 1


@settings(max_examples=60)
@given(st.lists(st.lists(st.integers(0, 9), min_size=1, max_size=7), min_size=2, max_size=4))
def test_kw_dunn_match_oracle_random(groups):
    if len({v for g in groups for v in g}) < 2:
        return
    h, zs = oracle_kw_dunn(groups)
    assert kruskal_wallis(groups).statistic == pytest.approx(h, abs=1e-9)
    for r in dunn_test(groups, "none"):
        assert r.z == pytest.approx(zs[(r.group_a, r.group_b)], abs=1e-9)


@settings(max_examples=40)
@given(st.lists(st.lists(st.integers(0, 9), min_size=2, max_size=6), min_size=2, max_size=3))
def test_rank_tests_invariant_under_monotone_transform(groups):
    if len({v for g in groups for v in g}) < 2:
        return
    transformed = [[math.exp(v / 3) * 10 - 4 for v in g] for g in groups]
    assert kruskal_wallis(groups).statistic == pytest.approx(kruskal_wallis(transformed).statistic, abs=1e-9)


def test_pearson_perfect():
    x = list(range(10))
    assert pearson_r(x, [2 * v + 1 for v in x])[0] == pytest.approx(1.0, abs=1e-15)
    assert pearson_r(x, [-v for v in x])[0] == pytest.approx(-1.0, abs=1e-15)


def test_pearson_matches_reference(rng):
    x = rng.normal(size=15)
    y = 0.5 * x + rng.normal(size=15)
    r, p = pearson_r(x, y)
    assert r == pytest.approx(statistics.correlation(list(x), list(y)), abs=1e-9)
    ref = sps.pearsonr(x, y)
    assert p == pytest.approx(ref.pvalue, rel=1e-9)


def test_pearson_errors():
    with pytest.raises(StatsError, match="constant"):
        pearson_r([1, 1, 1], [1, 2, 3])
    with pytest.raises(StatsError):
        pearson_r([1, 2], [1, 2])


@given(
    st.lists(st.floats(-100, 100), min_size=4, max_size=20),
    st.floats(0.1, 10),
    st.floats(-50, 50),
)
def test_pearson_affine(xs, a, b):
    rng = np.random.default_rng(len(xs))
    ys = [v + rng.normal() for v in xs]
    if np.std(xs) < 1e-3:
        return
    r = pearson_r(xs, ys)[0]
    assert pearson_r([a * v + b for v in xs], ys)[0] == pytest.approx(r, abs=1e-9)
    assert pearson_r([-v for v in xs], ys)[0] == pytest.approx(-r, abs=1e-9)


def test_p_monotone_in_statistic():
    ps = [kruskal_wallis([[1, 2, 3, 4], [1 + s, 2 + s, 3 + s, 4 + s]]).p_value for s in (0, 1, 2, 3, 4)]
    assert ps == sorted(ps, reverse=True)
