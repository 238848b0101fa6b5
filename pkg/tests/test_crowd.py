
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glyset.crowd import (
    CLASSES,
    NOT_SURE,
    AggregatedLabel,
    BinaryClass,
    CrowdError,
    JudgmentSet,
    alpha_from_units,
    binarize,
    dawid_skene,
    krippendorff_alpha,
    read_aggregation,
    read_judgments,
    write_aggregation,
)
from glyset.synthetic import diagonal_confusion, simulate_judgments

# Krippendorff's worked reliability-data example: 4 observers x 12 units
_A = [1, 2, 3, 3, 2, 1, 4, 1, 2, None, None, None]
_B = [1, 2, 3, 3, 2, 2, 4, 1, 2, 5, None, 3]
_C = [None, 3, 3, 3, 2, 3, 4, 2, 2, 5, 1, None]
_D = [1, 2, 3, 3, 2, 4, 4, 1, 2, 5, 1, None]
CANONICAL = {u: [row[u] for row in (_A, _B, _C, _D) if row[u] is not None] for u in range(12)}
PUBLISHED = {"nominal": 0.743, "ordinal": 0.815, "interval": 0.849}


def brute_force_alpha(units, metric):
    """Pairwise-disagreement form: no coincidence matrix, explicit value pairs."""
    pairable = {u: [float(v) for v in vals] for u, vals in units.items() if len(vals) >= 2}
    pool = [v for vals in pairable.values() for v in vals]
    n = len(pool)
    freq = {v: pool.count(v) for v in set(pool)}

    def delta(a, b):
        if metric == "nominal":
            return float(a != b)
        if metric == "interval":
            return (a - b) ** 2
        lo, hi = min(a, b), max(a, b)
        s = sum(f for v, f in freq.items() if lo <= v <= hi) - (freq[a] + freq[b]) / 2
        return s * s

    d_obs = 0.0
    for vals in pairable.values():
        m = len(vals)
        d_obs += sum(delta(vals[i], vals[j]) for i in range(m) for j in range(m) if i != j) / (m - 1)
    d_obs /= n
    d_exp = sum(delta(pool[i], pool[j]) for i in range(n) for j in range(n) if i != j) / (n * (n - 1))
    return 1 - d_obs / d_exp


@pytest.mark.parametrize("metric", ["nominal", "ordinal", "interval"])
def test_canonical_example(metric, backend):
    got = alpha_from_units(CANONICAL, metric)
    assert got == pytest.approx(PUBLISHED[metric], abs=1e-3)
    assert got == pytest.approx(brute_force_alpha(CANONICAL, metric), abs=1e-12)


def test_perfect_agreement_is_exactly_one():
    js = JudgmentSet.from_triples(
        [(w, f"r{i}", (i % 5) + 1) for i in range(10) for w in ("a", "b")]
    )
    assert krippendorff_alpha(js) == 1.0
    assert krippendorff_alpha(js, "interval") == 1.0


def test_not_sure_is_missing():
    js = JudgmentSet.from_triples(
        [("a", "r1", 1), ("b", "r1", 1), ("c", "r1", NOT_SURE), ("a", "r2", 5), ("b", "r2", 5)]
    )
    assert krippendorff_alpha(js) == 1.0


def test_no_overlap():
    js = JudgmentSet.from_triples([("a", "r1", 1), ("b", "r2", 2)])
    with pytest.raises(CrowdError, match="no overlap"):
        krippendorff_alpha(js)


def test_degenerate():
    js = JudgmentSet.from_triples([("a", "r1", 3), ("b", "r1", 3), ("a", "r2", 3), ("b", "r2", 3)])
    with pytest.raises(CrowdError, match="degenerate"):
        krippendorff_alpha(js)


small_units = st.dictionaries(
    st.integers(0, 6),
    st.lists(st.integers(1, 5), min_size=0, max_size=4),
    min_size=2,
    max_size=7,
).filter(lambda u: sum(len(v) for v in u.values() if len(v) >= 2) <= 20)


@settings(max_examples=150)
@given(small_units, st.sampled_from(["interval", "ordinal"]))
def test_alpha_matches_brute_force(units, metric):
    try:
        expected = brute_force_alpha(units, metric)
    except ZeroDivisionError:
        with pytest.raises(CrowdError):
            alpha_from_units(units, metric)
        return
    assert alpha_from_units(units, metric) == pytest.approx(expected, abs=1e-9)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_alpha_relabel_and_permute_invariant(seed):
    rng = np.random.default_rng(seed)
    triples = [(f"w{j}", f"r{i}", int(rng.integers(1, 6))) for i in range(8) for j in range(3)]
    triples[0] = ("w0", "r0", 1)
    triples[1] = ("w1", "r0", 5)
    base = krippendorff_alpha(JudgmentSet.from_triples(triples))
    rename = {f"w{j}": f"worker-{rng.random()}" for j in range(3)}
    shuffled = [(rename[w], r, v) for w, r, v in triples]
    shuffled = [shuffled[i] for i in rng.permutation(len(shuffled))]
    assert krippendorff_alpha(JudgmentSet.from_triples(shuffled)) == pytest.approx(base, abs=1e-12)


def test_duplicate_judgment_rejected():
    with pytest.raises(CrowdError, match="duplicate"):
        JudgmentSet.from_triples([("a", "r1", 1), ("a", "r1", 2)])


def test_read_judgments(tmp_path):
    p = tmp_path / "j.csv"
    p.write_text("worker_id,recipe_id,rating\nw1,r1,3\nw2,r1,NS\n")
    js = read_judgments(p)
    assert [j.rating for j in js.judgments] == [3, NOT_SURE]
    p.write_text("worker_id,recipe_id,rating\nw1,r1,7\n")
    with pytest.raises(CrowdError):
        read_judgments(p)


# ---------------------------------------------------------------- Dawid-Skene


def test_unanimous_fixed_point(backend):
    votes = {"r1": 1, "r2": 4, "r3": NOT_SURE, "r4": 5, "r5": 2}
    js = JudgmentSet.from_triples([(w, r, v) for r, v in votes.items() for w in ("a", "b", "c")])
    res = dawid_skene(js)
    for lab in res.labels:
        assert lab.label == votes[lab.recipe_id]
        assert max(lab.posterior) > 0.99
        assert sum(lab.posterior) == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(res.confusion.sum(axis=2), 1.0, atol=1e-9)


def test_single_worker_reproduced():
    rng = np.random.default_rng(5)
    votes = {f"r{i}": CLASSES[rng.integers(6)] for i in range(40)}
    js = JudgmentSet.from_triples([("solo", r, v) for r, v in votes.items()])
    res = dawid_skene(js)
    assert {lab.recipe_id: lab.label for lab in res.labels} == votes


@pytest.mark.parametrize("seed", range(3))
def test_synthetic_recovery(seed, backend):
    rng = np.random.default_rng(seed)
    truth = {f"r{i:03d}": CLASSES[rng.integers(6)] for i in range(200)}
    js = simulate_judgments(truth, [diagonal_confusion(0.8)] * 5, seed)
    res = dawid_skene(js)
    acc = np.mean([lab.label == truth[lab.recipe_id] for lab in res.labels])
    assert acc >= 0.9
    ll = np.array(res.log_likelihoods)
    assert np.all(np.diff(ll) >= -1e-9 * np.abs(ll[:-1]))


def test_posterior_tie_goes_to_lower_rating():
    js = JudgmentSet.from_triples([("a", "r1", 2), ("b", "r1", 4)])
    res = dawid_skene(js, max_iters=1)
    assert res.labels[0].label == 2


def test_empty_judgments():
    with pytest.raises(CrowdError):
        dawid_skene(JudgmentSet([]))


def test_backends_bit_identical_labels():
    from glyset import _pykernels, kernels

    rng = np.random.default_rng(11)
    truth = {f"r{i}": CLASSES[rng.integers(6)] for i in range(50)}
    js = simulate_judgments(truth, [diagonal_confusion(0.7)] * 4, 1, per_item=3)
    a = dawid_skene(js)
    saved = kernels.ds_log_terms, kernels.ds_confusion_counts
    try:
        kernels.ds_log_terms, kernels.ds_confusion_counts = _pykernels.ds_log_terms, _pykernels.ds_confusion_counts
        b = dawid_skene(js)
    finally:
        kernels.ds_log_terms, kernels.ds_confusion_counts = saved
    assert [l.label for l in a.labels] == [l.label for l in b.labels]
    np.testing.assert_allclose([l.posterior for l in a.labels], [l.posterior for l in b.labels], atol=1e-9)


def test_aggregation_csv_round_trip(tmp_path):
    labels = [AggregatedLabel("r1", 3, (0.1, 0.1, 0.5, 0.1, 0.1, 0.1)), AggregatedLabel("r2", NOT_SURE, (0, 0, 0, 0, 0, 1.0))]
    write_aggregation(labels, tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "recipe_id,label,p1,p2,p3,p4,p5,pNS"
    assert read_aggregation(tmp_path / "a.csv") == labels


# ---------------------------------------------------------------- binarize


def _agg(rid, label):
    return AggregatedLabel(rid, label, (1 / 6,) * 6)


def test_binarize_rules():
    out, excluded = binarize([_agg("a", 3), _agg("b", 4), _agg("c", NOT_SURE), _agg("d", 1), _agg("e", 5)])
    assert [(b.recipe_id, b.cls) for b in out] == [
        ("a", BinaryClass.UD),
        ("b", BinaryClass.HD),
        ("d", BinaryClass.UD),
        ("e", BinaryClass.HD),
    ]
    assert excluded == 1


@given(st.lists(st.sampled_from(CLASSES), max_size=50))
def test_binarize_partitions(labels):
    out, excluded = binarize([_agg(str(i), l) for i, l in enumerate(labels)])
    ud = sum(b.positive for b in out)
    hd = sum(not b.positive for b in out)
    assert ud + hd + excluded == len(labels)
