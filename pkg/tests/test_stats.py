import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shclust.dissimilarity import aggregate_dissim
from shclust.hclust import agglomerate, cut
from shclust.stats import cer, gap_split_decision, selection_rate, silhouette, within_dispersion

from strategies import seeded_normal


# ----------------------------------------------------------------- CER oracle

def _set_partitions(n):
    """All set partitions of range(n) as label lists (restricted growth strings)."""
    def grow(prefix, top):
        if len(prefix) == n:
            yield list(prefix)
            return
        for lab in range(top + 2):
            yield from grow(prefix + [lab], max(top, lab))
    if n == 0:
        yield []
        return
    yield from grow([0], 0)


def _pair_disagreement(p1, p2):
    n = len(p1)
    pairs = list(itertools.combinations(range(n), 2))
    bad = sum((p1[i] == p1[j]) != (p2[i] == p2[j]) for i, j in pairs)
    return Fraction(bad, len(pairs))


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_cer_matches_pair_enumeration_exhaustively(n):
    parts = list(_set_partitions(n))
    assert len(parts) == [1, 1, 2, 5, 15, 52, 203][n]
    for p1 in parts:
        for p2 in parts:
            got = cer(p1, p2)
            assert got == float(_pair_disagreement(p1, p2))
            assert (got == 0.0) == (p1 == p2)


def test_cer_examples():
    assert cer([1, 1, 2, 2], [1, 1, 2, 2]) == 0.0
    assert cer([1, 1, 2, 2], [7, 7, 3, 3]) == 0.0
    assert cer([1, 1, 2, 2], [1, 2, 1, 2]) == pytest.approx(4 / 6)
    with pytest.raises(ValueError):
        cer([1, 2], [1, 2, 3])


@given(st.lists(st.integers(0, 4), min_size=2, max_size=30), st.data())
def test_cer_symmetric_and_relabel_invariant(p1, data):
    p2 = data.draw(st.lists(st.integers(0, 4), min_size=len(p1), max_size=len(p1)))
    perm = data.draw(st.permutations(range(5)))
    assert cer(p1, p2) == cer(p2, p1)
    assert cer([perm[v] for v in p1], p2) == cer(p1, p2)
    assert 0.0 <= cer(p1, p2) <= 1.0


# ------------------------------------------------------------------ silhouette

def test_silhouette_two_tight_pairs():
    x = np.array([0.0, 1.0, 20.0, 21.0])
    d = np.abs(np.subtract.outer(x, x))
    s = silhouette(d, [1, 1, 2, 2])
    # a = 1 for every point; b = 20.5, 19.5, 19.5, 20.5
    expected = [19.5 / 20.5, 18.5 / 19.5, 18.5 / 19.5, 19.5 / 20.5]
    assert np.allclose(s.per_point, expected, atol=1e-12, rtol=0)
    assert abs(s.average - np.mean(expected)) < 1e-12
    assert s.average > 0.9


def test_silhouette_with_singleton_and_misfit():
    # points 0, 2, 3 | 10, 11 | 30 ; the point at 3 sits in the first cluster
    x = np.array([0.0, 2.0, 3.0, 10.0, 11.0, 30.0])
    d = np.abs(np.subtract.outer(x, x))
    s = silhouette(d, [1, 1, 1, 2, 2, 3])
    hand = [
        # i=0: a=(2+3)/2, b=min((10+11)/2, 30)
        (10.5 - 2.5) / 10.5,
        # i=1: a=(2+1)/2, b=min((8+9)/2, 28)
        (8.5 - 1.5) / 8.5,
        # i=2: a=(3+1)/2, b=min((7+8)/2, 27)
        (7.5 - 2.0) / 7.5,
        # i=3: a=1, b=min((10+8+7)/3, 20)
        ((25 / 3) - 1.0) / (25 / 3),
        # i=4: a=1, b=min((11+9+8)/3, 19)
        ((28 / 3) - 1.0) / (28 / 3),
        # singleton
        0.0,
    ]
    assert np.allclose(s.per_point, hand, atol=1e-12, rtol=0)


def test_silhouette_negative_for_misassigned_point():
    x = np.array([0.0, 1.0, 9.0, 10.0, 11.0])
    d = np.abs(np.subtract.outer(x, x))
    s = silhouette(d, [1, 1, 1, 2, 2])
    # point at 9: a = (9+8)/2 = 8.5, b = (1+2)/2 = 1.5
    assert abs(s.per_point[2] - (1.5 - 8.5) / 8.5) < 1e-12


def test_silhouette_identical_points_all_zero():
    s = silhouette(np.zeros((5, 5)), [1, 1, 2, 2, 2])
    assert np.array_equal(s.per_point, np.zeros(5))


def test_silhouette_needs_two_clusters():
    with pytest.raises(ValueError):
        silhouette(np.zeros((3, 3)), [1, 1, 1])


@given(seeded_normal(min_n=3, max_n=15), st.data())
def test_silhouette_range_relabel_scale(data, draw):
    x, _ = data
    n = x.shape[0]
    labels = np.array(draw.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n)))
    if len(np.unique(labels)) < 2:
        labels[0] = (labels[0] + 1) % 4
        if len(np.unique(labels)) < 2:
            labels[1] = (labels[0] + 1) % 4
    d = aggregate_dissim(x)
    s = silhouette(d, labels)
    assert np.all(s.per_point >= -1 - 1e-12) and np.all(s.per_point <= 1 + 1e-12)
    assert abs(s.average - s.per_point.mean()) <= 1e-12
    relabeled = silhouette(d, (labels + 5) * 3)
    assert abs(relabeled.average - s.average) <= 1e-12
    c = draw.draw(st.floats(0.01, 100))
    assert abs(silhouette(c * d, labels).average - s.average) <= 1e-9


# ------------------------------------------------------------- selection rate

def test_selection_rate_examples():
    true = range(50)
    assert selection_rate(range(30), true, 30) == 1.0
    assert selection_rate(range(70), true, 70) == 1.0
    assert selection_rate(list(range(25)) + list(range(100, 125)), true, 50) == 0.5
    with pytest.raises(ValueError):
        selection_rate([1], [], 1)


# --------------------------------------------------------------------- gap

def _binary_cut(x):
    return cut(agglomerate(aggregate_dissim(x)), 2)


def test_within_dispersion_hand_value():
    x = np.array([[0.0], [2.0], [10.0]])
    d = aggregate_dissim(x)
    # one cluster: (4 + 100 + 64) * 2 / (2 * 3)
    assert within_dispersion(d, [1, 1, 1]) == pytest.approx(168 / 3)
    assert within_dispersion(d, [1, 1, 2]) == pytest.approx(2.0)


def test_gap_splits_separated_clusters():
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((20, 2))
        x[10:, 0] += 20.0
        hits += gap_split_decision(x, _binary_cut(x), b=50, seed=seed).split
    assert hits >= 90


def test_gap_rejects_single_blob():
    rejects = 0
    for seed in range(100):
        x = np.random.default_rng(1000 + seed).standard_normal((30, 2))
        rejects += not gap_split_decision(x, _binary_cut(x), b=50, seed=seed).split
    assert rejects >= 80


def test_gap_single_reference_draw_is_finite(rng):
    x = rng.standard_normal((8, 3))
    dec = gap_split_decision(x, _binary_cut(x), b=1, seed=3)
    assert all(math.isfinite(v) for v in dec.gap_values + dec.std_errors)
    assert dec.b == 1


def test_gap_constant_feature_and_tiny_node():
    x = np.array([[0.0, 5.0], [1.0, 5.0], [10.0, 5.0]])
    dec = gap_split_decision(x, [1, 1, 2], b=10, seed=0)
    assert all(math.isfinite(v) for v in dec.gap_values)
    dec2 = gap_split_decision(np.array([[0.0], [1.0]]), [1, 2], b=5, seed=0)
    assert math.isfinite(dec2.gap_values[0])


def test_gap_input_validation(rng):
    x = rng.standard_normal((6, 2))
    with pytest.raises(ValueError):
        gap_split_decision(x, [1, 1, 1, 1, 1, 1])
    with pytest.raises(ValueError):
        gap_split_decision(x, [1, 2, 1])
    with pytest.raises(ValueError):
        gap_split_decision(x, [1, 2, 1, 2, 1, 2], b=0)
    with pytest.raises(ValueError):
        gap_split_decision(x[:1], [1])


def test_gap_deterministic_given_seed(rng):
    x = rng.standard_normal((15, 3))
    lab = _binary_cut(x)
    assert gap_split_decision(x, lab, seed=9) == gap_split_decision(x, lab, seed=9)


def test_gap_monotone_in_separation():
    base = np.random.default_rng(77).standard_normal((24, 2))
    for seed in range(10):
        prev = False
        for shift in np.linspace(0.0, 12.0, 13):
            x = base.copy()
            x[12:, 0] += shift
            split = gap_split_decision(x, _binary_cut(x), b=50, seed=seed).split
            assert not (prev and not split), f"split flipped off at shift {shift}, seed {seed}"
            prev = split
