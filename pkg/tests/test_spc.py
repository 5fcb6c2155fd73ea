import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shclust.simgen import gen_example1
from shclust.spc import (
    center_columns, lambda_search, leading_left_vector, pmd_rank_one, soft_l1_unit, spc_rank_k,
)

from shclust._seeding import derive_seed

from strategies import seeded_normal


def _aligned(a, b, tol):
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return min(np.abs(a - b).max(), np.abs(a + b).max()) <= tol


def test_rank_one_matrix_recovered(rng):
    a = rng.standard_normal(8)
    b = rng.standard_normal(5)
    fac = pmd_rank_one(np.outer(a, b), math.sqrt(5))
    assert _aligned(fac.v, b, 1e-10)
    assert _aligned(fac.u, a, 1e-10)
    assert fac.sigma == pytest.approx(np.linalg.norm(a) * np.linalg.norm(b), rel=1e-10)


def test_unit_budget_picks_dominant_column(rng):
    m = rng.standard_normal((12, 6))
    m[:, 4] *= 10.0
    fac = pmd_rank_one(m, 1.0)
    assert np.count_nonzero(fac.v) == 1
    # brute force over single-coordinate v = e_j: the best objective is ||m_j||
    best = int(np.argmax(np.linalg.norm(m, axis=0)))
    assert np.flatnonzero(fac.v).tolist() == [best]
    assert fac.sigma == pytest.approx(np.linalg.norm(m[:, best]), rel=1e-12)


def test_zero_matrix_warns():
    with pytest.warns(RuntimeWarning):
        fac = pmd_rank_one(np.zeros((4, 3)), 1.5)
    assert fac.status == "zero-matrix" and fac.sigma == 0.0


def test_input_validation():
    with pytest.raises(ValueError):
        pmd_rank_one(np.ones((3, 3)), 0.5)
    with pytest.raises(ValueError):
        pmd_rank_one(np.array([[1.0, np.inf], [0.0, 1.0]]), 1.0)
    with pytest.raises(ValueError):
        spc_rank_k(np.ones((4, 3)), 4, 1.5)
    with pytest.raises(ValueError):
        lambda_search(np.ones((4, 3)), 1, 4)


def test_vacuous_budget_matches_svd():
    # 20 random 15 x 10 matrices against a dense decomposition
    for seed in range(20):
        m = np.random.default_rng(seed).standard_normal((15, 10))
        fac = pmd_rank_one(m, math.sqrt(10))
        _, s, vt = np.linalg.svd(m)
        assert _aligned(fac.v, vt[0], 1e-6)
        assert fac.sigma == pytest.approx(s[0], rel=1e-10)


def test_leading_left_vector_is_deterministic(rng):
    # planted leading direction so 50 power steps converge well below 1e-6
    m = 5.0 * np.outer(rng.standard_normal(7), rng.standard_normal(20))
    m += 0.1 * rng.standard_normal((7, 20))
    u1 = leading_left_vector(m, seed=4)
    assert np.array_equal(u1, leading_left_vector(m, seed=4))
    assert _aligned(u1, np.linalg.svd(m)[0][:, 0], 1e-6)


def test_rank_one_model_equals_single_factor(rng):
    x = rng.standard_normal((10, 7))
    model = spc_rank_k(x, 1, 2.0, seed=3)
    fac = pmd_rank_one(center_columns(x), 2.0, seed=derive_seed(3, 0))
    assert np.allclose(model.loadings[:, 0], fac.v, atol=1e-10)
    assert model.sigmas[0] == pytest.approx(fac.sigma, rel=1e-10)


def test_block_diagonal_supports():
    rng = np.random.default_rng(8)
    x = np.zeros((20, 6))
    x[:10, :3] = 3.0 * np.outer(rng.standard_normal(10), rng.standard_normal(3))
    x[10:, 3:] = np.outer(rng.standard_normal(10), rng.standard_normal(3))
    model = spc_rank_k(x, 2, math.sqrt(6), center=False)
    supports = {frozenset(np.flatnonzero(np.abs(model.loadings[:, f]) > 1e-8).tolist())
                for f in range(2)}
    assert supports == {frozenset({0, 1, 2}), frozenset({3, 4, 5})}
    _, s, _ = np.linalg.svd(x)
    assert sorted(model.sigmas, reverse=True) == pytest.approx(s[:2], rel=1e-6)


def test_soft_l1_unit_constraints(rng):
    a = rng.standard_normal(40)
    for lam in (1.0, 2.5, 6.0, 40.0):
        v = soft_l1_unit(a, lam)
        assert np.linalg.norm(v) == pytest.approx(1.0)
        assert np.abs(v).sum() <= lam + 1e-9


def test_full_size_search_is_dense(rng):
    x = rng.standard_normal((10, 6))
    res = lambda_search(x, 1, 6)
    assert len(res.support) == 6


def test_single_feature_search(rng):
    x = rng.standard_normal((12, 8))
    x[:, 5] *= 4.0
    res = lambda_search(x, 1, 1)
    assert len(res.support) == 1
    # exhaustive single-feature objective on the centered data
    xc = center_columns(x)
    assert res.support.tolist() == [int(np.argmax(np.linalg.norm(xc, axis=0)))]


def test_example1_rank2_support():
    # the planted pair structure is found in a majority of generated datasets;
    # the dataset-level recovery target is exercised by the acceptance suite
    hits = 0
    for seed in range(40):
        res = lambda_search(gen_example1(seed).x.values, 2, 4, seed=seed)
        assert len(res.support) == 4
        hits += res.support.tolist() == [0, 1, 2, 3]
    assert hits >= 16


def test_status_and_exact_size(rng):
    for q in (1, 3, 7, 12):
        res = lambda_search(rng.standard_normal((9, 12)), 2, q)
        assert len(res.support) == q
        assert res.status in ("exact", "truncated", "padded")


@given(seeded_normal(min_n=3, max_n=12, min_p=2, max_p=12), st.floats(1.0, 4.0))
def test_objective_non_decreasing(data, lam):
    m, seed = data
    fac = pmd_rank_one(m, lam, seed=seed % 1000)
    assert np.all(np.diff(fac.objective) >= -1e-9 * max(1.0, fac.objective.max(initial=0)))


@given(seeded_normal(min_n=3, max_n=12, min_p=2, max_p=12), st.floats(1.0, 4.0), st.data())
def test_loading_constraints(data, lam, draw):
    x, seed = data
    k = draw.draw(st.integers(1, min(x.shape)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        model = spc_rank_k(x, k, lam, seed=seed % 1000)
    for f in range(k):
        v = model.loadings[:, f]
        assert np.linalg.norm(v) <= 1 + 1e-9
        assert np.abs(v).sum() <= lam + 1e-9
    assert set(model.support.tolist()) == set(np.flatnonzero(np.any(model.loadings != 0, axis=1)))


@given(seeded_normal(min_n=4, max_n=12, min_p=4, max_p=15))
def test_support_grows_with_budget(data):
    x, seed = data
    p = x.shape[1]
    grid = np.linspace(1.0, math.sqrt(p), 8)
    sizes = [len(spc_rank_k(x, 1, lam, seed=seed % 1000).support) for lam in grid]
    # allow a one-feature wobble from distinct local optima
    for a, b in zip(sizes, sizes[1:]):
        assert b >= a - 1
    assert sizes[-1] >= sizes[0]


@given(seeded_normal(min_n=4, max_n=12, min_p=3, max_p=14), st.data())
def test_search_returns_exact_size(data, draw):
    x, seed = data
    q = draw.draw(st.integers(1, x.shape[1]))
    k = draw.draw(st.integers(1, min(2, q, x.shape[0])))
    res = lambda_search(x, k, q, seed=seed % 1000)
    assert len(res.support) == q
    assert len(set(res.support.tolist())) == q
