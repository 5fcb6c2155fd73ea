"""Sparse principal components by L1-constrained penalized matrix decomposition.

The rank-one solver alternates

    v <- S(m^T u, t) / ||S(m^T u, t)||_2      (t chosen so ||v||_1 <= lam)
    u <- m v / ||m v||_2

starting from the leading left singular vector of ``m`` (power iteration
from a seeded random start).  Rank ``k`` fits deflate ``m`` between factors.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._seeding import derive_seed
from .dissimilarity import as_array

MAX_ITER = 200
TOL = 1e-7
N_POWER = 50
MAX_BISECTION = 60


@dataclass(frozen=True)
class RankOneFactor:
    u: np.ndarray
    v: np.ndarray
    sigma: float
    n_iter: int
    objective: np.ndarray  # ||m v|| after each sweep; non-decreasing
    status: str = "ok"


@dataclass(frozen=True)
class SpcModel:
    loadings: np.ndarray  # (p, k), unit-norm columns
    scores: np.ndarray  # (n, k)
    sigmas: np.ndarray
    lam: float
    rank: int

    @property
    def support(self):
        return np.flatnonzero(np.any(self.loadings != 0.0, axis=1))


@dataclass(frozen=True)
class LambdaSearchResult:
    model: SpcModel
    lam: float
    support: np.ndarray  # exactly q sorted feature indices
    status: str  # "exact", "truncated" or "padded"
    n_steps: int


def soft_l1_unit(a, lam):
    """Unit-norm soft-thresholded ``a`` with L1 norm at most ``lam``."""
    a = np.asarray(a, dtype=float)
    t = kernels.l1_threshold(np.ascontiguousarray(a), float(lam))
    v = np.sign(a) * np.maximum(np.abs(a) - t, 0.0)
    nv = np.linalg.norm(v)
    return v / nv if nv > 0 else v


def leading_left_vector(m, seed=0, n_power=N_POWER):
    m = np.ascontiguousarray(m, dtype=float)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(m.shape[0])
    u /= np.linalg.norm(u)
    return kernels.power(m, u, int(n_power))


def pmd_rank_one(m, lam, seed=0, *, u0=None, max_iter=MAX_ITER, tol=TOL):
    """Rank-one penalized matrix decomposition with an L1 budget on ``v``."""
    m = np.ascontiguousarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains non-finite values")
    if lam < 1.0:
        raise ValueError(f"L1 budget must be >= 1, got {lam}")
    n, p = m.shape
    if not np.any(m):
        warnings.warn("pmd_rank_one: all-zero matrix, returning a zero factor", RuntimeWarning)
        return RankOneFactor(np.zeros(n), np.zeros(p), 0.0, 0, np.zeros(0), "zero-matrix")
    u = leading_left_vector(m, seed) if u0 is None else np.asarray(u0, dtype=float)
    u, v, sigma, n_iter, trace = kernels.pmd(m, float(lam), u, int(max_iter), float(tol))
    return RankOneFactor(u, v, float(sigma), int(n_iter), trace)


def center_columns(x):
    arr = as_array(x)
    return np.ascontiguousarray(arr - arr.mean(axis=0))


def _gram_power(g, seed, n_power=N_POWER):
    # the same iterates as leading_left_vector on m, with g = m m^T
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(g.shape[0])
    u /= np.linalg.norm(u)
    for _ in range(n_power):
        w = g @ u
        nrm = math.sqrt(w @ w)
        if nrm == 0.0:
            break
        u = w / nrm
    return u


def spc_rank_k(x, k, lam, seed=0, *, center=True, u0_first=None, gram=None):
    """``k`` successive rank-one factors with deflation and a shared L1 budget.

    ``gram`` may supply ``r r^T`` for the (centered) input; it is kept in step
    with the deflated residual so each start vector costs O(n^2) per power step.
    """
    r = center_columns(x) if center else as_array(x).copy()
    n, p = r.shape
    if not 1 <= k <= min(n, p):
        raise ValueError(f"rank must be in [1, {min(n, p)}], got {k}")
    g = (r @ r.T) if gram is None else np.array(gram, dtype=float)
    loadings = np.zeros((p, k))
    scores = np.zeros((n, k))
    sigmas = np.zeros(k)
    for f in range(k):
        if not np.any(r):
            break
        u0 = u0_first if f == 0 and u0_first is not None else _gram_power(g, derive_seed(seed, f))
        fac = pmd_rank_one(r, lam, u0=u0)
        loadings[:, f] = fac.v
        scores[:, f] = fac.u * fac.sigma
        sigmas[f] = fac.sigma
        if fac.sigma != 0.0:
            idx = np.flatnonzero(fac.v)
            w = r[:, idx] @ fac.v[idx]
            r[:, idx] -= fac.sigma * np.outer(fac.u, fac.v[idx])
            g -= fac.sigma * (np.outer(fac.u, w) + np.outer(w, fac.u))
            g += fac.sigma ** 2 * np.outer(fac.u, fac.u)
    return SpcModel(loadings, scores, sigmas, float(lam), int(k))


def _top_rows(loadings, q):
    score = np.abs(loadings).max(axis=1)
    # stable order: larger magnitude first, then smaller index
    order = np.lexsort((np.arange(len(score)), -score))
    return np.sort(order[:q])


def _pad(support, arr, q):
    # only reachable for degenerate inputs (e.g. constant columns)
    var = arr.var(axis=0)
    var[support] = np.inf
    order = np.lexsort((np.arange(len(var)), -var))
    return np.sort(order[:q])


def lambda_search(x, k, q, seed=0, *, lower=1.0, upper=None, max_steps=MAX_BISECTION):
    """Bisect the L1 budget until the rank-``k`` support has exactly ``q`` features.

    If no budget hits ``q`` the fit with the smallest support above ``q`` is
    kept and trimmed to the ``q`` rows with the largest absolute loading.
    """
    arr = center_columns(x)
    n, p = arr.shape
    if not 1 <= q <= p:
        raise ValueError(f"candidate size must be in [1, {p}], got {q}")
    upper = math.sqrt(p) if upper is None else float(upper)
    lo, hi = float(lower), upper
    gram = arr @ arr.T
    u0 = _gram_power(gram, derive_seed(seed, 0))

    def fit(lam):
        return spc_rank_k(arr, k, lam, seed, center=False, u0_first=u0, gram=gram)

    over = None  # (support size, lam, model)
    steps = 0
    for steps in range(1, max_steps + 1):
        lam = 0.5 * (lo + hi)
        model = fit(lam)
        size = len(model.support)
        if size == q:
            return LambdaSearchResult(model, lam, model.support, "exact", steps)
        if size > q:
            hi = lam
            if over is None or size < over[0]:
                over = (size, lam, model)
        else:
            lo = lam
        if hi - lo <= 1e-12 * hi:
            break

    if over is None:
        model = fit(upper)
        size = len(model.support)
        if size == q:
            return LambdaSearchResult(model, upper, model.support, "exact", steps)
        if size < q:
            return LambdaSearchResult(model, upper, _pad(model.support, arr, q), "padded", steps)
        over = (size, upper, model)
    _, lam, model = over
    return LambdaSearchResult(model, lam, _top_rows(model.loadings, q), "truncated", steps)
