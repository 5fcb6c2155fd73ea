"""Baseline sparse hierarchical clustering via SPC on the transformed matrix D.

The first sparse component of the ``n^2 x p`` matrix ``D`` gives nonnegative
feature weights ``w``; the companion vector ``u`` (proportional to ``D w``)
reshapes into a sparse ``n x n`` dissimilarity that is then clustered.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ._seeding import derive_seed
from .dissimilarity import as_array, build_transformed_matrix
from .hclust import agglomerate
from .spc import MAX_BISECTION, leading_left_vector, pmd_rank_one

N_PERMUTATIONS = 10

_PERM_STREAM = 1


@dataclass
class WtshcFit:
    weights: np.ndarray  # (p,) nonnegative
    u_matrix: np.ndarray  # (n, n) sparse dissimilarity
    s: float
    selected: np.ndarray
    dendrogram: object
    objective: float  # u^T D w
    status: str = "exact"
    size_scores: dict = field(default_factory=dict)  # size -> permutation gap


def _fit_from_matrix(dmat, n, s, u0, linkage, weights=None):
    if weights is None:
        fac = pmd_rank_one(dmat, s, u0=u0)
        w = fac.v
    else:
        w = weights
    if w.sum() < 0:
        w = -w
    w = np.where(w > 0, w, 0.0)  # clears -0.0 and rounding noise
    dw = dmat @ w
    norm = np.linalg.norm(dw)
    u = dw / norm if norm > 0 else dw
    umat = u.reshape(n, n)
    tree = agglomerate(umat, linkage)
    return WtshcFit(w, umat, float(s), np.flatnonzero(w), tree, float(u @ dw))


def _check_linkage_measure(linkage, measure):
    if measure not in ("sqeuclidean", "absolute"):
        raise ValueError(f"unknown measure {measure!r}")


def wtshc_fit(x, s, linkage="complete", measure="sqeuclidean", seed=0):
    """Fit the baseline at L1 budget ``s``."""
    _check_linkage_measure(linkage, measure)
    if s < 1:
        raise ValueError(f"L1 budget must be >= 1, got {s}")
    arr = as_array(x)
    dmat = build_transformed_matrix(arr, measure)
    u0 = leading_left_vector(dmat, seed)
    return _fit_from_matrix(dmat, arr.shape[0], s, u0, linkage)


def _fixed_size(dmat, n, p, q, u0, linkage, lower=1.0):
    lo, hi = float(lower), math.sqrt(p)
    over = None
    for _ in range(MAX_BISECTION):
        s = 0.5 * (lo + hi)
        fac = pmd_rank_one(dmat, s, u0=u0)
        size = int(np.count_nonzero(fac.v))
        if size == q:
            return _fit_from_matrix(dmat, n, s, u0, linkage, np.abs(fac.v)), lo
        if size > q:
            hi = s
            if over is None or size < over[0]:
                over = (size, s, fac.v)
        else:
            lo = s
        if hi - lo <= 1e-12 * hi:
            break
    if over is None:
        s = math.sqrt(p)
        fac = pmd_rank_one(dmat, s, u0=u0)
        over = (int(np.count_nonzero(fac.v)), s, fac.v)
        status = "exact" if over[0] == q else ("short" if over[0] < q else "truncated")
    else:
        status = "truncated"
    _, s, v = over
    w = np.abs(v)
    if status == "truncated":
        keep = np.lexsort((np.arange(p), -w))[:q]
        trimmed = np.zeros(p)
        trimmed[keep] = w[keep]
        w = trimmed
    fit = _fit_from_matrix(dmat, n, s, u0, linkage, w)
    fit.status = status
    return fit, lo


def wtshc_fixed_size(x, q, linkage="complete", measure="sqeuclidean", seed=0):
    """Bisect the L1 budget until exactly ``q`` features get nonzero weight."""
    _check_linkage_measure(linkage, measure)
    arr = as_array(x)
    n, p = arr.shape
    if not 1 <= q <= p:
        raise ValueError(f"candidate size must be in [1, {p}], got {q}")
    dmat = build_transformed_matrix(arr, measure)
    u0 = leading_left_vector(dmat, seed)
    fit, _ = _fixed_size(dmat, n, p, int(q), u0, linkage)
    return fit


def _permuted(arr, seed):
    rng = np.random.default_rng(seed)
    out = np.empty_like(arr)
    for j in range(arr.shape[1]):
        out[:, j] = arr[rng.permutation(arr.shape[0]), j]
    return out


def wtshc_auto_size(x, sizes, linkage="complete", measure="sqeuclidean", seed=0,
                    n_perm=N_PERMUTATIONS):
    """Pick the size whose fit has the largest permutation gap.

    gap(size) = log(u^T D w) on the data minus the mean of the same log
    objective, at the same L1 budget, on ``n_perm`` column-permuted copies.
    Ties go to the smaller size.
    """
    _check_linkage_measure(linkage, measure)
    sizes = sorted(int(q) for q in sizes)
    if not sizes:
        raise ValueError("size list is empty")
    arr = as_array(x)
    n, p = arr.shape
    if sizes[0] < 1 or sizes[-1] > p:
        raise ValueError(f"sizes must lie in [1, {p}]")
    dmat = build_transformed_matrix(arr, measure)
    u0 = leading_left_vector(dmat, seed)
    perms = []
    for r in range(n_perm):
        pd = build_transformed_matrix(_permuted(arr, derive_seed(seed, _PERM_STREAM, r)), measure)
        perms.append((pd, leading_left_vector(pd, derive_seed(seed, _PERM_STREAM, r, 1))))

    fits = {}
    scores = {}
    lower = 1.0
    for q in sizes:
        fit, lower = _fixed_size(dmat, n, p, q, u0, linkage, lower)
        null = [pmd_rank_one(pd, fit.s, u0=pu).sigma for pd, pu in perms]
        scores[q] = math.log(fit.objective) - float(np.mean(np.log(null)))
        fits[q] = fit
    best = max(sizes, key=lambda q: (scores[q], -q))
    out = fits[best]
    out.size_scores = scores
    return out
