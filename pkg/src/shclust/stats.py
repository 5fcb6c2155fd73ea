"""Gap statistic split test, silhouettes, CER and selection rate."""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dissimilarity import _check_measure, as_array, check_dissimilarity

_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class GapDecision:
    split: bool
    gap_values: tuple  # (Gap(1), Gap(2))
    std_errors: tuple  # (s1, s2)
    b: int

    def to_dict(self):
        return {
            "split": self.split,
            "gap": list(self.gap_values),
            "se": list(self.std_errors),
            "b": self.b,
        }


@dataclass(frozen=True)
class SilhouetteSummary:
    per_point: np.ndarray
    average: float


def within_dispersion(d, labels):
    """Sum over clusters of (sum of ordered-pair dissimilarities) / (2 * size)."""
    labels = np.asarray(labels, dtype=np.int64)
    return kernels.dispersion_np(np.asarray(d, dtype=float), labels, int(labels.max()))


def _log_w(w):
    return math.log(max(w, _LOG_FLOOR))


def gap_split_decision(x, labels, b=50, seed=0, linkage="complete", measure="sqeuclidean"):
    """Decide whether a node should be split into the given two groups.

    ``x`` holds the node's members restricted to the candidate features and
    ``labels`` is the node's binary cut (values 1 and 2).  Reference data are
    drawn uniformly over each feature's observed range; each reference set is
    clustered with the same linkage and cut into two groups.  The split is
    accepted when ``Gap(1) < Gap(2) - s_2``.
    """
    absolute = _check_measure(measure)
    arr = as_array(x)
    labels = np.asarray(labels, dtype=np.int64)
    m, f = arr.shape
    if labels.shape != (m,):
        raise ValueError("labels do not match the node size")
    if set(np.unique(labels)) != {1, 2}:
        raise ValueError("labels must describe a binary split with values 1 and 2")
    if b < 1:
        raise ValueError("bootstrap count must be >= 1")

    d = kernels.dissim(arr, absolute)
    obs = np.array([
        _log_w(kernels.dispersion_np(d, np.ones(m, dtype=np.int64), 1)),
        _log_w(kernels.dispersion_np(d, labels, 2)),
    ])

    lo = arr.min(axis=0)
    span = arr.max(axis=0) - lo
    rng = np.random.default_rng(seed)
    ref = lo + rng.random((b, m, f)) * span
    ref_logw = kernels.reference_logw(
        np.ascontiguousarray(ref), kernels.LINKAGE_CODES[linkage], absolute
    )

    gap = ref_logw.mean(axis=0) - obs
    se = ref_logw.std(axis=0) * math.sqrt(1.0 + 1.0 / b)
    split = bool(gap[0] < gap[1] - se[1])
    return GapDecision(split, (float(gap[0]), float(gap[1])), (float(se[0]), float(se[1])), int(b))


def silhouette(d, labels):
    """Per-point silhouettes; singleton clusters and 0/0 cases score 0."""
    d = check_dissimilarity(d)
    labels = np.asarray(labels)
    n = d.shape[0]
    if labels.shape != (n,):
        raise ValueError("labels do not cover every row of the dissimilarity matrix")
    uniq, idx = np.unique(labels, return_inverse=True)
    k = len(uniq)
    if k < 2:
        raise ValueError("silhouette needs at least two clusters")
    onehot = np.zeros((n, k))
    onehot[np.arange(n), idx] = 1.0
    counts = onehot.sum(axis=0)
    sums = d @ onehot  # (n, k): total dissimilarity from i to each cluster
    own = counts[idx] - 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        a = sums[np.arange(n), idx] / own
        other = sums / counts
    other[np.arange(n), idx] = np.inf
    bb = other.min(axis=1)
    denom = np.maximum(a, bb)
    s = np.zeros(n)
    ok = (own > 0) & (denom > 0)
    s[ok] = (bb[ok] - a[ok]) / denom[ok]
    return SilhouetteSummary(s, float(s.mean()))


def cer(p1, p2):
    """Fraction of observation pairs on which two partitions disagree (1 - Rand)."""
    p1 = np.asarray(p1)
    p2 = np.asarray(p2)
    if p1.shape != p2.shape or p1.ndim != 1:
        raise ValueError("partitions must be 1-D and of equal length")
    n = p1.shape[0]
    if n < 2:
        return 0.0
    _, a = np.unique(p1, return_inverse=True)
    _, b = np.unique(p2, return_inverse=True)
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    pairs = lambda v: int((v * (v - 1) // 2).sum())  # noqa: E731
    both = pairs(table)
    same1 = pairs(table.sum(axis=1))
    same2 = pairs(table.sum(axis=0))
    disagree = same1 + same2 - 2 * both
    return disagree / (n * (n - 1) // 2)


def selection_rate(selected, true_features, q=None):
    true_features = set(int(j) for j in true_features)
    if not true_features:
        raise ValueError("true feature set is empty")
    selected = set(int(j) for j in selected)
    q = len(selected) if q is None else int(q)
    if q < 1:
        raise ValueError("candidate size must be >= 1")
    hits = len(selected & true_features)
    return hits / q if q <= len(true_features) else hits / len(true_features)
