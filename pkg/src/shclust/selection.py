"""Candidate subset selection at a fixed size (over ranks) and over a size list."""
from dataclasses import dataclass, field

import numpy as np

from ._seeding import derive_seed
from .dissimilarity import aggregate_dissim, as_array
from .hclust import agglomerate
from .multilayer import DEFAULT_B, default_reference_k, multilayer_cluster
from .spc import lambda_search
from .stats import silhouette

DEFAULT_SIZES = tuple(range(10, 101, 10))

_RANK_STREAM = 1
_MULTILAYER_STREAM = 2
_SIZE_STREAM = 3
_KREF_STREAM = 4


class SelectionError(RuntimeError):
    """Raised when no candidate survives screening."""


class AllRanksScreenedError(SelectionError):
    def __init__(self, q):
        super().__init__(f"Please choose another set of ranks (all ranks screened at q={q})")
        self.q = q


class NoCandidateSizeError(SelectionError):
    def __init__(self, sizes):
        super().__init__(f"Please choose another list of candidate sizes ({list(sizes)} all failed)")
        self.sizes = list(sizes)


@dataclass
class CandidateEvaluation:
    key: int
    features: np.ndarray
    dendrogram: object
    labels: np.ndarray
    avg_sil: float
    screened: bool
    n_clusters: int = 0
    lam: float = float("nan")
    search_status: str = ""

    def summary(self):
        return {
            "key": int(self.key),
            "features": [int(j) for j in self.features],
            "n_clusters": int(self.n_clusters),
            "screened": bool(self.screened),
            "avg_sil": None if self.screened else float(self.avg_sil),
            "lambda": float(self.lam),
            "search_status": self.search_status,
        }


@dataclass
class SelectionTrace:
    points: list  # (key, value)
    pruning_steps: list  # keys discarded per iteration
    chosen_key: int
    rule: str = ""
    evaluations: list = field(default_factory=list)
    children: dict = field(default_factory=dict)  # size -> SelectionTrace

    def to_dict(self):
        out = {
            "points": [[int(k), float(v)] for k, v in self.points],
            "pruning_steps": [[int(k) for k in step] for step in self.pruning_steps],
            "chosen_key": int(self.chosen_key),
            "rule": self.rule,
            "evaluations": self.evaluations,
        }
        if self.children:
            out["by_size"] = {str(k): t.to_dict() for k, t in sorted(self.children.items())}
        return out


def _is_monotone(vals):
    diffs = np.diff(vals)
    return bool(np.all(diffs <= 0) or np.all(diffs >= 0))


def _local_minima(vals):
    """Indices of local minima.

    Strict interior minima first; if none, interior points that are <= both
    neighbours and < at least one; if none, endpoints below their neighbour.
    A non-monotone sequence always has at least one of these.
    """
    v = np.asarray(vals)
    inner = np.arange(1, len(v) - 1)
    left, mid, right = v[inner - 1], v[inner], v[inner + 1]
    strict = inner[(mid < left) & (mid < right)]
    if strict.size:
        return strict
    weak = inner[(mid <= left) & (mid <= right) & ((mid < left) | (mid < right))]
    if weak.size:
        return weak
    ends = []
    if v[0] < v[1]:
        ends.append(0)
    if v[-1] < v[-2]:
        ends.append(len(v) - 1)
    return np.asarray(ends, dtype=np.int64)


def prune_and_choose(points, discard_mode="one-highest-key"):
    """Prune local minima from a (key, value) scatter until monotone, then choose.

    Non-increasing survivors pick the smallest key.  Increasing survivors
    pick the key right after the largest consecutive increase (earliest on
    ties).
    """
    if discard_mode not in ("one-highest-key", "all"):
        raise ValueError(f"unknown discard mode {discard_mode!r}")
    pts = [(int(k), float(v)) for k, v in points]
    if not pts:
        raise ValueError("no points to choose from")
    keys = [k for k, _ in pts]
    if any(b <= a for a, b in zip(keys, keys[1:])):
        raise ValueError("keys must be strictly increasing")

    steps = []
    while len(pts) > 2 and not _is_monotone([v for _, v in pts]):
        minima = _local_minima([v for _, v in pts])
        drop = {int(minima.max())} if discard_mode == "one-highest-key" else set(minima.tolist())
        steps.append([pts[i][0] for i in sorted(drop)])
        pts = [pt for i, pt in enumerate(pts) if i not in drop]

    vals = np.array([v for _, v in pts])
    diffs = np.diff(vals)
    if len(pts) == 1 or np.all(diffs <= 0):
        chosen, rule = pts[0][0], "decreasing"
    else:
        chosen, rule = pts[int(np.argmax(diffs)) + 1][0], "increasing"
    return chosen, SelectionTrace(list(points), steps, chosen, rule)


def evaluate_rank(x, q, rank, k_ref, b=DEFAULT_B, linkage="complete",
                  measure="sqeuclidean", seed=0):
    """Fit the rank-``rank`` candidate of size ``q`` and score it."""
    arr = as_array(x)
    found = lambda_search(arr, rank, q, derive_seed(seed, _RANK_STREAM, rank))
    feats = found.support
    sub = np.ascontiguousarray(arr[:, feats])
    d = aggregate_dissim(sub, measure=measure)
    tree = agglomerate(d, linkage)
    ml = multilayer_cluster(tree, sub, k_ref, b, derive_seed(seed, _MULTILAYER_STREAM, rank),
                            measure=measure)
    screened = ml.n_clusters < k_ref
    if screened:
        avg = float("nan")
    elif ml.n_clusters < 2:
        avg = 0.0  # only reachable with k_ref = 1; one cluster scores like a singleton
    else:
        avg = silhouette(d, ml.labels).average
    return CandidateEvaluation(rank, feats, tree, ml.labels, avg, screened,
                               ml.n_clusters, found.lam, found.status)


def _resolve_k_ref(arr, k_ref, linkage, b, measure, seed):
    if k_ref is None or k_ref == "auto":
        return default_reference_k(arr, linkage, b, derive_seed(seed, _KREF_STREAM), measure)
    return int(k_ref)


def select_fixed_size(x, q, k_ref=None, r_min=2, r_max=None, b=DEFAULT_B,
                      linkage="complete", measure="sqeuclidean", seed=0):
    """Best candidate subset of exactly ``q`` features across ranks r_min..r_max.

    Raises :class:`AllRanksScreenedError` when every rank's multilayer
    clustering yields fewer than ``k_ref`` clusters.
    """
    arr = as_array(x)
    q = int(q)
    if not 1 <= q <= arr.shape[1]:
        raise ValueError(f"candidate size must be in [1, {arr.shape[1]}], got {q}")
    r_max = min(8, q) if r_max is None else int(r_max)
    r_min = min(int(r_min), r_max)
    if not 1 <= r_min <= r_max <= q:
        raise ValueError(f"need 1 <= r_min <= r_max <= q, got {r_min}, {r_max}, {q}")
    r_max = min(r_max, min(arr.shape))
    k_ref = _resolve_k_ref(arr, k_ref, linkage, b, measure, seed)

    evals = [evaluate_rank(arr, q, r, k_ref, b, linkage, measure, seed)
             for r in range(r_min, r_max + 1)]
    survivors = [ev for ev in evals if not ev.screened]
    if not survivors:
        raise AllRanksScreenedError(q)
    chosen, trace = prune_and_choose([(ev.key, ev.avg_sil) for ev in survivors], "one-highest-key")
    trace.evaluations = [ev.summary() for ev in evals]
    best = next(ev for ev in survivors if ev.key == chosen)
    return best, trace


def select_auto_size(x, sizes=DEFAULT_SIZES, k_ref=None, r_min=2, r_max=None,
                     b=DEFAULT_B, linkage="complete", measure="sqeuclidean", seed=0):
    """Global best subset over an increasing list of candidate sizes.

    Sizes whose fixed-size search fails are left out of the comparison; the
    returned evaluation's ``key`` is its rank and ``trace.chosen_key`` the size.
    """
    arr = as_array(x)
    sizes = [int(s) for s in sizes]
    if not sizes:
        raise ValueError("size list is empty")
    if any(b2 <= a for a, b2 in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    k_ref = _resolve_k_ref(arr, k_ref, linkage, b, measure, seed)

    results = {}
    children = {}
    failures = []
    for q in sizes:
        if q > arr.shape[1]:
            failures.append({"size": q, "error": "size exceeds feature count"})
            continue
        try:
            ev, tr = select_fixed_size(arr, q, k_ref, r_min, r_max, b, linkage, measure,
                                       derive_seed(seed, _SIZE_STREAM, q))
        except SelectionError as exc:
            failures.append({"size": q, "error": str(exc)})
            continue
        results[q] = ev
        children[q] = tr
    if not results:
        raise NoCandidateSizeError(sizes)
    chosen, trace = prune_and_choose([(q, ev.avg_sil) for q, ev in results.items()], "all")
    trace.children = children
    trace.evaluations = [
        {"size": q, "rank": int(ev.key), "avg_sil": float(ev.avg_sil)} for q, ev in results.items()
    ] + failures
    return results[chosen], trace
