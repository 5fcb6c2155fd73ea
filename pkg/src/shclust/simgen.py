"""Seeded synthetic datasets with planted clusters and known clustering features.

Each row draws from its own Philox stream keyed by ``(seed, row)``, so a
dataset does not depend on the order in which rows are generated.
"""
from dataclasses import dataclass, field

import numpy as np

from .dissimilarity import DataMatrix

_ROW_STREAM = 0
_SHUFFLE_STREAM = 1


@dataclass
class SyntheticDataset:
    x: DataMatrix
    truth: np.ndarray  # labels 1..n_clusters
    true_features: np.ndarray  # 0-based column indices
    params: dict = field(default_factory=dict)


def _row_rng(seed, row):
    ss = np.random.SeedSequence(int(seed), spawn_key=(_ROW_STREAM, int(row)))
    return np.random.Generator(np.random.Philox(ss))


def _draw(seed, means, sds, shuffle):
    """Rows ``means[i] + sds * z`` with z standard normal; optionally shuffled."""
    n, p = means.shape
    z = np.empty((n, p))
    for i in range(n):
        z[i] = _row_rng(seed, i).standard_normal(p)
    values = means + sds * z
    order = np.arange(n)
    if shuffle:
        ss = np.random.SeedSequence(int(seed), spawn_key=(_SHUFFLE_STREAM,))
        order = np.random.Generator(np.random.Philox(ss)).permutation(n)
    return values[order], order


def gen_example1(seed=0, shuffle=True):
    """20 observations in four clusters of 5; V1-V4 cluster, V5-V14 are noise."""
    n, p, size = 20, 14, 5
    patterns = np.array([
        [1.0, 1.0, 1.0, 1.0],
        [-1.0, -1.0, 1.0, 1.0],
        [-1.0, -1.0, -1.0, -1.0],
        [1.0, 1.0, -1.0, -1.0],
    ])
    truth = np.repeat(np.arange(1, 5), size)
    means = np.zeros((n, p))
    means[:, :4] = patterns[truth - 1]
    sds = np.ones(p)
    sds[:4] = np.sqrt(0.1)
    values, order = _draw(seed, means, sds, shuffle)
    return SyntheticDataset(
        DataMatrix(values),
        truth[order],
        np.arange(4),
        {"model": "example1", "n": n, "p": p, "p_prime": 4, "n_clusters": 4,
         "seed": int(seed), "shuffle": bool(shuffle)},
    )


def gen_sparse_model(n=60, p=500, p_prime=50, mu=0.8, seed=0, shuffle=True):
    """Three equal clusters; the first ``p_prime`` features carry the signal.

    Cluster means on the clustering features are ``+mu``, ``(-mu, +mu)``
    split at ``p_prime // 2``, and ``-mu``; every feature has unit variance.
    """
    if n < 3 or n % 3:
        raise ValueError("n must be a positive multiple of 3")
    if not 1 <= p_prime <= p:
        raise ValueError("need 1 <= p_prime <= p")
    truth = np.repeat(np.arange(1, 4), n // 3)
    half = p_prime // 2
    patterns = np.zeros((3, p))
    patterns[0, :p_prime] = mu
    patterns[1, :half] = -mu
    patterns[1, half:p_prime] = mu
    patterns[2, :p_prime] = -mu
    values, order = _draw(seed, patterns[truth - 1], np.ones(p), shuffle)
    return SyntheticDataset(
        DataMatrix(values),
        truth[order],
        np.arange(p_prime),
        {"model": "sparse", "n": int(n), "p": int(p), "p_prime": int(p_prime),
         "mu": float(mu), "n_clusters": 3, "seed": int(seed), "shuffle": bool(shuffle)},
    )
