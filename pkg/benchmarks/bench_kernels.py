"""Time the numba kernels against their numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once before timing so compilation is excluded.
"""
import argparse
import time

import numpy as np

from shclust import kernels
from shclust.dissimilarity import aggregate_dissim


def best_of(fn, args, repeat):
    fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    x = rng.standard_normal((60, 50))
    d = aggregate_dissim(x)
    ref = rng.uniform(size=(50, 30, 50))
    m = rng.standard_normal((60, 500))
    m -= m.mean(axis=0)
    u0 = rng.standard_normal(60)
    u0 /= np.linalg.norm(u0)
    a = rng.standard_normal(500)
    return [
        ("dissim 60x50", kernels.dissim_nb, kernels.dissim_np, (x, False)),
        ("agglomerate n=60", kernels.agglomerate_nb, kernels.agglomerate_np, (d, 0)),
        ("gap reference B=50", kernels.reference_logw_nb, kernels.reference_logw_np, (ref, 0, False)),
        ("l1 threshold p=500", kernels.l1_threshold_nb, kernels.l1_threshold_np, (a, 5.0)),
        ("pmd 60x500", kernels.pmd_nb, kernels.pmd_np, (m, 5.0, u0, 200, 1e-7)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if kernels.dissim_nb is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<22}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>9}")
    for name, nb, np_fn, call in cases(np.random.default_rng(args.seed)):
        t_nb = best_of(nb, call, args.repeat)
        t_np = best_of(np_fn, call, args.repeat)
        print(f"{name:<22}{t_nb * 1e3:>12.3f}{t_np * 1e3:>12.3f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
