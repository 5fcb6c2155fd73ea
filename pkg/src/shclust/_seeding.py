import numpy as np


def derive_seed(seed, *keys):
    """Deterministic child seed for ``(seed, *keys)``; keys are non-negative ints."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
