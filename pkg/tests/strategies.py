"""Shared hypothesis strategies."""
import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False, width=64)


@st.composite
def data_matrices(draw, min_n=2, max_n=12, min_p=1, max_p=8):
    n = draw(st.integers(min_n, max_n))
    p = draw(st.integers(min_p, max_p))
    return draw(arrays(np.float64, (n, p), elements=finite))


@st.composite
def seeded_normal(draw, min_n=4, max_n=14, min_p=2, max_p=10):
    """Generic-position data: a seeded Gaussian matrix of random shape."""
    n = draw(st.integers(min_n, max_n))
    p = draw(st.integers(min_p, max_p))
    seed = draw(st.integers(0, 2**32 - 1))
    return np.random.default_rng(seed).standard_normal((n, p)), seed
