"""Backend selection for the compiled kernels.

Set ``SHCLUST_DISABLE_NUMBA=1`` to force the pure-numpy code paths.
"""
import os

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    numba = None
    NUMBA_AVAILABLE = False

_FLAG = os.environ.get("SHCLUST_DISABLE_NUMBA", "").strip().lower()
NUMBA_ENABLED = NUMBA_AVAILABLE and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` in nopython mode, or return None when numba is missing."""
    if not NUMBA_AVAILABLE:
        return None
    return numba.njit(cache=True, nogil=True)(func)


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
