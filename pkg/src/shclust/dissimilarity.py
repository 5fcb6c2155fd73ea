"""Per-feature and aggregate dissimilarities, and the transformed matrix D."""
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels

MEASURES = ("sqeuclidean", "absolute")


@dataclass
class DataMatrix:
    """An ``n x p`` observation-by-feature matrix.

    ``missing`` is an optional boolean mask of cells that were absent in the
    source file; cells under the mask hold NaN until imputed.
    """

    values: np.ndarray
    feature_names: Sequence[str] = ()
    missing: Optional[np.ndarray] = None
    obs_names: Sequence[str] = field(default=())

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("data matrix must be two-dimensional")
        n, p = self.values.shape
        if not len(self.feature_names):
            self.feature_names = [f"V{j + 1}" for j in range(p)]
        if not len(self.obs_names):
            self.obs_names = [f"obs{i + 1}" for i in range(n)]
        if len(self.feature_names) != p:
            raise ValueError("feature_names length does not match column count")
        if len(self.obs_names) != n:
            raise ValueError("obs_names length does not match row count")
        self.feature_names = list(self.feature_names)
        self.obs_names = list(self.obs_names)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def subset(self, features):
        features = list(features)
        return DataMatrix(
            self.values[:, features],
            [self.feature_names[j] for j in features],
            None if self.missing is None else self.missing[:, features],
            self.obs_names,
        )


def as_array(x, *, min_rows=2):
    """Return a finite float64 C-contiguous array from an array or DataMatrix."""
    if isinstance(x, DataMatrix):
        x = x.values
    arr = np.ascontiguousarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if arr.shape[0] < min_rows or arr.shape[1] < 1:
        raise ValueError(f"need at least {min_rows} rows and 1 column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("data contains non-finite values")
    return arr


def _check_measure(measure):
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}; expected one of {MEASURES}")
    return measure == "absolute"


def per_feature_dissim(x, j, measure="sqeuclidean"):
    """Dissimilarity between all observation pairs along feature ``j`` (0-based)."""
    absolute = _check_measure(measure)
    arr = as_array(x, min_rows=1)
    if not 0 <= j < arr.shape[1]:
        raise IndexError(f"feature index {j} out of range for p={arr.shape[1]}")
    col = arr[:, j]
    diff = col[:, None] - col[None, :]
    return np.abs(diff) if absolute else diff * diff


def aggregate_dissim(x, features=None, measure="sqeuclidean"):
    """Sum of per-feature dissimilarities over ``features`` (all when None)."""
    absolute = _check_measure(measure)
    arr = as_array(x, min_rows=1)
    if features is not None:
        features = np.asarray(list(features), dtype=np.int64)
        if features.size == 0:
            raise ValueError("feature subset is empty")
        if features.min() < 0 or features.max() >= arr.shape[1]:
            raise IndexError("feature index out of range")
        arr = np.ascontiguousarray(arr[:, features])
    return kernels.dissim(arr, absolute)


def build_transformed_matrix(x, measure="sqeuclidean"):
    """The ``n^2 x p`` matrix whose column j is per_feature_dissim(x, j) flattened.

    Rows are ordered row-major over the pair (i, i'), diagonal included.
    """
    absolute = _check_measure(measure)
    arr = as_array(x, min_rows=1)
    n, p = arr.shape
    diff = arr[:, None, :] - arr[None, :, :]
    out = np.abs(diff) if absolute else diff * diff
    return out.reshape(n * n, p)


def check_dissimilarity(d, *, atol=1e-9):
    """Validate a dissimilarity matrix and return it as a float array."""
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("dissimilarity matrix must be square")
    if not np.all(np.isfinite(d)):
        raise ValueError("dissimilarity matrix contains non-finite values")
    scale = max(1.0, float(np.abs(d).max()) if d.size else 1.0)
    if np.abs(d - d.T).max(initial=0.0) > atol * scale:
        raise ValueError("dissimilarity matrix is not symmetric")
    if d.min(initial=0.0) < -atol * scale:
        raise ValueError("dissimilarity matrix has negative entries")
    if np.abs(np.diag(d)).max(initial=0.0) > atol * scale:
        raise ValueError("dissimilarity matrix has a nonzero diagonal")
    return np.ascontiguousarray(d)
