"""Delimited-matrix I/O, k-NN imputation and microarray preprocessing."""
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dissimilarity import DataMatrix
from .hclust import canonical_labels

MISSING_TOKEN = "NA"
LABEL_COLUMN = "label"
ID_COLUMN = "id"


class IngestError(ValueError):
    pass


@dataclass
class PreprocessConfig:
    floor: float = 100.0
    ceiling: float = 16000.0
    ratio_cutoff: float = 5.0  # drop features with max/min <= this
    range_cutoff: float = 500.0  # drop features with max - min <= this
    log: bool = True
    standardize: bool = True
    impute_k: int = 5
    impute_first: bool = True

    def validate(self):
        if not self.floor < self.ceiling:
            raise ValueError("thresholding window needs floor < ceiling")
        if self.ratio_cutoff <= 0 or self.range_cutoff <= 0:
            raise ValueError("filter cutoffs must be positive")
        if self.impute_k < 1:
            raise ValueError("impute_k must be >= 1")
        return self


def _parse_cell(text, row, col):
    text = text.strip()
    if text == MISSING_TOKEN or text == "":
        return np.nan, True
    try:
        return float(text), False
    except ValueError:
        raise IngestError(f"non-numeric cell {text!r} at row {row}, column {col}") from None


def ingest(path):
    """Read a comma-separated matrix with a header row of feature names.

    An optional first column named ``id`` holds observation names and an
    optional last column named ``label`` holds class labels.  Returns
    ``(DataMatrix, labels-or-None, raw-label-strings-or-None)``.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise IngestError("file is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    has_id = bool(header) and header[0] == ID_COLUMN
    has_label = bool(header) and header[-1] == LABEL_COLUMN
    start = 1 if has_id else 0
    stop = len(header) - 1 if has_label else len(header)
    names = header[start:stop]
    if not names:
        raise IngestError("no feature columns")
    if len(body) < 2:
        raise IngestError("need at least two observation rows")

    values = np.empty((len(body), len(names)))
    missing = np.zeros(values.shape, dtype=bool)
    obs, raw_labels = [], []
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise IngestError(f"row {i} has {len(row)} cells, expected {len(header)}")
        for j, cell in enumerate(row[start:stop]):
            values[i - 2, j], missing[i - 2, j] = _parse_cell(cell, i, j + start + 1)
        obs.append(row[0].strip() if has_id else f"obs{i - 1}")
        if has_label:
            raw_labels.append(row[-1].strip())

    dm = DataMatrix(values, names, missing if missing.any() else None, obs)
    if not has_label:
        return dm, None, None
    return dm, canonical_labels(np.asarray(raw_labels)), raw_labels


def export(path, x, labels=None, *, write_ids=False):
    """Write ``x`` in the format read by :func:`ingest` (values round-trip exactly)."""
    if not isinstance(x, DataMatrix):
        x = DataMatrix(x)
    header = ([ID_COLUMN] if write_ids else []) + list(x.feature_names)
    if labels is not None:
        header.append(LABEL_COLUMN)
    mask = x.missing if x.missing is not None else np.zeros(x.values.shape, dtype=bool)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(x.n):
            row = [x.obs_names[i]] if write_ids else []
            row += [MISSING_TOKEN if mask[i, j] or np.isnan(v) else repr(float(v))
                    for j, v in enumerate(x.values[i])]
            if labels is not None:
                row.append(str(labels[i]))
            w.writerow(row)


def knn_impute(x, k=5):
    """Fill each missing cell with the mean of its column over the k nearest rows.

    Distance is Euclidean over the columns both rows observe; rows missing
    the target column are skipped in favour of the next nearest.
    """
    dm = x if isinstance(x, DataMatrix) else DataMatrix(x)
    vals = dm.values.copy()
    mask = np.isnan(vals) if dm.missing is None else (dm.missing | np.isnan(vals))
    if k < 1:
        raise ValueError("k must be >= 1")
    if not mask.any():
        return DataMatrix(vals, dm.feature_names, None, dm.obs_names)
    if mask.all(axis=0).any():
        bad = [dm.feature_names[j] for j in np.flatnonzero(mask.all(axis=0))]
        raise ValueError(f"columns missing in every row: {bad}")
    if mask.all(axis=1).any():
        raise ValueError("a row has no observed values")

    obs = ~mask
    filled = np.where(obs, vals, 0.0)
    out = vals.copy()
    for i in np.flatnonzero(mask.any(axis=1)):
        shared = obs & obs[i]
        diff = np.where(shared, filled - filled[i], 0.0)
        dist = np.sqrt((diff * diff).sum(axis=1))
        usable = shared.any(axis=1)
        usable[i] = False
        order = np.lexsort((np.arange(len(dist)), dist))
        order = order[usable[order]]
        for j in np.flatnonzero(mask[i]):
            donors = order[obs[order, j]][:k]
            if donors.size == 0:
                raise ValueError(f"no donor rows for cell ({i}, {j})")
            out[i, j] = vals[donors, j].mean()
    return DataMatrix(out, dm.feature_names, None, dm.obs_names)


def preprocess_microarray(x, cfg=None):
    """Impute, clamp to [floor, ceiling], filter, log and standardize.

    Features are dropped when ``max/min <= ratio_cutoff`` or
    ``max - min <= range_cutoff``.  Standardization uses the sample (n-1)
    variance.  With ``impute_first=False`` imputation runs last and the
    earlier steps ignore missing cells.
    """
    cfg = (cfg or PreprocessConfig()).validate()
    dm = x if isinstance(x, DataMatrix) else DataMatrix(x)
    if dm.missing is not None or np.isnan(dm.values).any():
        mask = np.isnan(dm.values) if dm.missing is None else dm.missing | np.isnan(dm.values)
    else:
        mask = None
    if mask is not None and cfg.impute_first:
        dm = knn_impute(DataMatrix(dm.values, dm.feature_names, mask, dm.obs_names), cfg.impute_k)
        mask = None
    vals = np.clip(dm.values, cfg.floor, cfg.ceiling)
    if mask is not None:
        vals[mask] = np.nan
    hi = np.nanmax(vals, axis=0)
    lo = np.nanmin(vals, axis=0)
    keep = (hi / lo > cfg.ratio_cutoff) & (hi - lo > cfg.range_cutoff)
    if not keep.any():
        raise ValueError("every feature was removed by the filters")
    vals = vals[:, keep]
    names = [nm for nm, k in zip(dm.feature_names, keep) if k]
    if cfg.log:
        vals = np.log(vals)
    if cfg.standardize:
        mu = np.nanmean(vals, axis=0)
        sd = np.nanstd(vals, axis=0, ddof=1)
        vals = (vals - mu) / np.where(sd > 0, sd, 1.0)
    sub_mask = None if mask is None else mask[:, keep]
    out = DataMatrix(vals, names, sub_mask, dm.obs_names)
    if sub_mask is not None:
        out = knn_impute(out, cfg.impute_k)
    return out


def top_variance_features(x, q):
    """Indices of the ``q`` columns with the largest variance (ties: lower index)."""
    vals = x.values if isinstance(x, DataMatrix) else np.asarray(x, dtype=float)
    if not 1 <= q <= vals.shape[1]:
        raise ValueError(f"q must be in [1, {vals.shape[1]}]")
    var = vals.var(axis=0, ddof=1)
    return np.sort(np.lexsort((np.arange(len(var)), -var))[:q])
