"""Batch runs and simulation benchmarks with on-disk artifacts.

Every structured document carries a ``schema`` tag and is written with
sorted keys, so reruns with the same configuration are byte-identical.
Wall-clock timings go to a separate ``timings.json`` for that reason.
"""
import json
import math
import os
import shutil
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._seeding import derive_seed
from .dissimilarity import MEASURES, DataMatrix, aggregate_dissim
from .hclust import LINKAGES, agglomerate, cut
from .multilayer import DEFAULT_B, default_reference_k
from .pipeline import export, ingest, top_variance_features
from .selection import DEFAULT_SIZES, SelectionError, select_auto_size, select_fixed_size
from .simgen import gen_example1, gen_sparse_model
from .stats import cer, selection_rate
from .wtshc import wtshc_auto_size, wtshc_fixed_size

SCHEMA_PREFIX = "shclust"
SCHEMA_VERSION = 1
METHODS = ("hc", "shc", "wtshc", "topvar")
BENCH_METHODS = METHODS + ("hc-true",)
OUTPUT_ROOT_ENV = "SHCLUST_OUTPUT_ROOT"
TRUTH_SIDECAR = "truth.json"


class ConfigError(ValueError):
    """Invalid configuration or unreadable input; nothing is written."""


def schema(kind):
    return f"{SCHEMA_PREFIX}/{kind}/v{SCHEMA_VERSION}"


def dump_json(path, doc):
    text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _clean(v):
    """JSON-safe copy: numpy scalars unwrapped, NaN mapped to None."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return None if not math.isfinite(float(v)) else float(v)
    return v


def default_output_root():
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "shclust-out"))


@dataclass
class RunConfig:
    input: str
    method: str = "shc"
    linkage: str = "complete"
    measure: str = "sqeuclidean"
    q: int = None
    sizes: list = None
    auto: bool = False
    k_ref: object = "auto"  # int or "auto"
    r_min: int = 2
    r_max: int = None
    b: int = DEFAULT_B
    seed: int = 0
    output: str = None
    truth_features: list = None  # feature names; read from the truth sidecar when absent
    overwrite: bool = False

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.linkage not in LINKAGES:
            raise ConfigError(f"linkage must be one of {LINKAGES}")
        if self.measure not in MEASURES:
            raise ConfigError(f"measure must be one of {MEASURES}")
        chosen = [self.q is not None, self.sizes is not None, bool(self.auto)]
        if self.method in ("shc", "wtshc", "topvar"):
            if sum(chosen) != 1:
                raise ConfigError("set exactly one of q, sizes, auto")
            if self.method == "topvar" and self.q is None:
                raise ConfigError("topvar needs an explicit q")
        elif any(chosen):
            raise ConfigError("hc uses every feature; q/sizes/auto do not apply")
        if self.q is not None and self.q < 1:
            raise ConfigError("q must be >= 1")
        if self.sizes is not None:
            if not self.sizes or any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
                raise ConfigError("sizes must be nonempty and strictly increasing")
            if self.sizes[0] < 1:
                raise ConfigError("sizes must be >= 1")
        if self.k_ref != "auto" and (not isinstance(self.k_ref, int) or self.k_ref < 1):
            raise ConfigError("k_ref must be 'auto' or a positive integer")
        if self.r_min < 1 or (self.r_max is not None and self.r_max < self.r_min):
            raise ConfigError("need 1 <= r_min <= r_max")
        if self.b < 1:
            raise ConfigError("b must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        return self

    def to_dict(self):
        d = asdict(self)
        d.pop("overwrite")
        d.pop("output")
        d["input"] = Path(self.input).name
        return d


def _load_truth_features(cfg, x):
    names = cfg.truth_features
    if names is None:
        side = Path(cfg.input).with_name(TRUTH_SIDECAR)
        if side.exists():
            names = json.loads(side.read_text(encoding="utf-8")).get("true_features")
    if names is None:
        return None
    lookup = {nm: j for j, nm in enumerate(x.feature_names)}
    missing = [nm for nm in names if nm not in lookup]
    if missing:
        raise ConfigError(f"unknown truth feature names: {missing}")
    return np.array(sorted(lookup[nm] for nm in names), dtype=np.int64)


def _n_clusters(cfg, arr, truth):
    if isinstance(cfg.k_ref, int):
        return cfg.k_ref
    if truth is not None:
        return int(truth.max())
    return default_reference_k(arr, cfg.linkage, cfg.b, derive_seed(cfg.seed, 9), cfg.measure)


def execute(cfg, x, truth=None, true_features=None):
    """Run one method in memory; returns ``(documents, text_files)``.

    Raises :class:`SelectionError` for algorithm-level failures.
    """
    arr = np.ascontiguousarray(x.values)
    names = list(x.feature_names)
    k_ref = cfg.k_ref if isinstance(cfg.k_ref, int) else None
    docs = {}
    trace = None

    if cfg.method == "shc":
        kw = dict(k_ref=k_ref, r_min=cfg.r_min, r_max=cfg.r_max, b=cfg.b,
                  linkage=cfg.linkage, measure=cfg.measure, seed=cfg.seed)
        if cfg.q is not None:
            ev, tr = select_fixed_size(arr, cfg.q, **kw)
            q_sel = cfg.q
        else:
            ev, tr = select_auto_size(arr, cfg.sizes or DEFAULT_SIZES, **kw)
            q_sel = tr.chosen_key
        feats, tree, labels = ev.features, ev.dendrogram, ev.labels
        trace = {"rank": int(ev.key), "size": int(q_sel), **tr.to_dict()}
    elif cfg.method == "wtshc":
        kw = dict(linkage=cfg.linkage, measure=cfg.measure, seed=cfg.seed)
        if cfg.q is not None:
            fit = wtshc_fixed_size(arr, cfg.q, **kw)
        else:
            # sizes beyond the feature count are skipped, as for shc
            sizes = [q for q in (cfg.sizes or DEFAULT_SIZES) if q <= arr.shape[1]]
            if not sizes:
                raise ConfigError(f"no candidate size fits the {arr.shape[1]} features")
            fit = wtshc_auto_size(arr, sizes, **kw)
        feats, tree = fit.selected, fit.dendrogram
        labels = cut(tree, _n_clusters(cfg, arr, truth))
        trace = {"l1_budget": fit.s, "status": fit.status, "objective": fit.objective,
                 "size_scores": {str(k): v for k, v in sorted(fit.size_scores.items())},
                 "weights": {names[j]: float(fit.weights[j]) for j in fit.selected}}
    else:
        feats = (top_variance_features(arr, cfg.q) if cfg.method == "topvar"
                 else np.arange(arr.shape[1]))
        tree = agglomerate(aggregate_dissim(arr[:, feats], measure=cfg.measure), cfg.linkage)
        labels = cut(tree, _n_clusters(cfg, arr, truth))

    feats = np.sort(np.asarray(feats, dtype=np.int64))
    docs["dendrogram.json"] = {"schema": schema("dendrogram"),
                               **tree.to_dict(list(x.obs_names))}
    docs["labels.json"] = {"schema": schema("labels"),
                           "observations": list(x.obs_names),
                           "labels": [int(l) for l in labels],
                           "n_clusters": int(labels.max())}
    docs["features.json"] = {"schema": schema("features"),
                             "features": [names[j] for j in feats], "indices": feats.tolist()}
    if trace is not None:
        docs["trace.json"] = {"schema": schema("trace"), "method": cfg.method, **_clean(trace)}
    if truth is not None or true_features is not None:
        metrics = {"schema": schema("metrics")}
        if truth is not None:
            k_true = int(truth.max())
            metrics["cer"] = cer(labels, truth)
            metrics["cer_true_k_cut"] = cer(cut(tree, k_true), truth)
            metrics["true_k"] = k_true
        if true_features is not None:
            metrics["sr"] = selection_rate(feats, true_features, len(feats))
        docs["metrics.json"] = metrics
    texts = {"dendrogram.newick": tree.to_newick(list(x.obs_names)) + "\n"}
    return docs, texts


def _commit(out, docs, texts):
    """Write into a sibling temp dir, then move it into place."""
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}-", dir=out.parent))
    try:
        for name, doc in docs.items():
            dump_json(tmp / name, doc)
        for name, text in texts.items():
            (tmp / name).write_text(text, encoding="utf-8")
        if out.exists():
            shutil.rmtree(out)
        tmp.rename(out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def _resolve_output(cfg):
    out = Path(cfg.output) if cfg.output else default_output_root() / f"run-{cfg.method}"
    if out.exists() and any(out.iterdir()) and not cfg.overwrite:
        raise ConfigError(f"output directory {out} is not empty (use overwrite)")
    return out


def run(cfg):
    """Run ``cfg`` and write artifacts; returns the process exit status.

    0 on success; 2 on an algorithm-level failure (only ``error.json`` is
    written).  Config and IO problems raise :class:`ConfigError` before
    anything touches the output directory.
    """
    cfg.validate()
    out = _resolve_output(cfg)
    try:
        x, truth, _ = ingest(cfg.input)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if x.missing is not None:
        raise ConfigError("input has missing cells; run preprocess first")
    if cfg.q is not None and cfg.q > x.p:
        raise ConfigError(f"q={cfg.q} exceeds the {x.p} available features")
    true_features = _load_truth_features(cfg, x)
    manifest = {"schema": schema("run"), "config": cfg.to_dict(), "n": x.n, "p": x.p}
    try:
        docs, texts = execute(cfg, x, truth, true_features)
    except SelectionError as exc:
        err = {"schema": schema("error"), "error": type(exc).__name__, "message": str(exc),
               "config": cfg.to_dict()}
        _commit(out, {"error.json": err}, {})
        return 2
    manifest["status"] = "ok"
    manifest["artifacts"] = sorted(list(docs) + list(texts))
    docs["run.json"] = manifest
    _commit(out, docs, texts)
    return 0


# ---------------------------------------------------------------- simulation


def simulate(model, out, seed=0, **params):
    """Write a synthetic dataset (``data.csv`` with labels) plus a truth sidecar."""
    if model == "example1":
        ds = gen_example1(seed, **params)
    elif model == "sparse":
        ds = gen_sparse_model(seed=seed, **params)
    else:
        raise ConfigError(f"unknown model {model!r}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    export(out / "data.csv", ds.x, ds.truth)
    dump_json(out / TRUTH_SIDECAR, {
        "schema": schema("truth"),
        "true_features": [ds.x.feature_names[j] for j in ds.true_features],
        "params": ds.params,
    })
    return ds


# ---------------------------------------------------------------- benchmark


@dataclass
class BenchSpec:
    settings: list  # dicts with n, p, p_prime, mu and q (int) or "auto"
    replicates: int = 1
    methods: list = field(default_factory=lambda: ["shc", "wtshc"])
    seed: int = 0
    k_ref: object = 3
    b: int = DEFAULT_B
    linkage: str = "complete"
    measure: str = "sqeuclidean"
    sizes: list = field(default_factory=lambda: list(DEFAULT_SIZES))
    jobs: int = 1

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        doc.pop("schema", None)
        try:
            spec = cls(**doc)
        except TypeError as exc:
            raise ConfigError(f"bad benchmark spec: {exc}") from exc
        return spec.validate()

    def validate(self):
        if not self.settings:
            raise ConfigError("benchmark spec has no settings")
        for s in self.settings:
            extra = set(s) - {"n", "p", "p_prime", "mu", "q"}
            if extra:
                raise ConfigError(f"unknown setting keys {sorted(extra)}")
            q = s.get("q", "auto")
            if q != "auto" and (not isinstance(q, int) or q < 1):
                raise ConfigError("setting q must be a positive integer or 'auto'")
        bad = [m for m in self.methods if m not in BENCH_METHODS]
        if bad or not self.methods:
            raise ConfigError(f"methods must be drawn from {BENCH_METHODS}")
        if self.replicates < 1 or self.jobs < 1 or self.b < 1:
            raise ConfigError("replicates, jobs and b must be >= 1")
        if self.k_ref != "auto" and (not isinstance(self.k_ref, int) or self.k_ref < 1):
            raise ConfigError("k_ref must be 'auto' or a positive integer")
        return self

    def to_dict(self):
        d = asdict(self)
        d.pop("jobs")
        return {"schema": schema("bench-spec"), **d}


def _method_result(method, spec, setting, ds, seed):
    arr = np.ascontiguousarray(ds.x.values)
    q = setting.get("q", "auto")
    k_true = int(ds.truth.max())
    if method == "hc-true":
        arr = arr[:, ds.true_features]
        method, q = "hc", None
    cfg = RunConfig(
        input="<memory>", method=method, linkage=spec.linkage, measure=spec.measure,
        q=None if q == "auto" or method == "hc" else q,
        sizes=list(spec.sizes) if q == "auto" and method != "hc" else None,
        k_ref=spec.k_ref if method == "shc" else k_true, b=spec.b, seed=seed,
    )
    if method == "topvar" and cfg.q is None:
        raise ConfigError("topvar needs a numeric q")
    x = DataMatrix(arr, () if arr.shape[1] != ds.x.p else ds.x.feature_names)
    docs, _ = execute(cfg, x, ds.truth, None)
    feats = docs["features.json"]["indices"]
    res = {"cer": docs["metrics.json"]["cer"], "q": len(feats), "n_clusters":
           docs["labels.json"]["n_clusters"]}
    if method != "hc" or arr.shape[1] == ds.x.p:
        res["sr"] = selection_rate(feats, ds.true_features, len(feats))
    res["cer_true_k_cut"] = docs["metrics.json"]["cer_true_k_cut"]
    return res


def _run_replicate(args):
    spec_doc, i, r = args
    spec = BenchSpec.from_dict(spec_doc)
    setting = spec.settings[i]
    data_seed = derive_seed(spec.seed, i, r)
    t0 = time.perf_counter()
    ds = gen_sparse_model(setting.get("n", 60), setting.get("p", 500),
                          setting.get("p_prime", 50), setting.get("mu", 0.8), data_seed)
    timings = {"simulate": time.perf_counter() - t0}
    raw = {"schema": schema("bench-raw"), "setting": i, "replicate": r,
           "data_seed": data_seed, "methods": {}}
    for m_idx, method in enumerate(spec.methods):
        t0 = time.perf_counter()
        try:
            raw["methods"][method] = _method_result(
                method, spec, setting, ds, derive_seed(spec.seed, i, r, 1))
        except (SelectionError, ConfigError) as exc:
            raw["methods"][method] = {"error": type(exc).__name__, "message": str(exc)}
        timings[method] = time.perf_counter() - t0
    return raw, timings


def _mean_sd(vals):
    if not vals:
        return None, None
    a = np.asarray(vals, dtype=float)
    return float(a.mean()), (float(a.std(ddof=1)) if a.size > 1 else None)


def aggregate(spec, raws):
    """Table rows (setting x method) of mean and sd over successful replicates."""
    rows = []
    for i, setting in enumerate(spec.settings):
        mine = sorted((r for r in raws if r["setting"] == i), key=lambda r: r["replicate"])
        for method in spec.methods:
            ok = [r["methods"][method] for r in mine if "error" not in r["methods"][method]]
            row = {"setting": i, **{k: setting.get(k) for k in ("n", "p", "p_prime", "mu")},
                   "q": setting.get("q", "auto"), "method": method,
                   "n_ok": len(ok), "n_failed": len(mine) - len(ok)}
            for key in ("cer", "sr", "q"):
                vals = [res[key] for res in ok if key in res]
                row[f"{key}_mean"], row[f"{key}_sd"] = _mean_sd(vals)
            rows.append(row)
    return {"schema": schema("bench-table"), "rows": rows}


def bench(spec, out):
    """Run every (setting, replicate) and write raws, table and timings.

    Layout: ``raw/s{i}-r{r}.json`` per replicate, ``table.json``,
    ``spec.json`` and ``timings.json`` (wall-clock seconds per phase).
    """
    out = Path(out)
    spec_doc = spec.to_dict()
    jobs = [(spec_doc, i, r) for i in range(len(spec.settings)) for r in range(spec.replicates)]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_run_replicate, jobs))
    else:
        results = [_run_replicate(j) for j in jobs]

    raws = [raw for raw, _ in results]
    table = aggregate(spec, raws)
    docs = {"spec.json": spec_doc, "table.json": table}
    for raw in raws:
        docs[f"raw/s{raw['setting']}-r{raw['replicate']}.json"] = raw
    timings = {"schema": schema("bench-timings"), "seconds": [
        {"setting": raw["setting"], "replicate": raw["replicate"], **t}
        for raw, t in results]}
    (out / "raw").mkdir(parents=True, exist_ok=True)
    for name, doc in docs.items():
        dump_json(out / name, doc)
    dump_json(out / "timings.json", timings)
    return table


def load_raws(out):
    return [json.loads(p.read_text(encoding="utf-8"))
            for p in sorted(Path(out, "raw").glob("*.json"))]
