"""Command-line entry point: ``shclust <verb> [options]``."""
import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .pipeline import IngestError, PreprocessConfig, export, ingest, preprocess_microarray
from .runner import (
    BENCH_METHODS, METHODS, BenchSpec, ConfigError, RunConfig, bench, default_output_root,
    dump_json, run, schema, simulate,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ALGORITHM = 2


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _k_ref(text):
    if text == "auto":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("k-ref must be 'auto' or an integer")


def _out_dir(args, default_name):
    return Path(args.output) if args.output else default_output_root() / default_name


def cmd_ingest_check(args):
    x, labels, raw = ingest(args.input)
    n_missing = 0 if x.missing is None else int(x.missing.sum())
    doc = {
        "schema": schema("ingest-check"),
        "file": Path(args.input).name,
        "n": x.n,
        "p": x.p,
        "missing_cells": n_missing,
        "has_labels": labels is not None,
        "n_classes": None if labels is None else int(labels.max()),
    }
    print(json.dumps(doc, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_preprocess(args):
    cfg = PreprocessConfig(args.floor, args.ceiling, args.ratio_cutoff, args.range_cutoff,
                           not args.no_log, not args.no_standardize, args.impute_k,
                           not args.impute_last)
    x, labels, raw = ingest(args.input)
    out = preprocess_microarray(x, cfg)
    dest = Path(args.output)
    dest.parent.mkdir(parents=True, exist_ok=True)
    export(dest, out, raw, write_ids=args.write_ids)
    print(f"wrote {out.n} x {out.p} matrix to {dest} ({x.p - out.p} features removed)")
    return EXIT_OK


def cmd_run(args):
    cfg = RunConfig(
        input=args.input, method=args.method, linkage=args.linkage, measure=args.measure,
        q=args.q, sizes=args.sizes, auto=args.auto, k_ref=args.k_ref,
        r_min=args.r_min, r_max=args.r_max, b=args.b, seed=args.seed,
        output=str(_out_dir(args, f"run-{args.method}")),
        truth_features=args.truth_features, overwrite=args.overwrite,
    )
    status = run(cfg)
    if status:
        print(f"algorithm failure; see {cfg.output}/error.json", file=sys.stderr)
    else:
        print(f"artifacts written to {cfg.output}")
    return status


def cmd_simulate(args):
    params = {} if args.model == "example1" else {
        "n": args.n, "p": args.p, "p_prime": args.p_prime, "mu": args.mu}
    if args.no_shuffle:
        params["shuffle"] = False
    out = _out_dir(args, f"sim-{args.model}-{args.seed}")
    ds = simulate(args.model, out, args.seed, **params)
    print(f"wrote {ds.x.n} x {ds.x.p} dataset to {out}")
    return EXIT_OK


def cmd_bench(args):
    try:
        doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read benchmark spec: {exc}") from exc
    if args.jobs:
        doc["jobs"] = args.jobs
    spec = BenchSpec.from_dict(doc)
    out = _out_dir(args, "bench")
    table = bench(spec, out)
    for row in table["rows"]:
        fmt = lambda v: "  -  " if v is None else f"{v:.3f}"  # noqa: E731
        print(f"setting {row['setting']} {row['method']:>8}: CER {fmt(row['cer_mean'])} "
              f"SR {fmt(row['sr_mean'])} q {fmt(row['q_mean'])} "
              f"(ok {row['n_ok']}, failed {row['n_failed']})")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="shclust", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("ingest-check", help="parse a matrix file and report its shape")
    p.add_argument("input")
    p.set_defaults(func=cmd_ingest_check)

    p = sub.add_parser("preprocess", help="impute, clamp, filter, log and standardize")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="destination CSV")
    d = PreprocessConfig()
    p.add_argument("--floor", type=float, default=d.floor)
    p.add_argument("--ceiling", type=float, default=d.ceiling)
    p.add_argument("--ratio-cutoff", type=float, default=d.ratio_cutoff)
    p.add_argument("--range-cutoff", type=float, default=d.range_cutoff)
    p.add_argument("--impute-k", type=int, default=d.impute_k)
    p.add_argument("--impute-last", action="store_true", help="impute after standardizing")
    p.add_argument("--no-log", action="store_true")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--write-ids", action="store_true")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("run", help="cluster a dataset and write artifacts")
    p.add_argument("input")
    p.add_argument("-m", "--method", choices=METHODS, default="shc")
    p.add_argument("--linkage", default="complete", choices=("complete", "average", "ward"))
    p.add_argument("--measure", default="sqeuclidean", choices=("sqeuclidean", "absolute"))
    size = p.add_mutually_exclusive_group()
    size.add_argument("-q", type=int, help="fixed candidate size")
    size.add_argument("--sizes", type=_int_list, help="comma-separated candidate sizes")
    size.add_argument("--auto", action="store_true", help="default size list 10,20,...,100")
    p.add_argument("--k-ref", type=_k_ref, default="auto")
    p.add_argument("--r-min", type=int, default=2)
    p.add_argument("--r-max", type=int)
    p.add_argument("-b", type=int, default=50, help="gap-statistic reference draws")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth-features", type=lambda s: s.split(","),
                   help="comma-separated true feature names (default: truth.json beside input)")
    p.add_argument("-o", "--output")
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("simulate", help="write a synthetic dataset with truth")
    p.add_argument("model", choices=("example1", "sparse"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-n", type=int, default=60)
    p.add_argument("-p", type=int, default=500)
    p.add_argument("--p-prime", type=int, default=50)
    p.add_argument("--mu", type=float, default=0.8)
    p.add_argument("--no-shuffle", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="replicated simulation benchmark",
                       epilog=f"methods: {', '.join(BENCH_METHODS)}")
    p.add_argument("spec", help="benchmark spec (JSON)")
    p.add_argument("-o", "--output")
    p.add_argument("-j", "--jobs", type=int)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, IngestError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
