"""Command-line front end.

    kknn fetch       --openml zoo --cache DIR
    kknn curvatures  --data FILE.csv [--k K] [--standardize] [--pca D|auto] --out DIR
    kknn fit         --data FILE.csv [--k K] [...] --model model.json
    kknn predict     --model model.json --data queries.csv --out DIR
    kknn benchmark   --openml zoo --openml vowel [--methods knn,kknn] --out DIR

Every command exits 0 only after all of its output files are written; errors
are reported on standard error with exit status 1.
"""

from __future__ import annotations

import argparse
import csv
import sys
import warnings
from pathlib import Path

import numpy as np

from . import benchmark, classifier, curvature
from .dataset import Dataset, DatasetError, Preprocessor, fetch_openml, holdout_fractions, load_csv, load_features
from .knn_graph import build_knng, default_k, write_graph_csv

DEFAULT_CACHE = "openml_cache"


class CLIError(Exception):
    pass


def _dim(text):
    if text == "auto":
        return "auto"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"dimension must be at least 1, got {value}")
    return value


def _fractions(text):
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad fraction list {text!r}") from None
    if not values or any(not 0.0 < v < 1.0 for v in values):
        raise argparse.ArgumentTypeError("fractions must be a comma-separated list of values in (0, 1)")
    return values


def _methods(text):
    values = tuple(v.strip() for v in text.split(",") if v.strip())
    bad = [v for v in values if v not in benchmark.METHODS]
    if not values or bad:
        raise argparse.ArgumentTypeError(f"methods must be a subset of {','.join(benchmark.METHODS)}")
    return values


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"k must be at least 1, got {value}")
    return value


# ----------------------------------------------------------------- parser


def _add_source(p, multiple=False):
    action = "append" if multiple else "store"
    p.add_argument("--data", action=action, metavar="CSV", help="labelled CSV file")
    p.add_argument("--openml", action=action, metavar="NAME", help="OpenML dataset name or id")
    p.add_argument("--cache", default=DEFAULT_CACHE, metavar="DIR", help="OpenML cache directory")
    p.add_argument("--label-col", default=None, metavar="COL", help="label column name or index (default: last)")


def _add_model_opts(p):
    p.add_argument("--k", type=_positive_int, default=None, help="neighborhood size (default: floor(log2 n))")
    p.add_argument("--standardize", action="store_true", help="zero-mean, unit-variance features")
    p.add_argument("--pca", type=_dim, default=None, metavar="D|auto", help="project onto D principal components")
    p.add_argument("--lda", type=_dim, default=None, metavar="D|auto", help="project onto D discriminant axes")


def build_parser():
    parser = argparse.ArgumentParser(prog="kknn", description="Curvature-adaptive k-NN classification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="download OpenML datasets into the cache")
    p.add_argument("--openml", action="append", required=True, metavar="NAME")
    p.add_argument("--cache", default=DEFAULT_CACHE, metavar="DIR")

    p = sub.add_parser("curvatures", help="per-sample curvature profile")
    _add_source(p)
    _add_model_opts(p)
    p.add_argument("--out", default=".", metavar="DIR")
    p.add_argument("--dump-graph", action="store_true", help="also write the k-NN graph as knn_graph.csv")

    p = sub.add_parser("fit", help="train a kK-NN model")
    _add_source(p)
    _add_model_opts(p)
    p.add_argument("--model", required=True, metavar="PATH")

    p = sub.add_parser("predict", help="classify query points with a saved model")
    p.add_argument("--model", required=True, metavar="PATH")
    p.add_argument("--data", required=True, metavar="CSV", help="query points (numeric columns)")
    p.add_argument("--label-col", default=None, metavar="COL", help="column to ignore if the file has labels")
    p.add_argument("--out", default=".", metavar="DIR")

    p = sub.add_parser("benchmark", help="holdout sweep comparing k-NN and kK-NN")
    _add_source(p, multiple=True)
    _add_model_opts(p)
    p.add_argument("--methods", type=_methods, default=benchmark.METHODS)
    p.add_argument("--fractions", type=_fractions, default=None, help="comma-separated train fractions")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--averaging", choices=("weighted", "macro"), default="weighted")
    p.add_argument("--out", default=".", metavar="DIR")
    return parser


# --------------------------------------------------------------- commands


def _load_one(args):
    if bool(args.data) == bool(args.openml):
        raise CLIError("give exactly one of --data or --openml")
    if args.data:
        return load_csv(args.data, -1 if args.label_col is None else args.label_col), Path(args.data).stem
    return fetch_openml(args.openml, args.cache), str(args.openml)


def _load_many(args):
    sources = [(p, None) for p in args.data or []] + [(None, n) for n in args.openml or []]
    if not sources:
        raise CLIError("give at least one --data or --openml source")
    out = []
    for path, name in sources:
        if path is not None:
            out.append((Path(path).stem, load_csv(path, -1 if args.label_col is None else args.label_col)))
        else:
            out.append((str(name), fetch_openml(name, args.cache)))
    return out


def _prepare(d: Dataset, args):
    """Resolve k for ``d`` and fit the requested preprocessing on it."""
    k = args.k if args.k is not None else default_k(d.n)
    if k >= d.n:
        warnings.warn(f"k={k} >= n={d.n}; clamped to {d.n - 1}", classifier.KClampWarning)
        k = d.n - 1
    prep = Preprocessor(args.standardize, args.pca, args.lda)
    if prep.active:
        prep.fit(d, k)
        d = prep.apply(d)
    return d, k, prep


def cmd_fetch(args, out):
    for name in args.openml:
        d = fetch_openml(name, args.cache)
        print(f"{name}: n={d.n} m={d.m} classes={d.class_count} (cache: {args.cache})", file=out)


def cmd_curvatures(args, out):
    d, name = _load_one(args)
    d, k, _ = _prepare(d, args)
    graph = build_knng(d.features, k)
    profile = curvature.CurvatureProfile.from_raw(curvature.raw_curvatures(d.features, k, graph), k)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    curvature.write_profile_csv(profile, out_dir / "curvatures.csv")
    if args.dump_graph:
        write_graph_csv(graph, out_dir / "knn_graph.csv")
    mag = profile.magnitudes
    hist = np.bincount(profile.scores, minlength=curvature.N_SCORES)
    print(f"dataset: {name}  n={d.n}  m={d.m}  k={k}", file=out)
    print(f"magnitude: min={mag.min():.6g}  median={np.median(mag):.6g}  max={mag.max():.6g}", file=out)
    print("scores:    " + "  ".join(f"{s}:{c}" for s, c in enumerate(hist)), file=out)
    print(f"wrote {out_dir / 'curvatures.csv'}", file=out)


def cmd_fit(args, out):
    d, name = _load_one(args)
    d, k, prep = _prepare(d, args)
    model = classifier.fit(d, k)
    path = Path(args.model)
    path.parent.mkdir(parents=True, exist_ok=True)
    classifier.save_model(model, path, prep.to_dict() if prep.active else None)
    print(f"dataset: {name}  n={d.n}  m={d.m}  k={model.k}", file=out)
    print(f"wrote {path}", file=out)


def cmd_predict(args, out):
    model, preprocess = classifier.read_model(args.model)
    Q = load_features(args.data, args.label_col)
    if preprocess is not None:
        prep = Preprocessor.from_dict(preprocess)
        expected = prep.steps_[0][0].shape[0]
        if Q.shape[1] != expected:
            raise CLIError(f"dimension mismatch: expected {expected} features, got {Q.shape[1]}")
        Q = prep.transform(Q)
    elif Q.shape[1] != model.m:
        raise CLIError(f"dimension mismatch: expected {model.m} features, got {Q.shape[1]}")
    preds = classifier.predict(model, Q)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "predictions.csv"
    names = model.train.class_names
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "label", "effective_k", "score"])
        for i, p in enumerate(preds):
            w.writerow([i, names[p.label] if names else p.label, p.effective_k, p.score])
    print(f"predicted {len(preds)} queries with k={model.k}; wrote {path}", file=out)


def cmd_benchmark(args, out):
    config = benchmark.RunConfig(
        methods=args.methods,
        fractions=args.fractions or tuple(holdout_fractions()),
        seed=args.seed,
        k=args.k,
        standardize=args.standardize,
        pca=args.pca,
        lda=args.lda,
        averaging=args.averaging,
    )
    results = []
    for name, d in _load_many(args):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            results.append(benchmark.run_benchmark(d, config, name))
    paths = benchmark.write_reports(results, config, args.out)
    for res in results:
        for fraction, reason in res.skipped:
            print(f"warning: {res.dataset}: split {fraction:g} skipped: {reason}", file=sys.stderr)
    print(Path(paths[1]).read_text(), end="", file=out)
    print("wrote " + ", ".join(str(p) for p in paths), file=out)


COMMANDS = {
    "fetch": cmd_fetch,
    "curvatures": cmd_curvatures,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            COMMANDS[args.command](args, sys.stdout)
            status = 0
        except (CLIError, DatasetError, OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = 1
    seen = set()
    for w in caught:
        text = str(w.message)
        if text not in seen:
            seen.add(text)
            print(f"warning: {text}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
