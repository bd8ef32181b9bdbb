"""Holdout benchmark: train fractions 0.10..0.90, medians of four metrics per method."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from . import classifier, metrics
from .dataset import Dataset, DatasetError, Preprocessor, SplitPlan, holdout_fractions, stratified_split
from .knn_graph import default_k

METHODS = ("knn", "kknn")
METHOD_LABELS = {"knn": "k-NN", "kknn": "kK-NN"}
METRIC_LABELS = {"balanced_accuracy": "Bal. Acc.", "kappa": "Kappa", "jaccard": "Jaccard", "f1": "F1"}


@dataclass
class RunConfig:
    methods: tuple = METHODS
    fractions: tuple = field(default_factory=lambda: tuple(holdout_fractions()))
    seed: int = 42
    k: int | None = None
    standardize: bool = False
    pca: int | str | None = None
    lda: int | str | None = None
    lda_ridge: float | None = None
    averaging: str = "weighted"

    def __post_init__(self):
        if not self.methods:
            raise ValueError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if any(not 0.0 < f < 1.0 for f in self.fractions):
            raise ValueError("every fraction must lie in (0, 1)")

    def provenance(self):
        pre = []
        if self.standardize:
            pre.append("standardize")
        if self.pca is not None:
            pre.append(f"pca={self.pca}")
        if self.lda is not None:
            pre.append(f"lda={self.lda}")
        fr = " ".join(f"{f:g}" for f in self.fractions)
        return (
            f"seed={self.seed} methods={','.join(self.methods)} k={self.k or 'log2(n_train)'} "
            f"preprocess={'+'.join(pre) or 'none'} averaging={self.averaging} "
            f"splits=stratified,independent-shuffle-per-fraction fractions={fr}"
        )


@dataclass
class BenchmarkResult:
    dataset: str
    records: list = field(default_factory=list)  # (method, fraction, metric, value)
    skipped: list = field(default_factory=list)  # (fraction, reason)
    notes: dict = field(default_factory=dict)  # warning text -> fractions it occurred at

    def values(self, method, metric):
        return [v for me, _, mt, v in self.records if me == method and mt == metric]

    def median(self, method, metric):
        vals = self.values(method, metric)
        return metrics.median_over_splits(vals) if vals else float("nan")

    @property
    def completed_fractions(self):
        return sorted({f for _, f, _, _ in self.records})


def _predict(method, train, test_X, k):
    if method == "knn":
        return classifier.knn_predict(train, test_X, k)
    return classifier.predict_labels(classifier.fit(train, k), test_X)


def run_benchmark(d: Dataset, config: RunConfig, name: str = "dataset") -> BenchmarkResult:
    """Split, fit and score every method at every training fraction."""
    result = BenchmarkResult(name)
    for fraction in config.fractions:
        try:
            train, test = stratified_split(d, SplitPlan(fraction, config.seed, stratified=True))
        except DatasetError as exc:
            result.skipped.append((fraction, str(exc)))
            warnings.warn(f"{name}: split {fraction:g} skipped: {exc}", RuntimeWarning, stacklevel=2)
            continue
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            k = config.k if config.k is not None else default_k(train.n)
            if k >= train.n:
                warnings.warn(f"k={k} >= n={train.n}; clamped to {train.n - 1}", classifier.KClampWarning)
                k = train.n - 1
            prep = Preprocessor(config.standardize, config.pca, config.lda, config.lda_ridge)
            if prep.active:
                prep.fit(train, k)
                train, test = prep.apply(train), prep.apply(test)
            for method in config.methods:
                pred = _predict(method, train, test.features, k)
                scores = metrics.all_metrics(test.labels, pred, d.class_count, config.averaging)
                for metric in metrics.METRIC_NAMES:
                    result.records.append((method, fraction, metric, scores[metric]))
        for w in caught:
            seen = result.notes.setdefault(str(w.message), [])
            if fraction not in seen:
                seen.append(fraction)
    return result


# ----------------------------------------------------------------- writers


def _header(fh, config):
    fh.write(f"# {config.provenance()}\n")


def write_splits_csv(results, config, path):
    with open(path, "w", newline="") as fh:
        _header(fh, config)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "method", "fraction", "metric", "value"])
        for res in results:
            for method, fraction, metric, value in res.records:
                w.writerow([res.dataset, method, f"{fraction:g}", metric, repr(float(value))])


def write_curves_csv(results, config, path):
    with open(path, "w", newline="") as fh:
        _header(fh, config)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "fraction", "method", "balanced_accuracy"])
        for res in results:
            for method, fraction, metric, value in res.records:
                if metric == "balanced_accuracy":
                    w.writerow([res.dataset, f"{fraction:g}", method, repr(float(value))])


def write_summary_csv(results, config, path):
    with open(path, "w", newline="") as fh:
        _header(fh, config)
        w = csv.writer(fh, lineterminator="\n")
        cols = [f"{me}_{mt}" for me in config.methods for mt in metrics.METRIC_NAMES]
        w.writerow(["dataset", "splits"] + cols)
        for res in results:
            row = [res.dataset, len(res.completed_fractions)]
            row += [f"{res.median(me, mt):.4f}" for me in config.methods for mt in metrics.METRIC_NAMES]
            w.writerow(row)


def write_summary_md(results, config, path):
    lines = [f"<!-- {config.provenance()} -->", ""]
    head = ["Dataset"] + [f"{METHOD_LABELS[me]} {METRIC_LABELS[mt]}" for me in config.methods for mt in metrics.METRIC_NAMES]
    lines.append("| " + " | ".join(head) + " |")
    lines.append("|" + "|".join(["---"] + [":---:"] * (len(head) - 1)) + "|")
    for res in results:
        cells = [res.dataset]
        for mt_me in [(me, mt) for me in config.methods for mt in metrics.METRIC_NAMES]:
            best = max(res.median(me, mt_me[1]) for me in config.methods)
            v = res.median(*mt_me)
            cells.append(f"**{v:.4f}**" if len(config.methods) > 1 and v == best else f"{v:.4f}")
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append(f"Median over {len(config.fractions)} holdout splits per dataset.")
    notes = [
        (res.dataset, f"{text} (fractions {', '.join(f'{f:g}' for f in fr)})")
        for res in results
        for text, fr in res.notes.items()
    ]
    skipped = [(res.dataset, f, r) for res in results for f, r in res.skipped]
    if skipped or notes:
        lines += ["", "Notes:", ""]
        lines += [f"- {ds}: split {f:g} skipped ({r})" for ds, f, r in skipped]
        lines += [f"- {ds}: {n}" for ds, n in notes]
    Path(path).write_text("\n".join(lines) + "\n")


def write_reports(results, config, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_splits_csv(results, config, out / "splits.csv")
    write_curves_csv(results, config, out / "curves.csv")
    write_summary_csv(results, config, out / "summary.csv")
    write_summary_md(results, config, out / "summary.md")
    return [out / n for n in ("summary.csv", "summary.md", "splits.csv", "curves.csv")]
