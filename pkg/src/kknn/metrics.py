"""Confusion-matrix metrics: balanced accuracy, Cohen's kappa, Jaccard and F1."""

from __future__ import annotations

import numpy as np


def confusion(true_labels, predicted_labels, n_classes: int | None = None) -> np.ndarray:
    """``counts[t, p]`` = number of samples with truth ``t`` predicted as ``p``."""
    t = np.asarray(true_labels).reshape(-1)
    p = np.asarray(predicted_labels).reshape(-1)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.size} true vs {p.size} predicted labels")
    if t.size == 0:
        raise ValueError("no labels to compare")
    if not (np.issubdtype(t.dtype, np.integer) and np.issubdtype(p.dtype, np.integer)):
        raise ValueError("labels must be integer class ids")
    c = int(max(t.max(), p.max())) + 1 if n_classes is None else int(n_classes)
    if min(t.min(), p.min()) < 0 or max(t.max(), p.max()) >= c:
        raise ValueError(f"labels must lie in 0..{c - 1}")
    cm = np.zeros((c, c), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def _check(cm):
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.size == 0:
        raise ValueError(f"confusion matrix must be square and non-empty, got shape {cm.shape}")
    if np.any(cm < 0):
        raise ValueError("confusion counts must be non-negative")
    if cm.sum() == 0:
        raise ValueError("confusion matrix is empty")
    return cm.astype(float)


def balanced_accuracy(cm, ignore_absent: bool = False) -> float:
    """Mean per-class recall.

    Rows with no samples raise unless ``ignore_absent`` is set, in which case
    the mean is taken over the classes present in the truth.
    """
    cm = _check(cm)
    support = cm.sum(axis=1)
    present = support > 0
    if not present.all() and not ignore_absent:
        raise ValueError(f"classes {np.flatnonzero(~present).tolist()} have no true samples")
    return float(np.mean(np.diag(cm)[present] / support[present]))


def kappa(cm) -> float:
    cm = _check(cm)
    total = cm.sum()
    p_o = np.trace(cm) / total
    p_e = float(cm.sum(axis=1) @ cm.sum(axis=0)) / total**2
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return float((p_o - p_e) / (1.0 - p_e))


def _per_class(cm, numer, denom, averaging):
    # A zero denominator means the class is absent from both truth and
    # predictions.  It scores 0 but carries no weight either way.
    support = cm.sum(axis=1)
    zero = denom == 0
    values = np.where(zero, 0.0, numer / np.where(zero, 1.0, denom))
    if averaging == "weighted":
        return float(values @ support / support.sum())
    if averaging == "macro":
        seen = (support + cm.sum(axis=0)) > 0
        return float(values[seen].mean())
    raise ValueError(f"unknown averaging {averaging!r}")


def jaccard(cm, averaging: str = "weighted") -> float:
    """Per-class ``TP / (TP + FP + FN)``, averaged by support (or macro over seen classes)."""
    cm = _check(cm)
    tp = np.diag(cm)
    fn = cm.sum(axis=1) - tp
    fp = cm.sum(axis=0) - tp
    return _per_class(cm, tp, tp + fp + fn, averaging)


def f1(cm, averaging: str = "weighted") -> float:
    """Per-class F1 (``2TP / (2TP + FP + FN)``, i.e. ``2PR/(P+R)``)."""
    cm = _check(cm)
    tp = np.diag(cm)
    fn = cm.sum(axis=1) - tp
    fp = cm.sum(axis=0) - tp
    return _per_class(cm, 2 * tp, 2 * tp + fp + fn, averaging)


METRIC_NAMES = ("balanced_accuracy", "kappa", "jaccard", "f1")


def all_metrics(true_labels, predicted_labels, n_classes=None, averaging="weighted") -> dict:
    cm = confusion(true_labels, predicted_labels, n_classes)
    return {
        "balanced_accuracy": balanced_accuracy(cm, ignore_absent=True),
        "kappa": kappa(cm),
        "jaccard": jaccard(cm, averaging),
        "f1": f1(cm, averaging),
    }


def median_over_splits(values) -> float:
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size == 0:
        raise ValueError("no values to aggregate")
    return float(np.median(values))
