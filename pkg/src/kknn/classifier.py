"""Curvature-adaptive kK-NN classifier and the plain k-NN baseline."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import curvature
from .curvature import CurvatureProfile, patch_curvatures
from .dataset import Dataset
from .knn_graph import Patch, default_k, query_neighbors

MODEL_FORMAT = "kknn-model"
MODEL_VERSION = 1


class KClampWarning(UserWarning):
    """Requested k exceeds the number of available neighbors and was reduced."""


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TrainedModel:
    train: Dataset
    k: int
    profile: CurvatureProfile

    @property
    def m(self) -> int:
        return self.train.m


@dataclass(frozen=True)
class Prediction:
    label: int
    effective_k: int
    score: int


def _resolve_k(n, k):
    if n < 2:
        raise ValueError(f"need at least 2 training samples, got {n}")
    if k is None:
        k = default_k(n)
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k >= n:
        warnings.warn(f"k={k} >= n={n}; clamped to {n - 1}", KClampWarning, stacklevel=3)
        k = n - 1
    return int(k)


def fit(train: Dataset, k: int | None = None) -> TrainedModel:
    """Store the training set together with the curvature profile of its k-NN graph."""
    k = _resolve_k(train.n, k)
    return TrainedModel(train, k, curvature.curvature_profile(train.features, k))


def adjust_neighborhood(neighbors, score: int):
    """Keep the ``max(1, k - score)`` nearest entries of an ascending neighbor list.

    ``neighbors`` may also be a :class:`~kknn.knn_graph.Patch`, in which case
    its neighbor indices are pruned.
    """
    if isinstance(neighbors, Patch):
        neighbors = neighbors.neighbor_indices
    neighbors = list(neighbors)
    if not neighbors:
        raise ValueError("empty neighborhood")
    keep = max(1, len(neighbors) - int(score))
    return neighbors[:keep]


def majority_vote(labels) -> int:
    """Most frequent label; ties go to the smallest class id."""
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size == 0:
        raise ValueError("cannot vote over an empty label list")
    return int(np.argmax(np.bincount(labels)))


def query_scores(model: TrainedModel, query_raw):
    """Score of each query curvature when appended to the training curvatures.

    Every query is quantized against the training vector alone, so results do
    not depend on batch composition or order.
    """
    scores = np.empty(len(query_raw), dtype=np.int64)
    extended = np.append(model.profile.raw, 0.0)
    for i, value in enumerate(query_raw):
        extended[-1] = value
        scores[i] = curvature.quantize(extended)[2][-1]
    return scores


def _check_queries(model, queries):
    Q = np.atleast_2d(np.asarray(queries, dtype=float))
    if model.train.n == 0:
        raise ValueError("model has no training samples")
    if Q.shape[1] != model.m:
        raise ValueError(f"queries have {Q.shape[1]} features, model expects {model.m}")
    return Q


def predict(model: TrainedModel, queries) -> list[Prediction]:
    Q = _check_queries(model, queries)
    X, y, k = model.train.features, model.train.labels, model.k
    idx, _ = query_neighbors(X, Q, k)
    raw = patch_curvatures(Q, X[idx])
    scores = query_scores(model, raw)
    out = []
    for i in range(Q.shape[0]):
        kept = adjust_neighborhood(idx[i], scores[i])
        out.append(Prediction(majority_vote(y[kept]), len(kept), int(scores[i])))
    return out


def predict_labels(model: TrainedModel, queries) -> np.ndarray:
    return np.array([p.label for p in predict(model, queries)], dtype=np.int64)


# ---------------------------------------------------------------- baseline


def knn_get_neighbors(train: Dataset, q, k: int):
    """``k`` nearest ``(index, distance)`` pairs, ascending, lower index first on ties."""
    idx, dist = query_neighbors(train.features, np.asarray(q, dtype=float)[None, :], k)
    return list(zip(idx[0].tolist(), dist[0].tolist()))


def knn_classify(train: Dataset, q, k: int) -> int:
    neighbors = knn_get_neighbors(train, q, k)
    return majority_vote([train.labels[j] for j, _ in neighbors])


def knn_predict(train: Dataset, queries, k: int) -> np.ndarray:
    Q = np.atleast_2d(np.asarray(queries, dtype=float))
    idx, _ = query_neighbors(train.features, Q, k)
    return np.array([majority_vote(train.labels[row]) for row in idx], dtype=np.int64)


# ------------------------------------------------------------ persistence


def save_model(model: TrainedModel, path, preprocess: dict | None = None):
    """Write the model as JSON.

    ``preprocess`` is an optional serialized feature transform (see
    :meth:`kknn.dataset.Preprocessor.to_dict`) that queries must go through
    before prediction.
    """
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "k": model.k,
        "class_names": list(model.train.class_names),
        "feature_names": list(model.train.feature_names),
        "features": model.train.features.tolist(),
        "labels": model.train.labels.tolist(),
        "raw_curvatures": model.profile.raw.tolist(),
    }
    if preprocess is not None:
        doc["preprocess"] = preprocess
    Path(path).write_text(json.dumps(doc) + "\n")


def load_model(path) -> TrainedModel:
    return read_model(path)[0]


def read_model(path):
    """Model plus its stored ``preprocess`` document (``None`` when absent)."""
    try:
        doc = json.loads(Path(path).read_text())
    except ValueError as exc:
        raise ModelFormatError(f"{path}: not a model file") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path}: not a model file")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"{path}: unsupported model version {doc.get('version')!r}")
    try:
        train = Dataset(
            np.array(doc["features"], dtype=float),
            np.array(doc["labels"], dtype=np.int64),
            tuple(doc["class_names"]),
            tuple(doc["feature_names"]),
        )
        k = int(doc["k"])
        profile = CurvatureProfile.from_raw(np.array(doc["raw_curvatures"], dtype=float), k)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: corrupt model: {exc}") from exc
    if len(profile) != train.n:
        raise ModelFormatError(f"{path}: {len(profile)} curvatures for {train.n} samples")
    if not 1 <= k < train.n:
        raise ModelFormatError(f"{path}: k={k} is invalid for {train.n} samples")
    return TrainedModel(train, k, profile), doc.get("preprocess")


# ------------------------------------------------------- estimator facade


class KKNNClassifier:
    """Small fit/predict wrapper around :func:`fit` and :func:`predict`."""

    def __init__(self, k=None):
        self.k = k

    def fit(self, X, y):
        self.model_ = fit(Dataset(X, y), self.k)
        return self

    def predict(self, X):
        return predict_labels(self.model_, X)


class KNNClassifier:
    def __init__(self, k=None):
        self.k = k

    def fit(self, X, y):
        self.train_ = Dataset(X, y)
        self.k_ = _resolve_k(self.train_.n, self.k)
        return self

    def predict(self, X):
        return knn_predict(self.train_, X, self.k_)
