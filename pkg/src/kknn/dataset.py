"""Dataset loading, preprocessing and holdout splitting.

A :class:`Dataset` stores samples row-wise: ``features`` is ``(n, m)`` and
``labels`` holds integer class ids ``0..c-1``.  Every operation returns a new
value; datasets are never modified in place.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy.linalg


class DatasetError(ValueError):
    """Raised for malformed input data or invalid preprocessing requests."""


class FetchError(DatasetError):
    """Raised when a remote dataset cannot be obtained."""


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_names: tuple = field(default=())
    feature_names: tuple = field(default=())

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        y = np.array(self.labels, dtype=np.int64).reshape(-1)
        if X.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DatasetError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if not np.all(np.isfinite(X)):
            raise DatasetError("features contain NaN or Inf")
        names = tuple(self.class_names)
        if not names:
            names = tuple(str(i) for i in range(int(y.max()) + 1 if y.size else 0))
        if y.size and (y.min() < 0 or y.max() >= len(names)):
            raise DatasetError(f"label ids must lie in 0..{len(names) - 1}")
        fnames = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(fnames) != X.shape[1]:
            raise DatasetError("feature_names length does not match feature count")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "class_names", names)
        object.__setattr__(self, "feature_names", fnames)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    @property
    def class_count(self) -> int:
        return len(self.class_names)

    def validate(self) -> "Dataset":
        """Check the full invariants expected of a loaded dataset."""
        if self.n < 2:
            raise DatasetError(f"need at least 2 samples, got {self.n}")
        if self.m < 1:
            raise DatasetError("need at least one feature column")
        if self.class_count < 2:
            raise DatasetError("dataset has a single class")
        missing = set(range(self.class_count)) - set(np.unique(self.labels).tolist())
        if missing:
            raise DatasetError(f"classes without samples: {sorted(missing)}")
        return self

    def with_features(self, features, feature_names=()) -> "Dataset":
        return Dataset(features, self.labels, self.class_names, tuple(feature_names))

    def take(self, index) -> "Dataset":
        index = np.asarray(index, dtype=np.int64)
        return Dataset(self.features[index], self.labels[index], self.class_names, self.feature_names)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.class_names == other.class_names
            and self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


# ---------------------------------------------------------------- loading


def load_csv(path, label_column=-1, has_header=True) -> Dataset:
    """Read a comma-separated file into a :class:`Dataset`.

    ``label_column`` is a header name or a 0-based index (negative indices count
    from the end).  Labels are mapped to ids in order of first appearance;
    ``Dataset.class_names`` keeps the original strings.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    return _parse_csv(text, label_column, has_header, source=str(path))


def _read_rows(text, has_header, source):
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows or (has_header and len(rows) < 2):
        raise DatasetError(f"{source}: file is empty")
    width = len(rows[0])
    if has_header:
        return [c.strip() for c in rows[0]], rows[1:], 2
    return [str(j) for j in range(width)], rows, 1


def _column_index(header, column, source):
    width = len(header)
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        if column not in header:
            raise DatasetError(f"{source}: no column named {column!r}")
        return header.index(column)
    j = int(column)
    if not -width <= j < width:
        raise DatasetError(f"{source}: label column {j} out of range for {width} columns")
    return j % width


def _numeric_block(header, body, first_line, cols, source):
    X = np.empty((len(body), len(cols)))
    for i, row in enumerate(body):
        line = first_line + i
        if len(row) != len(header):
            raise DatasetError(f"{source}: row {line} has {len(row)} cells, expected {len(header)}")
        for out_j, j in enumerate(cols):
            cell = row[j].strip()
            try:
                X[i, out_j] = float(cell)
            except ValueError:
                raise DatasetError(
                    f"{source}: non-numeric value {cell!r} at row {line}, column {header[j]!r}"
                ) from None
    return X


def _parse_csv(text, label_column, has_header, source="<csv>") -> Dataset:
    header, body, first_line = _read_rows(text, has_header, source)
    lab = _column_index(header, label_column, source)
    feat_cols = [j for j in range(len(header)) if j != lab]
    X = _numeric_block(header, body, first_line, feat_cols, source)
    raw_labels = [row[lab].strip() for row in body]

    names = list(dict.fromkeys(raw_labels))
    ids = {name: i for i, name in enumerate(names)}
    y = np.array([ids[v] for v in raw_labels], dtype=np.int64)
    if len(names) < 2:
        raise DatasetError(f"{source}: only one class ({names[0]!r}) present")
    return Dataset(X, y, tuple(names), tuple(header[j] for j in feat_cols)).validate()


def load_features(path, drop_column=None, has_header=True) -> np.ndarray:
    """Numeric matrix from a CSV of query points.

    ``drop_column`` (name or index) removes a label column when the file has
    one; every other column must be numeric.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    header, body, first_line = _read_rows(path.read_text(encoding="utf-8"), has_header, str(path))
    skip = None if drop_column is None else _column_index(header, drop_column, str(path))
    cols = [j for j in range(len(header)) if j != skip]
    return _numeric_block(header, body, first_line, cols, str(path))


# ---------------------------------------------------------------- OpenML

OPENML_API = "https://www.openml.org/api/v1/json"
_TIMEOUT = 60


def _http_get(url: str) -> bytes:
    with urllib.request.urlopen(url, timeout=_TIMEOUT) as resp:
        return resp.read()


def _cache_key(name_or_id) -> str:
    key = str(name_or_id).strip().lower()
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in key)


def _atomic_write(path: Path, payload: bytes):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _get_json(url):
    try:
        payload = _http_get(url)
    except (urllib.error.HTTPError) as exc:
        if exc.code in (404, 412):
            raise FetchError(f"unknown dataset ({url}): HTTP {exc.code}") from exc
        raise FetchError(f"request failed: {url}: {exc}") from exc
    except (urllib.error.URLError, OSError) as exc:
        raise FetchError(f"network error while fetching {url}: {exc}") from exc
    try:
        return json.loads(payload)
    except ValueError as exc:
        raise FetchError(f"malformed JSON from {url}") from exc


def _resolve_openml(name_or_id):
    ident = str(name_or_id).strip()
    if ident.isdigit():
        return int(ident)
    listing = _get_json(f"{OPENML_API}/data/list/data_name/{ident}/status/active/limit/1")
    try:
        return int(listing["data"]["dataset"][0]["did"])
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise FetchError(f"unknown dataset {ident!r}") from exc


def _openml_to_csv(did):
    desc = _get_json(f"{OPENML_API}/data/{did}")
    feats = _get_json(f"{OPENML_API}/data/features/{did}")
    try:
        info = desc["data_set_description"]
        file_id = info["file_id"]
        target = info["default_target_attribute"]
        columns = feats["data_features"]["feature"]
    except (KeyError, TypeError) as exc:
        raise FetchError(f"malformed description for dataset {did}") from exc
    csv_url = f"https://www.openml.org/data/get_csv/{file_id}"
    try:
        raw = _http_get(csv_url).decode("utf-8")
    except (urllib.error.URLError, OSError) as exc:
        raise FetchError(f"network error while fetching {csv_url}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise FetchError(f"malformed CSV payload from {csv_url}") from exc

    keep, nominal = [], {}
    for col in columns:
        name = col.get("name")
        if name == target:
            continue
        if str(col.get("is_ignore")).lower() == "true" or str(col.get("is_row_identifier")).lower() == "true":
            continue
        if col.get("data_type") == "nominal":
            nominal[name] = [str(v) for v in col.get("nominal_value", [])]
        elif col.get("data_type") != "numeric":
            continue
        keep.append(name)

    reader = csv.reader(io.StringIO(raw))
    try:
        header = [h.strip().strip("'\"") for h in next(reader)]
        idx = [header.index(c) for c in keep] + [header.index(target)]
    except (StopIteration, ValueError) as exc:
        raise FetchError(f"malformed CSV payload from {csv_url}") from exc

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(keep + [target])
    for row in reader:
        if not row:
            continue
        if len(row) != len(header):
            raise FetchError(f"malformed CSV payload from {csv_url}")
        cells = [row[j].strip().strip("'\"") for j in idx]
        for pos, name in enumerate(keep):
            # nominal features become their index in the declared value list
            if name in nominal and cells[pos] in nominal[name]:
                cells[pos] = str(nominal[name].index(cells[pos]))
        writer.writerow(cells)
    return out.getvalue().encode("utf-8"), target, csv_url


def fetch_openml(dataset_name_or_id, cache_dir) -> Dataset:
    """Load an OpenML dataset, downloading it only when not already cached.

    The cache holds ``<key>.csv`` (numeric features followed by the target
    column) and ``<key>.meta.json`` with the source URL, retrieval time, target
    name and SHA-256 of the CSV.  Nominal features are encoded as indices into
    their declared value list; ignored and row-identifier columns are dropped.
    """
    cache_dir = Path(cache_dir)
    key = _cache_key(dataset_name_or_id)
    csv_path = cache_dir / f"{key}.csv"
    meta_path = cache_dir / f"{key}.meta.json"
    if csv_path.exists() and meta_path.exists():
        meta = json.loads(meta_path.read_text())
        return load_csv(csv_path, label_column=meta["target"])

    did = _resolve_openml(dataset_name_or_id)
    payload, target, url = _openml_to_csv(did)
    dataset = _parse_csv(payload.decode("utf-8"), target, True, source=url)

    cache_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "key": key,
        "openml_id": did,
        "source_url": url,
        "retrieved": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "sha256": hashlib.sha256(payload).hexdigest(),
        "target": target,
    }
    _atomic_write(csv_path, payload)
    _atomic_write(meta_path, (json.dumps(meta, indent=2) + "\n").encode("utf-8"))
    return dataset


# ---------------------------------------------------------- preprocessing


def standardize(d: Dataset) -> Dataset:
    """Zero mean, unit population standard deviation per column.

    Constant columns become all zeros.
    """
    X = d.features
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    Z = np.zeros_like(X)
    ok = sd > 0
    Z[:, ok] = (X[:, ok] - mu[ok]) / sd[ok]
    return d.with_features(Z, d.feature_names)


class PCA:
    """Projection onto the leading eigenvectors of the sample covariance."""

    def __init__(self, target_dim: int):
        self.target_dim = int(target_dim)

    def fit(self, X):
        X = np.asarray(X, dtype=float)
        n, m = X.shape
        if not 1 <= self.target_dim <= min(n - 1, m):
            raise DatasetError(f"PCA target_dim must be in 1..{min(n - 1, m)}, got {self.target_dim}")
        self.mean_ = X.mean(axis=0)
        cov = np.cov(X, rowvar=False).reshape(m, m)
        w, V = np.linalg.eigh(cov)
        order = np.argsort(w)[::-1][: self.target_dim]
        self.explained_variance_ = w[order]
        self.components_ = V[:, order]
        return self

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean_) @ self.components_


class LDA:
    """Fisher discriminant projection.

    Directions are the leading generalized eigenvectors of ``S_b v = l (S_w + r I) v``,
    i.e. eigenvectors of ``(S_w + r I)^-1 S_b``.  With ``ridge=None`` the
    regularizer is ``1e-6 * trace(S_w) / m``.
    """

    def __init__(self, target_dim=None, ridge=None):
        self.target_dim = target_dim
        self.ridge = ridge

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        classes = np.unique(y)
        c, m = len(classes), X.shape[1]
        dim = c - 1 if self.target_dim is None else int(self.target_dim)
        if not 1 <= dim <= c - 1:
            raise DatasetError(f"LDA target_dim must be in 1..{c - 1} for {c} classes, got {dim}")
        mu = X.mean(axis=0)
        Sw = np.zeros((m, m))
        Sb = np.zeros((m, m))
        for cl in classes:
            Xc = X[y == cl]
            mc = Xc.mean(axis=0)
            D = Xc - mc
            Sw += D.T @ D
            Sb += len(Xc) * np.outer(mc - mu, mc - mu)
        ridge = 1e-6 * np.trace(Sw) / m if self.ridge is None else float(self.ridge)
        if ridge < 0:
            raise DatasetError("ridge must be non-negative")
        try:
            w, V = scipy.linalg.eigh(Sb, Sw + ridge * np.eye(m))
        except np.linalg.LinAlgError as exc:
            raise DatasetError("within-class scatter is singular; use a positive ridge") from exc
        order = np.argsort(w)[::-1][:dim]
        self.ridge_ = ridge
        self.mean_ = mu
        self.components_ = V[:, order]
        return self

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean_) @ self.components_


def pca_reduce(d: Dataset, target_dim: int) -> Dataset:
    Z = PCA(target_dim).fit(d.features).transform(d.features)
    return d.with_features(Z, tuple(f"pc{j + 1}" for j in range(Z.shape[1])))


def lda_reduce(d: Dataset, target_dim=None, ridge=None) -> Dataset:
    if target_dim is not None and target_dim > d.class_count - 1:
        raise DatasetError(f"LDA target_dim must be at most {d.class_count - 1}, got {target_dim}")
    Z = LDA(target_dim, ridge).fit(d.features, d.labels).transform(d.features)
    return d.with_features(Z, tuple(f"ld{j + 1}" for j in range(Z.shape[1])))


# --------------------------------------------------------------- splitting


@dataclass(frozen=True)
class SplitPlan:
    train_fraction: float
    seed: int = 42
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DatasetError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def holdout_fractions(start=0.10, stop=0.90, step=0.05):
    """Training fractions of the holdout sweep; the defaults give the 17 values 0.10..0.90."""
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def _plan_rng(plan: SplitPlan):
    return np.random.default_rng([int(plan.seed) & 0xFFFFFFFFFFFFFFFF, int(round(plan.train_fraction * 1e6))])


def _class_allocation(counts, fraction):
    """Per-class training counts: floor/ceil of ``fraction * n_c``, at least 1 each,
    summing to ``round(fraction * n)`` whenever that is compatible."""
    counts = np.asarray(counts)
    quota = fraction * counts
    alloc = np.maximum(np.floor(quota).astype(int), 1)
    alloc = np.minimum(alloc, counts)
    target = int(round(fraction * counts.sum()))
    diff = target - alloc.sum()
    rem = quota - alloc
    if diff > 0:
        for c in np.argsort(-rem, kind="stable"):
            if diff == 0:
                break
            if alloc[c] < min(np.ceil(quota[c]), counts[c]):
                alloc[c] += 1
                diff -= 1
    elif diff < 0:
        for c in np.argsort(rem, kind="stable"):
            if diff == 0:
                break
            if alloc[c] > max(np.floor(quota[c]), 1):
                alloc[c] -= 1
                diff += 1
    return alloc


def split_indices(labels, plan: SplitPlan):
    """Return sorted ``(train_idx, test_idx)`` index arrays for ``plan``."""
    labels = np.asarray(labels)
    n = labels.shape[0]
    rng = _plan_rng(plan)
    classes = np.unique(labels)
    if plan.stratified:
        counts = np.array([(labels == c).sum() for c in classes])
        alloc = _class_allocation(counts, plan.train_fraction)
        train = []
        for c, a in zip(classes, alloc):
            members = np.flatnonzero(labels == c)
            train.append(rng.permutation(members)[:a])
        train = np.sort(np.concatenate(train))
    else:
        size = int(round(plan.train_fraction * n))
        train = np.sort(rng.permutation(n)[:size])
        absent = set(classes.tolist()) - set(labels[train].tolist())
        if absent:
            raise DatasetError(f"classes {sorted(absent)} receive no training samples")
    if train.size == 0 or train.size >= n:
        raise DatasetError(f"fraction {plan.train_fraction} leaves an empty partition for n={n}")
    test = np.setdiff1d(np.arange(n), train)
    return train, test


def stratified_split(d: Dataset, plan: SplitPlan):
    train, test = split_indices(d.labels, plan)
    return d.take(train), d.take(test)


def subsample(d: Dataset, fraction: float, seed: int = 42) -> Dataset:
    """Seeded stratified subsample, e.g. ``fraction=0.25`` for the reduced benchmark tables."""
    keep, _ = split_indices(d.labels, SplitPlan(fraction, seed, stratified=True))
    return d.take(keep)


class Preprocessor:
    """Standardize -> PCA -> LDA chain fitted on a training partition.

    ``pca``/``lda`` take an int, ``None`` (skip) or ``"auto"``.  ``pca="auto"``
    keeps ``min(k, m, n - 1)`` components, the largest dimension whose k-NN
    patches can still span the space; ``lda="auto"`` keeps ``c - 1``.
    The fitted chain is a list of affine steps ``X -> (X - shift) @ W``.
    """

    def __init__(self, standardize=False, pca=None, lda=None, lda_ridge=None):
        self.standardize = bool(standardize)
        self.pca = pca
        self.lda = lda
        self.lda_ridge = lda_ridge
        self.steps_ = []

    @property
    def active(self):
        return self.standardize or self.pca is not None or self.lda is not None

    def fit(self, d: Dataset, k: int | None = None):
        Z = d.features
        self.steps_ = []
        if self.standardize:
            sd = Z.std(axis=0)
            W = np.diag(np.where(sd > 0, 1.0 / np.where(sd > 0, sd, 1.0), 0.0))
            self._push(Z.mean(axis=0), W)
            Z = self._last(Z)
        if self.pca is not None:
            if self.pca == "auto":
                if k is None:
                    raise DatasetError("pca='auto' needs the neighborhood size k")
                dim = min(k, Z.shape[1], Z.shape[0] - 1)
            else:
                dim = int(self.pca)
            p = PCA(dim).fit(Z)
            self._push(p.mean_, p.components_)
            Z = self._last(Z)
        if self.lda is not None:
            dim = None if self.lda == "auto" else int(self.lda)
            lda = LDA(dim, self.lda_ridge).fit(Z, d.labels)
            self._push(lda.mean_, lda.components_)
        return self

    def _push(self, shift, W):
        self.steps_.append((np.asarray(shift, dtype=float), np.asarray(W, dtype=float)))

    def _last(self, Z):
        shift, W = self.steps_[-1]
        return (Z - shift) @ W

    def transform(self, X):
        Z = np.asarray(X, dtype=float)
        for shift, W in self.steps_:
            Z = (Z - shift) @ W
        return Z

    def apply(self, d: Dataset) -> Dataset:
        Z = self.transform(d.features)
        keep_names = self.pca is None and self.lda is None
        return d.with_features(Z, d.feature_names if keep_names else ())

    def to_dict(self):
        return {"steps": [{"shift": s.tolist(), "matrix": W.tolist()} for s, W in self.steps_]}

    @classmethod
    def from_dict(cls, doc):
        self = cls()
        for step in doc["steps"]:
            shift = np.array(step["shift"], dtype=float)
            self._push(shift, np.array(step["matrix"], dtype=float).reshape(len(shift), -1))
        return self
