"""Brute-force Euclidean k-nearest-neighbor graphs and patches."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

_CHUNK = 256
_BLOCK_ELEMS = 1 << 22


def default_k(n: int) -> int:
    """``floor(log2 n)``, never below 1."""
    if n < 2:
        raise ValueError(f"default_k needs at least 2 samples, got {n}")
    return max(1, int(math.floor(math.log2(n))))


def pairwise_distances(A, B) -> np.ndarray:
    """Euclidean distances between the rows of ``A`` and ``B``.

    Differences are formed explicitly (no ``|a|^2 + |b|^2 - 2ab`` expansion), so
    ``d(a, b) == d(b, a)`` bit for bit and duplicates sit at exactly zero.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    out = np.empty((A.shape[0], B.shape[0]))
    step = max(1, _BLOCK_ELEMS // max(1, B.shape[0] * B.shape[1]))
    for s in range(0, A.shape[0], step):
        diff = A[s : s + step, None, :] - B[None, :, :]
        out[s : s + step] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return out


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Directed k-NN graph: row ``i`` of ``indices``/``distances`` lists the
    neighbors of sample ``i`` by ascending distance (lower index wins ties)."""

    k: int
    indices: np.ndarray
    distances: np.ndarray

    @property
    def n(self) -> int:
        return self.indices.shape[0]

    def neighbors(self, i):
        return list(zip(self.indices[i].tolist(), self.distances[i].tolist()))


@dataclass(frozen=True, eq=False)
class Patch:
    """A center vector plus its ``k`` nearest vectors (nearest first)."""

    center: np.ndarray
    neighbor_vectors: np.ndarray
    neighbor_indices: np.ndarray
    neighbor_distances: np.ndarray
    center_index: int | None = None

    @property
    def k(self) -> int:
        return self.neighbor_vectors.shape[0]


def _sorted_neighbors(dist_rows, k):
    # stable sort keeps the lower index first among equal distances
    order = np.argsort(dist_rows, axis=1, kind="stable")[:, :k]
    return order, np.take_along_axis(dist_rows, order, axis=1)


def build_knng(X, k: int) -> NeighborGraph:
    """k-NN graph over the rows of ``X`` (a ``Dataset`` or an array)."""
    X = np.asarray(getattr(X, "features", X), dtype=float)
    n = X.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in 1..{n - 1} for {n} samples, got {k}")
    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k))
    for s in range(0, n, _CHUNK):
        block = pairwise_distances(X[s : s + _CHUNK], X)
        rows = np.arange(block.shape[0])
        block[rows, s + rows] = np.inf
        indices[s : s + _CHUNK], distances[s : s + _CHUNK] = _sorted_neighbors(block, k)
    indices.setflags(write=False)
    distances.setflags(write=False)
    return NeighborGraph(k, indices, distances)


def patch_of(g: NeighborGraph, d, i: int) -> Patch:
    X = np.asarray(getattr(d, "features", d), dtype=float)
    if not 0 <= i < g.n:
        raise IndexError(f"sample index {i} out of range 0..{g.n - 1}")
    idx = g.indices[i]
    return Patch(X[i], X[idx], idx, g.distances[i], center_index=int(i))


def query_neighbors(X_train, Q, k: int):
    """Indices and distances of the ``k`` nearest training rows for every query row."""
    X_train = np.asarray(X_train, dtype=float)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = X_train.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    if Q.shape[1] != X_train.shape[1]:
        raise ValueError(f"query has {Q.shape[1]} features, expected {X_train.shape[1]}")
    indices = np.empty((Q.shape[0], k), dtype=np.int64)
    distances = np.empty((Q.shape[0], k))
    for s in range(0, Q.shape[0], _CHUNK):
        block = pairwise_distances(Q[s : s + _CHUNK], X_train)
        indices[s : s + _CHUNK], distances[s : s + _CHUNK] = _sorted_neighbors(block, k)
    return indices, distances


def neighbors_of_query(d_train, q, k: int) -> Patch:
    X = np.asarray(getattr(d_train, "features", d_train), dtype=float)
    q = np.asarray(q, dtype=float).reshape(-1)
    idx, dist = query_neighbors(X, q[None, :], k)
    return Patch(q, X[idx[0]], idx[0], dist[0])


def write_graph_csv(g: NeighborGraph, path):
    """Dump the graph as ``i,rank,j,distance`` rows (rank 1 = nearest)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "rank", "j", "distance"])
        for i in range(g.n):
            for r in range(g.k):
                w.writerow([i, r + 1, int(g.indices[i, r]), repr(float(g.distances[i, r]))])
