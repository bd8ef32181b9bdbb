"""Shape-operator curvature of point-cloud patches.

For a patch (center ``x`` plus ``k`` neighbors) the pipeline is

1. local covariance ``Sigma = (1/k) sum_j (x_j - x)(x_j - x)^T``, centered on
   the patch center rather than the patch mean;
2. eigenvectors ``U_1..U_m`` of ``Sigma``, descending eigenvalue order;
3. design matrix ``[1 | U_1..U_m | U_1^2..U_m^2 | U_a*U_b (a<b)]`` with
   ``1 + m + m(m+1)/2`` columns and ``m`` rows (products are elementwise);
4. ``H`` = the trailing ``m(m+1)/2`` quadratic columns, second fundamental
   form ``HH = H H^T`` (``m x m``);
5. shape operator ``S = -HH Sigma``; Gaussian curvature ``det S``, mean
   curvature ``trace S``, principal curvatures ``eig S``.

The metric tensor is taken as ``Sigma^-1``, so ``S = -II I^-1`` collapses to
``-HH Sigma`` and no inverse is ever formed.

Whenever ``Sigma`` is singular the Gaussian curvature is reported as exactly
zero: structurally when ``k < m`` (at most ``k`` independent difference
vectors), numerically when its reciprocal condition number is at most
:data:`SINGULAR_RCOND`.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .knn_graph import Patch, build_knng, default_k

SINGULAR_RCOND = 1e-12
QUANTILE_LEVELS = np.round(np.arange(1, 10) / 10.0, 1)
N_SCORES = 10


class RankCollapseWarning(UserWarning):
    """Neighborhoods are too small to span the feature space; all curvatures are zero."""


def rank_collapse_message(k, m):
    return (
        f"k={k} neighbors cannot span m={m} features (k + 1 <= m): every local covariance is "
        f"singular and all Gaussian curvatures are 0; reduce the dimension first (e.g. PCA to "
        f"at most {k} component{'s' if k != 1 else ''})"
    )


# ------------------------------------------------------------ single patch


def local_covariance(p: Patch) -> np.ndarray:
    D = np.asarray(p.neighbor_vectors, dtype=float) - np.asarray(p.center, dtype=float)
    return D.T @ D / D.shape[0]


def eigenbasis(sigma):
    """Eigenvalues (descending) and unit eigenvectors (columns) of a symmetric matrix."""
    w, V = np.linalg.eigh(sigma)
    return w[..., ::-1], V[..., ::-1]


def _quadratic_pairs(m):
    return [(a, a) for a in range(m)] + [(a, b) for a in range(m) for b in range(a + 1, m)]


def design_matrix(U) -> np.ndarray:
    """Rows index coordinates, columns are ``1, U_a, U_a^2, U_a*U_b (a<b)``.

    Accepts a single ``m x m`` basis or a stack ``(..., m, m)``.
    """
    U = np.asarray(U, dtype=float)
    m = U.shape[-2]
    if U.shape[-1] != m:
        raise ValueError(f"expected {m} eigenvector columns, got {U.shape[-1]}")
    a, b = np.array(_quadratic_pairs(m)).T
    ones = np.ones(U.shape[:-1] + (1,))
    return np.concatenate([ones, U, U[..., a] * U[..., b]], axis=-1)


def _dim_from_columns(ncols):
    m = 1
    while 1 + m + m * (m + 1) // 2 < ncols:
        m += 1
    if 1 + m + m * (m + 1) // 2 != ncols:
        raise ValueError(f"{ncols} columns is not 1 + m + m(m+1)/2 for any m")
    return m


def second_fundamental_form(X) -> np.ndarray:
    """``H H^T`` where ``H`` is the quadratic (last ``m(m+1)/2``) column block of ``X``."""
    X = np.asarray(X, dtype=float)
    m = _dim_from_columns(X.shape[-1])
    if X.shape[-2] != m:
        raise ValueError(f"design matrix with {X.shape[-1]} columns must have {m} rows, got {X.shape[-2]}")
    H = X[..., 1 + m :]
    return H @ np.swapaxes(H, -1, -2)


def shape_operator(hess, sigma) -> np.ndarray:
    hess = np.asarray(hess, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if hess.shape != sigma.shape or hess.shape[-1] != hess.shape[-2]:
        raise ValueError(f"shape mismatch: {hess.shape} vs {sigma.shape}")
    return -hess @ sigma


def gaussian_curvature(shape) -> float:
    return float(np.linalg.det(np.asarray(shape, dtype=float)))


def mean_curvature(shape) -> float:
    return float(np.trace(np.asarray(shape, dtype=float)))


def principal_curvatures(shape) -> np.ndarray:
    """Eigenvalues of the shape operator, largest first.

    ``-HH Sigma`` is not symmetric; if the eigensolver returns complex values
    the real parts are returned and a warning is issued.
    """
    shape = np.asarray(shape, dtype=float)
    ev = np.linalg.eigvals(shape)
    scale = max(1.0, float(np.max(np.abs(ev)))) if ev.size else 1.0
    if np.any(np.abs(ev.imag) > 1e-10 * scale):
        warnings.warn("shape operator has complex eigenvalues; returning real parts", RuntimeWarning)
    return np.sort(ev.real)[::-1]


@dataclass(frozen=True, eq=False)
class LocalForms:
    sigma: np.ndarray
    hess: np.ndarray
    shape: np.ndarray
    eigenvalues: np.ndarray
    basis: np.ndarray


def local_forms(p: Patch) -> LocalForms:
    sigma = local_covariance(p)
    w, U = eigenbasis(sigma)
    hess = second_fundamental_form(design_matrix(U))
    return LocalForms(sigma, hess, shape_operator(hess, sigma), w, U)


def _singular(eigvals_desc, k, m):
    top = eigvals_desc[..., 0]
    low = eigvals_desc[..., -1]
    return (k < m) | (top <= 0) | (low <= SINGULAR_RCOND * top)


def curvature_of_query(p: Patch, k: int | None = None) -> float:
    """Raw Gaussian curvature of one patch, centered on ``p.center``."""
    if k is not None and k != p.k:
        raise ValueError(f"patch has {p.k} neighbors, expected {k}")
    f = local_forms(p)
    if _singular(f.eigenvalues, p.k, f.sigma.shape[0]):
        return 0.0
    return gaussian_curvature(f.shape)


# ----------------------------------------------------------------- batched


def patch_curvatures(centers, neighbors) -> np.ndarray:
    """Raw Gaussian curvatures for a batch of patches.

    ``centers`` is ``(p, m)`` and ``neighbors`` is ``(p, k, m)``.
    """
    centers = np.asarray(centers, dtype=float)
    neighbors = np.asarray(neighbors, dtype=float)
    p, k, m = neighbors.shape
    if p == 0:
        return np.zeros(0)
    D = neighbors - centers[:, None, :]
    sigma = np.einsum("pki,pkj->pij", D, D) / k
    w, U = eigenbasis(sigma)
    hess = second_fundamental_form(design_matrix(U))
    K = np.linalg.det(shape_operator(hess, sigma))
    K[_singular(w, k, m)] = 0.0
    return K


# ------------------------------------------------------------ quantization


def quantize(raw):
    """Map raw curvatures to integer scores 0..9.

    Magnitudes ``|K|`` are min-max normalized to [0, 1] (all zeros when they
    are all equal), boundaries are the 0.1..0.9 linear-interpolation quantiles
    of the magnitudes, and a score is the number of boundaries ``<=`` the
    magnitude.  Returns ``(magnitudes, boundaries, scores)``.
    """
    mag = np.abs(np.asarray(raw, dtype=float))
    if mag.size == 0:
        raise ValueError("cannot quantize an empty curvature vector")
    lo, hi = mag.min(), mag.max()
    if hi == lo:
        return np.zeros_like(mag), np.zeros(N_SCORES - 1), np.zeros(mag.shape, dtype=np.int64)
    mag = (mag - lo) / (hi - lo)
    bounds = np.quantile(mag, QUANTILE_LEVELS)
    scores = np.searchsorted(bounds, mag, side="right").astype(np.int64)
    return mag, bounds, scores


@dataclass(frozen=True, eq=False)
class CurvatureProfile:
    k: int
    raw: np.ndarray
    magnitudes: np.ndarray
    boundaries: np.ndarray
    scores: np.ndarray

    @classmethod
    def from_raw(cls, raw, k):
        raw = np.asarray(raw, dtype=float)
        mag, bounds, scores = quantize(raw)
        return cls(int(k), raw, mag, bounds, scores)

    def __len__(self):
        return self.raw.shape[0]


def raw_curvatures(X, k: int, graph=None) -> np.ndarray:
    """Gaussian curvature of every sample's k-NN patch."""
    X = np.asarray(getattr(X, "features", X), dtype=float)
    g = build_knng(X, k) if graph is None else graph
    m = X.shape[1]
    if k + 1 <= m:
        warnings.warn(rank_collapse_message(k, m), RankCollapseWarning, stacklevel=2)
    return patch_curvatures(X, X[g.indices])


def curvature_profile(d, k: int | None = None) -> CurvatureProfile:
    X = np.asarray(getattr(d, "features", d), dtype=float)
    if k is None:
        k = default_k(X.shape[0])
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    return CurvatureProfile.from_raw(raw_curvatures(X, k), k)


def write_profile_csv(profile: CurvatureProfile, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "raw_K", "magnitude", "score"])
        for i in range(len(profile)):
            w.writerow([i, repr(float(profile.raw[i])), repr(float(profile.magnitudes[i])), int(profile.scores[i])])
