"""Curvature profile of a noisy surface with one displaced outlier.

Samples a saddle z = x^2 - y^2 with a little noise, pushes one point off the
surface and prints how the quantized curvature scores distribute.  The
displaced point should land in one of the top score buckets.
"""

import numpy as np

from kknn import curvature_profile

rng = np.random.default_rng(0)
n = 300
xy = rng.uniform(-1, 1, size=(n, 2))
X = np.column_stack([xy, xy[:, 0] ** 2 - xy[:, 1] ** 2 + rng.normal(scale=0.01, size=n)])

outlier = 17
X[outlier, 2] += 0.6

prof = curvature_profile(X, k=12)
print(f"k={prof.k}  n={len(prof)}")
print("score histogram:", np.bincount(prof.scores, minlength=10).tolist())
print("quantile boundaries:", np.round(prof.boundaries, 4).tolist())

inlier_median = np.median(np.delete(prof.magnitudes, outlier))
print(f"outlier magnitude {prof.magnitudes[outlier]:.4f}  score {prof.scores[outlier]}")
print(f"median inlier magnitude {inlier_median:.4f}")

# K = det(-H Sigma) with H and Sigma positive semi-definite, so in m = 3 dimensions
# every nonzero K is negative
signs = np.sign(prof.raw)
print("sign counts (-1, 0, +1):", [int((signs == s).sum()) for s in (-1, 0, 1)])
