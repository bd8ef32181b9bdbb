"""Holdout benchmark on the bundled datasets, with and without preprocessing.

On raw features most of these datasets have more columns than log2(n)
neighbors, so every local patch is rank deficient and all curvatures are 0.
kK-NN then degenerates into k-NN.  Standardizing and projecting to at most k
principal components (fit on each training split) restores the signal.
"""

import warnings
from pathlib import Path

from kknn import fetch_openml
from kknn.benchmark import RunConfig, run_benchmark

CACHE = Path(__file__).resolve().parent.parent / "tests" / "data" / "openml_cache"
NAMES = ["zoo", "sonar", "ionosphere", "prnn_crabs", "vowel", "thyroid-new", "glass"]

configs = {
    "raw": RunConfig(),
    "standardize + pca auto": RunConfig(standardize=True, pca="auto"),
}

for label, cfg in configs.items():
    print(f"\n== {label} ==")
    print(f"{'dataset':12s} {'k-NN':>7s} {'kK-NN':>7s}  median balanced accuracy")
    wins = 0
    for name in NAMES:
        d = fetch_openml(name, CACHE)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = run_benchmark(d, cfg, name)
        a, b = res.median("knn", "balanced_accuracy"), res.median("kknn", "balanced_accuracy")
        wins += b > a
        collapsed = sorted({f for note, fr in res.notes.items() if "PCA" in note for f in fr})
        tag = f"  (rank collapse at {len(collapsed)} of {len(cfg.fractions)} fractions)" if collapsed else ""
        print(f"{name:12s} {a:7.4f} {b:7.4f}{tag}")
    print(f"kK-NN ahead on {wins} of {len(NAMES)}")
