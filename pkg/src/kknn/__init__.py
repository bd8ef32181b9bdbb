"""Curvature-adaptive k-nearest-neighbor classification."""

from .classifier import (
    KKNNClassifier,
    KNNClassifier,
    Prediction,
    TrainedModel,
    adjust_neighborhood,
    fit,
    knn_classify,
    knn_get_neighbors,
    knn_predict,
    load_model,
    majority_vote,
    predict,
    predict_labels,
    save_model,
)
from .curvature import CurvatureProfile, curvature_of_query, curvature_profile, quantize
from .dataset import (
    Dataset,
    DatasetError,
    Preprocessor,
    SplitPlan,
    fetch_openml,
    holdout_fractions,
    lda_reduce,
    load_csv,
    load_features,
    pca_reduce,
    standardize,
    stratified_split,
)
from .knn_graph import NeighborGraph, Patch, build_knng, default_k, neighbors_of_query, patch_of

__version__ = "0.1.0"
