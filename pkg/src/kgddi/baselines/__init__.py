"""Baseline classifiers written against the scikit-learn estimator API."""

from .linear import LinearSVM, LogisticRegression
from .search import (
    BASELINES,
    DEFAULT_SPACES,
    SearchResult,
    SearchSpace,
    canonical_kind,
    fit_baseline,
    load_model,
    make_baseline,
    predict_proba,
    random_search,
    save_model,
)
from .simple import GaussianNaiveBayes, KNearestNeighbors
from .trees import Binner, DecisionTree, GradientBoosting, RandomForest, Tree, build_tree

__all__ = [
    "BASELINES", "Binner", "DEFAULT_SPACES", "DecisionTree", "GaussianNaiveBayes", "GradientBoosting",
    "KNearestNeighbors", "LinearSVM", "LogisticRegression", "RandomForest", "SearchResult",
    "SearchSpace", "Tree", "build_tree", "canonical_kind", "fit_baseline", "load_model",
    "make_baseline", "predict_proba", "random_search", "save_model",
]
