"""Construction by name, random hyperparameter search and JSON persistence."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import loguniform, randint
from sklearn.model_selection import ParameterSampler

from ..exceptions import FitError, KGDDIError
from ..metrics import aupr, auc, pearson, threshold_metrics
from .linear import LinearSVM, LogisticRegression
from .simple import GaussianNaiveBayes, KNearestNeighbors
from .trees import GradientBoosting, RandomForest, Tree

logger = logging.getLogger(__name__)

BASELINES = {
    "logreg": LogisticRegression,
    "gaussian-nb": GaussianNaiveBayes,
    "knn": KNearestNeighbors,
    "linear-svm": LinearSVM,
    "random-forest": RandomForest,
    "gbt": GradientBoosting,
}
ALIASES = {"lr": "logreg", "nb": "gaussian-nb", "svm": "linear-svm", "rf": "random-forest"}


def canonical_kind(kind: str) -> str:
    kind = ALIASES.get(kind, kind)
    if kind not in BASELINES:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {sorted(BASELINES)}")
    return kind


def make_baseline(kind: str, params: dict | None = None, seed: int = 0):
    cls = BASELINES[canonical_kind(kind)]
    params = dict(params or {})
    if "seed" in cls().get_params():
        params.setdefault("seed", seed)
    return cls(**params)


def fit_baseline(kind: str, X, y, params: dict | None = None, seed: int = 0):
    return make_baseline(kind, params, seed).fit(X, y)


def predict_proba(model, X) -> np.ndarray:
    """Probability of label 1 per row."""
    return model.predict_proba(X)[:, 1]


METRICS = {
    "aupr": aupr,
    "roc_auc": auc,
    "f1": lambda s, y: threshold_metrics(s, y).f1,
    "mcc": lambda s, y: threshold_metrics(s, y).mcc,
    "pearson": pearson,
}

# Search spaces: continuous ranges are log-uniform, lists are categorical.
DEFAULT_SPACES = {
    "logreg": {"alpha": loguniform(1e-6, 1e-1), "learning_rate": loguniform(1e-3, 1e-1)},
    "gaussian-nb": {"var_floor": loguniform(1e-12, 1e-6)},
    "knn": {"n_neighbors": randint(1, 51)},
    "linear-svm": {"C": loguniform(1e-2, 1e2), "learning_rate": loguniform(1e-3, 1e-1)},
    "random-forest": {"max_features": ["sqrt", "log2", 0.5], "min_samples_leaf": [1, 2, 5],
                      "max_depth": [None, 8, 16]},
    "gbt": {"learning_rate": loguniform(1e-2, 3e-1), "max_depth": [2, 3, 4], "subsample": [0.8, 1.0]},
}


@dataclass
class SearchSpace:
    """Hyperparameter ranges plus the number of configurations to sample."""

    params: dict
    budget: int = 10

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not self.params:
            raise ValueError("search space is empty")
        for name, rng in self.params.items():
            if isinstance(rng, (list, tuple)) and not rng:
                raise ValueError(f"range for {name!r} is empty")

    @classmethod
    def default(cls, kind: str, budget: int = 10) -> "SearchSpace":
        return cls(DEFAULT_SPACES[canonical_kind(kind)], budget)


@dataclass
class SearchResult:
    best_params: dict
    best_score: float
    trials: list = field(default_factory=list)
    n_failed: int = 0

    def to_json(self) -> str:
        return json.dumps(self.trials, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _plain(params):
    return {k: (v.item() if isinstance(v, np.generic) else v) for k, v in params.items()}


def random_search(kind: str, space: SearchSpace, X, y, folds, metric: str = "aupr",
                  seed: int = 0) -> SearchResult:
    """Sample ``space.budget`` configurations and score each by cross-validation.

    ``folds`` is any splitter yielding ``(train_idx, val_idx)`` from
    ``split()``, such as :class:`~kgddi.pairs.FoldPlan`.  The winner has the
    highest mean fold score; ties go to the earlier sample.  A configuration
    whose fit fails is recorded and skipped.
    """
    kind = canonical_kind(kind)
    score_fn = METRICS[metric]
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    configs = list(ParameterSampler(space.params, n_iter=space.budget, random_state=seed % 2**32))
    splits = list(folds.split(X, y))
    trials, best, n_failed = [], None, 0
    for i, cfg in enumerate(configs):
        cfg = _plain(cfg)
        try:
            scores = []
            for train, val in splits:
                model = fit_baseline(kind, X[train], y[train], cfg, seed)
                scores.append(float(score_fn(predict_proba(model, X[val]), y[val])))
        except (KGDDIError, FloatingPointError, ValueError) as exc:
            n_failed += 1
            logger.warning("config %d %s failed: %s", i, cfg, exc)
            trials.append({"config": cfg, "fold_scores": None, "mean": None, "error": str(exc)})
            continue
        mean = float(np.mean(scores))
        trials.append({"config": cfg, "fold_scores": scores, "mean": mean})
        if best is None or mean > best[1]:
            best = (cfg, mean)
    if best is None:
        raise FitError(f"all {len(configs)} sampled configurations failed")
    return SearchResult(best[0], best[1], trials, n_failed)


_STATE = {
    "logreg": ("coef_", "intercept_"),
    "gaussian-nb": ("class_prior_", "theta_", "var_"),
    "knn": ("X_", "y_"),
    "linear-svm": ("coef_", "intercept_", "scale_"),
    "random-forest": ("trees_",),
    "gbt": ("init_", "trees_"),
}


def _kind_of(model) -> str:
    for kind, cls in BASELINES.items():
        if type(model) is cls:
            return kind
    raise TypeError(f"not a baseline model: {type(model).__name__}")


def save_model(model, path) -> None:
    kind = _kind_of(model)
    state = {}
    for name in _STATE[kind]:
        v = getattr(model, name)
        if name == "trees_":
            state[name] = [t.to_dict() for t in v]
        elif isinstance(v, np.ndarray):
            state[name] = {"dtype": str(v.dtype), "shape": list(v.shape), "data": v.ravel().tolist()}
        else:
            state[name] = v
    doc = {"kind": kind, "params": model.get_params(), "n_features": model.n_features_in_,
           "state": state}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, default=_jsonable)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    model = BASELINES[doc["kind"]](**doc["params"])
    model.classes_ = np.array([0, 1])
    model.n_features_in_ = doc["n_features"]
    for name, v in doc["state"].items():
        if name == "trees_":
            v = [Tree.from_dict(t) for t in v]
        elif isinstance(v, dict):
            v = np.asarray(v["data"], dtype=v["dtype"]).reshape(v["shape"])
        setattr(model, name, v)
    if doc["kind"] == "knn":
        model._sq = np.einsum("ij,ij->i", model.X_, model.X_)
    return model
