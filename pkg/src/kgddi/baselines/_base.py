from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import FitError


def check_training_data(X, y):
    """Float64 feature matrix and 0/1 label vector, or :class:`FitError`."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise FitError(f"features must be 2-D, got shape {X.shape}")
    if len(X) != len(y):
        raise FitError(f"{len(X)} feature rows but {len(y)} labels")
    if not np.isfinite(X).all():
        raise FitError("features contain NaN or infinity")
    if not np.isin(y, (0, 1)).all():
        raise FitError("labels must be 0 or 1")
    y = y.astype(np.int64)
    if y.min() == y.max():
        raise FitError("training labels contain a single class")
    return X, y


def sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class BinaryClassifier(ClassifierMixin, BaseEstimator):
    """Shared validation and the ``predict``/``predict_proba`` plumbing.

    Subclasses implement ``_fit(X, y)`` and ``_proba(X)`` returning
    ``P(y = 1)`` per row.
    """

    def fit(self, X, y):
        X, y = check_training_data(X, y)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        self._fit(X, y)
        return self

    def _check_X(self, X):
        check_is_fitted(self, "n_features_in_")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features per row, got shape {X.shape}"
            )
        return X

    def predict_proba(self, X) -> np.ndarray:
        p1 = np.clip(self._proba(self._check_X(X)), 0.0, 1.0)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(np.int64)
