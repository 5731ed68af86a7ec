"""Gaussian naive Bayes and k-nearest neighbours."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ._base import BinaryClassifier


class GaussianNaiveBayes(BinaryClassifier):
    """Per-class independent Gaussians with variances floored at ``var_floor``."""

    def __init__(self, var_floor=1e-9):
        self.var_floor = var_floor

    def _fit(self, X, y):
        self.class_prior_ = np.array([np.mean(y == c) for c in (0, 1)])
        self.theta_ = np.stack([X[y == c].mean(axis=0) for c in (0, 1)])
        self.var_ = np.maximum(np.stack([X[y == c].var(axis=0) for c in (0, 1)]), self.var_floor)

    def _joint_log_likelihood(self, X):
        out = np.empty((len(X), 2))
        for c in (0, 1):
            var = self.var_[c]
            ll = -0.5 * np.sum(np.log(2 * np.pi * var)) - 0.5 * np.sum((X - self.theta_[c]) ** 2 / var, axis=1)
            out[:, c] = np.log(self.class_prior_[c]) + ll
        return out

    def _proba(self, X):
        jll = self._joint_log_likelihood(X)
        return np.exp(jll[:, 1] - logsumexp(jll, axis=1))


class KNearestNeighbors(BinaryClassifier):
    """Fraction of positive labels among the ``n_neighbors`` closest training rows.

    Distances are Euclidean; equal distances are resolved in favour of the
    lower training-row index.
    """

    def __init__(self, n_neighbors=5, chunk_size=512):
        self.n_neighbors = n_neighbors
        self.chunk_size = chunk_size

    def _fit(self, X, y):
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        self.X_ = X.copy()
        self.y_ = y.copy()
        self._sq = np.einsum("ij,ij->i", X, X)

    def kneighbors(self, X):
        X = self._check_X(X)
        k = min(int(self.n_neighbors), len(self.X_))
        out = np.empty((len(X), k), dtype=np.int64)
        for start in range(0, len(X), self.chunk_size):
            q = X[start:start + self.chunk_size]
            d2 = np.einsum("ij,ij->i", q, q)[:, None] + self._sq[None, :] - 2.0 * q @ self.X_.T
            np.maximum(d2, 0.0, out=d2)
            out[start:start + len(q)] = np.argsort(d2, axis=1, kind="stable")[:, :k]
        return out

    def _proba(self, X):
        return self.y_[self.kneighbors(X)].mean(axis=1)
