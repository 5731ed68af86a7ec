"""Logistic regression and a linear SVM with sigmoid calibration."""

from __future__ import annotations

import numpy as np

from ..optim import Optimizer, rng_stream
from ._base import BinaryClassifier, sigmoid


class LogisticRegression(BinaryClassifier):
    """L2-regularised logistic regression fit by full-batch gradient steps.

    Parameters
    ----------
    alpha : float
        L2 penalty on the weights (not the bias).
    learning_rate, epochs, optimizer :
        Passed to the shared :class:`~kgddi.optim.Optimizer`.
    """

    def __init__(self, alpha=1e-4, learning_rate=0.05, epochs=500, optimizer="adam", seed=0):
        self.alpha = alpha
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.optimizer = optimizer
        self.seed = seed

    def _fit(self, X, y):
        n, d = X.shape
        params = {"w": np.zeros(d), "b": np.zeros(1)}
        opt = Optimizer(self.optimizer, lr=self.learning_rate)
        self.loss_curve_ = []
        for _ in range(int(self.epochs)):
            p = sigmoid(X @ params["w"] + params["b"][0])
            err = (p - y) / n
            eps = 1e-15
            loss = -np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
            self.loss_curve_.append(float(loss + 0.5 * self.alpha * params["w"] @ params["w"]))
            opt.step(params, {"w": X.T @ err + self.alpha * params["w"], "b": np.array([err.sum()])})
        self.coef_ = params["w"]
        self.intercept_ = float(params["b"][0])

    def decision_function(self, X):
        return self._check_X(X) @ self.coef_ + self.intercept_

    def _proba(self, X):
        return sigmoid(X @ self.coef_ + self.intercept_)


def _fit_scale(margins, y, iters=50, ridge=1e-2):
    """Scale ``a >= 0`` maximising the likelihood of ``sigmoid(a * margin)``.

    No offset term, so a zero margin always maps to 0.5.  The small ridge
    keeps ``a`` finite on separable data.
    """
    a = 1.0
    t = 2.0 * y - 1.0
    for _ in range(iters):
        z = a * margins * t
        p = sigmoid(-z)  # d/dz of log(1 + e^-z) is -sigmoid(-z)
        grad = -np.sum(p * margins * t) + ridge * a
        hess = np.sum(p * (1 - p) * margins**2) + ridge
        step = grad / hess
        a_new = max(a - step, 0.0)
        if abs(a_new - a) < 1e-10:
            a = a_new
            break
        a = a_new
    return a


class LinearSVM(BinaryClassifier):
    """Soft-margin linear SVM (hinge loss, L2 penalty) trained by subgradient steps.

    Probabilities are ``sigmoid(a * margin)`` where the scale ``a`` is fit
    by maximum likelihood on the training margins.
    """

    def __init__(self, C=1.0, learning_rate=0.01, epochs=300, batch_size=256,
                 optimizer="adam", seed=0):
        self.C = C
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.optimizer = optimizer
        self.seed = seed

    def _fit(self, X, y):
        n, d = X.shape
        t = 2.0 * y - 1.0
        params = {"w": np.zeros(d), "b": np.zeros(1)}
        opt = Optimizer(self.optimizer, lr=self.learning_rate)
        rng = rng_stream(self.seed, 0)
        lam = 1.0 / (self.C * n)
        bs = min(int(self.batch_size), n)
        for _ in range(int(self.epochs)):
            perm = rng.permutation(n)
            for start in range(0, n, bs):
                idx = perm[start:start + bs]
                m = t[idx] * (X[idx] @ params["w"] + params["b"][0])
                act = (m < 1).astype(np.float64) * t[idx] / len(idx)
                opt.step(params, {"w": lam * params["w"] - X[idx].T @ act,
                                  "b": np.array([-act.sum()])})
        self.coef_ = params["w"]
        self.intercept_ = float(params["b"][0])
        self.scale_ = _fit_scale(X @ self.coef_ + self.intercept_, y)

    def decision_function(self, X):
        return self._check_X(X) @ self.coef_ + self.intercept_

    def _proba(self, X):
        return sigmoid(self.scale_ * (X @ self.coef_ + self.intercept_))
