"""CART trees, random forests and gradient-boosted trees.

One tree builder serves both classification and boosting: for 0/1
targets, minimising weighted Gini impurity and minimising squared error
pick the same split, since ``n_l * 2 p_l (1 - p_l) = 2 (S_l - S_l^2 / n_l)``.
Both reduce to maximising ``S_l^2 / n_l + S_r^2 / n_r``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..optim import rng_stream
from ._base import BinaryClassifier, sigmoid


@dataclass
class Tree:
    """Flat binary tree.  ``feature[i] == -1`` marks a leaf; rows with
    ``x[feature] <= threshold`` go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            n = node[idx]
            go_left = X[idx, self.feature[n]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return node

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, d) -> "Tree":
        ints = ("feature", "left", "right")
        return cls(**{k: np.asarray(v, dtype=np.int64 if k in ints else np.float64) for k, v in d.items()})


class Binner:
    """Per-feature split candidates: midpoints of consecutive unique values.

    A feature with more than ``max_bins`` distinct values keeps a
    quantile-spaced subset of its midpoints.  ``codes[i, f]`` is the bin of
    row ``i``; a split after bin ``b`` sends rows with ``x <= thresholds[f][b]``
    left.
    """

    def __init__(self, X, max_bins: int | None = 256):
        n, d = X.shape
        self.codes = np.empty((n, d), dtype=np.int32)
        self.thresholds = []
        for f in range(d):
            uniq = np.unique(X[:, f])
            if max_bins is None or len(uniq) <= max_bins:
                upper = uniq
            else:
                keep = np.unique(np.linspace(0, len(uniq) - 1, max_bins).round().astype(np.int64))
                upper = uniq[keep]
            nxt = uniq[np.searchsorted(uniq, upper[:-1], side="right")]
            thr = 0.5 * (upper[:-1] + nxt)
            # a midpoint can round onto the right value; fall back to the left one
            self.thresholds.append(np.where(thr >= nxt, upper[:-1], thr))
            self.codes[:, f] = np.searchsorted(upper, X[:, f], side="left")
        self.n_bins = max(2, max((len(t) + 1 for t in self.thresholds), default=2))


def _node_split(codes, target, cols, n_bins, min_leaf):
    """Best ``(gain, feature, bin)`` over ``cols``, or ``None`` if no split is valid."""
    if len(cols) == 0:
        return None
    n, m = len(target), len(cols)
    flat = (codes[:, cols] + (np.arange(m) * n_bins)[None, :]).ravel()
    cnt = np.bincount(flat, minlength=m * n_bins).reshape(m, n_bins)
    tot = np.bincount(flat, weights=np.repeat(target, m), minlength=m * n_bins).reshape(m, n_bins)
    nl = np.cumsum(cnt, axis=1)[:, :-1].astype(np.float64)
    sl = np.cumsum(tot, axis=1)[:, :-1]
    nr = n - nl
    # splitting after bin b separates values only if bin b itself is occupied
    valid = (nl >= min_leaf) & (nr >= min_leaf) & (cnt[:, :-1] > 0)
    if not valid.any():
        return None
    S = target.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(valid, sl**2 / nl + (S - sl) ** 2 / nr, -np.inf)
    f, b = np.unravel_index(int(np.argmax(gain)), gain.shape)
    return gain[f, b] - S**2 / n, int(cols[f]), int(b)


def build_tree(X, target, max_depth=None, min_samples_split=2, min_samples_leaf=1,
               max_features=None, rng=None, binner: Binner | None = None, rows=None) -> Tree:
    """Grow a tree greedily on ``X[rows]``; node values are target means.

    ``target`` is aligned with ``rows``.  Impure nodes are split even when
    the best split has zero gain, so an unlimited tree fits distinct points
    exactly.  With ``max_features`` set, a random feature subset is searched
    first and the remaining features only if the subset has no valid split.
    """
    binner = binner or Binner(X)
    codes = binner.codes if rows is None else binner.codes[rows]
    n, d = codes.shape
    feature, threshold, left, right, value = [], [], [], [], []
    stack = [(np.arange(n), 0, -1, False)]
    while stack:
        idx, depth, parent, is_right = stack.pop()
        node = len(feature)
        if parent >= 0:
            (right if is_right else left)[parent] = node
        t = target[idx]
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(t.mean()))
        if (len(idx) < max(min_samples_split, 2 * min_samples_leaf)
                or (max_depth is not None and depth >= max_depth) or np.ptp(t) == 0):
            continue
        node_codes = codes[idx]
        if max_features is not None and max_features < d:
            perm = rng.permutation(d)
            best = _node_split(node_codes, t, perm[:max_features], binner.n_bins, min_samples_leaf)
            if best is None:
                best = _node_split(node_codes, t, perm[max_features:], binner.n_bins, min_samples_leaf)
        else:
            best = _node_split(node_codes, t, np.arange(d), binner.n_bins, min_samples_leaf)
        if best is None:
            continue
        _, f, b = best
        feature[node], threshold[node] = f, float(binner.thresholds[f][b])
        go_left = node_codes[:, f] <= b
        stack.append((idx[~go_left], depth + 1, node, True))
        stack.append((idx[go_left], depth + 1, node, False))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64), np.array(value))


def _n_features(max_features, d):
    if max_features is None:
        return None
    if max_features == "sqrt":
        return max(1, int(np.sqrt(d)))
    if max_features == "log2":
        return max(1, int(np.log2(d)))
    if isinstance(max_features, float):
        return max(1, int(max_features * d))
    return int(max_features)


class DecisionTree(BinaryClassifier):
    """CART classifier with Gini impurity; leaves hold the positive fraction."""

    def __init__(self, max_depth=None, min_samples_split=2, min_samples_leaf=1,
                 max_features=None, max_bins=256, seed=0):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.max_bins = max_bins
        self.seed = seed

    def _fit(self, X, y):
        self.tree_ = build_tree(X, y.astype(np.float64), self.max_depth, self.min_samples_split,
                                self.min_samples_leaf, _n_features(self.max_features, X.shape[1]),
                                rng_stream(self.seed, 0), Binner(X, self.max_bins))

    def _proba(self, X):
        return self.tree_.predict(X)


class RandomForest(BinaryClassifier):
    """Bagged CART trees with per-split feature subsampling.

    Tree ``t`` draws its bootstrap sample and feature orders from
    ``rng_stream(seed, t)``.  Predictions are the mean of leaf fractions.
    """

    def __init__(self, n_estimators=100, max_features="sqrt", max_depth=None,
                 min_samples_leaf=1, bootstrap=True, max_bins=256, seed=0):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.max_bins = max_bins
        self.seed = seed

    def _fit(self, X, y):
        n, d = X.shape
        mf = _n_features(self.max_features, d)
        binner = Binner(X, self.max_bins)
        self.trees_ = []
        for t in range(int(self.n_estimators)):
            rng = rng_stream(self.seed, t)
            rows = rng.integers(n, size=n) if self.bootstrap else np.arange(n)
            self.trees_.append(build_tree(X, y[rows].astype(np.float64), self.max_depth, 2,
                                          self.min_samples_leaf, mf, rng, binner, rows))

    def _proba(self, X):
        return np.mean([t.predict(X) for t in self.trees_], axis=0)


def _log_loss(y, f):
    # log(1 + e^f) - y f, computed stably
    return float(np.mean(np.logaddexp(0.0, f) - y * f))


class GradientBoosting(BinaryClassifier):
    """Logistic-loss boosting of shallow regression trees.

    Each round fits a tree to the residuals ``y - p`` and sets every leaf to
    the Newton step ``sum(r) / sum(p (1 - p))``, scaled by
    ``learning_rate``.  If a round would raise the training loss its step is
    halved until it does not, so ``train_loss_`` never increases.
    """

    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=3,
                 min_samples_leaf=1, subsample=1.0, max_bins=256, seed=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.subsample = subsample
        self.max_bins = max_bins
        self.seed = seed

    def _fit(self, X, y):
        n = len(y)
        rate = y.mean()
        self.init_ = float(np.log(rate / (1.0 - rate)))
        f = np.full(n, self.init_)
        yf = y.astype(np.float64)
        binner = Binner(X, self.max_bins)
        self.trees_ = []
        self.train_loss_ = [_log_loss(yf, f)]
        for t in range(int(self.n_estimators)):
            rng = rng_stream(self.seed, t)
            rows = np.sort(rng.permutation(n)[:max(1, int(round(self.subsample * n)))])
            p = sigmoid(f)
            resid = yf - p
            tree = build_tree(X, resid[rows], self.max_depth, 2, self.min_samples_leaf, None, rng, binner, rows)
            leaf = tree.apply(X[rows])
            num = np.bincount(leaf, weights=resid[rows], minlength=tree.n_nodes)
            den = np.bincount(leaf, weights=(p * (1 - p))[rows], minlength=tree.n_nodes)
            step = np.where(den > 1e-12, num / np.maximum(den, 1e-12), 0.0) * self.learning_rate
            delta = step[tree.apply(X)]
            for _ in range(60):
                loss = _log_loss(yf, f + delta)
                if loss <= self.train_loss_[-1]:
                    break
                step *= 0.5
                delta *= 0.5
            else:
                step[:] = 0.0
                delta[:] = 0.0
                loss = self.train_loss_[-1]
            tree.value = step
            f = f + delta
            self.trees_.append(tree)
            self.train_loss_.append(loss)

    def decision_function(self, X):
        X = self._check_X(X)
        return self._raw(X)

    def _raw(self, X):
        f = np.full(len(X), self.init_)
        for tree in self.trees_:
            f += tree.predict(X)
        return f

    def _proba(self, X):
        return sigmoid(self._raw(X))
