"""Drug-pair examples: negative undersampling, pair features, fold plans."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .embedding import EmbeddingSet
from .exceptions import KGDDIError, SamplingError, StratificationError
from .graph import DdiDataset
from .optim import rng_stream

logger = logging.getLogger(__name__)

_ENUMERATE_LIMIT = 5_000_000


def _pair_index(i, j, n):
    """Index of canonical pair ``(i, j)``, ``i < j``, among all ``n(n-1)/2`` pairs."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


def _pair_from_index(k, n):
    k = np.asarray(k, dtype=np.int64)
    # row i starts at i(2n - i - 1)/2; invert the quadratic then fix rounding
    i = np.floor((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8.0 * k)) / 2).astype(np.int64)
    i = np.clip(i, 0, n - 2)
    start = i * (2 * n - i - 1) // 2
    over = start > k
    while over.any():
        i[over] -= 1
        start = i * (2 * n - i - 1) // 2
        over = start > k
    nxt = (i + 1) * (2 * n - i - 2) // 2
    under = nxt <= k
    while under.any():
        i[under] += 1
        start = i * (2 * n - i - 1) // 2
        nxt = (i + 1) * (2 * n - i - 2) // 2
        under = nxt <= k
    j = k - start + i + 1
    return i, j


def sample_negative_pairs(dataset: DdiDataset, ratio: float = 1.0, seed: int = 0) -> np.ndarray:
    """Draw ``round(ratio * |positives|)`` unknown drug pairs without replacement.

    Pairs are uniform over canonical ``(u, v)``, ``u < v``, pairs of the drug
    universe that are not positives.  Returns an ``(m, 2)`` id array sorted
    by pair order.
    """
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    universe = np.sort(np.asarray(dataset.drug_universe, dtype=np.int64))
    n = len(universe)
    total = n * (n - 1) // 2
    pos = np.asarray(dataset.pairs, dtype=np.int64).reshape(-1, 2)
    pos_idx = np.unique(_pair_index(np.searchsorted(universe, pos[:, 0]),
                                    np.searchsorted(universe, pos[:, 1]), n))
    want = int(round(ratio * len(pos)))
    available = total - len(pos_idx)
    if want > available:
        raise SamplingError(f"need {want} negative pairs but only {available} unknown pairs exist")
    rng = rng_stream(seed, 0)
    if total <= _ENUMERATE_LIMIT:
        candidates = np.setdiff1d(np.arange(total, dtype=np.int64), pos_idx, assume_unique=True)
        chosen = np.sort(rng.choice(candidates, size=want, replace=False))
    else:
        chosen = np.zeros(0, dtype=np.int64)
        while len(chosen) < want:
            draw = rng.integers(total, size=2 * (want - len(chosen)) + 16)
            draw = draw[~np.isin(draw, pos_idx)]
            chosen = np.unique(np.concatenate([chosen, draw]))
        chosen = np.sort(rng.choice(chosen, size=want, replace=False))
    i, j = _pair_from_index(chosen, n)
    return np.stack([universe[i], universe[j]], axis=1)


@dataclass
class PairSet:
    """Feature matrix of drug pairs.  Rows follow ``pairs``; ``n_filtered`` pairs were dropped."""

    pairs: np.ndarray
    X: np.ndarray
    y: np.ndarray
    n_filtered: int = 0

    def __len__(self):
        return len(self.y)


class PairFeaturizer(BaseEstimator, TransformerMixin):
    """Map ``(u, v)`` entity-id pairs to ``embedding(min) || embedding(max)``.

    Parameters
    ----------
    embedding : EmbeddingSet
    id_to_label : mapping of entity id -> label, optional
        Needed when embedding rows are not indexed by entity id (e.g. after
        loading vectors from disk).  When omitted, ids index rows directly.
    """

    def __init__(self, embedding: EmbeddingSet | None = None, id_to_label=None):
        self.embedding = embedding
        self.id_to_label = id_to_label

    def fit(self, X=None, y=None):
        if self.embedding is None:
            raise ValueError("PairFeaturizer needs an embedding")
        return self

    def _rows(self, ids):
        if self.id_to_label is None:
            return np.asarray(ids, dtype=np.int64)
        return np.array([self.embedding.index(self.id_to_label[int(i)]) for i in ids], dtype=np.int64)

    def available(self, pairs) -> np.ndarray:
        """Boolean mask of pairs whose drugs both have vectors."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if self.id_to_label is None:
            return (pairs >= 0).all(axis=1) & (pairs < len(self.embedding)).all(axis=1)
        labels = self.id_to_label
        return np.array([labels.get(int(u)) in self.embedding and labels.get(int(v)) in self.embedding
                         for u, v in pairs], dtype=bool)

    def transform(self, X):
        pairs = np.sort(np.asarray(X, dtype=np.int64).reshape(-1, 2), axis=1)
        V = self.embedding.vectors
        return np.hstack([V[self._rows(pairs[:, 0])], V[self._rows(pairs[:, 1])]])


def build_pair_features(pairs, embedding: EmbeddingSet, labels=None,
                        id_to_label: Mapping[int, str] | None = None) -> PairSet:
    """Concatenate the two drugs' vectors in ascending-id order.

    Pairs with a drug lacking a vector are dropped and counted in
    ``n_filtered``.
    """
    pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), axis=1)
    y = np.zeros(len(pairs), dtype=np.int64) if labels is None else np.asarray(labels, dtype=np.int64)
    feat = PairFeaturizer(embedding, id_to_label).fit()
    keep = feat.available(pairs)
    if not keep.any():
        raise KGDDIError("no pair has vectors for both drugs")
    n_filtered = int((~keep).sum())
    if n_filtered:
        logger.info("dropped %d pairs lacking an embedding", n_filtered)
    pairs, y = pairs[keep], y[keep]
    return PairSet(pairs, feat.transform(pairs), y, n_filtered)


@dataclass
class FoldPlan:
    """Outer holdout split plus ``k`` folds over the training portion.

    ``fold[i]`` is the fold of example ``i``, or ``-1`` when it is held out.
    Iterating with :meth:`split` follows scikit-learn's CV splitter contract.
    """

    k: int
    fold: np.ndarray

    @property
    def holdout_mask(self) -> np.ndarray:
        return self.fold < 0

    @property
    def train_index(self) -> np.ndarray:
        return np.flatnonzero(self.fold >= 0)

    @property
    def test_index(self) -> np.ndarray:
        return np.flatnonzero(self.fold < 0)

    def split(self, X=None, y=None, groups=None):
        for f in range(self.k):
            yield np.flatnonzero((self.fold >= 0) & (self.fold != f)), np.flatnonzero(self.fold == f)

    def get_n_splits(self, X=None, y=None, groups=None):
        return self.k

    def restrict(self, index) -> "FoldPlan":
        """Plan over the examples in ``index`` only (e.g. the training portion)."""
        return FoldPlan(self.k, self.fold[np.asarray(index)])


def _largest_remainder(counts, total):
    """Integer allocation of ``total`` proportional to ``counts``."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.sum() == 0:
        return np.zeros(len(counts), dtype=np.int64)
    quota = counts * total / counts.sum()
    base = np.floor(quota).astype(np.int64)
    rest = total - base.sum()
    order = np.argsort(-(quota - base), kind="stable")
    base[order[:rest]] += 1
    return base


def make_folds(y, k: int = 5, holdout: float = 0.2, stratified: bool = True,
               seed: int = 0) -> FoldPlan:
    """Holdout split first, then ``k`` (optionally stratified) folds on the rest.

    Stratification deals each class round-robin over the folds after a
    shuffle, so every fold's class counts differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if not 0 <= holdout < 1:
        raise ValueError("holdout must lie in [0, 1)")
    y = np.asarray(y)
    n = len(y)
    rng = rng_stream(seed, 0)
    fold = np.empty(n, dtype=np.int64)
    n_test = int(round(holdout * n))
    if stratified:
        classes = np.unique(y)
        members = [rng.permutation(np.flatnonzero(y == c)) for c in classes]
        test_alloc = _largest_remainder([len(m) for m in members], n_test)
        # round-robin per class, continuing where the previous class stopped
        # so fold totals also differ by at most one
        offset = 0
        for c, m, nt in zip(classes, members, test_alloc):
            fold[m[:nt]] = -1
            rest = m[nt:]
            if len(rest) < k:
                raise StratificationError(f"class {c!r} has {len(rest)} training examples, fewer than k={k}")
            fold[rest] = (np.arange(len(rest)) + offset) % k
            offset = (offset + len(rest)) % k
    else:
        perm = rng.permutation(n)
        fold[perm[:n_test]] = -1
        rest = perm[n_test:]
        if len(rest) < k:
            raise StratificationError(f"{len(rest)} training examples, fewer than k={k}")
        fold[rest] = np.arange(len(rest)) % k
    return FoldPlan(k, fold)


def write_pairs_tsv(path, pairs, labels, fold=None, id_to_label=None) -> None:
    pairs = np.asarray(pairs)
    fold = np.full(len(pairs), -1) if fold is None else np.asarray(fold)
    with open(path, "w", encoding="utf-8") as fh:
        for (u, v), lab, f in zip(pairs.tolist(), np.asarray(labels).tolist(), fold.tolist()):
            if id_to_label is not None:
                u, v = id_to_label[u], id_to_label[v]
            fh.write(f"{u}\t{v}\t{lab}\t{f}\n")
