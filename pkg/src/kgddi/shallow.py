"""Skip-gram with negative sampling (RDF2Vec) and GloVe (KGloVe)."""

from __future__ import annotations

import logging

import numpy as np
from scipy.special import expit, log_expit
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .embedding import EmbeddingSet
from .exceptions import TrainingError
from .graph import KnowledgeGraph
from .optim import Optimizer, rng_stream
from .walks import CooccurrenceMatrix, WalkCorpus, build_cooccurrence, generate_walks

logger = logging.getLogger(__name__)


def noise_distribution(counts, power=0.75) -> np.ndarray:
    """Unigram counts raised to ``power`` and normalised."""
    w = np.asarray(counts, dtype=np.float64) ** power
    total = w.sum()
    if total <= 0:
        raise TrainingError("noise distribution has no mass")
    return w / total


def draw_negatives(noise: np.ndarray, rng: np.random.Generator, size) -> np.ndarray:
    """Token ids drawn i.i.d. from the noise distribution ``noise``."""
    cdf = np.cumsum(noise)
    return np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), len(noise) - 1)


def sgns_loss(v_in, v_pos, v_neg, neg_mask=None):
    """Negated negative-sampling objective summed over a batch, with gradients.

    Parameters
    ----------
    v_in : (B, d) input vectors of the centre tokens
    v_pos : (B, d) output vectors of the observed context tokens
    v_neg : (B, k, d) output vectors of the noise tokens
    neg_mask : (B, k) bool, optional
        ``False`` entries (noise draws equal to the context token) are ignored.

    Returns
    -------
    loss, (d_in, d_pos, d_neg)
    """
    s_pos = np.einsum("bd,bd->b", v_pos, v_in)
    s_neg = np.einsum("bkd,bd->bk", v_neg, v_in)
    mask = np.ones(s_neg.shape) if neg_mask is None else neg_mask.astype(np.float64)
    loss = -log_expit(s_pos).sum() - (mask * log_expit(-s_neg)).sum()
    g_pos = expit(s_pos) - 1.0
    g_neg = expit(s_neg) * mask
    d_in = g_pos[:, None] * v_pos + np.einsum("bk,bkd->bd", g_neg, v_neg)
    d_pos = g_pos[:, None] * v_in
    d_neg = g_neg[:, :, None] * v_in[:, None, :]
    return float(loss), (d_in, d_pos, d_neg)


def _context_pairs(tokens: np.ndarray, window: int) -> np.ndarray:
    L = tokens.shape[1]
    chunks = []
    for j in range(-window, window + 1):
        if j == 0 or abs(j) >= L:
            continue
        if j > 0:
            c, o = tokens[:, : L - j], tokens[:, j:]
        else:
            c, o = tokens[:, -j:], tokens[:, : L + j]
        ok = (c >= 0) & (o >= 0)
        chunks.append(np.stack([c[ok], o[ok]], axis=1))
    if not chunks:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(chunks)


class SkipGram(BaseEstimator, TransformerMixin):
    """Skip-gram word2vec with negative sampling over a :class:`WalkCorpus`.

    After ``fit``, ``embedding_`` holds the input vectors of entity tokens and
    ``loss_curve_`` the mean per-pair objective of each epoch.
    """

    def __init__(self, dim=300, window=5, negatives=5, epochs=5, learning_rate=0.025,
                 min_learning_rate=1e-4, batch_size=256, walk_chunk=512,
                 optimizer="sgd", seed=0):
        self.dim = dim
        self.window = window
        self.negatives = negatives
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.min_learning_rate = min_learning_rate
        self.batch_size = batch_size
        self.walk_chunk = walk_chunk
        self.optimizer = optimizer
        self.seed = seed

    def fit(self, X: WalkCorpus, y=None):
        corpus = X
        if corpus.n_walks == 0 or not (corpus.tokens >= 0).any():
            raise TrainingError("empty walk corpus")
        if self.window < 1 or self.dim < 1 or self.negatives < 1:
            raise ValueError("window, dim and negatives must be >= 1")
        V = len(corpus.token_labels)
        d = self.dim
        rng = rng_stream(self.seed, 0)
        counts = np.bincount(corpus.tokens[corpus.tokens >= 0], minlength=V)
        self.noise_distribution_ = noise_distribution(counts)
        params = {
            "input": rng.uniform(-0.5 / d, 0.5 / d, size=(V, d)),
            "output": np.zeros((V, d)),
        }
        opt = None if self.optimizer == "sgd" else Optimizer(self.optimizer, lr=self.learning_rate)

        lengths = corpus.lengths
        per_epoch = sum(2 * np.maximum(lengths - j, 0).sum() for j in range(1, self.window + 1))
        total_pairs = int(per_epoch) * self.epochs
        done = 0
        self.loss_curve_ = []
        for epoch in range(self.epochs):
            order = rng.permutation(corpus.n_walks)
            epoch_loss, epoch_pairs = 0.0, 0
            for start in range(0, corpus.n_walks, self.walk_chunk):
                pairs = _context_pairs(corpus.tokens[order[start:start + self.walk_chunk]], self.window)
                pairs = pairs[rng.permutation(len(pairs))]
                for b in range(0, len(pairs), self.batch_size):
                    batch = pairs[b:b + self.batch_size]
                    centre, ctx = batch[:, 0], batch[:, 1]
                    neg = draw_negatives(self.noise_distribution_, rng, (len(batch), self.negatives))
                    mask = neg != ctx[:, None]
                    v_in = params["input"][centre]
                    loss, (d_in, d_pos, d_neg) = sgns_loss(
                        v_in, params["output"][ctx], params["output"][neg], mask)
                    if not np.isfinite(loss):
                        raise TrainingError("non-finite skip-gram loss", epoch)
                    epoch_loss += loss
                    epoch_pairs += len(batch)
                    if opt is None:
                        frac = done / max(total_pairs, 1)
                        lr = max(self.learning_rate * (1.0 - frac), self.min_learning_rate)
                        np.add.at(params["input"], centre, -lr * d_in)
                        np.add.at(params["output"], ctx, -lr * d_pos)
                        np.add.at(params["output"], neg.ravel(), -lr * d_neg.reshape(-1, d))
                    else:
                        g_in = np.zeros_like(params["input"])
                        g_out = np.zeros_like(params["output"])
                        np.add.at(g_in, centre, d_in)
                        np.add.at(g_out, ctx, d_pos)
                        np.add.at(g_out, neg.ravel(), d_neg.reshape(-1, d))
                        opt.step(params, {"input": g_in, "output": g_out})
                    done += len(batch)
            self.loss_curve_.append(epoch_loss / max(epoch_pairs, 1))
            logger.debug("skip-gram epoch %d: mean loss %.6f", epoch, self.loss_curve_[-1])

        self.input_vectors_ = params["input"]
        self.output_vectors_ = params["output"]
        E = corpus.n_entities
        self.embedding_ = EmbeddingSet(corpus.token_labels[:E], self.input_vectors_[:E].copy(),
                                       "rdf2vec")
        return self

    def transform(self, X):
        check_is_fitted(self, "embedding_")
        return _lookup(self.embedding_, X)


class RDF2Vec(BaseEstimator, TransformerMixin):
    """Random walks followed by :class:`SkipGram`, fitted on a :class:`KnowledgeGraph`."""

    def __init__(self, walks_per_entity=500, depth=5, dim=300, window=5, negatives=5,
                 epochs=5, learning_rate=0.025, batch_size=256, seed=0):
        self.walks_per_entity = walks_per_entity
        self.depth = depth
        self.dim = dim
        self.window = window
        self.negatives = negatives
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.seed = seed

    def fit(self, X: KnowledgeGraph, y=None):
        corpus = generate_walks(X, self.walks_per_entity, self.depth, seed=self.seed)
        sg = SkipGram(dim=self.dim, window=self.window, negatives=self.negatives,
                      epochs=self.epochs, learning_rate=self.learning_rate,
                      batch_size=self.batch_size, seed=self.seed + 1)
        sg.fit(corpus)
        self.skipgram_ = sg
        self.embedding_ = sg.embedding_
        self.loss_curve_ = sg.loss_curve_
        return self

    def transform(self, X):
        check_is_fitted(self, "embedding_")
        return _lookup(self.embedding_, X)


def glove_weight(x, x_max=100.0, alpha=0.75):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x < x_max, (x / x_max) ** alpha, 1.0)


def glove_loss(w, w_ctx, b, b_ctx, log_x, weight):
    """Weighted least squares ``sum f(x) (w.w~ + b + b~ - log x)^2`` with gradients."""
    diff = np.einsum("bd,bd->b", w, w_ctx) + b + b_ctx - log_x
    fd = weight * diff
    loss = float((fd * diff).sum())
    return loss, (2 * fd[:, None] * w_ctx, 2 * fd[:, None] * w, 2 * fd, 2 * fd)


class GloVe(BaseEstimator, TransformerMixin):
    """GloVe over a :class:`CooccurrenceMatrix`; node vector = main + context."""

    def __init__(self, dim=300, x_max=100.0, alpha=0.75, epochs=100, learning_rate=0.05,
                 batch_size=1024, seed=0):
        self.dim = dim
        self.x_max = x_max
        self.alpha = alpha
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.seed = seed

    def objective(self, cooc: CooccurrenceMatrix) -> float:
        check_is_fitted(self, "params_")
        rows, cols, vals = cooc.entries()
        p = self.params_
        loss, _ = glove_loss(p["main"][rows], p["context"][cols], p["bias"][rows],
                             p["context_bias"][cols], np.log(vals),
                             glove_weight(vals, self.x_max, self.alpha))
        return loss

    def fit(self, X: CooccurrenceMatrix, y=None, labels=None):
        if self.x_max <= 0 or not 0 < self.alpha <= 1:
            raise ValueError("need x_max > 0 and 0 < alpha <= 1")
        rows, cols, vals = X.entries()
        keep = vals > 0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        if len(vals) == 0:
            raise TrainingError("co-occurrence matrix has no positive entry")
        n, d = X.n_nodes, self.dim
        rng = rng_stream(self.seed, 0)
        self.params_ = {
            "main": rng.uniform(-0.5 / d, 0.5 / d, size=(n, d)),
            "context": rng.uniform(-0.5 / d, 0.5 / d, size=(n, d)),
            "bias": np.zeros(n),
            "context_bias": np.zeros(n),
        }
        p = self.params_
        log_x = np.log(vals)
        weight = glove_weight(vals, self.x_max, self.alpha)
        opt = Optimizer("adagrad", lr=self.learning_rate)
        self.initial_objective_ = self.objective(X)
        self.loss_curve_ = []
        for epoch in range(self.epochs):
            order = rng.permutation(len(vals))
            for b in range(0, len(order), self.batch_size):
                idx = order[b:b + self.batch_size]
                r, c = rows[idx], cols[idx]
                _, (gw, gc, gb, gcb) = glove_loss(p["main"][r], p["context"][c], p["bias"][r],
                                                  p["context_bias"][c], log_x[idx], weight[idx])
                grads = {k: np.zeros_like(v) for k, v in p.items()}
                np.add.at(grads["main"], r, gw)
                np.add.at(grads["context"], c, gc)
                np.add.at(grads["bias"], r, gb)
                np.add.at(grads["context_bias"], c, gcb)
                opt.step(p, grads)
            self.loss_curve_.append(self.objective(X))
            if not np.isfinite(self.loss_curve_[-1]):
                raise TrainingError("non-finite GloVe objective", epoch)
        if labels is None:
            labels = [str(i) for i in range(n)]
        self.embedding_ = EmbeddingSet(labels, p["main"] + p["context"], "kglove")
        return self

    def transform(self, X):
        check_is_fitted(self, "embedding_")
        return _lookup(self.embedding_, X)


class KGloVe(BaseEstimator, TransformerMixin):
    """PPR co-occurrence (forward + reversed graph) followed by :class:`GloVe`."""

    def __init__(self, dim=300, damping=0.85, tolerance=1e-4, x_max=100.0, alpha=0.75,
                 epochs=100, learning_rate=0.05, seed=0):
        self.dim = dim
        self.damping = damping
        self.tolerance = tolerance
        self.x_max = x_max
        self.alpha = alpha
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, X: KnowledgeGraph, y=None):
        self.cooccurrence_ = build_cooccurrence(X, self.damping, self.tolerance)
        glove = GloVe(dim=self.dim, x_max=self.x_max, alpha=self.alpha, epochs=self.epochs,
                      learning_rate=self.learning_rate, seed=self.seed)
        glove.fit(self.cooccurrence_, labels=X.entity_labels)
        self.glove_ = glove
        self.embedding_ = glove.embedding_
        self.loss_curve_ = glove.loss_curve_
        return self

    def transform(self, X):
        check_is_fitted(self, "embedding_")
        return _lookup(self.embedding_, X)


def _lookup(emb: EmbeddingSet, X) -> np.ndarray:
    X = list(X)
    if X and isinstance(X[0], str):
        return emb.lookup(X)
    return emb.vectors[np.asarray(X, dtype=np.int64)]


def train_skipgram(corpus, dim=300, window=5, k=5, epochs=5, learning_rate=0.025, seed=0,
                   **kwargs) -> EmbeddingSet:
    return SkipGram(dim=dim, window=window, negatives=k, epochs=epochs,
                    learning_rate=learning_rate, seed=seed, **kwargs).fit(corpus).embedding_


def train_glove(cooc, dim=300, x_max=100.0, alpha=0.75, epochs=100, learning_rate=0.05,
                seed=0, labels=None) -> EmbeddingSet:
    return GloVe(dim=dim, x_max=x_max, alpha=alpha, epochs=epochs,
                 learning_rate=learning_rate, seed=seed).fit(cooc, labels=labels).embedding_
