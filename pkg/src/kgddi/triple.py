"""TransE, ComplEx and SimplE scoring and training with corrupted negatives."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .embedding import EmbeddingSet
from .exceptions import SamplingError, TrainingError
from .graph import KnowledgeGraph
from .optim import Optimizer, rng_stream

logger = logging.getLogger(__name__)

METHODS = ("transe", "complex", "simple")

_TABLES = {
    "transe": (("entity", "E"), ("relation", "R")),
    "complex": (("entity_re", "E"), ("entity_im", "E"), ("relation_re", "R"), ("relation_im", "R")),
    "simple": (("entity_head", "E"), ("entity_tail", "E"), ("relation", "R"), ("relation_inv", "R")),
}


@dataclass
class TripleEmbedding:
    """Parameter tables of one triple-scoring model, keyed as in ``_TABLES``."""

    method: str
    params: dict[str, np.ndarray]
    norm: str = "L2"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        missing = {name for name, _ in _TABLES[self.method]} - set(self.params)
        if missing:
            raise ValueError(f"{self.method} embedding lacks tables {sorted(missing)}")
        if self.norm not in ("L1", "L2"):
            raise ValueError("norm must be 'L1' or 'L2'")

    @property
    def dim(self) -> int:
        return next(iter(self.params.values())).shape[1]

    def score(self, h, r, t):
        return score_batch(self, h, r, t)

    def entity_features(self) -> np.ndarray:
        """Per-entity rows exported for pair features."""
        p = self.params
        if self.method == "transe":
            return p["entity"].copy()
        if self.method == "complex":
            return np.hstack([p["entity_re"], p["entity_im"]])
        return np.hstack([p["entity_head"], p["entity_tail"]])

    def relation_features(self) -> np.ndarray:
        p = self.params
        if self.method == "transe":
            return p["relation"].copy()
        if self.method == "complex":
            return np.hstack([p["relation_re"], p["relation_im"]])
        return np.hstack([p["relation"], p["relation_inv"]])


def init_embedding(method, n_entities, n_relations, dim, rng, norm="L2") -> TripleEmbedding:
    sizes = {"E": n_entities, "R": n_relations}
    params = {}
    for name, kind in _TABLES[method]:
        if method == "transe":
            bound = 6.0 / np.sqrt(dim)
            params[name] = rng.uniform(-bound, bound, size=(sizes[kind], dim))
        else:
            params[name] = rng.normal(0.0, 0.1, size=(sizes[kind], dim))
    model = TripleEmbedding(method, params, norm)
    if method == "transe":
        _normalize_rows(params["entity"])
    return model


def _normalize_rows(a):
    norms = np.linalg.norm(a, axis=1, keepdims=True)
    a /= np.where(norms > 0, norms, 1.0)


def _check(model, method):
    if model.method != method:
        raise ValueError(f"expected a {method} embedding, got {model.method}")


def score_transe(h, r, t, model: TripleEmbedding) -> float:
    """Negative translation distance ``-||h + r - t||``."""
    _check(model, "transe")
    return float(score_batch(model, [h], [r], [t])[0])


def score_complex(h, r, t, model: TripleEmbedding) -> float:
    """Real part of the Hermitian triple product ``sum h * r * conj(t)``."""
    _check(model, "complex")
    return float(score_batch(model, [h], [r], [t])[0])


def score_simple(h, r, t, model: TripleEmbedding) -> float:
    """Average of the forward and inverse-relation CP terms."""
    _check(model, "simple")
    return float(score_batch(model, [h], [r], [t])[0])


def score_batch(model: TripleEmbedding, h, r, t) -> np.ndarray:
    h, r, t = (np.asarray(x, dtype=np.int64) for x in (h, r, t))
    p = model.params
    if model.method == "transe":
        x = p["entity"][h] + p["relation"][r] - p["entity"][t]
        if model.norm == "L1":
            return -np.abs(x).sum(axis=1)
        return -np.sqrt((x * x).sum(axis=1))
    if model.method == "complex":
        hr, hi = p["entity_re"][h], p["entity_im"][h]
        rr, ri = p["relation_re"][r], p["relation_im"][r]
        tr, ti = p["entity_re"][t], p["entity_im"][t]
        return (hr * rr * tr + hi * rr * ti + hr * ri * ti - hi * ri * tr).sum(axis=1)
    H, T = p["entity_head"], p["entity_tail"]
    fwd = (H[h] * p["relation"][r] * T[t]).sum(axis=1)
    inv = (H[t] * p["relation_inv"][r] * T[h]).sum(axis=1)
    return 0.5 * (fwd + inv)


def score_gradients(model: TripleEmbedding, h, r, t, dscore) -> dict[str, np.ndarray]:
    """Back-propagate ``dscore`` (one value per triple) into dense table gradients."""
    p = model.params
    g = {k: np.zeros_like(v) for k, v in p.items()}
    ds = np.asarray(dscore, dtype=np.float64)[:, None]
    if model.method == "transe":
        x = p["entity"][h] + p["relation"][r] - p["entity"][t]
        if model.norm == "L1":
            dx = -np.sign(x)
        else:
            n = np.sqrt((x * x).sum(axis=1, keepdims=True))
            dx = -x / np.where(n > 0, n, 1.0)
        dx = dx * ds
        np.add.at(g["entity"], h, dx)
        np.add.at(g["relation"], r, dx)
        np.add.at(g["entity"], t, -dx)
    elif model.method == "complex":
        hr, hi = p["entity_re"][h], p["entity_im"][h]
        rr, ri = p["relation_re"][r], p["relation_im"][r]
        tr, ti = p["entity_re"][t], p["entity_im"][t]
        np.add.at(g["entity_re"], h, ds * (rr * tr + ri * ti))
        np.add.at(g["entity_im"], h, ds * (rr * ti - ri * tr))
        np.add.at(g["relation_re"], r, ds * (hr * tr + hi * ti))
        np.add.at(g["relation_im"], r, ds * (hr * ti - hi * tr))
        np.add.at(g["entity_re"], t, ds * (hr * rr - hi * ri))
        np.add.at(g["entity_im"], t, ds * (hi * rr + hr * ri))
    else:
        H, T = p["entity_head"], p["entity_tail"]
        R, Ri = p["relation"][r], p["relation_inv"][r]
        half = 0.5 * ds
        np.add.at(g["entity_head"], h, half * R * T[t])
        np.add.at(g["entity_tail"], t, half * H[h] * R)
        np.add.at(g["relation"], r, half * H[h] * T[t])
        np.add.at(g["entity_head"], t, half * Ri * T[h])
        np.add.at(g["entity_tail"], h, half * H[t] * Ri)
        np.add.at(g["relation_inv"], r, half * H[t] * T[h])
    return g


def margin_loss(model: TripleEmbedding, pos, neg, margin=1.0):
    """Mean ``max(0, margin - s(pos) + s(neg))`` over aligned positive/negative rows."""
    pos, neg = np.asarray(pos), np.asarray(neg)
    s_pos = score_batch(model, *pos.T)
    s_neg = score_batch(model, *neg.T)
    viol = margin - s_pos + s_neg
    active = (viol > 0).astype(np.float64)
    n = len(pos)
    loss = float(np.maximum(viol, 0.0).sum() / n)
    g_pos = score_gradients(model, *pos.T, -active / n)
    g_neg = score_gradients(model, *neg.T, active / n)
    return loss, {k: g_pos[k] + g_neg[k] for k in g_pos}


def logistic_loss(model: TripleEmbedding, triples, labels, reg=1e-3):
    """Mean ``softplus(-y s) + reg * ||rows||^2`` over labelled (+1/-1) triples."""
    triples = np.asarray(triples)
    y = np.asarray(labels, dtype=np.float64)
    h, r, t = triples.T
    s = score_batch(model, h, r, t)
    n = len(y)
    loss = -log_expit(y * s).sum()
    grads = score_gradients(model, h, r, t, -y * expit(-y * s) / n)
    if reg:
        for name, kind in _TABLES[model.method]:
            idx_sets = (h, t) if kind == "E" else (r,)
            for idx in idx_sets:
                rows = model.params[name][idx]
                loss += reg * (rows * rows).sum()
                np.add.at(grads[name], idx, 2.0 * reg * rows / n)
    return float(loss / n), grads


@dataclass(frozen=True)
class NegativeSamplingConfig:
    ratio: int = 15
    filtered: bool = True
    seed: int = 0

    def __post_init__(self):
        if int(self.ratio) < 1:
            raise ValueError("ratio must be >= 1")


def corrupt_triple(triple, kg: KnowledgeGraph, config: NegativeSamplingConfig,
                   draw_index: int) -> tuple[int, int, int]:
    """Replace the head or the tail (fair coin) of ``triple`` by a uniform entity.

    The draw is a pure function of ``(config.seed, draw_index)``.  In filtered
    mode the result is never a triple of ``kg``; after ``100 * n_entities``
    unsuccessful draws a :class:`SamplingError` is raised.
    """
    if kg.n_entities == 0:
        raise SamplingError("cannot corrupt triples of an empty graph")
    rng = rng_stream(config.seed, draw_index)
    h, r, t = (int(x) for x in triple)
    for _ in range(100 * kg.n_entities):
        e = int(rng.integers(kg.n_entities))
        cand = (e, r, t) if rng.random() < 0.5 else (h, r, e)
        if not config.filtered or not kg.contains(*cand):
            return cand
    raise SamplingError(f"no negative found for triple {(h, r, t)}")


def corrupt_batch(triples, kg: KnowledgeGraph, ratio: int, rng: np.random.Generator,
                  filtered: bool = True) -> np.ndarray:
    """``ratio`` corruptions per row of ``triples`` as an ``(n, ratio, 3)`` array."""
    triples = np.asarray(triples, dtype=np.int64)
    E = kg.n_entities
    out = np.repeat(triples[:, None, :], ratio, axis=1).reshape(-1, 3)
    todo = np.arange(len(out))
    for _ in range(100 * E):
        n = len(todo)
        heads = rng.random(n) < 0.5
        ents = rng.integers(E, size=n)
        base = np.repeat(triples, ratio, axis=0)[todo]
        out[todo] = base
        out[todo[heads], 0] = ents[heads]
        out[todo[~heads], 2] = ents[~heads]
        if not filtered:
            break
        bad = kg.contains(out[todo, 0], out[todo, 1], out[todo, 2])
        todo = todo[bad]
        if len(todo) == 0:
            break
    else:
        raise SamplingError(f"{len(todo)} triples admit no filtered negative")
    return out.reshape(len(triples), ratio, 3)


class TripleEmbedder(BaseEstimator, TransformerMixin):
    """Train a TransE, ComplEx or SimplE model on a :class:`KnowledgeGraph`.

    TransE minimises the margin ranking loss and renormalises entity rows to
    unit length after every epoch.  ComplEx and SimplE minimise the logistic
    loss with L2 regularisation.  Each positive gets ``sigma`` corrupted
    negatives.
    """

    def __init__(self, method="complex", dim=100, sigma=15, filtered=True, epochs=100,
                 optimizer="adam", learning_rate=0.01, batch_size=128, margin=1.0,
                 norm="L2", regularization=1e-3, seed=0):
        self.method = method
        self.dim = dim
        self.sigma = sigma
        self.filtered = filtered
        self.epochs = epochs
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.margin = margin
        self.norm = norm
        self.regularization = regularization
        self.seed = seed

    def fit(self, X: KnowledgeGraph, y=None):
        kg = X
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if kg.n_triples == 0:
            raise TrainingError("graph has no triples")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        cfg = NegativeSamplingConfig(self.sigma, self.filtered, self.seed)
        rng = rng_stream(self.seed, 0)
        model = init_embedding(self.method, kg.n_entities, kg.n_relations, self.dim, rng, self.norm)
        opt = Optimizer(self.optimizer, lr=self.learning_rate)
        triples = kg.triples
        self.loss_curve_ = []
        for epoch in range(self.epochs):
            order = rng.permutation(len(triples))
            total, count = 0.0, 0
            for b in range(0, len(order), self.batch_size):
                pos = triples[order[b:b + self.batch_size]]
                neg = corrupt_batch(pos, kg, cfg.ratio, rng, cfg.filtered)
                if self.method == "transe":
                    loss, grads = margin_loss(model, np.repeat(pos, cfg.ratio, axis=0),
                                              neg.reshape(-1, 3), self.margin)
                else:
                    batch = np.concatenate([pos, neg.reshape(-1, 3)])
                    labels = np.concatenate([np.ones(len(pos)), -np.ones(neg.shape[0] * cfg.ratio)])
                    loss, grads = logistic_loss(model, batch, labels, self.regularization)
                if not np.isfinite(loss):
                    raise TrainingError("non-finite loss", epoch)
                opt.step(model.params, grads)
                total += loss * len(pos)
                count += len(pos)
            if self.method == "transe":
                _normalize_rows(model.params["entity"])
            self.loss_curve_.append(total / count)
            logger.debug("%s epoch %d: loss %.6f", self.method, epoch, self.loss_curve_[-1])
        self.model_ = model
        self.embedding_ = EmbeddingSet(kg.entity_labels, model.entity_features(), self.method,
                                       relation_labels=kg.relation_labels,
                                       relation_vectors=model.relation_features())
        return self

    def score_triples(self, h, r, t):
        check_is_fitted(self, "model_")
        return score_batch(self.model_, h, r, t)

    def transform(self, X):
        check_is_fitted(self, "embedding_")
        X = list(X)
        if X and isinstance(X[0], str):
            return self.embedding_.lookup(X)
        return self.embedding_.vectors[np.asarray(X, dtype=np.int64)]


def train_triple_embeddings(kg, method="complex", dim=100, config: NegativeSamplingConfig | None = None,
                            epochs=100, optimizer="adam", learning_rate=0.01, seed=0, **kwargs):
    config = config or NegativeSamplingConfig(seed=seed)
    return TripleEmbedder(method=method, dim=dim, sigma=config.ratio, filtered=config.filtered,
                          epochs=epochs, optimizer=optimizer, learning_rate=learning_rate,
                          seed=seed, **kwargs).fit(kg)
