"""Edge-labelled random walks and personalised-PageRank co-occurrence counts."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import KnowledgeGraph
from .optim import rng_stream


@dataclass(frozen=True)
class WalkCorpus:
    """Random walks over a shared entity/relation token space.

    Token ids ``0..n_entities-1`` are entities and ``n_entities..`` are
    relations.  ``tokens`` is a ``(n_walks, 2*depth+1)`` array padded with
    ``-1`` after a walk stops at a sink.
    """

    tokens: np.ndarray
    token_labels: tuple[str, ...]
    n_entities: int

    @property
    def n_walks(self) -> int:
        return self.tokens.shape[0]

    @property
    def lengths(self) -> np.ndarray:
        return (self.tokens >= 0).sum(axis=1)

    @property
    def walks(self) -> list[np.ndarray]:
        return [row[row >= 0] for row in self.tokens]

    def __len__(self):
        return self.n_walks

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for walk in self.walks:
                fh.write(" ".join(self.token_labels[t] for t in walk.tolist()) + "\n")


def generate_walks(kg: KnowledgeGraph, walks_per_entity: int = 500, depth: int = 5,
                   seed: int = 0) -> WalkCorpus:
    """Uniform edge-labelled random walks starting from every entity.

    Each step follows one outgoing ``(relation, tail)`` edge chosen uniformly;
    a walk ends early at a node without outgoing edges.  Walks from entity
    ``e`` draw from ``rng_stream(seed, e)`` only, so results do not depend on
    the order entities are processed in.
    """
    if depth < 1 or walks_per_entity < 1:
        raise ValueError("depth and walks_per_entity must be >= 1")
    E = kg.n_entities
    indptr, rel, tail = kg.out_adjacency
    W = walks_per_entity
    out = np.full((E * W, 2 * depth + 1), -1, dtype=np.int64)
    for e in range(E):
        rng = rng_stream(seed, e)
        block = out[e * W:(e + 1) * W]
        block[:, 0] = e
        cur = np.full(W, e, dtype=np.int64)
        alive = np.ones(W, dtype=bool)
        for step in range(depth):
            deg = indptr[cur + 1] - indptr[cur]
            alive &= deg > 0
            u = rng.random(W)
            if not alive.any():
                break
            k = indptr[cur[alive]] + (u[alive] * deg[alive]).astype(np.int64)
            block[alive, 2 * step + 1] = E + rel[k]
            block[alive, 2 * step + 2] = tail[k]
            cur[alive] = tail[k]
    labels = kg.entity_labels + kg.relation_labels
    return WalkCorpus(out, labels, E)


def _push(indptr: list, nbr: list, source: int, damping: float, tol: float) -> dict:
    p: dict[int, float] = {}
    r: dict[int, float] = {source: 1.0}
    queue = deque([source])
    queued = {source}
    while queue:
        u = queue.popleft()
        queued.discard(u)
        ru = r[u]
        lo, hi = indptr[u], indptr[u + 1]
        deg = hi - lo
        r[u] = 0.0
        p[u] = p.get(u, 0.0) + (1.0 - damping) * ru
        if deg == 0:
            continue  # dangling node: the walk mass leaks out
        share = damping * ru / deg
        for v in nbr[lo:hi]:
            rv = r.get(v, 0.0) + share
            r[v] = rv
            if v not in queued and rv > tol * max(indptr[v + 1] - indptr[v], 1):
                queue.append(v)
                queued.add(v)
    return p


def ppr_scores(kg: KnowledgeGraph, source: int, damping: float = 0.85,
               tolerance: float = 1e-6, reverse: bool = False) -> dict[int, float]:
    """Approximate personalised PageRank from ``source`` by residual pushing.

    ``damping`` is the probability of following an edge; with probability
    ``1 - damping`` the walk restarts at ``source``.  Mass reaching a node
    without outgoing edges is dropped, so scores sum to at most one.  Every
    returned score under-estimates the exact value by at most ``tolerance``
    times the node's out-degree.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    indptr, _, nbr = kg.in_adjacency if reverse else kg.out_adjacency
    return _push(indptr.tolist(), nbr.tolist(), int(source), damping, tolerance)


@dataclass(frozen=True)
class CooccurrenceMatrix:
    """Row-normalised non-negative focus/context weights over entities."""

    matrix: sp.csr_matrix

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def entries(self):
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data

    def save(self, path, labels=None) -> None:
        rows, cols, vals = self.entries()
        with open(path, "w", encoding="utf-8") as fh:
            for f, c, w in zip(rows.tolist(), cols.tolist(), vals.tolist()):
                fl = labels[f] if labels is not None else f
                cl = labels[c] if labels is not None else c
                fh.write(f"{fl}\t{cl}\t{w:.9g}\n")


def build_cooccurrence(kg: KnowledgeGraph, damping: float = 0.85,
                       tolerance: float = 1e-4) -> CooccurrenceMatrix:
    """Sum forward and reversed-graph PPR vectors per entity, then row-normalise."""
    E = kg.n_entities
    rows, cols, vals = [], [], []
    for indptr, _, nbr in (kg.out_adjacency, kg.in_adjacency):
        ip, nb = indptr.tolist(), nbr.tolist()
        for f in range(E):
            scores = _push(ip, nb, f, damping, tolerance)
            rows.extend([f] * len(scores))
            cols.extend(scores.keys())
            vals.extend(scores.values())
    m = sp.csr_matrix((np.array(vals, dtype=np.float64), (rows, cols)), shape=(E, E))
    m.sum_duplicates()
    sums = np.asarray(m.sum(axis=1)).ravel()
    inv = np.zeros_like(sums)
    nz = sums > 0
    inv[nz] = 1.0 / sums[nz]
    m = sp.diags(inv) @ m
    m.eliminate_zeros()
    return CooccurrenceMatrix(sp.csr_matrix(m))
