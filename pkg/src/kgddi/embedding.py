"""Dense per-entity vectors and the word2vec-style text format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import ParseError


@dataclass
class EmbeddingSet:
    """Entity vectors produced by one embedding method.

    ``vectors[i]`` belongs to ``labels[i]``.  Complex-valued methods export
    real and imaginary parts side by side, so ``dim`` is the width of the
    stored real rows.
    """

    labels: tuple[str, ...]
    vectors: np.ndarray
    method: str = "unknown"
    relation_labels: tuple[str, ...] = ()
    relation_vectors: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.labels):
            raise ValueError(
                f"vectors of shape {self.vectors.shape} do not match {len(self.labels)} labels"
            )
        self._index = {l: i for i, l in enumerate(self.labels)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return label in self._index

    def index(self, label: str) -> int:
        return self._index[label]

    def vector(self, label: str) -> np.ndarray:
        return self.vectors[self._index[label]]

    def lookup(self, labels: Sequence[str]) -> np.ndarray:
        return self.vectors[[self._index[l] for l in labels]]

    def subset(self, labels: Sequence[str]) -> "EmbeddingSet":
        keep = [l for l in labels if l in self._index]
        return EmbeddingSet(keep, self.lookup(keep), self.method, meta=dict(self.meta))

    def save(self, path, manifest: dict | None = None) -> None:
        """Write the text format and, when ``manifest`` is given, a sidecar JSON."""
        save_embeddings(self, path)
        if manifest is not None:
            meta = {"method": self.method, "dim": self.dim, **manifest}
            Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path, method: str | None = None) -> "EmbeddingSet":
        return load_embeddings(path, method=method)


def save_embeddings(emb: EmbeddingSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(emb)} {emb.dim}\n")
        for label, row in zip(emb.labels, emb.vectors):
            fh.write(label + " " + " ".join(f"{x:.9g}" for x in row) + "\n")


def load_embeddings(path, method: str | None = None) -> EmbeddingSet:
    sidecar = Path(str(path) + ".json")
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError("header must be '<entity_count> <dim>'", 1)
        n, dim = int(header[0]), int(header[1])
        labels, rows = [], []
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ParseError(f"expected label and {dim} values", lineno)
            labels.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    if len(labels) != n:
        raise ParseError(f"header announces {n} entities, found {len(labels)}")
    vectors = np.array(rows, dtype=np.float64).reshape(n, dim)
    return EmbeddingSet(labels, vectors, method or meta.get("method", "unknown"), meta=meta)
