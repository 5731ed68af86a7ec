"""Triple ingestion, named-graph integration and DDI pair extraction."""

from __future__ import annotations

import io
import logging
import os
import re
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .exceptions import IntegrationError, ParseError

logger = logging.getLogger(__name__)

#: Predicates that carry explicit drug-drug interaction facts.
DDI_PREDICATES = frozenset({
    "http://bio2rdf.org/drugbank_vocabulary:ddi-interactor-in",
    "http://bio2rdf.org/kegg_vocabulary:Interaction",
})

_IRI = r"<([^<>\"\s]*)>"
_BNODE = r"(_:[A-Za-z0-9_.\-]+)"
_LITERAL = r"(\"(?:[^\"\\]|\\.)*\"(?:@[A-Za-z]+(?:-[A-Za-z0-9]+)*|\^\^<[^<>\"\s]*>)?)"
_STATEMENT = re.compile(
    rf"^\s*(?:{_IRI}|{_BNODE})\s+{_IRI}\s+(?:{_IRI}|{_BNODE}|{_LITERAL})\s*\.\s*(?:#.*)?$"
)


@dataclass
class ParsedTriples:
    """Output of :func:`parse_ntriples`: IRI triples in file order."""

    triples: list[tuple[str, str, str]] = field(default_factory=list)
    dropped_literals: int = 0

    def __iter__(self):
        return iter(self.triples)

    def __len__(self):
        return len(self.triples)


def _open_lines(source) -> Iterator[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            yield from _decode_lines(fh)
    elif isinstance(source, (bytes, bytearray)):
        yield from _decode_lines(io.BytesIO(source))
    else:
        yield from _decode_lines(source)


def _decode_lines(stream) -> Iterator[str]:
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, (bytes, bytearray)):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ParseError(f"invalid UTF-8 ({exc.reason})", lineno) from None
        yield raw


def parse_ntriples(source) -> ParsedTriples:
    """Parse an N-Triples subset.

    ``source`` may be a path, a ``bytes`` buffer or an open (binary or text)
    stream.  Statements whose object is a literal are counted in
    ``dropped_literals`` and discarded.  Blank-node labels are kept verbatim.
    """
    out = ParsedTriples()
    lineno = 0
    for lineno, line in enumerate(_open_lines(source), start=1):
        terminated = line.endswith("\n")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _STATEMENT.match(stripped)
        if m is None:
            if not terminated and not stripped.rstrip().endswith("."):
                raise ParseError("truncated statement at end of input", lineno)
            raise ParseError(f"malformed statement: {stripped[:80]!r}", lineno)
        subj = m.group(1) or m.group(2)
        pred = m.group(3)
        if m.group(6) is not None:
            out.dropped_literals += 1
            continue
        obj = m.group(4) if m.group(4) is not None else m.group(5)
        out.triples.append((subj, pred, obj))
    logger.debug("parsed %d triples (%d literals dropped) from %d lines",
                 len(out.triples), out.dropped_literals, lineno)
    return out


def read_mapping(source) -> list[tuple[str, str]]:
    """Read a ``source_iri<TAB>canonical_iri`` table.  Angle brackets are optional."""
    pairs = []
    for lineno, line in enumerate(_open_lines(source), start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2 or not all(c.strip() for c in cols):
            raise ParseError("expected 2 tab-separated columns", lineno)
        pairs.append(tuple(_strip_brackets(c.strip()) for c in cols))
    return pairs


def _strip_brackets(label: str) -> str:
    if label.startswith("<") and label.endswith(">"):
        return label[1:-1]
    return label


def close_mapping(mapping) -> dict[str, str]:
    """Transitively close sameAs-style mappings.

    Every label in a connected component maps to the lexicographically
    smallest label of that component.  A directed cycle among the mapping
    edges (``a -> b -> a``) is rejected.
    """
    pairs = list(mapping.items()) if isinstance(mapping, Mapping) else list(mapping)
    succ: dict[str, list[str]] = {}
    indeg: dict[str, int] = {}
    parent: dict[str, str] = {}

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for src, dst in pairs:
        for node in (src, dst):
            parent.setdefault(node, node)
            indeg.setdefault(node, 0)
            succ.setdefault(node, [])
        if src == dst:
            continue
        succ[src].append(dst)
        indeg[dst] += 1
        ra, rb = find(src), find(dst)
        if ra != rb:
            lo, hi = (ra, rb) if ra < rb else (rb, ra)
            parent[hi] = lo

    # Kahn's algorithm: leftover nodes sit on a cycle
    queue = [n for n, d in indeg.items() if d == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for nxt in succ[node]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                queue.append(nxt)
    if seen != len(indeg):
        cyclic = sorted(n for n, d in indeg.items() if d > 0)
        raise IntegrationError(f"mapping cycle involving {cyclic[:5]}")
    return {node: find(node) for node in parent}


class KnowledgeGraph:
    """Immutable integer-indexed multigraph of ``(head, relation, tail)`` triples.

    Build instances with :func:`build_graph`; the constructor trusts its
    arguments.
    """

    def __init__(self, entity_labels, relation_labels, heads, relations, tails,
                 sources, source_counts=None, dropped_literals=0, duplicates_dropped=0):
        self.entity_labels = tuple(entity_labels)
        self.relation_labels = tuple(relation_labels)
        self.entity_index = MappingProxyType({l: i for i, l in enumerate(self.entity_labels)})
        self.relation_index = MappingProxyType({l: i for i, l in enumerate(self.relation_labels)})
        self.heads = _frozen(heads)
        self.relations = _frozen(relations)
        self.tails = _frozen(tails)
        self.sources = tuple(sources)
        self.source_counts = MappingProxyType(dict(source_counts or {}))
        self.dropped_literals = int(dropped_literals)
        self.duplicates_dropped = int(duplicates_dropped)

    @property
    def n_entities(self) -> int:
        return len(self.entity_labels)

    @property
    def n_relations(self) -> int:
        return len(self.relation_labels)

    @property
    def n_triples(self) -> int:
        return len(self.heads)

    def __len__(self):
        return self.n_triples

    def __repr__(self):
        return (f"KnowledgeGraph(triples={self.n_triples}, entities={self.n_entities}, "
                f"relations={self.n_relations})")

    @property
    def triples(self) -> np.ndarray:
        """``(n, 3)`` array of ``(head, relation, tail)`` ids."""
        return np.stack([self.heads, self.relations, self.tails], axis=1)

    def labelled_triples(self) -> Iterator[tuple[str, str, str]]:
        E, R = self.entity_labels, self.relation_labels
        for h, r, t in zip(self.heads.tolist(), self.relations.tolist(), self.tails.tolist()):
            yield E[h], R[r], E[t]

    def by_source(self) -> dict[str, list[tuple[str, str, str]]]:
        """Labelled triples grouped by provenance tag, in graph order."""
        out: dict[str, list] = {}
        for tag, triple in zip(self.sources, self.labelled_triples()):
            out.setdefault(tag, []).append(triple)
        return out

    @cached_property
    def out_adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR form ``(indptr, relation_ids, tail_ids)`` of outgoing edges."""
        return _csr(self.heads, self.relations, self.tails, self.n_entities)

    @cached_property
    def in_adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR form of the reversed graph: ``(indptr, relation_ids, head_ids)``."""
        return _csr(self.tails, self.relations, self.heads, self.n_entities)

    @cached_property
    def triple_keys(self) -> np.ndarray:
        """Sorted unique int64 encodings of all triples (see :meth:`encode`)."""
        return _frozen(np.unique(self.encode(self.heads, self.relations, self.tails)))

    def encode(self, h, r, t):
        E = max(self.n_entities, 1)
        R = max(self.n_relations, 1)
        return (np.asarray(h, dtype=np.int64) * R + np.asarray(r, dtype=np.int64)) * E \
            + np.asarray(t, dtype=np.int64)

    def contains(self, h, r, t):
        """Vectorised membership test against the graph's triple set."""
        keys = self.encode(h, r, t)
        known = self.triple_keys
        if known.size == 0:
            return np.zeros(np.shape(keys), dtype=bool)
        pos = np.clip(np.searchsorted(known, keys), 0, known.size - 1)
        return known[pos] == keys


def _frozen(a):
    a = np.array(a, dtype=np.int64)
    a.setflags(write=False)
    return a


def _csr(src, rel, dst, n):
    order = np.argsort(src, kind="stable")
    counts = np.bincount(src, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, np.asarray(rel)[order], np.asarray(dst)[order]


def build_graph(sources, mapping=None) -> KnowledgeGraph:
    """Merge labelled triples from named sources into one :class:`KnowledgeGraph`.

    Parameters
    ----------
    sources : mapping of str -> iterable of (s, p, o), or a bare iterable
        Triples per provenance tag.  :class:`ParsedTriples` values are
        accepted and their literal counts carried over.  A bare iterable is
        tagged ``"default"``.
    mapping : mapping or iterable of (source_label, canonical_label), optional
        Identifier equivalences, closed with :func:`close_mapping` and applied
        to subjects, predicates and objects before ids are assigned.

    Ids are assigned in order of first appearance.  A triple seen in several
    sources is stored once, tagged with the first source.
    """
    if not isinstance(sources, Mapping):
        sources = {"default": sources}
    canon = close_mapping(mapping) if mapping else {}

    ent_ids: dict[str, int] = {}
    rel_ids: dict[str, int] = {}
    seen: set[tuple[int, int, int]] = set()
    heads, rels, tails, tags = [], [], [], []
    source_counts: dict[str, int] = {}
    dropped = 0
    duplicates = 0
    for tag, triples in sources.items():
        dropped += getattr(triples, "dropped_literals", 0)
        local: set[tuple[int, int, int]] = set()
        for s, p, o in triples:
            if o.startswith('"'):
                dropped += 1
                continue
            s, p, o = canon.get(s, s), canon.get(p, p), canon.get(o, o)
            h = ent_ids.setdefault(s, len(ent_ids))
            r = rel_ids.setdefault(p, len(rel_ids))
            t = ent_ids.setdefault(o, len(ent_ids))
            key = (h, r, t)
            local.add(key)
            if key in seen:
                duplicates += 1
                continue
            seen.add(key)
            heads.append(h)
            rels.append(r)
            tails.append(t)
            tags.append(tag)
        source_counts[tag] = len(local)
    return KnowledgeGraph(list(ent_ids), list(rel_ids), heads, rels, tails, tags,
                          source_counts, dropped, duplicates)


def strip_relations(kg: KnowledgeGraph, predicates: Iterable[str]) -> KnowledgeGraph:
    """Remove every triple whose predicate label is in ``predicates``.

    Entities keep their ids (some may become isolated); stripped relations
    leave the relation dictionary and the remaining ones are renumbered in
    order.
    """
    drop = {kg.relation_index[p] for p in set(predicates) if p in kg.relation_index}
    if not drop:
        return kg
    keep_rel = [i for i in range(kg.n_relations) if i not in drop]
    remap = np.full(kg.n_relations, -1, dtype=np.int64)
    remap[keep_rel] = np.arange(len(keep_rel))
    mask = remap[kg.relations] >= 0
    tags = [t for t, m in zip(kg.sources, mask) if m]
    counts: dict[str, int] = {}
    for t in tags:
        counts[t] = counts.get(t, 0) + 1
    return KnowledgeGraph(
        kg.entity_labels,
        [kg.relation_labels[i] for i in keep_rel],
        kg.heads[mask], remap[kg.relations[mask]], kg.tails[mask], tags,
        {k: counts.get(k, 0) for k in kg.source_counts},
        kg.dropped_literals, kg.duplicates_dropped,
    )


@dataclass(frozen=True)
class DdiDataset:
    """Canonical labelled drug pairs.

    ``pairs[i] = (u, v)`` with ``u < v``; ``sources[i]`` joins the provenance
    tags of every row that produced the pair with ``","``.
    """

    pairs: np.ndarray
    labels: np.ndarray
    sources: tuple[str, ...]
    drug_universe: np.ndarray
    id_to_label: Mapping[int, str]
    skipped_unknown: int = 0
    skipped_self: int = 0

    @property
    def N(self) -> int:
        return len(self.drug_universe)

    def __len__(self):
        return len(self.pairs)

    @property
    def label_to_id(self) -> dict[str, int]:
        return {l: i for i, l in self.id_to_label.items()}


def extract_ddi_pairs(files, drugs, mapping=None) -> DdiDataset:
    """Read ``drug_u<TAB>drug_v<TAB>source`` files into a :class:`DdiDataset`.

    Parameters
    ----------
    files : path, stream, or sequence of them
    drugs : mapping label -> entity id, or sequence of labels
        The drug universe.  A bare sequence gets ids by sorted label order.
    mapping : optional identifier mapping applied to drug labels first.

    Rows naming a drug outside the universe are skipped with a warning;
    self-pairs are skipped silently.  Both are counted.
    """
    if isinstance(files, (str, os.PathLike, bytes)) or hasattr(files, "read"):
        files = [files]
    if isinstance(drugs, Mapping):
        universe = {str(k): int(v) for k, v in drugs.items()}
    else:
        universe = {l: i for i, l in enumerate(sorted(set(drugs)))}
    canon = close_mapping(mapping) if mapping else {}

    merged: dict[tuple[int, int], set[str]] = {}
    unknown = selfpairs = 0
    for f in files:
        for lineno, line in enumerate(_open_lines(f), start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3 or not all(c.strip() for c in cols):
                raise ParseError("expected 3 tab-separated columns drug_u, drug_v, source", lineno)
            a, b, tag = (_strip_brackets(c.strip()) for c in cols)
            a, b = canon.get(a, a), canon.get(b, b)
            if a not in universe or b not in universe:
                unknown += 1
                logger.warning("skipping pair (%s, %s): unknown drug", a, b)
                continue
            u, v = universe[a], universe[b]
            if u == v:
                selfpairs += 1
                continue
            key = (u, v) if u < v else (v, u)
            merged.setdefault(key, set()).add(tag)

    keys = sorted(merged)
    pairs = np.array(keys, dtype=np.int64).reshape(-1, 2)
    return DdiDataset(
        pairs=pairs,
        labels=np.ones(len(keys), dtype=np.int64),
        sources=tuple(",".join(sorted(merged[k])) for k in keys),
        drug_universe=np.array(sorted(universe.values()), dtype=np.int64),
        id_to_label=MappingProxyType({i: l for l, i in universe.items()}),
        skipped_unknown=unknown,
        skipped_self=selfpairs,
    )


def graph_stats(kg: KnowledgeGraph, dataset: DdiDataset | None = None) -> dict:
    """Counts record in the JSON layout used by the ``ingest`` command."""
    return {
        "triples": kg.n_triples,
        "entities": kg.n_entities,
        "relation_types": kg.n_relations,
        "per_source": dict(sorted(kg.source_counts.items())),
        "dropped_literals": kg.dropped_literals,
        "skipped_pairs": 0 if dataset is None else dataset.skipped_unknown + dataset.skipped_self,
    }


def write_ntriples(triples: Iterable[tuple[str, str, str]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s, p, o in triples:
            fh.write(f"<{s}> <{p}> <{o}> .\n")


def entities_with_prefix(kg: KnowledgeGraph, prefix: str) -> dict[str, int]:
    return {l: i for i, l in enumerate(kg.entity_labels) if l.startswith(prefix)}


def relation_set(kg: KnowledgeGraph) -> set[str]:
    """Labels of relations actually used by at least one triple."""
    return {kg.relation_labels[r] for r in np.unique(kg.relations).tolist()}


__all__ = [
    "DDI_PREDICATES", "ParsedTriples", "parse_ntriples", "read_mapping", "close_mapping",
    "KnowledgeGraph", "build_graph", "strip_relations", "DdiDataset", "extract_ddi_pairs",
    "graph_stats", "write_ntriples", "entities_with_prefix", "relation_set",
]
