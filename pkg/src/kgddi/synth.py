"""Synthetic drug knowledge graphs with a planted interaction rule.

Drugs are linked to protein targets, proteins to pathways and pathways to
phenotypes.  Two drugs interact when they share at least ``min_shared``
targets, so the signal that embeddings must recover lives entirely in the
background graph.  The emitted drug triples also carry the interaction
predicate and literal names, which downstream ingestion must strip or drop.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .graph import write_ntriples
from .optim import rng_stream

BASE = "http://bio2rdf.org/"
DRUG_PREFIX = BASE + "drugbank:"
KEGG_DRUG_PREFIX = BASE + "kegg:D"
HAS_TARGET = BASE + "drugbank_vocabulary:hasTarget"
IS_PRESENT_IN = BASE + "drugbank_vocabulary:isPresentIn"
IS_IMPLICATED_IN = BASE + "drugbank_vocabulary:isImplicatedIn"
KEGG_TARGET = BASE + "kegg_vocabulary:target"
NAME = BASE + "drugbank_vocabulary:name"
DDI_PREDICATE = BASE + "drugbank_vocabulary:ddi-interactor-in"


@dataclass
class SyntheticSpec:
    """Sizes and rule of a synthetic drug graph.

    ``targets_per_drug`` is either a fixed count or an inclusive
    ``(low, high)`` range drawn uniformly per drug.  ``noise`` is the share
    of interacting pairs replaced by non-interacting ones in the emitted
    list (the count of positives is unchanged).  ``kegg_fraction`` of the
    drugs are duplicated under KEGG identifiers with a sameAs mapping.
    """

    drugs: int = 500
    targets: int = 100
    pathways: int = 20
    phenotypes: int = 10
    targets_per_drug: int | tuple[int, int] = 3
    min_shared: int = 1
    noise: float = 0.05
    kegg_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if min(self.drugs, self.targets, self.pathways, self.min_shared) < 1:
            raise ValueError("counts must be >= 1")
        if not 0 <= self.noise < 0.5:
            raise ValueError("noise must lie in [0, 0.5)")
        lo, hi = self.target_range
        if not 1 <= lo <= hi <= self.targets:
            raise ValueError("targets_per_drug must lie in [1, targets]")

    @property
    def target_range(self) -> tuple[int, int]:
        t = self.targets_per_drug
        return (t, t) if isinstance(t, int) else (int(t[0]), int(t[1]))


def drug_iri(i: int) -> str:
    return f"{DRUG_PREFIX}DB{i:05d}"


def target_iri(j: int) -> str:
    return f"{BASE}uniprot:P{j:05d}"


def pathway_iri(k: int) -> str:
    return f"{BASE}kegg:hsa{k:05d}"


def phenotype_iri(k: int) -> str:
    return f"{BASE}mesh:D{k:06d}"


@dataclass
class SyntheticData:
    """Ground truth and emitted file paths of one generated graph."""

    spec: SyntheticSpec
    drug_targets: np.ndarray          # (drugs, targets) 0/1 incidence
    true_pairs: np.ndarray            # pairs satisfying the rule, (u < v) drug indices
    emitted_pairs: np.ndarray         # pairs written to the DDI file after noise
    paths: dict = field(default_factory=dict)

    @property
    def drug_labels(self) -> list[str]:
        return [drug_iri(i) for i in range(self.spec.drugs)]


def planted_pairs(drug_targets: np.ndarray, min_shared: int = 1) -> np.ndarray:
    """All drug pairs ``u < v`` sharing at least ``min_shared`` targets."""
    A = drug_targets.astype(np.int64)
    shared = A @ A.T
    u, v = np.nonzero(np.triu(shared >= min_shared, k=1))
    return np.stack([u, v], axis=1)


def generate_synthetic(spec: SyntheticSpec, out_dir=None) -> SyntheticData:
    """Draw a graph for ``spec``; write it under ``out_dir`` when given.

    Files: ``drugbank.nt``, ``pathways.nt``, ``kegg.nt``, ``mapping.tsv``,
    ``ddi.tsv`` and ``synthetic.json``.
    """
    n, m = spec.drugs, spec.targets
    rng = rng_stream(spec.seed, 0)
    lo, hi = spec.target_range
    A = np.zeros((n, m), dtype=np.int8)
    counts = rng.integers(lo, hi + 1, size=n)
    for i in range(n):
        A[i, rng.choice(m, size=counts[i], replace=False)] = 1
    true_pairs = planted_pairs(A, spec.min_shared)

    emitted = true_pairs
    if spec.noise > 0 and len(true_pairs):
        nrng = rng_stream(spec.seed, 1)
        flip = nrng.random(len(true_pairs)) < spec.noise
        n_flip = int(flip.sum())
        truth = np.zeros((n, n), dtype=bool)
        truth[true_pairs[:, 0], true_pairs[:, 1]] = True
        cu, cv = np.nonzero(np.triu(~truth, k=1))
        pick = np.sort(nrng.choice(len(cu), size=n_flip, replace=False))
        fake = np.stack([cu[pick], cv[pick]], axis=1)
        emitted = np.concatenate([true_pairs[~flip], fake])
        emitted = emitted[np.lexsort((emitted[:, 1], emitted[:, 0]))]

    data = SyntheticData(spec, A, true_pairs, emitted)
    if out_dir is not None:
        data.paths = _write(data, Path(out_dir))
    return data


def _write(data: SyntheticData, out: Path) -> dict:
    spec = data.spec
    out.mkdir(parents=True, exist_ok=True)
    rng = rng_stream(spec.seed, 2)
    paths = {k: out / f for k, f in (("drugbank", "drugbank.nt"), ("pathways", "pathways.nt"),
                                      ("kegg", "kegg.nt"), ("mapping", "mapping.tsv"),
                                      ("ddi", "ddi.tsv"), ("manifest", "synthetic.json"))}

    drug_triples = [(drug_iri(i), HAS_TARGET, target_iri(j)) for i, j in zip(*np.nonzero(data.drug_targets))]
    # the interaction predicate leaks the labels; ingestion must remove it
    drug_triples += [(drug_iri(u), DDI_PREDICATE, drug_iri(v)) for u, v in data.emitted_pairs.tolist()]
    write_ntriples(drug_triples, paths["drugbank"])
    with open(paths["drugbank"], "a", encoding="utf-8") as fh:
        for i in range(spec.drugs):
            fh.write(f'<{drug_iri(i)}> <{NAME}> "drug {i}" .\n')

    bg = []
    for j in range(spec.targets):
        for k in rng.choice(spec.pathways, size=min(2, spec.pathways), replace=False).tolist():
            bg.append((target_iri(j), IS_PRESENT_IN, pathway_iri(k)))
    if spec.phenotypes:
        for k in range(spec.pathways):
            bg.append((pathway_iri(k), IS_IMPLICATED_IN, phenotype_iri(int(rng.integers(spec.phenotypes)))))
    write_ntriples(bg, paths["pathways"])

    n_kegg = int(round(spec.kegg_fraction * spec.drugs))
    kegg_drugs = np.sort(rng.choice(spec.drugs, size=n_kegg, replace=False)).tolist()
    kegg, mapping = [], []
    for i in kegg_drugs:
        kid = f"{KEGG_DRUG_PREFIX}{i:05d}"
        mapping.append((kid, drug_iri(i)))
        kegg.extend((kid, KEGG_TARGET, target_iri(j)) for j in np.flatnonzero(data.drug_targets[i]).tolist())
    write_ntriples(kegg, paths["kegg"])
    with open(paths["mapping"], "w", encoding="utf-8") as fh:
        for src, dst in mapping:
            fh.write(f"{src}\t{dst}\n")

    with open(paths["ddi"], "w", encoding="utf-8") as fh:
        for u, v in data.emitted_pairs.tolist():
            fh.write(f"{drug_iri(u)}\t{drug_iri(v)}\tsynthetic\n")

    manifest = {
        "spec": asdict(spec),
        "true_pairs": int(len(data.true_pairs)),
        "emitted_pairs": int(len(data.emitted_pairs)),
        "total_pairs": spec.drugs * (spec.drugs - 1) // 2,
        "drug_prefix": DRUG_PREFIX,
    }
    paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return {k: str(v) for k, v in paths.items()}
