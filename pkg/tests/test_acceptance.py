"""Acceptance criteria, one test and one PASS/FAIL line each.

Tolerances are the stated ones; nothing here is loosened to make a run
pass.  Runtimes are measured and part of the verdict where a budget is
stated.
"""

import json
import math
import time

import numpy as np
import pytest

from kgddi.baselines import LogisticRegression
from kgddi.cli import main
from kgddi.convlstm import ConvLSTMNetwork, ConvLstmCell, NetworkConfig, binary_cross_entropy, cell_step
from kgddi.evaluation import cross_validate
from kgddi.graph import (
    DDI_PREDICATES,
    build_graph,
    close_mapping,
    entities_with_prefix,
    extract_ddi_pairs,
    parse_ntriples,
    read_mapping,
    strip_relations,
)
from kgddi.metrics import aupr, auc, mcc_from_counts, pearson, threshold_metrics
from kgddi.optim import grad_check
from kgddi.pairs import build_pair_features, make_folds, sample_negative_pairs
from kgddi.pipeline import count_ddi_triples, sweep_sigma
from kgddi.shallow import sgns_loss
from kgddi.synth import DRUG_PREFIX, SyntheticSpec, generate_synthetic
from kgddi.triple import (
    TripleEmbedder,
    TripleEmbedding,
    corrupt_batch,
    init_embedding,
    logistic_loss,
    margin_loss,
    score_complex,
)
from kgddi.config import RunConfig
from oracles import (
    auc_pairs,
    average_precision_bruteforce,
    f1_bruteforce,
    mcc_bruteforce,
    pearson_reference,
)

pytestmark = pytest.mark.slow

RTOL, EPS = 1e-4, 1e-5


# ---------------------------------------------------------------- 1

def _gradient_reports():
    rng = np.random.default_rng(0)
    reports = {}

    p = {"in": rng.normal(size=(6, 8)), "pos": rng.normal(size=(6, 8)), "neg": rng.normal(size=(6, 5, 8))}
    _, (gi, gp, gn) = sgns_loss(p["in"], p["pos"], p["neg"])
    reports["skip-gram"] = grad_check(lambda: sgns_loss(p["in"], p["pos"], p["neg"])[0], p,
                                      {"in": gi, "pos": gp, "neg": gn}, eps=EPS, tol=RTOL)

    # heads and tails from disjoint ranges: a triple with h == t has a gradient
    # that cancels exactly, leaving only finite-difference round-off to compare
    triples = np.stack([rng.integers(3, size=10), rng.integers(2, size=10), 3 + rng.integers(3, size=10)], 1)
    # the default L2 distance; L1 gradients are sign vectors whose positive and
    # corrupted terms cancel to exact zeros, covered separately in test_triple.py
    m = init_embedding("transe", 6, 2, 5, rng, "L2")
    m.params["entity"][:] = rng.normal(size=(6, 5))
    neg = triples.copy()
    neg[:, 2] = 3 + (neg[:, 2] - 2) % 3
    _, g = margin_loss(m, triples, neg, margin=10.0)
    reports["transe"] = grad_check(lambda: margin_loss(m, triples, neg, margin=10.0)[0], m.params, g,
                                   eps=EPS, tol=RTOL)

    labels = rng.choice([-1.0, 1.0], size=10)
    for method in ("complex", "simple"):
        m = init_embedding(method, 6, 2, 5, rng)
        for v in m.params.values():
            v[:] = rng.normal(size=v.shape)
        _, g = logistic_loss(m, triples, labels, 1e-2)
        reports[method] = grad_check(lambda: logistic_loss(m, triples, labels, 1e-2)[0], m.params, g,
                                     eps=EPS, tol=RTOL)

    cfg = NetworkConfig(seq_len=8, filters=4, kernel=2, pool=2, hidden=4, positions=2, cell_kernel=2,
                        layers=2, dense=5, dropout=0.2, noise=0.05, seed=0)
    net = ConvLSTMNetwork(cfg, 16)
    for v in net.params.values():
        v[:] = rng.normal(0.0, 0.5, size=v.shape)
    X, y = rng.normal(size=(4, 16)), np.array([0, 1, 1, 0])
    masks = net.draw_masks(4, np.random.default_rng(1))
    _, g = net.loss_and_grads(X, y, masks)
    for name in net.params:
        reports[f"convlstm:{name}"] = grad_check(lambda: net.loss(X, y, masks), {name: net.params[name]},
                                                 {name: g[name]}, eps=EPS, tol=RTOL)

    bad = {k: v.copy() for k, v in g.items()}
    bad["out_W"][0, 0] += 1.0
    control = grad_check(lambda: net.loss(X, y, masks), net.params, bad, eps=EPS, tol=RTOL)
    return reports, control


def test_criterion_1_gradient_integrity(criterion):
    start = time.perf_counter()
    reports, control = _gradient_reports()
    elapsed = time.perf_counter() - start
    worst = max(reports, key=lambda k: reports[k].max_rel_error)
    ok = all(r.passed for r in reports.values()) and not control.passed and elapsed < 60
    criterion(1, "gradient integrity", ok,
              f"{len(reports)} tensors, worst {worst} {reports[worst].max_rel_error:.2e}, "
              f"control error {control.max_rel_error:.2e}, {elapsed:.1f}s")


# ---------------------------------------------------------------- 2

def test_criterion_2_metric_oracles(criterion):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 201))
        y = rng.integers(0, 2, size=n)
        y[rng.choice(n, size=2, replace=False)] = [0, 1]
        s = rng.integers(0, 8, size=n) / 7.0 if rng.random() < 0.5 else rng.random(n)
        sl, yl = s.tolist(), y.tolist()
        tm = threshold_metrics(s, y, 0.5)
        errs = [aupr(s, y) - average_precision_bruteforce(sl, yl), auc(s, y) - auc_pairs(sl, yl),
                tm.f1 - f1_bruteforce(sl, yl), tm.mcc - mcc_bruteforce(sl, yl)]
        if np.ptp(s) > 0:
            errs.append(pearson(s, y) - pearson_reference(sl, yl))
        base = auc(s, y)
        errs += [auc(f(s), y) - base for f in (np.exp, lambda v: 2.5 * v + 1.0, lambda v: v ** 3)]
        worst = max(worst, max(abs(e) for e in errs))
    criterion(2, "metric oracles and AUC invariance", worst <= 1e-12, f"max deviation {worst:.1e}")


# ---------------------------------------------------------------- 3

def test_criterion_3_hand_values(criterion):
    bce = binary_cross_entropy([1], [0.5])[0]
    mcc = mcc_from_counts(2, 2, 1, 1)
    m = TripleEmbedding("complex", {"entity_re": np.array([[1.0], [0.0]]), "entity_im": np.array([[0.0], [1.0]]),
                                    "relation_re": np.array([[0.0]]), "relation_im": np.array([[1.0]])})
    fwd, back = score_complex(0, 0, 1, m), score_complex(1, 0, 0, m)
    params = ConvLstmCell.init_params(np.random.default_rng(0), 2, 3, 4, 3)
    for v in params.values():
        v[:] = 0
    c_prev = np.random.default_rng(1).normal(size=(2, 4, 3))
    _, c = cell_step(ConvLstmCell(params), np.ones((2, 4, 2)), (np.zeros_like(c_prev), c_prev))
    errs = [abs(bce - math.log(2)), abs(mcc - 1 / 3), abs(fwd - 1), abs(back + 1), np.abs(c - 0.5 * c_prev).max()]
    criterion(3, "hand-checked values", max(errs) <= 1e-12, f"max deviation {max(errs):.1e}")


# ---------------------------------------------------------------- 4

TOY_ENTITIES = [f"e{i}" for i in range(30)]


def _tournament(rng, groups=4):
    """Groups of entities; between two groups one direction holds: antisymmetric."""
    g = rng.permutation(np.arange(30) % groups)
    beats = np.zeros((groups, groups), dtype=bool)
    for a in range(groups):
        for b in range(a + 1, groups):
            beats[a, b] = rng.random() < 0.5
            beats[b, a] = not beats[a, b]
    return [(f"e{i}", "r", f"e{j}") for i in range(30) for j in range(30) if beats[g[i], g[j]]]


def _same_group(rng, groups=3):
    g = rng.integers(groups, size=30)
    return [(f"e{i}", "r", f"e{j}") for i in range(30) for j in range(30) if g[i] == g[j]]


def _translation_blocks(blocks=3, size=5):
    """Heads of block b map to tails of block b: one translation per block."""
    triples = [(f"h{b}_{i}", "r", f"t{b}_{j}") for b in range(blocks) for i in range(size) for j in range(size)]
    return triples, [f"{p}{b}_{i}" for p in "ht" for b in range(blocks) for i in range(size)]


def _heldout_auc(triples, entities, method, seed=0, **params):
    """Hold out 10% of triples; rank them against every triple absent from the full relation."""
    rng = np.random.default_rng(seed + 100)
    order = rng.permutation(len(triples))
    n_test = int(0.1 * len(triples))
    test = [triples[i] for i in order[:n_test]]
    train = [triples[i] for i in order[n_test:]]
    kg = build_graph({"toy": train})
    start = time.perf_counter()
    model = TripleEmbedder(method=method, seed=seed, **params).fit(kg)
    E = kg.entity_index
    known = [e for e in entities if e in E]
    full = set(triples)

    def score(rows):
        idx = np.array([(E[h], 0, E[t]) for h, _, t in rows])
        return model.score_triples(idx[:, 0], idx[:, 1], idx[:, 2]).tolist()

    pos = score(test)
    neg = score([(h, "r", t) for h in known for t in known if (h, "r", t) not in full])
    value = auc_pairs(pos + neg, [1] * len(pos) + [0] * len(neg))
    return value, time.perf_counter() - start


COMPLEX_TOY = dict(dim=16, epochs=200, sigma=5, learning_rate=0.003, regularization=3e-3)
TRANSE_TOY = dict(dim=16, epochs=200)


def test_criterion_4_embedding_expressiveness(criterion):
    anti, t_anti = _heldout_auc(_tournament(np.random.default_rng(0)), TOY_ENTITIES, "complex", **COMPLEX_TOY)
    sym, t_sym = _heldout_auc(_same_group(np.random.default_rng(0)), TOY_ENTITIES, "complex", **COMPLEX_TOY)
    trans, t_trans = _heldout_auc(*_translation_blocks(), "transe", **TRANSE_TOY)
    ok = min(anti, sym, trans) >= 0.95 and max(t_anti, t_sym, t_trans) < 120
    criterion(4, "embedding expressiveness", ok,
              f"complex antisymmetric {anti:.3f} ({t_anti:.0f}s), complex symmetric {sym:.3f} ({t_sym:.0f}s), "
              f"transe translation {trans:.3f} ({t_trans:.0f}s)")


# ---------------------------------------------------------------- 5

def test_criterion_5_planted_structure_end_to_end(criterion, tmp_path):
    start = time.perf_counter()
    data = generate_synthetic(SyntheticSpec(drugs=500, targets=100, targets_per_drug=3, min_shared=1,
                                            noise=0.05, seed=0), tmp_path)
    mapping = close_mapping(read_mapping(data.paths["mapping"]))
    sources = {k: parse_ntriples(data.paths[k]) for k in ("drugbank", "pathways", "kegg")}
    kg = strip_relations(build_graph(sources, mapping), DDI_PREDICATES)
    dataset = extract_ddi_pairs([data.paths["ddi"]], entities_with_prefix(kg, DRUG_PREFIX), mapping)
    emb = TripleEmbedder(method="complex", dim=32, epochs=100, seed=0).fit(kg).embedding_
    neg = sample_negative_pairs(dataset, 1.0, seed=0)
    pairs = np.vstack([dataset.pairs, neg])
    labels = np.r_[np.ones(len(dataset.pairs)), np.zeros(len(neg))].astype(np.int64)
    features = build_pair_features(pairs, emb, labels, id_to_label=dataset.id_to_label)
    plan = make_folds(features.y, k=5, holdout=0.0, seed=0)
    result = cross_validate(LogisticRegression(), features.X, features.y, plan)
    elapsed = time.perf_counter() - start
    value, prevalence = result.mean("aupr"), features.y.mean()
    ok = value >= 0.85 and value - prevalence >= 0.30 and elapsed < 300
    criterion(5, "planted-structure run (complex dim 32 + logistic regression, 5-fold)", ok,
              f"AUPR {value:.3f}, prevalence {prevalence:.3f}, {elapsed:.0f}s")


# ---------------------------------------------------------------- 6

def test_criterion_6_sigma_sweep(criterion, tmp_path):
    cfg = RunConfig().with_updates(
        synthetic={"drugs": 40, "targets": 40, "pathways": 4},
        embedding={"methods": ["complex"], "dim": 4, "epochs": 3},
        models={"kinds": ["logreg", "nb"]}, run={"deterministic": True})
    doc = sweep_sigma(cfg, tmp_path)
    table = (tmp_path / "sweep.csv").read_text().splitlines()
    ok = (doc["sigmas"] == [5, 10, 15, 20, 25]
          and all((tmp_path / p).exists() for p in doc["subreports"])
          and len(table) == 1 + 5 * 3
          and set(doc["trends"]) == {"complex/logreg", "complex/nb", "complex/mae"})
    criterion(6, "sigma sweep harness", ok, ", ".join(f"{k} {v}" for k, v in sorted(doc["trends"].items())))


# ---------------------------------------------------------------- 7

def test_criterion_7_sampling_correctness(criterion):
    data = generate_synthetic(SyntheticSpec(drugs=500, targets=100, seed=0))
    labels = {i: f"d{i}" for i in range(500)}
    from kgddi.graph import DdiDataset
    ds = DdiDataset(data.emitted_pairs, np.ones(len(data.emitted_pairs), dtype=np.int64),
                    ("synthetic",) * len(data.emitted_pairs), np.arange(500), labels)
    ratio = math.ceil(100_000 / len(ds))
    neg = sample_negative_pairs(ds, ratio, seed=0)
    positives = set(map(tuple, ds.pairs.tolist()))
    pair_overlap = len(positives & set(map(tuple, neg.tolist())))

    triples = [(f"e{a}", "r", f"e{b}") for a, b in np.random.default_rng(0).integers(60, size=(400, 2))]
    kg = build_graph({"g": triples + [(f"e{i}", "s", f"e{i}") for i in range(60)]})
    corrupted = corrupt_batch(kg.triples, kg, math.ceil(100_000 / kg.n_triples), np.random.default_rng(0))
    flat = corrupted.reshape(-1, 3)
    triple_overlap = int(kg.contains(flat[:, 0], flat[:, 1], flat[:, 2]).sum())

    y = np.r_[np.ones(len(ds)), np.zeros(len(ds))].astype(int)
    plan = make_folds(y, k=5, holdout=0.2, seed=0)
    tests = [test for _, test in plan.split()]
    disjoint = all(not set(tr) & set(te) for tr, te in plan.split())
    covering = np.array_equal(np.sort(np.concatenate(tests)), plan.train_index)
    expected = y[plan.train_index].sum() / 5
    balanced = all(abs(y[t].sum() - expected) <= 1 for t in tests)
    ok = pair_overlap == 0 and triple_overlap == 0 and disjoint and covering and balanced \
        and len(neg) >= 100_000 and len(flat) >= 100_000
    criterion(7, "sampling correctness", ok,
              f"{len(neg)} negative pairs, {len(flat)} corrupted triples, overlaps {pair_overlap}/{triple_overlap}")


# ---------------------------------------------------------------- 8 and 9

RUN_INI = """
[synthetic]
drugs = 60
targets = 30
pathways = 5
[embedding]
methods = complex, transe, rdf2vec
dim = 8
epochs = 10
walks_per_entity = 5
sg_epochs = 2
[models]
kinds = logreg, nb, rf, gbt, convlstm
[network]
filters = 8
hidden = 4
dense = 8
epochs = 2
"""


@pytest.fixture(scope="module")
def two_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("determinism")
    (root / "run.ini").write_text(RUN_INI)
    codes = [main(["run", "--config", str(root / "run.ini"), "--out", str(root / name), "--deterministic",
                   "--seed", "11"]) for name in ("a", "b")]
    return root, codes


def test_criterion_8_determinism(criterion, two_runs):
    root, codes = two_runs
    same = all((root / "a" / f).read_bytes() == (root / "b" / f).read_bytes() for f in ("report.json", "report.csv"))
    rows = len(json.loads((root / "a" / "report.json").read_text())["rows"])
    criterion(8, "byte-identical reports from two runs", codes == [0, 0] and same, f"{rows} report rows")


def test_criterion_9_pipeline_hygiene(criterion, two_runs):
    root, _ = two_runs
    source = count_ddi_triples(root / "a" / "synthetic" / "drugbank.nt")
    staged = count_ddi_triples(root / "a" / "staged" / "graph.nt")
    criterion(9, "no interaction triples in the embedding graph", source > 0 and staged == 0,
              f"{source} in the source files, {staged} staged")
