"""Staged end-to-end runs: ingest, embed, pairs, train, eval and report.

Each stage reads the previous stages' files from the run directory and
writes its own, so stages can run one at a time from the command line.

Run directory layout::

    config.json                 resolved configuration
    manifest.json               seeds, versions, timings, stage status
    synthetic/                  generated inputs (when no data files are configured)
    staged/graph.nt             graph handed to the embedders, DDI predicates removed
    staged/graph.npz            the same graph with its id assignment
    staged/dataset.json         interacting pairs and the drug universe
    staged/stats.json           graph counts
    embeddings/<method>.txt     vectors (+ .json sidecar)
    pairs/pairs.tsv             drug_u, drug_v, label, fold (-1 = holdout)
    metrics/<method>__<model>.json
    scores/<method>__<model>.tsv
    curves/<method>__<model>_{pr,roc,calibration}.csv
    report.json, report.csv     consolidated table
    FAILED                      present when a stage aborted

``report.json`` and ``report.csv`` hold no timings or absolute paths, so two
runs with the same configuration and seed produce identical bytes when
numeric libraries run single-threaded.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import logging
import platform
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np
from sklearn.base import clone

from . import __version__
from .baselines import DEFAULT_SPACES, SearchSpace, make_baseline, random_search
from .config import TRIPLE_METHODS, RunConfig, validate_config
from .convlstm import ConvLSTMClassifier
from .embedding import EmbeddingSet, load_embeddings
from .evaluation import MetricsReport, cross_validate, ensemble_average, evaluate_scores, \
    select_top, write_report_curves
from .exceptions import ConfigError, KGDDIError, PipelineError, ReportError
from .graph import DDI_PREDICATES, DdiDataset, KnowledgeGraph, build_graph, close_mapping, \
    entities_with_prefix, extract_ddi_pairs, graph_stats, parse_ntriples, read_mapping, \
    strip_relations, write_ntriples
from .optim import derive_seed
from .pairs import FoldPlan, PairFeaturizer, make_folds, sample_negative_pairs, write_pairs_tsv
from .shallow import KGloVe, RDF2Vec
from .synth import SyntheticSpec, generate_synthetic
from .triple import TripleEmbedder

logger = logging.getLogger(__name__)

STAGES = ("ingest", "embed", "pairs", "train", "eval", "report")
BASELINE_KINDS = {"logreg": "logreg", "nb": "gaussian-nb", "knn": "knn", "svm": "linear-svm",
                  "rf": "random-forest", "gbt": "gbt"}
ENSEMBLE = "mae"
REPORT_COLUMNS = ("method", "model", "AUPR", "F1-score", "MCC")


# ---------------------------------------------------------------- run directory

class RunDir:
    """Paths inside one run directory."""

    def __init__(self, root):
        self.root = Path(root)

    def __truediv__(self, other):
        return self.root / other

    def ensure(self, *parts) -> Path:
        path = self.root.joinpath(*parts)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def metrics(self, method, model) -> Path:
        return self.root / "metrics" / f"{method}__{model}.json"

    def scores(self, method, model) -> Path:
        return self.root / "scores" / f"{method}__{model}.tsv"

    def embedding(self, method) -> Path:
        return self.root / "embeddings" / f"{method}.txt"


def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _update_manifest(run: RunDir, **entries) -> None:
    path = run / "manifest.json"
    doc = _read_json(path) if path.exists() else {}
    for key, value in entries.items():
        if isinstance(value, dict) and isinstance(doc.get(key), dict):
            doc[key].update(value)
        else:
            doc[key] = value
    _write_json(path, doc)


def _versions() -> dict:
    import scipy
    import sklearn
    return {"kgddi": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "scikit-learn": sklearn.__version__}


def stage_seed(cfg: RunConfig, name: str) -> int:
    return derive_seed(cfg.run.seed, name)


@contextlib.contextmanager
def _stage(run: RunDir, name: str, seeds: dict | None = None):
    """Time a stage, record it in the manifest and convert failures."""
    start = time.perf_counter()
    try:
        yield
    except PipelineError as exc:
        _mark_failed(run, exc.stage, exc.cause)
        raise
    except (KGDDIError, ValueError, OSError, FloatingPointError) as exc:
        _mark_failed(run, name, exc)
        raise PipelineError(name, exc) from exc
    _update_manifest(run, timings={name: round(time.perf_counter() - start, 3)},
                     seeds=seeds or {}, stages={name: "done"})


def _mark_failed(run: RunDir, stage: str, cause) -> None:
    run.ensure()
    (run / "FAILED").write_text(f"stage: {stage}\ncause: {cause}\n", encoding="utf-8")
    _update_manifest(run, stages={stage: "failed"})


def prepare_run(cfg: RunConfig, out=None) -> RunDir:
    """Validate ``cfg``, create the run directory and record the configuration."""
    validate_config(cfg)
    run = RunDir(out or cfg.run.out)
    run.ensure()
    _write_json(run / "config.json", cfg.as_dict())
    _update_manifest(run, config=cfg.as_dict(), seed=cfg.run.seed, versions=_versions())
    return run


# ---------------------------------------------------------------- ingest

def save_graph(kg: KnowledgeGraph, path) -> None:
    np.savez(path, entity_labels=np.array(kg.entity_labels, dtype=str),
             relation_labels=np.array(kg.relation_labels, dtype=str),
             heads=kg.heads, relations=kg.relations, tails=kg.tails,
             sources=np.array(kg.sources, dtype=str))


def load_graph(path) -> KnowledgeGraph:
    with np.load(path, allow_pickle=False) as z:
        sources = z["sources"].tolist()
        counts = {}
        for tag in sources:
            counts[tag] = counts.get(tag, 0) + 1
        return KnowledgeGraph(z["entity_labels"].tolist(), z["relation_labels"].tolist(),
                              z["heads"], z["relations"], z["tails"], sources, counts)


def save_dataset(ds: DdiDataset, path) -> None:
    _write_json(path, {
        "pairs": ds.pairs.tolist(), "labels": ds.labels.tolist(), "sources": list(ds.sources),
        "drug_universe": ds.drug_universe.tolist(),
        "id_to_label": {str(k): v for k, v in sorted(ds.id_to_label.items())},
        "skipped_unknown": ds.skipped_unknown, "skipped_self": ds.skipped_self,
    })


def load_dataset(path) -> DdiDataset:
    doc = _read_json(path)
    return DdiDataset(
        pairs=np.array(doc["pairs"], dtype=np.int64).reshape(-1, 2),
        labels=np.array(doc["labels"], dtype=np.int64),
        sources=tuple(doc["sources"]),
        drug_universe=np.array(doc["drug_universe"], dtype=np.int64),
        id_to_label={int(k): v for k, v in doc["id_to_label"].items()},
        skipped_unknown=doc["skipped_unknown"], skipped_self=doc["skipped_self"],
    )


def count_ddi_triples(path, predicates=DDI_PREDICATES) -> int:
    """Triples in an N-Triples file whose predicate is an interaction predicate."""
    parsed = parse_ntriples(path)
    return sum(1 for _, p, _ in parsed if p in predicates)


def _input_files(cfg: RunConfig, run: RunDir) -> tuple[list, str, list]:
    if cfg.data.triples:
        return list(cfg.data.triples), cfg.data.mapping, list(cfg.data.ddi)
    s = cfg.synthetic
    spec = SyntheticSpec(drugs=s.drugs, targets=s.targets, pathways=s.pathways, phenotypes=s.phenotypes,
                         targets_per_drug=s.targets_per_drug, min_shared=s.min_shared, noise=s.noise,
                         kegg_fraction=s.kegg_fraction, seed=stage_seed(cfg, "synth"))
    paths = generate_synthetic(spec, run.ensure("synthetic")).paths
    return [paths["drugbank"], paths["pathways"], paths["kegg"]], paths["mapping"], [paths["ddi"]]


def run_ingest(cfg: RunConfig, run: RunDir) -> dict:
    """Parse inputs, merge identifiers, strip interaction predicates, stage the graph."""
    seeds = {} if cfg.data.triples else {"synth": stage_seed(cfg, "synth")}
    with _stage(run, "ingest", seeds):
        triples, mapping_path, ddi = _input_files(cfg, run)
        mapping = close_mapping(read_mapping(mapping_path)) if mapping_path else None
        sources = {Path(p).stem: parse_ntriples(p) for p in triples}
        kg = strip_relations(build_graph(sources, mapping), DDI_PREDICATES)
        drugs = entities_with_prefix(kg, cfg.data.drug_prefix)
        if len(drugs) < 2:
            raise ConfigError(f"fewer than two entities match drug prefix {cfg.data.drug_prefix!r}")
        dataset = extract_ddi_pairs(ddi, drugs, mapping)
        if len(dataset) == 0:
            raise KGDDIError("no interaction pair names two known drugs")
        staged = run.ensure("staged")
        write_ntriples(kg.labelled_triples(), staged / "graph.nt")
        save_graph(kg, staged / "graph.npz")
        save_dataset(dataset, staged / "dataset.json")
        stats = graph_stats(kg, dataset)
        stats.update(drugs=len(drugs), interacting_pairs=len(dataset))
        _write_json(staged / "stats.json", stats)
    return stats


def _load_staged(run: RunDir) -> tuple[KnowledgeGraph, DdiDataset]:
    graph, data = run / "staged" / "graph.npz", run / "staged" / "dataset.json"
    if not graph.exists() or not data.exists():
        raise KGDDIError("staged graph missing; run the ingest stage first")
    return load_graph(graph), load_dataset(data)


# ---------------------------------------------------------------- embed

def make_embedder(method: str, cfg: RunConfig, seed: int):
    e = cfg.embedding
    if method in TRIPLE_METHODS:
        return TripleEmbedder(method=method, dim=e.dim, sigma=e.sigma, epochs=e.epochs,
                              optimizer=e.optimizer, learning_rate=e.learning_rate,
                              batch_size=e.batch_size, margin=e.margin,
                              regularization=e.regularization, seed=seed)
    if method == "rdf2vec":
        return RDF2Vec(walks_per_entity=e.walks_per_entity, depth=e.depth, dim=e.dim, window=e.window,
                       negatives=e.negatives, epochs=e.sg_epochs, seed=seed)
    if method == "kglove":
        return KGloVe(dim=e.dim, damping=e.damping, tolerance=e.tolerance, epochs=e.glove_epochs, seed=seed)
    raise ConfigError(f"unknown embedding method {method!r}")


def run_embed(cfg: RunConfig, run: RunDir) -> dict:
    """Train every configured embedding on the staged graph."""
    seeds = {f"embed:{m}": stage_seed(cfg, f"embed:{m}") for m in cfg.embedding.methods}
    out = {}
    with _stage(run, "embed", seeds):
        kg, _ = _load_staged(run)
        leaked = [r for r in kg.relation_labels if r in DDI_PREDICATES]
        if leaked:
            raise KGDDIError(f"staged graph still carries interaction predicates {leaked}")
        run.ensure("embeddings")
        for method in cfg.embedding.methods:
            model = make_embedder(method, cfg, seeds[f"embed:{method}"]).fit(kg)
            emb: EmbeddingSet = model.embedding_
            emb.method = method
            curve = [float(x) for x in model.loss_curve_]
            emb.save(run.embedding(method), manifest={
                "seed": seeds[f"embed:{method}"], "params": model.get_params(),
                "loss_curve": curve, "entities": len(emb),
            })
            out[method] = curve[-1] if curve else None
    return out


# ---------------------------------------------------------------- pairs

def read_pairs_tsv(path, label_to_id) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = [line.rstrip("\n").split("\t") for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()]
    pairs = np.array([[label_to_id[u], label_to_id[v]] for u, v, _, _ in rows], dtype=np.int64).reshape(-1, 2)
    labels = np.array([int(r[2]) for r in rows], dtype=np.int64)
    fold = np.array([int(r[3]) for r in rows], dtype=np.int64)
    return pairs, labels, fold


def run_pairs(cfg: RunConfig, run: RunDir) -> dict:
    """Sample non-interacting pairs and assign folds; shared by every method."""
    seeds = {"negatives": stage_seed(cfg, "negatives"), "folds": stage_seed(cfg, "folds")}
    with _stage(run, "pairs", seeds):
        _, dataset = _load_staged(run)
        neg = sample_negative_pairs(dataset, cfg.pairs.negative_ratio, seeds["negatives"])
        pairs = np.vstack([dataset.pairs, neg])
        labels = np.r_[np.ones(len(dataset.pairs), dtype=np.int64), np.zeros(len(neg), dtype=np.int64)]
        plan = make_folds(labels, cfg.pairs.folds, cfg.pairs.holdout, cfg.pairs.stratified, seeds["folds"])
        write_pairs_tsv(run.ensure("pairs") / "pairs.tsv", pairs, labels, plan.fold, dataset.id_to_label)
        summary = {"positives": int(labels.sum()), "negatives": int(len(neg)),
                   "holdout": int(plan.holdout_mask.sum()), "folds": plan.k}
    return summary


def _load_pairs(run: RunDir, dataset: DdiDataset):
    path = run / "pairs" / "pairs.tsv"
    if not path.exists():
        raise KGDDIError("pair table missing; run the pairs stage first")
    return read_pairs_tsv(path, dataset.label_to_id)


# ---------------------------------------------------------------- train

def make_classifier(name: str, cfg: RunConfig, seed: int, n_features: int, params: dict | None = None):
    if name in BASELINE_KINDS:
        return make_baseline(BASELINE_KINDS[name], params, seed)
    if name == "convlstm":
        n = cfg.network
        seq_len = None if n.seq_len == "auto" else int(n.seq_len)
        if seq_len is not None and n_features % seq_len:
            logger.info("seq_len %d does not divide %d features; choosing a divisor", seq_len, n_features)
            seq_len = None
        net = {k: v for k, v in asdict(n).items() if k != "seq_len"}
        return ConvLSTMClassifier(seq_len=seq_len, **net, seed=seed)
    raise ConfigError(f"unknown classifier {name!r}")


def _features(run: RunDir, method: str, pairs, labels, fold, dataset: DdiDataset):
    path = run.embedding(method)
    if not path.exists():
        raise KGDDIError(f"embedding {method!r} missing; run the embed stage first")
    feat = PairFeaturizer(load_embeddings(path), dataset.id_to_label).fit()
    keep = feat.available(pairs)
    if not keep.any():
        raise KGDDIError(f"no pair has {method} vectors for both drugs")
    return feat.transform(pairs[keep]), labels[keep], FoldPlan(int(fold.max()) + 1, fold[keep]), keep


def _score_rows(plan: FoldPlan, labels, oof, holdout_scores):
    fold = plan.fold
    scores = np.where(fold >= 0, oof, holdout_scores)
    return [f"{i}\t{f}\t{y}\t{s!r}" for i, (f, y, s) in
            enumerate(zip(fold.tolist(), labels.tolist(), scores.tolist()))]


def _write_scores(path, plan, labels, oof, holdout_scores) -> None:
    lines = ["row\tfold\tlabel\tscore", *_score_rows(plan, labels, oof, holdout_scores)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_scores(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(fold, label, score)`` arrays from a score table."""
    rows = [line.split("\t") for line in Path(path).read_text(encoding="utf-8").splitlines()[1:] if line]
    fold = np.array([int(r[1]) for r in rows], dtype=np.int64)
    labels = np.array([int(r[2]) for r in rows], dtype=np.int64)
    scores = np.array([float(r[3]) for r in rows], dtype=np.float64)
    return fold, labels, scores


def _holdout_report(scores, labels, threshold):
    if len(labels) == 0 or len(np.unique(labels)) < 2:
        return None
    return evaluate_scores(scores, labels, threshold).as_dict()


def _train_one(cfg, run, method, name, X, y, plan, seed):
    params, search = None, None
    if cfg.models.search_budget and name in BASELINE_KINDS:
        kind = BASELINE_KINDS[name]
        result = random_search(kind, SearchSpace(DEFAULT_SPACES[kind], cfg.models.search_budget),
                               X, y, plan, cfg.models.metric, seed)
        params, search = result.best_params, {"best_score": result.best_score, "n_failed": result.n_failed,
                                              "trials": json.loads(result.to_json())}
    estimator = make_classifier(name, cfg, seed, X.shape[1], params)
    cv = cross_validate(estimator, X, y, plan, cfg.models.threshold)
    holdout = np.full(len(y), np.nan)
    test = plan.test_index
    if len(test):
        model = clone(estimator).fit(X[plan.train_index], y[plan.train_index])
        holdout[test] = model.predict_proba(X[test])[:, 1]
    train_rows = plan.train_index
    write_report_curves(run.ensure("curves") / f"{method}__{name}", cv.oof_scores[train_rows], y[train_rows])
    _write_scores(run.scores(method, name), plan, y, cv.oof_scores, holdout)
    doc = {
        "method": method, "model": name, "seed": seed,
        "params": {k: v for k, v in estimator.get_params().items() if k != "seed"},
        "search": search,
        "cv": cv.summary().as_dict(),
        "holdout": _holdout_report(holdout[test], y[test], cfg.models.threshold),
    }
    _write_json(run.metrics(method, name), doc)
    return doc


def run_train(cfg: RunConfig, run: RunDir) -> dict:
    """Cross-validate every (method, classifier) pair and score the holdout."""
    names = [(m, k) for m in cfg.embedding.methods for k in cfg.models.kinds]
    seeds = {f"model:{m}:{k}": stage_seed(cfg, f"model:{m}:{k}") for m, k in names}
    out = {}
    with _stage(run, "train", seeds):
        _, dataset = _load_staged(run)
        pairs, labels, fold = _load_pairs(run, dataset)
        run.ensure("metrics")
        run.ensure("scores")
        for method in cfg.embedding.methods:
            X, y, plan, _ = _features(run, method, pairs, labels, fold, dataset)
            for name in cfg.models.kinds:
                logger.info("training %s on %s vectors", name, method)
                try:
                    doc = _train_one(cfg, run, method, name, X, y, plan, seeds[f"model:{method}:{name}"])
                except PipelineError as exc:
                    raise PipelineError(f"train {method}/{name} {exc.stage}", exc.cause) from exc
                except KGDDIError as exc:
                    raise PipelineError(f"train {method}/{name}", exc) from exc
                out[f"{method}/{name}"] = doc["cv"][cfg.models.metric]
    return out


# ---------------------------------------------------------------- eval

def _mean_report(reports, threshold) -> dict:
    keys = ("aupr", "roc_auc", "f1", "mcc", "pearson")
    return MetricsReport(**{k: float(np.mean([getattr(r, k) for r in reports])) for k in keys},
                         threshold=threshold, folds=reports).as_dict()


def run_eval(cfg: RunConfig, run: RunDir) -> dict:
    """Average the top-ranked classifiers of each method into the ensemble."""
    out = {}
    metric, threshold = cfg.models.metric, cfg.models.threshold
    with _stage(run, "eval"):
        for method in cfg.embedding.methods:
            ranking = {}
            for name in cfg.models.kinds:
                path = run.metrics(method, name)
                if not path.exists():
                    raise KGDDIError(f"metrics for {method}/{name} missing; run the train stage first")
                ranking[name] = _read_json(path)["cv"][metric]
            members = select_top(ranking, cfg.models.ensemble_size)
            tables = [read_scores(run.scores(method, name)) for name in members]
            fold, labels = tables[0][0], tables[0][1]
            combined = ensemble_average([t[2] for t in tables])
            reports = [evaluate_scores(combined[fold == k], labels[fold == k], threshold)
                       for k in range(int(fold.max()) + 1)]
            train_rows = fold >= 0
            write_report_curves(run.ensure("curves") / f"{method}__{ENSEMBLE}", combined[train_rows],
                                labels[train_rows])
            doc = {
                "method": method, "model": ENSEMBLE, "members": members,
                "selection": {"metric": metric, "scores": ranking},
                "cv": _mean_report(reports, threshold),
                "holdout": _holdout_report(combined[~train_rows], labels[~train_rows], threshold),
            }
            _write_json(run.metrics(method, ENSEMBLE), doc)
            _write_scores(run.scores(method, ENSEMBLE), FoldPlan(int(fold.max()) + 1, fold), labels,
                          combined, combined)
            out[method] = members
    return out


# ---------------------------------------------------------------- report

def _expected(cfg: dict) -> list[tuple[str, str]]:
    methods = cfg["embedding"]["methods"]
    models = cfg["models"]["kinds"]
    return [(m, k) for m in methods for k in [*models, ENSEMBLE]]


def missing_stages(run_dir) -> list[str]:
    """Stages whose outputs are absent from ``run_dir``, in pipeline order."""
    run = RunDir(run_dir)
    if not (run / "config.json").exists():
        return ["config"]
    cfg = _read_json(run / "config.json")
    missing = []
    if not (run / "staged" / "graph.nt").exists():
        missing.append("ingest")
    for m in cfg["embedding"]["methods"]:
        if not run.embedding(m).exists():
            missing.append(f"embed ({m})")
    if not (run / "pairs" / "pairs.tsv").exists():
        missing.append("pairs")
    for m, k in _expected(cfg):
        if not run.metrics(m, k).exists():
            missing.append(f"{'eval' if k == ENSEMBLE else 'train'} ({m}/{k})")
    return missing


def emit_report(run_dir) -> dict:
    """Write ``report.json`` and ``report.csv`` for a completed run.

    One row per (embedding method, classifier) plus one ensemble row per
    method, in configuration order.  Values are cross-validation means.
    """
    run = RunDir(run_dir)
    missing = missing_stages(run_dir)
    if missing:
        raise ReportError(f"run in {run.root} is incomplete; missing: {', '.join(missing)}")
    cfg = _read_json(run / "config.json")
    rows = []
    for method, model in _expected(cfg):
        doc = _read_json(run.metrics(method, model))
        cv = doc["cv"]
        row = {"method": method, "model": model, "AUPR": cv["aupr"], "F1-score": cv["f1"], "MCC": cv["mcc"],
               "ROC-AUC": cv["roc_auc"], "Pearson": cv["pearson"],
               "folds": [{k: f[k] for k in ("aupr", "roc_auc", "f1", "mcc", "pearson")} for f in cv["folds"]],
               "holdout": doc.get("holdout")}
        if model == ENSEMBLE:
            row["members"] = doc["members"]
        rows.append(row)
    report = {"columns": list(REPORT_COLUMNS), "seed": cfg["run"]["seed"],
              "threshold": cfg["models"]["threshold"], "rows": rows}
    _write_json(run / "report.json", report)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([row["method"], row["model"]] + [f"{row[c]:.6f}" for c in REPORT_COLUMNS[2:]])
    (run / "report.csv").write_text(buf.getvalue(), encoding="utf-8")
    return report


def run_report(cfg: RunConfig, run: RunDir) -> dict:
    with _stage(run, "report"):
        return emit_report(run.root)


# ---------------------------------------------------------------- drivers

STAGE_FUNCS = {"ingest": run_ingest, "embed": run_embed, "pairs": run_pairs, "train": run_train,
               "eval": run_eval, "report": run_report}


def run_stage(stage: str, cfg: RunConfig, out=None):
    run = prepare_run(cfg, out)
    return STAGE_FUNCS[stage](cfg, run)


def run_pipeline(cfg: RunConfig, out=None) -> Path:
    """Execute every stage in order; returns the run directory.

    A failing stage leaves a ``FAILED`` marker next to the outputs written
    so far and raises :class:`PipelineError` naming the stage.
    """
    run = prepare_run(cfg, out)
    failed = run / "FAILED"
    if failed.exists():
        failed.unlink()
    for stage in STAGES:
        STAGE_FUNCS[stage](cfg, run)
    _update_manifest(run, status="complete")
    return run.root


def _trend(values) -> str:
    d = np.diff(values)
    if np.all(d > 0):
        return "increasing"
    if np.all(d < 0):
        return "decreasing"
    if np.all(d == 0):
        return "constant"
    return "non-monotone"


def sweep_sigma(cfg: RunConfig, out=None) -> dict:
    """Run the pipeline once per ``sweep.sigmas`` value and compare the reports.

    Only triple methods use ``sigma``; others in the configuration are
    dropped with a warning.  Sub-runs live in ``sigma_<value>/``; the
    comparison goes to ``sweep.json`` and ``sweep.csv`` with rows in
    ascending ``sigma`` and a per-row trend of AUPR across ``sigma``.
    """
    validate_config(cfg)
    methods = [m for m in cfg.embedding.methods if m in TRIPLE_METHODS]
    if not methods:
        raise ConfigError("sweep-sigma needs at least one of transe, complex, simple")
    dropped = sorted(set(cfg.embedding.methods) - set(methods))
    if dropped:
        logger.warning("sweep-sigma ignores methods without sigma: %s", dropped)
    root = Path(out or cfg.run.out)
    root.mkdir(parents=True, exist_ok=True)
    sigmas = sorted(set(cfg.sweep.sigmas))
    reports = {}
    for sigma in sigmas:
        sub = cfg.with_updates(embedding={"methods": methods, "sigma": sigma})
        run_dir = run_pipeline(sub, root / f"sigma_{sigma}")
        reports[sigma] = _read_json(run_dir / "report.json")
    rows, trends = [], {}
    for i, row in enumerate(reports[sigmas[0]]["rows"]):
        key = f"{row['method']}/{row['model']}"
        series = [reports[s]["rows"][i]["AUPR"] for s in sigmas]
        trends[key] = _trend(series) if len(series) > 1 else "constant"
    for sigma in sigmas:
        for row in reports[sigma]["rows"]:
            rows.append({"sigma": sigma, "method": row["method"], "model": row["model"],
                         "AUPR": row["AUPR"], "F1-score": row["F1-score"], "MCC": row["MCC"],
                         "AUPR_trend": trends[f"{row['method']}/{row['model']}"]})
    doc = {"sigmas": sigmas, "seed": cfg.run.seed, "rows": rows, "trends": trends,
           "subreports": [f"sigma_{s}/report.json" for s in sigmas]}
    _write_json(root / "sweep.json", doc)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sigma", *REPORT_COLUMNS, "AUPR_trend"])
    for r in rows:
        writer.writerow([r["sigma"], r["method"], r["model"], f"{r['AUPR']:.6f}", f"{r['F1-score']:.6f}",
                         f"{r['MCC']:.6f}", r["AUPR_trend"]])
    (root / "sweep.csv").write_text(buf.getvalue(), encoding="utf-8")
    return doc
