"""Metrics reports, cross-validation, learning curves and score averaging."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from .exceptions import KGDDIError, MetricError, PipelineError
from .optim import rng_stream
from .metrics import calibration_curve, pearson, pr_aupr, roc_auc, threshold_metrics

logger = logging.getLogger(__name__)

REPORT_KEYS = ("aupr", "roc_auc", "f1", "mcc", "pearson")


def _positive_scores(model, X):
    return np.asarray(model.predict_proba(X))[:, 1]


@dataclass
class MetricsReport:
    """Scores of one prediction set, or the mean over folds when ``folds`` is set."""

    aupr: float
    roc_auc: float
    f1: float
    mcc: float
    pearson: float
    threshold: float = 0.5
    folds: list = field(default_factory=list)
    pr_curve: tuple | None = None
    roc_curve: tuple | None = None

    def as_dict(self) -> dict:
        return {
            "aupr": self.aupr, "roc_auc": self.roc_auc, "f1": self.f1, "mcc": self.mcc,
            "pearson": self.pearson, "threshold": self.threshold,
            "folds": [f.as_dict() if isinstance(f, MetricsReport) else f for f in self.folds],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def evaluate_scores(scores, labels, threshold: float = 0.5) -> MetricsReport:
    """All headline metrics for one score vector.  Pearson is score vs label."""
    pr = pr_aupr(scores, labels)
    roc = roc_auc(scores, labels)
    tm = threshold_metrics(scores, labels, threshold)
    try:
        r = pearson(scores, labels)
    except MetricError:
        r = 0.0  # constant scores carry no linear signal
    return MetricsReport(pr.value, roc.value, tm.f1, tm.mcc, r, float(threshold),
                         pr_curve=(pr.x, pr.y), roc_curve=(roc.x, roc.y))


@dataclass
class CVResult:
    """Per-fold reports plus out-of-fold scores.

    ``fold_indices[k]`` records the ``(train, test)`` rows of fold ``k``.
    """

    reports: list
    fold_indices: list
    oof_scores: np.ndarray
    models: list = field(default_factory=list)

    def mean(self, key: str) -> float:
        return float(np.mean([getattr(r, key) for r in self.reports]))

    def std(self, key: str) -> float:
        return float(np.std([getattr(r, key) for r in self.reports]))

    def summary(self) -> MetricsReport:
        m = {k: self.mean(k) for k in REPORT_KEYS}
        return MetricsReport(**m, threshold=self.reports[0].threshold, folds=list(self.reports))


def cross_validate(estimator, X, y, folds, threshold: float = 0.5, keep_models: bool = False) -> CVResult:
    """Fit a fresh clone of ``estimator`` per fold and score the held-out fold.

    ``folds`` must provide ``split(X, y)`` yielding ``(train_idx, test_idx)``.
    """
    X = np.asarray(X)
    y = np.asarray(y)
    reports, indices, models = [], [], []
    oof = np.full(len(y), np.nan)
    for k, (train, test) in enumerate(folds.split(X, y)):
        try:
            model = clone(estimator).fit(X[train], y[train])
        except KGDDIError as exc:
            raise PipelineError(f"cv fold {k}", exc) from exc
        scores = _positive_scores(model, X[test])
        oof[test] = scores
        reports.append(evaluate_scores(scores, y[test], threshold))
        indices.append((np.asarray(train), np.asarray(test)))
        if keep_models:
            models.append(model)
    return CVResult(reports, indices, oof, models)


@dataclass(frozen=True)
class LearningPoint:
    fraction: float
    n_train: int
    train_score: float
    validation_score: float
    skipped: bool = False


def learning_curve(estimator, X, y, fractions, folds, metric=None, seed: int = 0) -> list[LearningPoint]:
    """Train on growing stratified prefixes of each fold's training rows.

    Scores are averaged over folds.  A fraction whose prefix holds a
    single class in any fold is returned with ``skipped=True``.
    """
    metric = metric or (lambda s, t: pr_aupr(s, t).value)
    fractions = list(fractions)
    if any(not 0 < f <= 1 for f in fractions) or fractions != sorted(fractions):
        raise ValueError("fractions must be ascending values in (0, 1]")
    X = np.asarray(X)
    y = np.asarray(y)
    splits = list(folds.split(X, y))
    # one stratified shuffle per fold so prefixes nest across fractions
    orders = []
    for k, (train, _) in enumerate(splits):
        rng = rng_stream(seed, k)
        by_class = [rng.permutation(train[y[train] == c]) for c in np.unique(y[train])]
        keys = np.concatenate([(np.arange(len(m)) + 0.5) / len(m) for m in by_class])
        members = np.concatenate(by_class)
        orders.append(members[np.argsort(keys, kind="stable")])
    points = []
    for frac in fractions:
        tr_scores, va_scores, n_used, skipped = [], [], [], False
        for (train, test), order in zip(splits, orders):
            n = max(1, int(round(frac * len(order))))
            rows = np.sort(order[:n])
            if len(np.unique(y[rows])) < 2:
                skipped = True
                break
            model = clone(estimator).fit(X[rows], y[rows])
            tr_scores.append(metric(_positive_scores(model, X[rows]), y[rows]))
            va_scores.append(metric(_positive_scores(model, X[test]), y[test]))
            n_used.append(n)
        if skipped:
            points.append(LearningPoint(frac, 0, float("nan"), float("nan"), True))
            continue
        points.append(LearningPoint(frac, int(np.mean(n_used)), float(np.mean(tr_scores)),
                                    float(np.mean(va_scores))))
    return points


def ensemble_average(score_lists) -> np.ndarray:
    """Elementwise mean of member score vectors.

    Accumulates deviations from the first member, so identical members
    reproduce that member bit for bit.
    """
    members = [np.asarray(s, dtype=np.float64).ravel() for s in score_lists]
    if not members:
        raise ValueError("ensemble needs at least one member")
    n = len(members[0])
    if any(len(m) != n for m in members):
        raise ValueError("member score lists differ in length")
    anchor = members[0]
    if len(members) == 1:
        return anchor.copy()
    return anchor + sum(m - anchor for m in members[1:]) / len(members)


def select_top(scores: dict, k: int = 3) -> list:
    """Names of the ``k`` best members; ties keep insertion order."""
    ranked = sorted(enumerate(scores.items()), key=lambda item: (-item[1][1], item[0]))
    return [name for _, (name, _) in ranked[:k]]


def write_curve_csv(path, x, y, header=("x", "y")) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for a, b in zip(np.asarray(x).tolist(), np.asarray(y).tolist()):
            w.writerow([f"{a:.12g}", f"{b:.12g}"])


def write_report_curves(prefix, scores, labels, bins: int = 10) -> dict:
    """PR, ROC and calibration CSVs next to ``prefix``; returns the paths written."""
    pr, roc = pr_aupr(scores, labels), roc_auc(scores, labels)
    cal = calibration_curve(scores, labels, bins)
    paths = {"pr": f"{prefix}_pr.csv", "roc": f"{prefix}_roc.csv", "calibration": f"{prefix}_calibration.csv"}
    write_curve_csv(paths["pr"], pr.x, pr.y, ("recall", "precision"))
    write_curve_csv(paths["roc"], roc.x, roc.y, ("fpr", "tpr"))
    write_curve_csv(paths["calibration"], [b.mean_score for b in cal], [b.fraction_positive for b in cal],
                    ("bin_mean", "bin_fraction"))
    return paths
