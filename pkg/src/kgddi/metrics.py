"""Ranking and threshold metrics for binary scores.

All functions take ``(scores, labels)`` in that order, with labels in
``{0, 1}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .exceptions import MetricError


@dataclass(frozen=True)
class CurveScore:
    """A scalar summary together with the curve it was computed from.

    ``x``/``y`` are recall/precision for precision-recall curves and
    fpr/tpr for ROC curves.  ``thresholds[k]`` produced point ``k``.
    """

    value: float
    x: np.ndarray
    y: np.ndarray
    thresholds: np.ndarray

    def __float__(self):
        return float(self.value)


def _check(scores, labels):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValueError(f"{len(s)} scores but {len(y)} labels")
    if not np.isin(y, (0, 1)).all():
        raise MetricError("labels must be 0 or 1")
    if not np.isfinite(s).all():
        raise MetricError("scores must be finite")
    return s, y.astype(np.int64)


def _cumulative_counts(s, y):
    """True/false positive counts at each distinct threshold, descending."""
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]
    tp = np.cumsum(y)[last]
    fp = (last + 1) - tp
    return s[last], tp, fp


def pr_aupr(scores, labels) -> CurveScore:
    """Average precision: ``sum_k (R_k - R_{k-1}) P_k`` over distinct thresholds.

    Tied scores enter the ranking together, so the result does not depend
    on the input order.
    """
    s, y = _check(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise MetricError("average precision needs at least one positive")
    thr, tp, fp = _cumulative_counts(s, y)
    precision = tp / (tp + fp)
    recall = tp / n_pos
    value = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    return CurveScore(value, recall, precision, thr)


def roc_auc(scores, labels) -> CurveScore:
    """Mann-Whitney AUC with ties counted as one half."""
    s, y = _check(scores, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC AUC needs both classes")
    ranks = rankdata(s)
    value = float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))
    thr, tp, fp = _cumulative_counts(s, y)
    return CurveScore(value, np.r_[0.0, fp / n_neg], np.r_[0.0, tp / n_pos], np.r_[np.inf, thr])


def aupr(scores, labels) -> float:
    return pr_aupr(scores, labels).value


def auc(scores, labels) -> float:
    return roc_auc(scores, labels).value


@dataclass(frozen=True)
class ThresholdMetrics:
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f1: float
    mcc: float


def confusion_counts(scores, labels, threshold: float = 0.5):
    s, y = _check(scores, labels)
    pred = s >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    tn = int(np.sum(~pred & (y == 0)))
    return tp, fp, tn, fn


def mcc_from_counts(tp: int, tn: int, fp: int, fn: int) -> float:
    """Matthews correlation; 0 when any marginal is empty."""
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return float((tp * tn - fp * fn) / np.sqrt(float(denom)))


def threshold_metrics(scores, labels, threshold: float = 0.5) -> ThresholdMetrics:
    """F1 and MCC of the predictions ``score >= threshold``."""
    tp, fp, tn, fn = confusion_counts(scores, labels, threshold)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
    return ThresholdMetrics(float(threshold), tp, fp, tn, fn, precision, recall, f1,
                            mcc_from_counts(tp, tn, fp, fn))


def pearson(scores, labels) -> float:
    """Product-moment correlation between scores and labels (or any two vectors)."""
    a = np.asarray(scores, dtype=np.float64).ravel()
    b = np.asarray(labels, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise MetricError("correlation needs at least two samples")
    da, db = a - a.mean(), b - b.mean()
    sa, sb = np.sqrt(np.dot(da, da)), np.sqrt(np.dot(db, db))
    if sa == 0 or sb == 0:
        raise MetricError("correlation is undefined for a constant vector")
    return float(np.clip(np.dot(da, db) / (sa * sb), -1.0, 1.0))


@dataclass(frozen=True)
class CalibrationBin:
    mean_score: float
    fraction_positive: float
    count: int


def calibration_curve(scores, labels, bins: int = 10) -> list[CalibrationBin]:
    """Equal-width bins on ``[0, 1]``; empty bins are left out."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    s, y = _check(scores, labels)
    idx = np.clip(np.floor(s * bins).astype(np.int64), 0, bins - 1)
    count = np.bincount(idx, minlength=bins)
    total = np.bincount(idx, weights=s, minlength=bins)
    pos = np.bincount(idx, weights=y, minlength=bins)
    return [CalibrationBin(float(total[b] / count[b]), float(pos[b] / count[b]), int(count[b]))
            for b in range(bins) if count[b]]
