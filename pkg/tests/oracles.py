"""Independent reference implementations used as test oracles.

Everything here is written with plain loops and the standard library so
that it shares no code path with the package under test.
"""

from __future__ import annotations

import math
import statistics
from itertools import combinations


def auc_pairs(scores, labels) -> float:
    """Mann-Whitney AUC by explicit enumeration of positive/negative pairs."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def average_precision_bruteforce(scores, labels) -> float:
    """Step-sum AP over distinct thresholds, recounting every prefix from scratch."""
    n_pos = sum(1 for y in labels if y == 1)
    prev_recall, ap = 0.0, 0.0
    for thr in sorted(set(scores), reverse=True):
        tp = sum(1 for s, y in zip(scores, labels) if s >= thr and y == 1)
        sel = sum(1 for s in scores if s >= thr)
        recall = tp / n_pos
        ap += (recall - prev_recall) * (tp / sel)
        prev_recall = recall
    return ap


def confusion(scores, labels, threshold):
    tp = fp = tn = fn = 0
    for s, y in zip(scores, labels):
        pred = 1 if s >= threshold else 0
        if pred and y:
            tp += 1
        elif pred:
            fp += 1
        elif y:
            fn += 1
        else:
            tn += 1
    return tp, fp, tn, fn


def f1_bruteforce(scores, labels, threshold=0.5) -> float:
    tp, fp, _, fn = confusion(scores, labels, threshold)
    if tp == 0:
        return 0.0
    p, r = tp / (tp + fp), tp / (tp + fn)
    return 2 * p * r / (p + r)


def mcc_bruteforce(scores, labels, threshold=0.5) -> float:
    tp, fp, tn, fn = confusion(scores, labels, threshold)
    den = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    return 0.0 if den == 0 else (tp * tn - fp * fn) / den


def pearson_reference(a, b) -> float:
    return statistics.correlation([float(x) for x in a], [float(x) for x in b])


def ppr_power_iteration(n, edges, source, damping, iters=2000):
    """Dense PPR where mass at a node without out-edges is dropped."""
    out = [[] for _ in range(n)]
    for u, v in edges:
        out[u].append(v)
    # score = (1 - d) * sum_k (d P)^k e_source
    score = [0.0] * n
    cur = [0.0] * n
    cur[source] = 1.0
    for _ in range(iters):
        for i in range(n):
            score[i] += (1 - damping) * cur[i]
        nxt = [0.0] * n
        for u in range(n):
            if cur[u] and out[u]:
                share = damping * cur[u] / len(out[u])
                for v in out[u]:
                    nxt[v] += share
        cur = nxt
        if sum(cur) < 1e-15:
            break
    return score


def shared_target_pairs(drug_targets, min_shared=1):
    """All pairs ``i < j`` of drug rows sharing at least ``min_shared`` targets."""
    sets = [set(j for j, x in enumerate(row) if x) for row in drug_targets]
    return sorted((i, j) for i, j in combinations(range(len(sets)), 2)
                  if len(sets[i] & sets[j]) >= min_shared)
