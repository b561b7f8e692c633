"""Confusion counts, threshold metrics and rank-based AUROC."""

import logging
from dataclasses import asdict, dataclass

import numpy as np

log = logging.getLogger(__name__)

METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "specificity", "auroc")
METRIC_LABELS = ("Accuracy", "Precision", "Recall", "F1-score", "Specificity", "AUROC")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    specificity: float
    auroc: float

    def to_dict(self):
        return asdict(self)


def confusion(scores, labels, tau):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape or scores.size == 0:
        raise ValueError("scores and labels must be equal-length and non-empty")
    pred = scores >= tau
    return ConfusionCounts(
        tp=int(np.sum(pred & labels)),
        fp=int(np.sum(pred & ~labels)),
        tn=int(np.sum(~pred & ~labels)),
        fn=int(np.sum(~pred & labels)),
    )


def _ratio(num, den, name):
    if den == 0:
        log.debug("%s undefined (0/0), reported as 0", name)
        return 0.0
    return num / den


def point_metrics(c):
    """accuracy, precision, recall, f1, specificity; 0/0 counts as 0."""
    if c.total <= 0:
        raise ValueError("empty confusion table")
    precision = _ratio(c.tp, c.tp + c.fp, "precision")
    recall = _ratio(c.tp, c.tp + c.fn, "recall")
    return {
        "accuracy": (c.tp + c.tn) / c.total,
        "precision": precision,
        "recall": recall,
        # count form: one rounding, and the same expression threshold selection uses
        "f1": _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, "f1"),
        "specificity": _ratio(c.tn, c.tn + c.fp, "specificity"),
    }


def midranks(x):
    """1-based ranks with tied values sharing the mean of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    s = x[order]
    starts = np.r_[0, np.flatnonzero(s[1:] != s[:-1]) + 1]
    ends = np.r_[starts[1:], len(s)]
    group_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(len(x))
    ranks[order] = np.repeat(group_rank, ends - starts)
    return ranks


def auroc(scores, labels):
    """Mann-Whitney estimate of P(pos > neg) + P(pos == neg) / 2."""
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC needs both positive and negative labels")
    ranks = midranks(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def evaluate(scores, labels, tau):
    values = point_metrics(confusion(scores, labels, tau))
    return MetricsReport(auroc=auroc(scores, labels), **values)
