import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adrcnn.metrics import ConfusionCounts, auroc, confusion, midranks, point_metrics

from oracles import count_confusion, pairwise_auroc


def test_confusion_examples():
    assert confusion([0.9, 0.1], [1, 0], 0.5) == ConfusionCounts(tp=1, fp=0, tn=1, fn=0)
    c = confusion([0.2, 0.0, 0.7, 0.4], [0, 0, 1, 0], 0.0)
    assert c.fp == 3 and c.tn == 0


def test_confusion_vs_counting_oracle():
    rng = np.random.default_rng(0)
    scores = rng.random(50)
    labels = rng.integers(0, 2, 50)
    c = confusion(scores, labels, 0.4)
    assert (c.tp, c.fp, c.tn, c.fn) == count_confusion(scores, labels, 0.4)


def test_point_metrics_examples():
    m = point_metrics(ConfusionCounts(1, 0, 1, 0))
    assert all(v == 1.0 for v in m.values())
    m = point_metrics(ConfusionCounts(tp=0, fp=0, tn=5, fn=3))
    assert m["precision"] == 0.0 and m["f1"] == 0.0
    m = point_metrics(ConfusionCounts(tp=8, fp=2, tn=8, fn=2))
    for key in ("precision", "recall", "f1", "accuracy", "specificity"):
        assert m[key] == pytest.approx(0.8)


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_point_metric_identities(tp, fp, tn, fn):
    c = ConfusionCounts(tp, fp, tn, fn)
    if c.total == 0:
        return
    m = point_metrics(c)
    assert all(0.0 <= v <= 1.0 for v in m.values())
    P, N = tp + fn, tn + fp
    assert m["accuracy"] == pytest.approx((m["recall"] * P + m["specificity"] * N) / (P + N))
    if tp + fp and tp + fn and m["precision"] + m["recall"]:
        hm = 2 * m["precision"] * m["recall"] / (m["precision"] + m["recall"])
        assert m["f1"] == pytest.approx(hm)


def test_auroc_examples():
    assert auroc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auroc([0.5] * 6, [0, 1, 0, 1, 1, 0]) == 0.5
    with pytest.raises(ValueError):
        auroc([0.1, 0.2], [1, 1])


def test_midranks():
    np.testing.assert_array_equal(midranks([3.0, 1.0, 3.0, 2.0]), [3.5, 1, 3.5, 2])


def test_auroc_vs_pairs_random():
    rng = np.random.default_rng(4)
    scores = rng.random(30)
    labels = np.r_[0, 1, rng.integers(0, 2, 28)]
    assert abs(auroc(scores, labels) - pairwise_auroc(scores, labels)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 8), st.booleans()), min_size=2, max_size=40))
def test_auroc_properties(items):
    scores = np.array([s for s, _ in items], dtype=float)
    labels = np.array([y for _, y in items])
    labels[0], labels[1] = True, False
    a = auroc(scores, labels)
    assert a == pytest.approx(pairwise_auroc(scores, labels), abs=1e-12)
    assert auroc(np.exp(scores) * 3 + 1, labels) == pytest.approx(a, abs=1e-12)
    assert auroc(scores, ~labels) == pytest.approx(1 - a, abs=1e-12)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.floats(0, 1), st.floats(0, 1))
def test_confusion_monotone_in_tau(scores, t1, t2):
    labels = [i % 2 for i in range(len(scores))]
    lo, hi = sorted((t1, t2))
    a, b = confusion(scores, labels, lo), confusion(scores, labels, hi)
    assert b.tp <= a.tp and b.fp <= a.fp
