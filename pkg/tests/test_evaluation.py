import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavecast import DomainError, auc_trapezoid, primed_confusion, roc_points
from wavecast.evaluation import EvalReport, write_roc_csv, write_summary_json


def pair_count_auc(scores, labels):
    """Probability a random positive outscores a random negative, ties
    worth half; the classical rank-statistic reading of the AUC."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum((p > n) + 0.5 * (p == n) for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def _random_case(seed, n=80):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n)
    if labels.min() == labels.max():
        labels[0] = 1 - labels[0]
    # Coarse quantization forces plenty of tied scores.
    scores = np.round(rng.normal(size=n) + labels, 1)
    return scores, labels


def test_curve_starts_anchored_and_ends_at_one_one():
    scores = np.array([0.9, 0.8, 0.4, 0.2])
    labels = np.array([1, 0, 1, 0])
    points = roc_points(scores, labels)
    assert points[0] == (0.0, 0.0, float("inf"))
    assert points[-1][:2] == (1.0, 1.0)
    fprs = [p[0] for p in points]
    tprs = [p[1] for p in points]
    assert fprs == sorted(fprs) and tprs == sorted(tprs)


def test_small_curve_by_hand():
    # Thresholds sweep 0.9, 0.8, 0.4, 0.2; positives at 0.9 and 0.4.
    points = roc_points([0.9, 0.8, 0.4, 0.2], [1, 0, 1, 0])
    assert points == [
        (0.0, 0.0, float("inf")),
        (0.0, 0.5, 0.9),
        (0.5, 0.5, 0.8),
        (0.5, 1.0, 0.4),
        (1.0, 1.0, 0.2),
    ]
    assert auc_trapezoid(points) == pytest.approx(0.75)


def test_tied_scores_collapse_to_one_point():
    points = roc_points([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0])
    assert points == [(0.0, 0.0, float("inf")), (1.0, 1.0, 0.5)]
    assert auc_trapezoid(points) == pytest.approx(0.5)


@pytest.mark.parametrize("seed", range(10))
def test_trapezoid_auc_equals_pair_counting(seed):
    scores, labels = _random_case(seed)
    auc = auc_trapezoid(roc_points(scores, labels))
    assert auc == pytest.approx(pair_count_auc(scores, labels), abs=1e-12)


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_auc_invariant_under_monotone_rescaling(seed):
    scores, labels = _random_case(seed, n=40)
    base = roc_points(scores, labels)
    warped = roc_points(np.exp(3.0 * scores) + 7.0, labels)
    assert [p[:2] for p in warped] == [p[:2] for p in base]
    assert auc_trapezoid(warped) == pytest.approx(auc_trapezoid(base), abs=1e-12)


def test_perfect_and_inverted_rankings():
    labels = np.array([0, 0, 1, 1])
    assert auc_trapezoid(roc_points([0.1, 0.2, 0.8, 0.9], labels)) == pytest.approx(1.0)
    assert auc_trapezoid(roc_points([0.9, 0.8, 0.2, 0.1], labels)) == pytest.approx(0.0)


def test_single_class_labels_rejected():
    with pytest.raises(DomainError):
        roc_points([0.1, 0.9], [1, 1])
    with pytest.raises(DomainError):
        roc_points([0.1, 0.9], [0, 0])
    with pytest.raises(DomainError):
        roc_points([0.1, 0.9], [0])


def test_primed_confusion_is_strictly_greater_than():
    posteriors = [0.30, 0.31, 0.29, 0.30]
    labels = [1, 1, 0, 0]
    conf = primed_confusion(posteriors, labels, prevalence=0.30)
    # Exactly-at-prevalence is NOT primed.
    assert conf == {"tp": 1, "fp": 0, "tn": 2, "fn": 1}
    assert sum(conf.values()) == 4


def test_report_files_round_trip(tmp_path):
    scores, labels = _random_case(3)
    points = roc_points(scores, labels)
    conf = primed_confusion(scores, labels, 0.5)
    report = EvalReport(
        roc_points=tuple(points),
        auc=auc_trapezoid(points),
        tpr_at_primed=conf["tp"] / (conf["tp"] + conf["fn"]),
        fpr_at_primed=conf["fp"] / (conf["fp"] + conf["tn"]),
        confusion=conf,
        prevalence=0.5,
        n_samples=len(labels),
    )
    write_roc_csv(report, tmp_path / "roc.csv")
    with open(tmp_path / "roc.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["fpr", "tpr", "threshold"]
    parsed = [(float(a), float(b), float(c)) for a, b, c in rows[1:]]
    assert parsed == list(points)  # repr round-trips every float exactly

    write_summary_json(report, tmp_path / "summary.json")
    data = json.loads((tmp_path / "summary.json").read_text())
    assert data["auc"] == report.auc
    assert data["confusion"] == conf
    assert data["n_samples"] == len(labels)
