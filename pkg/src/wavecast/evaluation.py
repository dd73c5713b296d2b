"""ROC sweep, trapezoidal AUC, and the primed operating point.

The curve is swept over every distinct score, predicting positive at
score >= threshold, so it is exactly invariant under any strictly
increasing rescaling of the scores. The reported operating point is the
primed rule p_t > 0, which is the same set of predictions as
posterior > prevalence.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import TrainedModel, score_samples


@dataclass(frozen=True)
class EvalReport:
    """ROC points (fpr, tpr, threshold), AUC, and primed-point rates."""

    roc_points: tuple
    auc: float
    tpr_at_primed: float
    fpr_at_primed: float
    confusion: dict
    prevalence: float
    n_samples: int

    def to_json_dict(self) -> dict:
        return {
            "auc": self.auc,
            "tpr_at_primed": self.tpr_at_primed,
            "fpr_at_primed": self.fpr_at_primed,
            "confusion": dict(self.confusion),
            "prevalence": self.prevalence,
            "n_samples": self.n_samples,
        }


def roc_points(scores, labels) -> list:
    """(fpr, tpr, threshold) at every distinct score, descending, with a
    leading (0, 0, inf) anchor. Positive prediction means score >= threshold."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DomainError("scores and labels must be equal-length vectors")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DomainError("ROC undefined: evaluation labels contain a single class")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tp = np.cumsum(sorted_labels == 1)
    fp = np.cumsum(sorted_labels == 0)
    # Last index of each run of tied scores gives the counts at
    # "score >= that value".
    distinct = np.nonzero(np.diff(sorted_scores, append=-np.inf))[0]
    points = [(0.0, 0.0, float("inf"))]
    for i in distinct:
        points.append(
            (float(fp[i] / n_neg), float(tp[i] / n_pos), float(sorted_scores[i]))
        )
    return points


def auc_trapezoid(points) -> float:
    """Area under the ROC by the trapezoidal rule over fpr."""
    fpr = np.array([p[0] for p in points])
    tpr = np.array([p[1] for p in points])
    return float(np.trapezoid(tpr, fpr))


def primed_confusion(posteriors, labels, prevalence: float) -> dict:
    """Counts at the primed rule: predicted positive iff posterior > prevalence."""
    posteriors = np.asarray(posteriors, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pred = posteriors > prevalence
    return {
        "tp": int(np.sum(pred & (labels == 1))),
        "fp": int(np.sum(pred & (labels == 0))),
        "tn": int(np.sum(~pred & (labels == 0))),
        "fn": int(np.sum(~pred & (labels == 1))),
    }


def evaluate(model: TrainedModel, samples) -> EvalReport:
    """Score samples, sweep the ROC, and report the primed operating point."""
    samples = list(samples)
    if not samples:
        raise DomainError("nothing to evaluate")
    posteriors = score_samples(model, samples)
    labels = np.array([s.label for s in samples], dtype=np.int64)
    points = roc_points(posteriors, labels)
    conf = primed_confusion(posteriors, labels, model.prevalence)
    tpr = conf["tp"] / max(conf["tp"] + conf["fn"], 1)
    fpr = conf["fp"] / max(conf["fp"] + conf["tn"], 1)
    return EvalReport(
        roc_points=tuple(points),
        auc=auc_trapezoid(points),
        tpr_at_primed=float(tpr),
        fpr_at_primed=float(fpr),
        confusion=conf,
        prevalence=model.prevalence,
        n_samples=len(samples),
    )


def write_roc_csv(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr", "threshold"])
        for fpr, tpr, thr in report.roc_points:
            writer.writerow([repr(fpr), repr(tpr), repr(thr)])


def write_summary_json(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, sort_keys=True)
        fh.write("\n")
