"""ROC curves and AUC with midrank tie handling."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray  # descending; the first entry is +inf
    fpr: np.ndarray
    tpr: np.ndarray

    def points(self):
        return list(zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist()))


@dataclass(frozen=True)
class AucScore:
    value: float
    n_pos: int
    n_neg: int

    def __float__(self):
        return self.value


def _check(scores, labels):
    scores = np.asarray(scores, dtype=float).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise ConfigError(f"{scores.shape[0]} scores but {labels.shape[0]} labels")
    if not np.all((labels == 0) | (labels == 1)):
        raise ConfigError("labels must be 0 or 1")
    if np.isnan(scores).any():
        raise ConfigError("scores contain NaN")
    labels = labels.astype(int)
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0:
        raise ConfigError("no positive (class 1) labels; AUC is undefined")
    if n_neg == 0:
        raise ConfigError("no negative (class 0) labels; AUC is undefined")
    return scores, labels, n_pos, n_neg


def roc_curve(scores, labels) -> RocCurve:
    """One ROC point per distinct score, tied scores sharing a threshold.

    A row is predicted positive when its score is >= the threshold.
    """
    scores, labels, n_pos, n_neg = _check(scores, labels)
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    y = labels[order]
    # last index of every run of equal scores
    ends = np.r_[np.nonzero(np.diff(s))[0], s.shape[0] - 1]
    tps = np.cumsum(y)[ends]
    fps = (ends + 1) - tps
    return RocCurve(
        thresholds=np.r_[np.inf, s[ends]],
        fpr=np.r_[0.0, fps / n_neg],
        tpr=np.r_[0.0, tps / n_pos],
    )


def auc(scores, labels) -> AucScore:
    """Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(tie)."""
    scores, labels, n_pos, n_neg = _check(scores, labels)
    ranks = rankdata(scores, method="average")
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return AucScore(float(u / (n_pos * n_neg)), n_pos, n_neg)


def trapezoid_area(curve: RocCurve) -> float:
    return float(np.trapezoid(curve.tpr, curve.fpr))


def write_roc_csv(curve: RocCurve, path, header_comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow(["threshold", "fpr", "tpr"])
        for t, f, p in curve.points():
            w.writerow([repr(t), repr(f), repr(p)])
