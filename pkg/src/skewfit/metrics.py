"""Confusion-matrix metrics and pairwise AUC."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


class Metric(float):
    """A float that remembers whether its denominator was zero."""

    degenerate: bool

    def __new__(cls, value: float, degenerate: bool = False):
        obj = super().__new__(cls, value)
        obj.degenerate = degenerate
        return obj

    def __repr__(self):
        flag = ", degenerate" if self.degenerate else ""
        return f"Metric({float(self)!r}{flag})"


def _ratio(num: float, den: float) -> Metric:
    if den == 0:
        return Metric(0.0, True)
    return Metric(num / den)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn_: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn_, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def n_p(self) -> int:
        return self.tp + self.fn_

    @property
    def n_n(self) -> int:
        return self.fp + self.tn

    @property
    def m_p(self) -> int:
        return self.tp + self.fp

    @property
    def m_n(self) -> int:
        return self.fn_ + self.tn

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn_ + self.tn


@dataclass(frozen=True)
class ScoredLabels:
    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float)
        y = np.asarray(self.labels)
        if s.ndim != 1 or s.shape != y.shape:
            raise ValueError("scores and labels must be equal-length vectors")
        if not np.isfinite(s).all():
            raise ValueError("scores must be finite")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0/1")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "labels", y.astype(np.int8))


def confusion(s: ScoredLabels, threshold: float = 0.5) -> ConfusionCounts:
    """Tally predictions ``score >= threshold`` against the true labels."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    if s.scores.size == 0:
        raise ValueError("empty input")
    pred = s.scores >= threshold
    pos = s.labels == 1
    tp = int(np.count_nonzero(pred & pos))
    fp = int(np.count_nonzero(pred & ~pos))
    fn_ = int(np.count_nonzero(~pred & pos))
    return ConfusionCounts(tp, fp, fn_, s.scores.size - tp - fp - fn_)


def precision(c: ConfusionCounts) -> Metric:
    return _ratio(c.tp, c.m_p)


def recall(c: ConfusionCounts) -> Metric:
    return _ratio(c.tp, c.n_p)


def f_alpha(c: ConfusionCounts, alpha: float) -> Metric:
    """Alpha-weighted harmonic mean of recall and precision.

    Evaluated as ``tp / (alpha * n_p + (1 - alpha) * m_p)`` so that a zero
    precision or recall does not need a reciprocal. ``alpha = 1`` gives
    recall and ``alpha = 0`` gives precision.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return _ratio(c.tp, alpha * c.n_p + (1.0 - alpha) * c.m_p)


def f_measure(c: ConfusionCounts) -> Metric:
    return f_alpha(c, 0.5)


def accuracy(c: ConfusionCounts) -> Metric:
    return _ratio(c.tp + c.tn, c.n)


def auc(s: ScoredLabels, strict: bool = False) -> float:
    """Fraction of (positive, negative) pairs ranked correctly.

    Tied pairs count 1/2 (Mann-Whitney). With ``strict=True`` ties count 0,
    i.e. the literal indicator ``I(p_pos > p_neg)``.
    """
    pos = s.labels == 1
    n_p = int(pos.sum())
    n_n = s.labels.size - n_p
    if n_p == 0 or n_n == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    ranks = rankdata(s.scores)  # average ranks for ties
    u = ranks[pos].sum() - n_p * (n_p + 1) / 2.0
    if strict:
        _, inv = np.unique(s.scores, return_inverse=True)
        pos_per = np.bincount(inv[pos])
        neg_per = np.bincount(inv[~pos], minlength=pos_per.size)[: pos_per.size]
        u -= 0.5 * float(np.dot(pos_per, neg_per))
    return float(u / (n_p * n_n))


def auc_bruteforce(s: ScoredLabels, strict: bool = False) -> float:
    """O(n_p * n_n) reference implementation of :func:`auc`."""
    sp = s.scores[s.labels == 1]
    sn = s.scores[s.labels == 0]
    if sp.size == 0 or sn.size == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    diff = sp[:, None] - sn[None, :]
    total = np.count_nonzero(diff > 0) + (0.0 if strict else 0.5 * np.count_nonzero(diff == 0))
    return float(total / (sp.size * sn.size))


def summarize(s: ScoredLabels, threshold: float = 0.5) -> dict[str, float]:
    """AUC, F-measure and accuracy of one scored test set."""
    c = confusion(s, threshold)
    return {"auc": auc(s), "f_measure": float(f_measure(c)), "accuracy": float(accuracy(c))}
