"""Scores for a predicted causal graph against the ground truth."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

REPORT_FIELDS = (
    "shd", "avg_shd", "precision", "recall", "f1", "tp", "fp", "fn", "reversed", "n", "d",
)


def _as_adjacency(g) -> np.ndarray:
    if hasattr(g, "adjacency"):
        g = g.adjacency()
    a = np.asarray(g)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {a.shape}")
    return (a != 0).astype(np.int64)


def _pair(pred, truth, self_loops: bool):
    p, t = _as_adjacency(pred), _as_adjacency(truth)
    if p.shape != t.shape:
        raise ValueError(f"graph sizes differ: {p.shape[0]} vs {t.shape[0]} variables")
    if not self_loops:
        np.fill_diagonal(p, 0)
        np.fill_diagonal(t, 0)
    return p, t


def shd(pred, truth, self_loops: bool = False) -> int:
    """Structural Hamming distance.

    Each missing or extra edge costs 1; a pair predicted ``i->j`` where the
    truth is ``j->i`` costs 1 (one reversal), not 2. Self-loops are compared
    only when ``self_loops`` is set.
    """
    p, t = _pair(pred, truth, self_loops)
    diff = np.abs(p - t)
    total = int(np.trace(diff))
    off = diff - np.diag(np.diag(diff))
    # a pair whose two directions both differ costs 1 when it is a plain
    # reversal (exactly one edge on each side), otherwise 2
    both = np.triu(off * off.T, 1)
    rev = np.triu((p != t) & (p.T != t.T) & (p + p.T == 1) & (t + t.T == 1), 1)
    total += int(off.sum()) - int(both.sum()) + int((both & ~rev).sum())
    return total


def precision_recall_f1(pred, truth, self_loops: bool = False):
    """``(precision, recall, f1)`` with exact-direction matching.

    Zero denominators yield 0.
    """
    r = evaluate(pred, truth, self_loops)
    return r.precision, r.recall, r.f1


@dataclass
class MetricsReport:
    shd: int
    avg_shd: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    reversed: int
    n: int
    d: int
    undefined: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        lines = [f"{k}={_fmt(getattr(self, k))}" for k in REPORT_FIELDS]
        lines.append("undefined=" + ",".join(self.undefined))
        return "\n".join(lines) + "\n"

    @staticmethod
    def csv_header() -> str:
        return ",".join(REPORT_FIELDS)

    def csv_row(self) -> str:
        return ",".join(_fmt(getattr(self, k)) for k in REPORT_FIELDS)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def evaluate(pred, truth, self_loops: bool = False) -> MetricsReport:
    """All metrics at once. ``avg_shd`` divides by the true edge count."""
    p, t = _pair(pred, truth, self_loops)
    tp = int(np.sum(p & t))
    fp = int(np.sum(p & (1 - t)))
    fn = int(np.sum((1 - p) & t))
    reversed_ = int(np.sum(np.triu(((p == 1) & (p.T == 0) & (t == 0) & (t.T == 1))
                                   | ((p == 0) & (p.T == 1) & (t == 1) & (t.T == 0)), 1)))
    undefined = []
    if tp + fp == 0:
        undefined.append("precision")
    if tp + fn == 0:
        undefined.append("recall")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        undefined.append("f1")
    d = int(t.sum())
    dist = shd(p, t, self_loops)
    if d == 0:
        undefined.append("avg_shd")
    avg = dist / d if d else 0.0
    return MetricsReport(dist, float(avg), float(precision), float(recall), float(f1),
                         tp, fp, fn, reversed_, p.shape[0], d, undefined)
