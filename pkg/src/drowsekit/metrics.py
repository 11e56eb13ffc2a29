"""Classification metrics: confusion counts, balanced accuracy, false-drowsy
rate, and ROC analysis.

Balanced accuracy is the unweighted mean of per-class recalls, so it is
immune to class imbalance. The false-drowsy rate charges every non-drowsy
truth that was alarmed as drowsy, pooling awake and questionable truths in
the multiclass case. Metric values that are undefined on the given counts
come back as NaN, never as a silent zero.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import ClassLabel
from .errors import InvalidParameterError

logger = logging.getLogger(__name__)

BINARY_CLASSES: tuple[ClassLabel, ...] = (ClassLabel.AWAKE, ClassLabel.DROWSY)
MULTI_CLASSES: tuple[ClassLabel, ...] = (
    ClassLabel.AWAKE,
    ClassLabel.QUESTIONABLE,
    ClassLabel.DROWSY,
)


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[i][j] = samples of true class classes[i] predicted as classes[j]."""

    counts: np.ndarray
    classes: tuple[ClassLabel, ...]

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=int).copy()
        c = len(self.classes)
        if arr.shape != (c, c):
            raise InvalidParameterError(f"confusion counts must be {c}x{c}")
        if (arr < 0).any():
            raise InvalidParameterError("confusion counts must be non-negative")
        if len(set(self.classes)) != c or c < 2:
            raise InvalidParameterError("classes must be at least two distinct labels")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def true_totals(self) -> list[int]:
        return [int(r) for r in self.counts.sum(axis=1)]

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.classes != other.classes:
            raise InvalidParameterError("cannot add confusion matrices over different classes")
        return ConfusionMatrix(self.counts + other.counts, self.classes)


def confusion_from_labels(y_true, y_pred, classes: Sequence[ClassLabel]) -> ConfusionMatrix:
    classes = tuple(classes)
    index = {int(c): i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=int)
    for t, p in zip(np.asarray(y_true, dtype=int), np.asarray(y_pred, dtype=int), strict=True):
        if int(t) not in index or int(p) not in index:
            raise InvalidParameterError(f"label outside class set: true={t}, pred={p}")
        counts[index[int(t)], index[int(p)]] += 1
    return ConfusionMatrix(counts, classes)


def balanced_accuracy(cm: ConfusionMatrix) -> float:
    """Unweighted mean of per-class recalls; empty true classes are skipped."""
    recalls: list[float] = []
    skipped: list[str] = []
    for i, cls in enumerate(cm.classes):
        total = int(cm.counts[i].sum())
        if total == 0:
            skipped.append(cls.tag)
            continue
        recalls.append(int(cm.counts[i, i]) / total)
    if skipped:
        logger.info("balanced accuracy skipped empty class(es): %s", ", ".join(skipped))
    if not recalls:
        logger.info("balanced accuracy undefined: no class has true samples")
        return math.nan
    return sum(recalls) / len(recalls)


def fdr(cm: ConfusionMatrix) -> float:
    """Fraction of true non-drowsy samples that were predicted drowsy."""
    if ClassLabel.DROWSY not in cm.classes:
        raise InvalidParameterError("fdr needs a drowsy class in the confusion matrix")
    d = cm.classes.index(ClassLabel.DROWSY)
    alarms = 0
    non_drowsy = 0
    for i, cls in enumerate(cm.classes):
        if cls is ClassLabel.DROWSY:
            continue
        non_drowsy += int(cm.counts[i].sum())
        alarms += int(cm.counts[i, d])
    if non_drowsy == 0:
        logger.info("fdr undefined: no true non-drowsy samples")
        return math.nan
    return alarms / non_drowsy


@dataclass(frozen=True)
class RocCurve:
    """Threshold-sweep operating points and the area under them."""

    points: tuple[tuple[float, float], ...]
    auc: float


def roc_curve(scores, positives) -> RocCurve:
    """ROC over descending score thresholds; ties advance diagonally.

    The trapezoidal area equals the rank statistic: the probability that a
    random positive outscores a random negative, counting ties as half.
    """
    s = np.asarray(scores, dtype=float)
    pos = np.asarray(positives, dtype=bool)
    if s.shape != pos.shape or s.ndim != 1:
        raise InvalidParameterError("scores and positives must be equal-length 1-d arrays")
    n_pos = int(pos.sum())
    n_neg = len(pos) - n_pos
    if n_pos == 0 or n_neg == 0:
        logger.info("roc undefined: needs both a positive and a negative sample")
        return RocCurve((), math.nan)
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    pos_sorted = pos[order]
    points: list[tuple[float, float]] = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    n = len(s_sorted)
    while i < n:
        j = i
        while j < n and s_sorted[j] == s_sorted[i]:
            j += 1
        tp += int(pos_sorted[i:j].sum())
        fp += (j - i) - int(pos_sorted[i:j].sum())
        points.append((fp / n_neg, tp / n_pos))
        i = j
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2
    return RocCurve(tuple(points), auc)


def metrics_report(cm: ConfusionMatrix, auc: float = math.nan) -> dict:
    """Summary dict of the headline metrics plus the raw counts."""
    return {
        "ba": balanced_accuracy(cm),
        "fdr": fdr(cm),
        "auc": auc,
        "classes": [c.tag for c in cm.classes],
        "counts": cm.counts.tolist(),
    }


def format_metrics_text(report: dict) -> str:
    lines = [f"ba={report['ba']!r}", f"fdr={report['fdr']!r}", f"auc={report['auc']!r}"]
    for cls, row in zip(report["classes"], report["counts"]):
        lines.append(f"counts[{cls}]={','.join(str(v) for v in row)}")
    return "\n".join(lines) + "\n"


def write_metrics_json(path, report: dict) -> None:
    clean = dict(report)
    for key in ("ba", "fdr", "auc"):
        v = clean.get(key)
        if isinstance(v, float) and math.isnan(v):
            clean[key] = None
    with open(path, "w") as fh:
        json.dump(clean, fh, indent=2, sort_keys=True)
        fh.write("\n")
