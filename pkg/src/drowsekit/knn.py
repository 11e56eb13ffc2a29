"""k-nearest-neighbor classifier over a feature subset.

Distances are Euclidean over the selected catalog columns. The squared
distance is accumulated one feature at a time in ascending catalog order;
every other component that builds or updates distance matrices follows the
same accumulation order, so intermediate results stay bit-identical across
code paths.

Neighbor ranking sorts on squared distance with a stable sort, which makes
ties resolve to the lower training-row index. Binary voting alarms when the
drowsy neighbor fraction reaches the threshold (inclusive); multiclass voting
takes the plurality, breaking ties first by the smaller mean neighbor
distance among the tied classes and then by the fixed class order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .dataset import ClassLabel
from .errors import InvalidModelError, InvalidParameterError
from .features import N_FEATURES
from .metrics import BINARY_CLASSES, MULTI_CLASSES, ConfusionMatrix, confusion_from_labels


class ClassTask(Enum):
    BINARY = "binary"
    MULTICLASS = "multiclass"

    @property
    def classes(self) -> tuple[ClassLabel, ...]:
        return BINARY_CLASSES if self is ClassTask.BINARY else MULTI_CLASSES


def check_subset(feature_subset: Sequence[int], n_features: int = N_FEATURES) -> tuple[int, ...]:
    subset = tuple(int(i) for i in feature_subset)
    if not subset:
        raise InvalidParameterError("feature subset must not be empty")
    if len(set(subset)) != len(subset):
        raise InvalidParameterError("feature subset must not repeat indices")
    if any(i < 0 or i >= n_features for i in subset):
        raise InvalidParameterError(f"feature indices must lie in [0, {n_features})")
    return subset


def squared_distances(X_query: np.ndarray, X_train: np.ndarray, subset: Sequence[int]) -> np.ndarray:
    """(n_query, n_train) squared Euclidean distances over the subset columns.

    Accumulates per feature in ascending catalog order; this is the canonical
    arithmetic every distance-producing path must reproduce.
    """
    Xq = np.atleast_2d(np.asarray(X_query, dtype=float))
    Xt = np.atleast_2d(np.asarray(X_train, dtype=float))
    d2 = np.zeros((Xq.shape[0], Xt.shape[0]))
    for j in sorted(check_subset(subset, Xt.shape[1])):
        diff = Xq[:, j][:, None] - Xt[:, j][None, :]
        d2 += diff * diff
    return d2


def euclidean_distance(a, b, subset: Sequence[int]) -> float:
    """Euclidean distance between two feature rows over the subset."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.sqrt(squared_distances(a[None, :], b[None, :], subset)[0, 0]))


@dataclass(frozen=True)
class Prediction:
    """One classified sample: label, per-class neighbor fractions, mean distance."""

    label: ClassLabel
    class_scores: Mapping[ClassLabel, float]
    mean_neighbor_distance: float

    def __post_init__(self):
        object.__setattr__(self, "class_scores", MappingProxyType(dict(self.class_scores)))

    @property
    def drowsy_score(self) -> float:
        return self.class_scores.get(ClassLabel.DROWSY, 0.0)


@dataclass(frozen=True)
class KnnModel:
    """Immutable neighbor classifier bound to one standardized training fold."""

    k: int
    feature_subset: tuple[int, ...]
    train_matrix: np.ndarray
    train_labels: np.ndarray
    task: ClassTask

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.train_matrix, dtype=float)).copy()
        y = np.asarray(self.train_labels, dtype=int).copy()
        if self.k < 1:
            raise InvalidModelError("k must be at least 1")
        if self.k > len(X):
            raise InvalidModelError(f"k={self.k} exceeds the {len(X)} training rows")
        if len(y) != len(X):
            raise InvalidModelError("training labels must match training rows")
        subset = check_subset(self.feature_subset, X.shape[1])
        allowed = {int(c) for c in self.task.classes}
        if not set(np.unique(y)).issubset(allowed):
            raise InvalidModelError(f"labels outside the {self.task.value} class set")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "train_matrix", X)
        object.__setattr__(self, "train_labels", y)
        object.__setattr__(self, "feature_subset", subset)

    def squared_distances_to(self, X_query) -> np.ndarray:
        return squared_distances(X_query, self.train_matrix, self.feature_subset)


def k_nearest(model: KnnModel, x) -> np.ndarray:
    """Indices of the k nearest training rows, ascending distance, ties by index."""
    d2 = model.squared_distances_to(np.asarray(x, dtype=float)[None, :])[0]
    order = np.argsort(d2, kind="stable")
    return order[: model.k]


def _neighbor_table(model: KnnModel, X_query) -> tuple[np.ndarray, np.ndarray]:
    """Neighbor indices and distances for a whole query matrix at once."""
    d2 = model.squared_distances_to(X_query)
    order = np.argsort(d2, axis=1, kind="stable")[:, : model.k]
    rows = np.arange(len(d2))[:, None]
    return order, np.sqrt(d2[rows, order])


def _binary_prediction(labels, dists, k, threshold) -> Prediction:
    n_drowsy = int(np.count_nonzero(labels == int(ClassLabel.DROWSY)))
    drowsy_score = n_drowsy / k
    label = ClassLabel.DROWSY if drowsy_score >= threshold else ClassLabel.AWAKE
    scores = {ClassLabel.AWAKE: (k - n_drowsy) / k, ClassLabel.DROWSY: drowsy_score}
    return Prediction(label, scores, float(np.mean(dists)))


def _multi_prediction(labels, dists, k) -> Prediction:
    counts = {cls: int(np.count_nonzero(labels == int(cls))) for cls in MULTI_CLASSES}
    best = max(counts.values())
    tied = [cls for cls in MULTI_CLASSES if counts[cls] == best]
    if len(tied) > 1:
        # smaller mean distance among the tied classes wins; class order last
        mean_d = {cls: float(np.mean(dists[labels == int(cls)])) for cls in tied}
        lowest = min(mean_d.values())
        tied = [cls for cls in tied if mean_d[cls] == lowest]
    label = tied[0]
    scores = {cls: counts[cls] / k for cls in MULTI_CLASSES}
    return Prediction(label, scores, float(np.mean(dists)))


def predict_binary(model: KnnModel, x, threshold: float = 0.5) -> Prediction:
    """Alarm when the drowsy neighbor fraction reaches the threshold."""
    if model.task is not ClassTask.BINARY:
        raise InvalidModelError("predict_binary needs a binary-task model")
    if not 0.0 <= threshold <= 1.0:
        raise InvalidParameterError("threshold must lie in [0, 1]")
    idx = k_nearest(model, x)
    d2 = model.squared_distances_to(np.asarray(x, dtype=float)[None, :])[0]
    return _binary_prediction(model.train_labels[idx], np.sqrt(d2[idx]), model.k, threshold)


def predict_multi(model: KnnModel, x) -> Prediction:
    """Plurality vote over the three classes with the documented tie rule."""
    if model.task is not ClassTask.MULTICLASS:
        raise InvalidModelError("predict_multi needs a multiclass-task model")
    idx = k_nearest(model, x)
    d2 = model.squared_distances_to(np.asarray(x, dtype=float)[None, :])[0]
    return _multi_prediction(model.train_labels[idx], np.sqrt(d2[idx]), model.k)


def predict_batch(model: KnnModel, X_query, threshold: float = 0.5) -> list[Prediction]:
    """Predict a whole query matrix; row order cannot influence any result."""
    X_query = np.atleast_2d(np.asarray(X_query, dtype=float))
    if len(X_query) == 0:
        return []
    order, dists = _neighbor_table(model, X_query)
    out = []
    for i in range(len(X_query)):
        labels = model.train_labels[order[i]]
        if model.task is ClassTask.BINARY:
            out.append(_binary_prediction(labels, dists[i], model.k, threshold))
        else:
            out.append(_multi_prediction(labels, dists[i], model.k))
    return out


def score_on(
    model: KnnModel,
    X_test,
    y_true,
    threshold: float = 0.5,
) -> tuple[ConfusionMatrix, np.ndarray]:
    """Confusion matrix over the test rows plus per-sample drowsy scores."""
    if not 0.0 <= threshold <= 1.0:
        raise InvalidParameterError("threshold must lie in [0, 1]")
    X_test = np.atleast_2d(np.asarray(X_test, dtype=float))
    y_true = np.asarray(y_true, dtype=int)
    classes = model.task.classes
    if len(X_test) == 0:
        empty = np.zeros((len(classes), len(classes)), dtype=int)
        return ConfusionMatrix(empty, classes), np.zeros(0)
    preds = predict_batch(model, X_test, threshold)
    y_pred = np.array([int(p.label) for p in preds], dtype=int)
    scores = np.array([p.drowsy_score for p in preds])
    return confusion_from_labels(y_true, y_pred, classes), scores
