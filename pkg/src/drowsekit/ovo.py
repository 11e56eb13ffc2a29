"""One-vs-one decomposition of the three-level drowsiness task.

Each pair of levels gets its own binary classifier: the dataset is
restricted to the pair's samples, the calmer level plays the alert role
and the drowsier one the alarm role, and a forward search picks the
pair's feature subset and k by balanced accuracy. The three classifiers
then vote on every sample, each vote carrying the classifier's
cross-validated balanced accuracy as weight; the level with the largest
weight sum wins and residual ties fall to the calmer level.

Pairwise training excludes the third level's samples entirely rather
than relabeling them, and pair weights are frozen at training time.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dataset import (
    ClassLabel,
    LabeledDataset,
    ScalingParams,
    apply_scaling,
    fit_scaling,
    loso_splits,
)
from .errors import EvaluationError, InvalidParameterError
from .knn import ClassTask, KnnModel, predict_binary
from .metrics import MULTI_CLASSES, balanced_accuracy, confusion_from_labels, fdr
from .selection import KGrid, SearchReport, SubsetEvaluator, sfs

logger = logging.getLogger(__name__)

OVO_PAIRS: tuple[tuple[ClassLabel, ClassLabel], ...] = (
    (ClassLabel.AWAKE, ClassLabel.QUESTIONABLE),
    (ClassLabel.AWAKE, ClassLabel.DROWSY),
    (ClassLabel.QUESTIONABLE, ClassLabel.DROWSY),
)

PAIR_THRESHOLD = 0.5

# report stand-ins that give the pair's calmer level the alert role and
# the drowsier level the alarm role under the plain binary binning
_CALM_KSS = 3
_ALARM_KSS = 8


def pair_name(calmer: ClassLabel, drowsier: ClassLabel) -> str:
    return f"{calmer.name.lower()}_vs_{drowsier.name.lower()}"


def pair_dataset(
    dataset: LabeledDataset, calmer: ClassLabel, drowsier: ClassLabel
) -> tuple[LabeledDataset, np.ndarray]:
    """Restrict to the pair's samples, relabeled for the binary machinery.

    Returns the two-level dataset and the original row indices. Feature
    values, subjects, sessions, and timestamps carry over unchanged, so
    fold boundaries and distance arithmetic match a hand-made restriction
    exactly.
    """
    if calmer is drowsier:
        raise InvalidParameterError("a class pair needs two distinct levels")
    if int(calmer) > int(drowsier):
        raise InvalidParameterError("pair levels must be ordered calmer, drowsier")
    n = len(dataset)
    labels = dataset.multi_labels(np.arange(n))
    rows = np.flatnonzero((labels == int(calmer)) | (labels == int(drowsier)))
    for level in (calmer, drowsier):
        if not np.any(labels[rows] == int(level)):
            raise InvalidParameterError(f"class {level.name} has no samples")
    kss = np.where(labels[rows] == int(drowsier), _ALARM_KSS, _CALM_KSS)
    sub = LabeledDataset(
        [dataset.subject_ids[i] for i in rows],
        [dataset.session_ids[i] for i in rows],
        dataset.t_center_s[rows],
        kss,
        dataset.feature_rows(rows),
    )
    return sub, rows


@dataclass(frozen=True)
class PairClassifier:
    """One pairwise vote source: subset, k, weight, and fitted models.

    ``fold_models`` maps each held-out session of the full dataset to the
    scaler and neighbor model fitted without that session's subject, for
    leakage-free combined evaluation; sessions whose exclusion leaves the
    pair untrainable are absent and the classifier abstains there.
    """

    name: str
    calmer: ClassLabel
    drowsier: ClassLabel
    feature_names: tuple[str, ...]
    feature_indices: tuple[int, ...]
    k: int
    ba: float
    fdr: float
    weight: float
    search: SearchReport
    full_params: ScalingParams
    full_model: KnnModel
    fold_models: dict = field(repr=False)
    skipped_folds: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class OvoModel:
    """Three pairwise classifiers in fixed pair order."""

    pairs: tuple[PairClassifier, ...]

    def __post_init__(self):
        if tuple((p.calmer, p.drowsier) for p in self.pairs) != OVO_PAIRS:
            raise InvalidParameterError("pairs must follow the fixed pair order")
        for p in self.pairs:
            if math.isnan(p.weight) or not 0.0 < p.weight <= 1.0:
                raise InvalidParameterError(f"pair {p.name}: weight must lie in (0, 1]")


@dataclass(frozen=True)
class OvoPrediction:
    """Weighted-vote outcome for one sample.

    ``weight_sums`` follows the fixed level order (awake, questionable,
    drowsy); ``votes`` lists (pair name, voted level, weight) so the sums
    can be reconstructed.
    """

    label: ClassLabel
    weight_sums: tuple[float, float, float]
    votes: tuple[tuple[str, ClassLabel, float], ...]

    def __post_init__(self):
        if self.label is not _argmax_label(self.weight_sums):
            raise InvalidParameterError("label must follow the weighted-vote tie rule")


def _argmax_label(sums: Sequence[float]) -> ClassLabel:
    # np.argmax keeps the first maximum, which is the calmer level
    return MULTI_CLASSES[int(np.argmax(np.asarray(sums, dtype=float)))]


def _feasible_heldouts(sub: LabeledDataset, dataset: LabeledDataset, k_min: int):
    """Sessions of the full dataset whose exclusion leaves the pair trainable.

    Training rows for a held-out session drop the whole subject, matching
    the fold rule. A trainable remainder needs two calm rows for scaling,
    one alarm row to vote for, and at least ``k_min`` rows in total.
    """
    sub_subjects = np.array(sub.subject_ids)
    y = sub.y_binary
    usable: dict[str, np.ndarray] = {}
    skipped: list[tuple[str, str]] = []
    for sid in dataset.session_order():
        subject = dataset.subject_for_session(sid)
        train = np.flatnonzero(sub_subjects != subject)
        calm = int(np.count_nonzero(y[train] == int(ClassLabel.AWAKE)))
        alarm = int(np.count_nonzero(y[train] == int(ClassLabel.DROWSY)))
        if calm < 2:
            skipped.append((sid, "fewer than 2 calmer-level training rows"))
        elif alarm < 1:
            skipped.append((sid, "drowsier level absent in training"))
        elif len(train) < k_min:
            skipped.append((sid, f"fewer than k={k_min} training rows"))
        else:
            usable[sid] = train
    return usable, tuple(skipped)


def train_pair(
    dataset: LabeledDataset,
    calmer: ClassLabel,
    drowsier: ClassLabel,
    kgrid,
    catalog: Sequence[int] | None = None,
) -> PairClassifier:
    """Feature-select and fit one pairwise classifier."""
    grid = kgrid if isinstance(kgrid, KGrid) else KGrid(tuple(kgrid))
    name = pair_name(calmer, drowsier)
    sub, _ = pair_dataset(dataset, calmer, drowsier)
    feasible, skipped = _feasible_heldouts(sub, dataset, min(grid.values))
    for sid, reason in skipped:
        logger.info("pair %s: fold %s skipped (%s)", name, sid, reason)
    searchable = [sid for sid in feasible if sid in set(sub.session_ids)]
    if not searchable:
        raise EvaluationError(f"pair {name}: no evaluable folds")
    evaluator = SubsetEvaluator(sub, ClassTask.BINARY, grid, PAIR_THRESHOLD, searchable)
    usable_ks = tuple(k for k in grid.values if k <= evaluator.max_feasible_k)
    if not usable_ks:
        raise EvaluationError(f"pair {name}: every k exceeds the fold capacity")
    if len(usable_ks) < len(grid.values):
        logger.info(
            "pair %s: k grid truncated at %d (fold capacity)", name, evaluator.max_feasible_k
        )
    report = sfs(None, KGrid(usable_ks), ClassTask.BINARY, catalog=catalog, evaluator=evaluator)
    best = report.best
    pair_fdr = best.fdr if drowsier is ClassLabel.DROWSY else math.nan

    everything = np.arange(len(sub))
    y = sub.binary_labels(everything)
    full_params = fit_scaling(sub, everything)
    full_model = KnnModel(
        k=best.best_k,
        feature_subset=best.best_indices,
        train_matrix=apply_scaling(sub.feature_rows(everything), full_params),
        train_labels=y,
        task=ClassTask.BINARY,
    )
    fold_models = {}
    usable, _ = _feasible_heldouts(sub, dataset, best.best_k)
    for sid, train in usable.items():
        params = fit_scaling(sub, train)
        fold_models[sid] = (
            params,
            KnnModel(
                k=best.best_k,
                feature_subset=best.best_indices,
                train_matrix=apply_scaling(sub.feature_rows(train), params),
                train_labels=y[train],
                task=ClassTask.BINARY,
            ),
        )
    for sid in dataset.session_order():
        if sid not in fold_models:
            logger.info("pair %s: abstains for held-out session %s", name, sid)
    return PairClassifier(
        name=name,
        calmer=calmer,
        drowsier=drowsier,
        feature_names=best.best_subset,
        feature_indices=best.best_indices,
        k=best.best_k,
        ba=best.ba,
        fdr=pair_fdr,
        weight=best.ba,
        search=report,
        full_params=full_params,
        full_model=full_model,
        fold_models=fold_models,
        skipped_folds=skipped,
    )


def train_ovo(dataset: LabeledDataset, kgrid, *, catalog: Sequence[int] | None = None) -> OvoModel:
    """Train the three pairwise classifiers on their class-restricted data."""
    present = set(int(v) for v in dataset.multi_labels(np.arange(len(dataset))))
    missing = [c.name for c in MULTI_CLASSES if int(c) not in present]
    if missing:
        raise InvalidParameterError(f"dataset lacks class(es): {', '.join(missing)}")
    return OvoModel(
        tuple(train_pair(dataset, lo, hi, kgrid, catalog) for lo, hi in OVO_PAIRS)
    )


def _pair_vote(pair: PairClassifier, params: ScalingParams, model: KnnModel, x) -> ClassLabel:
    row = apply_scaling(np.asarray(x, dtype=float)[None, :], params)[0]
    prediction = predict_binary(model, row, PAIR_THRESHOLD)
    return pair.drowsier if prediction.label is ClassLabel.DROWSY else pair.calmer


def _combine(votes: Iterable[tuple[str, ClassLabel, float]]) -> OvoPrediction:
    votes = tuple(votes)
    sums = [0.0, 0.0, 0.0]
    for _, level, weight in votes:
        sums[MULTI_CLASSES.index(level)] += weight
    sums = tuple(sums)
    return OvoPrediction(_argmax_label(sums), sums, votes)


def predict_ovo(model: OvoModel, x) -> OvoPrediction:
    """Weighted pairwise vote for one raw feature vector."""
    return _combine(
        (pair.name, _pair_vote(pair, pair.full_params, pair.full_model, x), pair.weight)
        for pair in model.pairs
    )


def _predict_held_out(model: OvoModel, session_id: str, x) -> OvoPrediction:
    """Vote with the fold models that exclude the sample's session."""
    votes = []
    for pair in model.pairs:
        fitted = pair.fold_models.get(session_id)
        if fitted is None:
            continue
        votes.append((pair.name, _pair_vote(pair, fitted[0], fitted[1], x), pair.weight))
    return _combine(votes)


@dataclass(frozen=True)
class OvoReport:
    """Combined held-out scores next to the per-pair search outcomes."""

    model: OvoModel
    ba: float
    fdr: float
    confusion: object

    @property
    def pairs(self) -> tuple[PairClassifier, ...]:
        return self.model.pairs


def evaluate_ovo(dataset: LabeledDataset, kgrid, *, catalog: Sequence[int] | None = None):
    """Train the three pairs, then score the combined vote held-out.

    Every sample is predicted with the pair models whose training excluded
    the sample's subject. Returns (ba, fdr, report).
    """
    folds = loso_splits(dataset)
    model = train_ovo(dataset, kgrid, catalog=catalog)
    y_true: list[int] = []
    y_pred: list[int] = []
    for fold in folds:
        X = dataset.feature_rows(fold.test)
        labels = dataset.multi_labels(fold.test)
        for i in range(len(fold.test)):
            outcome = _predict_held_out(model, fold.held_out_session, X[i])
            y_pred.append(int(outcome.label))
            y_true.append(int(labels[i]))
    cm = confusion_from_labels(np.array(y_true), np.array(y_pred), MULTI_CLASSES)
    ba = balanced_accuracy(cm)
    fdr_value = fdr(cm)
    return ba, fdr_value, OvoReport(model, ba, fdr_value, cm)


def write_ovo_json(path, report: OvoReport) -> None:
    """Per-pair table plus combined scores."""
    payload = {
        "combined": {
            "ba": None if math.isnan(report.ba) else report.ba,
            "fdr": None if math.isnan(report.fdr) else report.fdr,
        },
        "pairs": [
            {
                "classifier": p.name,
                "k": p.k,
                "features": list(p.feature_names),
                "n_features": len(p.feature_names),
                "ba": None if math.isnan(p.ba) else p.ba,
                "fdr": None if math.isnan(p.fdr) else p.fdr,
                "weight": p.weight,
            }
            for p in report.pairs
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
