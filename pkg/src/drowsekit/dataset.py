"""Labeled-sample store and leakage-safe cross-validation plumbing.

Collects baselined window vectors from many sessions into one columnar
dataset, derives warning-class labels from the KSS self-reports, standardizes
features against the awake portion of the training rows only, and produces
leave-one-session-out folds that also evict every other session of the
held-out subject from the training side.

All row access goes through accessor methods that report to an attachable
AccessLog, so a test harness can prove that no fold's fit phase ever touched
a held-out row.
"""

from __future__ import annotations

import csv
import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CannotSplitError,
    InvalidLabelError,
    InvalidParameterError,
    ScalingUnavailableError,
)
from .features import (
    FEATURE_CSV_HEADER,
    FEATURE_NAMES,
    N_FEATURES,
    FeatureVector,
    WindowRow,
)
from .signals import KSS_MAX, KSS_MIN, RawSession, kss_at

logger = logging.getLogger(__name__)


class ClassLabel(IntEnum):
    """Warning classes; DROWSY is the positive class for false-alarm accounting."""

    AWAKE = 0
    QUESTIONABLE = 1
    DROWSY = 2

    @property
    def tag(self) -> str:
        return self.name.lower()


_TAG_TO_LABEL = {lab.tag: lab for lab in ClassLabel}


def _check_kss(kss: int) -> int:
    if isinstance(kss, bool) or int(kss) != kss:
        raise InvalidLabelError(f"KSS value must be an integer, got {kss!r}")
    kss = int(kss)
    if not KSS_MIN <= kss <= KSS_MAX:
        raise InvalidLabelError(f"KSS value {kss} outside [{KSS_MIN}, {KSS_MAX}]")
    return kss


def bin_kss_binary(kss: int) -> ClassLabel:
    """Two-class warning rule: 1..6 awake, 7..9 drowsy."""
    return ClassLabel.AWAKE if _check_kss(kss) <= 6 else ClassLabel.DROWSY


def bin_kss_multi(kss: int) -> ClassLabel:
    """Three-class warning rule: 1..5 awake, 6..7 questionable, 8..9 drowsy."""
    kss = _check_kss(kss)
    if kss <= 5:
        return ClassLabel.AWAKE
    if kss <= 7:
        return ClassLabel.QUESTIONABLE
    return ClassLabel.DROWSY


def drop_drowsy_start_sessions(
    sessions: Sequence[RawSession],
) -> tuple[list[RawSession], list[tuple[str, int]]]:
    """Remove sessions already drowsy (binary binning) at t = 0.

    Returns the retained sessions and a report of (session_id, starting kss)
    for each exclusion.
    """
    kept: list[RawSession] = []
    excluded: list[tuple[str, int]] = []
    for ses in sessions:
        start_kss = kss_at(ses, 0.0)
        if bin_kss_binary(start_kss) is ClassLabel.DROWSY:
            excluded.append((ses.session_id, start_kss))
        else:
            kept.append(ses)
    if excluded:
        logger.info(
            "excluded %d drowsy-start session(s): %s",
            len(excluded),
            ", ".join(sid for sid, _ in excluded),
        )
    return kept, excluded


@dataclass(frozen=True)
class LabeledSample:
    """One row of the dataset in object form."""

    subject_id: str
    session_id: str
    t_center_s: float
    features: FeatureVector
    kss: int
    label_binary: ClassLabel
    label_multi: ClassLabel


class AccessLog:
    """Records which dataset rows were read, under what named scope."""

    def __init__(self):
        self.events: list[tuple[str, str, tuple[int, ...]]] = []
        self._scope = ""

    @contextmanager
    def scope(self, name: str):
        prev = self._scope
        self._scope = name
        try:
            yield self
        finally:
            self._scope = prev

    def record(self, kind: str, indices) -> None:
        self.events.append((self._scope, kind, tuple(int(i) for i in np.atleast_1d(indices))))

    def indices_in_scope(self, scope_name: str) -> set[int]:
        out: set[int] = set()
        for scope, _, idx in self.events:
            if scope == scope_name:
                out.update(idx)
        return out


def fit_scope(held_out_session: str) -> str:
    """Scope name every fold's training-phase reads must run under."""
    return f"fold:{held_out_session}:fit"


def predict_scope(held_out_session: str) -> str:
    return f"fold:{held_out_session}:predict"


class LabeledDataset:
    """Columnar labeled samples; feature rows are reached only via accessors."""

    __slots__ = (
        "subject_ids",
        "session_ids",
        "t_center_s",
        "kss",
        "y_binary",
        "y_multi",
        "_X",
        "_log",
    )

    def __init__(self, subject_ids, session_ids, t_center_s, kss, features):
        self.subject_ids = tuple(str(s) for s in subject_ids)
        self.session_ids = tuple(str(s) for s in session_ids)
        t = np.asarray(t_center_s, dtype=float).copy()
        k = np.asarray(kss, dtype=int).copy()
        X = np.asarray(features, dtype=float).copy()
        n = len(self.subject_ids)
        if not (len(self.session_ids) == len(t) == len(k) == len(X) == n):
            raise InvalidParameterError("dataset columns must share one length")
        if X.ndim != 2 or X.shape[1] != N_FEATURES:
            raise InvalidParameterError(f"feature matrix must have {N_FEATURES} columns")
        self.y_binary = np.array([int(bin_kss_binary(x)) for x in k], dtype=int)
        self.y_multi = np.array([int(bin_kss_multi(x)) for x in k], dtype=int)
        for arr in (t, k, X, self.y_binary, self.y_multi):
            arr.setflags(write=False)
        self.t_center_s = t
        self.kss = k
        self._X = X
        self._log = None

    def __len__(self) -> int:
        return len(self.subject_ids)

    @property
    def n_features(self) -> int:
        return self._X.shape[1]

    def attach_log(self, log: AccessLog | None) -> None:
        self._log = log

    @property
    def access_log(self) -> AccessLog | None:
        return self._log

    def _note(self, kind: str, indices) -> None:
        if self._log is not None:
            self._log.record(kind, indices)

    def feature_rows(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=int)
        self._note("features", idx)
        return self._X[idx]

    def binary_labels(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=int)
        self._note("labels", idx)
        return self.y_binary[idx]

    def multi_labels(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=int)
        self._note("labels", idx)
        return self.y_multi[idx]

    def sample(self, i: int) -> LabeledSample:
        self._note("features", [i])
        fv = FeatureVector(float(self.t_center_s[i]), self._X[i])
        return LabeledSample(
            subject_id=self.subject_ids[i],
            session_id=self.session_ids[i],
            t_center_s=float(self.t_center_s[i]),
            features=fv,
            kss=int(self.kss[i]),
            label_binary=ClassLabel(self.y_binary[i]),
            label_multi=ClassLabel(self.y_multi[i]),
        )

    def session_order(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(self.session_ids))

    def subject_for_session(self, session_id: str) -> str:
        for subj, sid in zip(self.subject_ids, self.session_ids):
            if sid == session_id:
                return subj
        raise InvalidParameterError(f"unknown session id {session_id!r}")

    def indices_of_session(self, session_id: str) -> np.ndarray:
        return np.flatnonzero(np.array([s == session_id for s in self.session_ids]))


def from_session_windows(
    entries: Iterable[tuple[str, str, Sequence[WindowRow]]],
) -> LabeledDataset:
    """Assemble window rows from many sessions, dropping all-missing windows."""
    subjects: list[str] = []
    sessions: list[str] = []
    t_centers: list[float] = []
    kss: list[int] = []
    vectors: list[np.ndarray] = []
    dropped = 0
    for subject_id, session_id, rows in entries:
        for row in rows:
            if not row.vector.valid.any():
                dropped += 1
                continue
            subjects.append(subject_id)
            sessions.append(session_id)
            t_centers.append(float(row.t_center_s))
            kss.append(int(row.kss))
            vectors.append(row.vector.values)
    if dropped:
        logger.info("dropped %d all-missing window(s) at dataset assembly", dropped)
    if not vectors:
        raise InvalidParameterError("no usable windows to assemble a dataset from")
    return LabeledDataset(subjects, sessions, t_centers, kss, np.vstack(vectors))


@dataclass(frozen=True)
class ScalingParams:
    """Per-feature standardization fitted on awake training rows only."""

    mean: np.ndarray
    std: np.ndarray
    retained: np.ndarray
    dropped: tuple[str, ...]

    def __post_init__(self):
        for field in ("mean", "std", "retained"):
            arr = np.asarray(getattr(self, field))
            if arr.shape != (N_FEATURES,):
                raise InvalidParameterError(f"scaling {field} must have {N_FEATURES} entries")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)


def fit_scaling_arrays(X: np.ndarray, y_binary: np.ndarray) -> ScalingParams:
    """Fit mean/std per feature from rows labeled awake under the binary rule.

    Features with fewer than two awake observations or zero variance are
    dropped from the active set (their standardized column becomes zero).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y_binary, dtype=int)
    awake = X[y == int(ClassLabel.AWAKE)]
    if len(awake) < 2:
        raise ScalingUnavailableError(
            f"need at least 2 awake training samples to fit scaling, got {len(awake)}"
        )
    mean = np.zeros(N_FEATURES)
    std = np.ones(N_FEATURES)
    retained = np.zeros(N_FEATURES, dtype=bool)
    dropped: list[str] = []
    for j in range(N_FEATURES):
        col = awake[:, j]
        obs = col[~np.isnan(col)]
        if len(obs) < 2:
            dropped.append(FEATURE_NAMES[j])
            continue
        m = float(np.mean(obs))
        s = float(np.std(obs))
        if s == 0.0:
            dropped.append(FEATURE_NAMES[j])
            continue
        mean[j], std[j] = m, s
        retained[j] = True
    if dropped:
        logger.info("scaling dropped %d feature(s): %s", len(dropped), ", ".join(dropped))
    if not retained.any():
        raise ScalingUnavailableError("every feature was dropped while fitting scaling")
    return ScalingParams(mean, std, retained, tuple(dropped))


def fit_scaling(dataset: LabeledDataset, train_indices) -> ScalingParams:
    """Logged-accessor variant of fit_scaling_arrays over a training subset."""
    X = dataset.feature_rows(train_indices)
    y = dataset.binary_labels(train_indices)
    return fit_scaling_arrays(X, y)


def apply_scaling(X: np.ndarray, params: ScalingParams) -> np.ndarray:
    """Standardize a feature matrix; dropped columns and missing values become 0."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = (X - params.mean) / params.std
    out[:, ~params.retained] = 0.0
    out[np.isnan(out)] = 0.0
    return out


def inverse_scaling(Xs: np.ndarray, params: ScalingParams) -> np.ndarray:
    """Undo apply_scaling on retained features; dropped columns return NaN."""
    Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
    out = Xs * params.std + params.mean
    out[:, ~params.retained] = np.nan
    return out


@dataclass(frozen=True)
class FoldSplit:
    """One leave-one-session-out fold."""

    held_out_session: str
    train: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for field in ("train", "test"):
            arr = np.asarray(getattr(self, field), dtype=int).copy()
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)


def loso_splits(dataset: LabeledDataset) -> list[FoldSplit]:
    """One fold per session; all sessions of the held-out subject leave training."""
    order = dataset.session_order()
    if len(order) < 2:
        raise CannotSplitError(f"need at least 2 sessions to split, got {len(order)}")
    subjects = np.array(dataset.subject_ids)
    sessions = np.array(dataset.session_ids)
    folds = []
    for sid in order:
        subj = dataset.subject_for_session(sid)
        test = np.flatnonzero(sessions == sid)
        train = np.flatnonzero(subjects != subj)
        folds.append(FoldSplit(held_out_session=sid, train=train, test=test))
    return folds


def audit_fold_leakage(log: AccessLog, folds: Sequence[FoldSplit]) -> list[str]:
    """Check that no fold's fit-scope reads touched its held-out rows."""
    violations = []
    for fold in folds:
        test_rows = set(int(i) for i in fold.test)
        touched = log.indices_in_scope(fit_scope(fold.held_out_session))
        bad = sorted(test_rows & touched)
        if bad:
            violations.append(
                f"fold {fold.held_out_session}: fit phase read held-out rows {bad}"
            )
    return violations


LABELED_CSV_HEADER: tuple[str, ...] = (*FEATURE_CSV_HEADER, "label_binary", "label_multi")


def _cell(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def write_labeled_csv(path, dataset: LabeledDataset) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LABELED_CSV_HEADER)
        for i in range(len(dataset)):
            s = dataset.sample(i)
            w.writerow(
                [
                    s.subject_id,
                    s.session_id,
                    repr(float(s.t_center_s)),
                    str(s.kss),
                    *[_cell(x) for x in s.features.values],
                    s.label_binary.tag,
                    s.label_multi.tag,
                ]
            )


def read_labeled_csv(path) -> LabeledDataset:
    subjects, sessions, t_centers, kss = [], [], [], []
    vectors = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != LABELED_CSV_HEADER:
            raise InvalidParameterError(f"unexpected labeled CSV header in {path}")
        for rec in reader:
            subjects.append(rec[0])
            sessions.append(rec[1])
            t_centers.append(float(rec[2]))
            kss.append(int(rec[3]))
            vectors.append([float(c) if c else math.nan for c in rec[4 : 4 + N_FEATURES]])
            bin_tag, multi_tag = rec[4 + N_FEATURES], rec[5 + N_FEATURES]
            if bin_tag not in _TAG_TO_LABEL or multi_tag not in _TAG_TO_LABEL:
                raise InvalidLabelError(f"unknown class tag in {path}: {bin_tag!r}/{multi_tag!r}")
    ds = LabeledDataset(subjects, sessions, t_centers, kss, np.array(vectors, dtype=float))
    return ds


def write_fold_manifest(path, folds: Sequence[FoldSplit], dataset: LabeledDataset) -> None:
    """Emit a text manifest naming the sessions on each side of every fold."""
    sessions = np.array(dataset.session_ids)
    with open(path, "w") as fh:
        fh.write("fold_index,held_out_session,n_test,train_sessions\n")
        for i, fold in enumerate(folds):
            train_sessions = sorted(set(sessions[fold.train]))
            fh.write(
                f"{i},{fold.held_out_session},{len(fold.test)},{';'.join(train_sessions)}\n"
            )
