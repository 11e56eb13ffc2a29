"""Feature-subset search over the window catalog.

Four selectors share one evaluation engine:

* ``cbfs``: correlation filter; greedy forward search on a merit that
  rewards class relevance and penalizes redundancy between features.
* ``sfs``: plain greedy forward wrapper.
* ``sffs`` / ``sfbs``: floating wrappers that interleave conditional
  backward (or forward) steps and stop on subset revisits or length caps.

The wrapper objective is the balanced accuracy of the confusion matrix
pooled over leave-one-subject-out folds; the false-detection rate rides
along and only breaks final ties. Greedy ties resolve to the lower catalog
index, equally good k values to the lower k.

``SubsetEvaluator`` standardizes each fold once, caches per-feature squared
difference tables, and scores every grid k from a single stable neighbor
ordering per subset. Distances accumulate per feature in ascending catalog
order, reproducing the classifier's canonical arithmetic exactly, so engine
results and direct ``evaluate_subset`` calls are interchangeable.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from contextlib import nullcontext
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dataset import (
    ClassLabel,
    LabeledDataset,
    apply_scaling,
    fit_scaling,
    fit_scope,
    loso_splits,
    predict_scope,
)
from .errors import EvaluationError, InvalidParameterError
from .features import FEATURE_NAMES
from .knn import ClassTask, KnnModel, _multi_prediction, check_subset, score_on
from .metrics import MULTI_CLASSES, balanced_accuracy, confusion_from_labels, fdr

logger = logging.getLogger(__name__)

DIAGNOSTIC_K_RANGE = (1, 1000)


@dataclass(frozen=True)
class KGrid:
    """Ordered candidate neighbor counts for the wrapper searches."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = []
        for v in self.values:
            if int(v) != v:
                raise InvalidParameterError("k values must be integers")
            vals.append(int(v))
        if not vals:
            raise InvalidParameterError("k grid must not be empty")
        if vals[0] < 1:
            raise InvalidParameterError("k values must be positive")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise InvalidParameterError("k values must be strictly increasing")
        object.__setattr__(self, "values", tuple(vals))

    @classmethod
    def default(cls) -> "KGrid":
        return cls(tuple(range(50, 401, 25)))

    @classmethod
    def diagnostic(cls, start: int = 1, stop: int = 1000, step: int = 1) -> "KGrid":
        lo, hi = DIAGNOSTIC_K_RANGE
        if not lo <= start <= stop <= hi:
            raise InvalidParameterError(f"diagnostic grid must stay inside [{lo}, {hi}]")
        if step < 1:
            raise InvalidParameterError("step must be positive")
        return cls(tuple(range(start, stop + 1, step)))

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, k) -> bool:
        return k in self.values


_TERMINATIONS = ("exhausted", "loop", "max_len", "min_len")


@dataclass(frozen=True)
class SelectionStep:
    """One accepted search move and the pooled scores after it."""

    action: str
    feature: str
    subset: tuple[int, ...]
    k: int
    ba: float
    fdr: float

    def __post_init__(self):
        if self.action not in ("add", "remove"):
            raise InvalidParameterError(f"unknown step action {self.action!r}")
        object.__setattr__(self, "subset", tuple(int(i) for i in self.subset))


@dataclass(frozen=True)
class SelectionTrace:
    """Accepted steps for one method at one k, plus how the search ended.

    ``start_subset`` is empty for forward searches; the backward search
    starts from the full catalog and records that state's scores here.
    """

    method: str
    task: ClassTask
    k: int
    start_subset: tuple[int, ...]
    start_ba: float
    start_fdr: float
    steps: tuple[SelectionStep, ...]
    termination: str

    def __post_init__(self):
        object.__setattr__(self, "start_subset", tuple(int(i) for i in self.start_subset))
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.termination not in _TERMINATIONS:
            raise InvalidParameterError(f"unknown termination {self.termination!r}")
        prev = set(self.start_subset)
        for step in self.steps:
            cur = set(step.subset)
            if len(prev ^ cur) != 1:
                raise InvalidParameterError("consecutive trace subsets must differ by one feature")
            prev = cur

    def states(self) -> list[tuple[tuple[int, ...], float, float]]:
        """Scored subsets in visit order; the start state first when it was scored."""
        out = []
        if self.start_subset:
            out.append((self.start_subset, self.start_ba, self.start_fdr))
        for s in self.steps:
            out.append((s.subset, s.ba, s.fdr))
        return out


@dataclass(frozen=True)
class SelectionResult:
    """Best subset found at one k; re-evaluating it reproduces (ba, fdr)."""

    best_subset: tuple[str, ...]
    best_indices: tuple[int, ...]
    best_k: int
    ba: float
    fdr: float
    trace: SelectionTrace


@dataclass(frozen=True)
class SearchReport:
    """Per-k results of one search method plus the winner across the grid."""

    method: str
    task: ClassTask
    results: tuple[SelectionResult, ...]
    best: SelectionResult


class _Fold:
    __slots__ = ("held_out", "X_train", "y_train", "X_test", "y_test", "sq_tables")

    def __init__(self, held_out, X_train, y_train, X_test, y_test):
        self.held_out = held_out
        self.X_train = X_train
        self.y_train = y_train
        self.X_test = X_test
        self.y_test = y_test
        self.sq_tables: dict[int, np.ndarray] = {}


def _scoped(log, name: str):
    return log.scope(name) if log is not None else nullcontext()


class SubsetEvaluator:
    """Scores feature subsets with leave-one-subject-out pooling.

    Folds are standardized once at construction; per-feature squared
    difference tables and per-(subset, k) results are cached, so greedy
    scans that share prefixes or revisit subsets across k pay once.
    """

    def __init__(
        self,
        dataset: LabeledDataset,
        task: ClassTask,
        ks: Iterable[int] | KGrid,
        threshold: float = 0.5,
        test_sessions: Iterable[str] | None = None,
    ):
        if not 0.0 <= threshold <= 1.0:
            raise InvalidParameterError("threshold must lie in [0, 1]")
        values = ks.values if isinstance(ks, KGrid) else tuple(int(k) for k in ks)
        if not values or any(k < 1 for k in values):
            raise InvalidParameterError("k grid must hold positive integers")
        self.task = task
        self.threshold = float(threshold)
        self.ks = tuple(dict.fromkeys(values))
        self._ks_set = set(self.ks)
        self.n_features = dataset.n_features
        log = dataset.access_log
        labels_of = dataset.binary_labels if task is ClassTask.BINARY else dataset.multi_labels
        keep = None if test_sessions is None else {str(s) for s in test_sessions}
        self._folds: list[_Fold] = []
        for fold in loso_splits(dataset):
            if keep is not None and fold.held_out_session not in keep:
                continue
            with _scoped(log, fit_scope(fold.held_out_session)):
                params = fit_scaling(dataset, fold.train)
                X_tr = apply_scaling(dataset.feature_rows(fold.train), params)
                y_tr = labels_of(fold.train)
            with _scoped(log, predict_scope(fold.held_out_session)):
                X_te = apply_scaling(dataset.feature_rows(fold.test), params)
                y_te = labels_of(fold.test)
            self._folds.append(_Fold(fold.held_out_session, X_tr, y_tr, X_te, y_te))
        if not self._folds:
            raise InvalidParameterError("test_sessions excludes every fold")
        for k in self.ks:
            for f in self._folds:
                if k > len(f.X_train):
                    logger.info(
                        "fold %s: skipped for k=%d (%d training rows)", f.held_out, k, len(f.X_train)
                    )
        self._cache: dict[frozenset, dict[int, tuple[float, float] | None]] = {}

    @property
    def max_feasible_k(self) -> int:
        return max(len(f.X_train) for f in self._folds)

    def _sq_table(self, fold: _Fold, j: int) -> np.ndarray:
        tbl = fold.sq_tables.get(j)
        if tbl is None:
            diff = fold.X_test[:, j][:, None] - fold.X_train[:, j][None, :]
            tbl = diff * diff
            fold.sq_tables[j] = tbl
        return tbl

    def _evaluate_all(self, subset: tuple[int, ...]) -> dict[int, tuple[float, float] | None]:
        classes = self.task.classes
        totals = {k: None for k in self.ks}
        for fold in self._folds:
            n_train = len(fold.X_train)
            # canonical arithmetic: zero matrix plus per-feature tables in
            # ascending catalog order, exactly as squared_distances does
            d2 = np.zeros((len(fold.X_test), n_train))
            for j in subset:
                d2 += self._sq_table(fold, j)
            order = np.argsort(d2, axis=1, kind="stable")
            labels_sorted = fold.y_train[order]
            if self.task is ClassTask.BINARY:
                drowsy_cum = np.cumsum(labels_sorted == int(ClassLabel.DROWSY), axis=1)
                cums = None
            else:
                cums = [np.cumsum(labels_sorted == int(c), axis=1) for c in MULTI_CLASSES]
            for k in self.ks:
                if k > n_train:
                    continue
                if self.task is ClassTask.BINARY:
                    score = drowsy_cum[:, k - 1] / k
                    y_pred = np.where(
                        score >= self.threshold, int(ClassLabel.DROWSY), int(ClassLabel.AWAKE)
                    )
                else:
                    counts = np.stack([c[:, k - 1] for c in cums])
                    y_pred = np.array(
                        [int(MULTI_CLASSES[i]) for i in np.argmax(counts, axis=0)], dtype=int
                    )
                    # plurality ties defer to the classifier's own tie rule
                    tied = np.flatnonzero((counts == counts.max(axis=0)).sum(axis=0) > 1)
                    for i in tied:
                        dists = np.sqrt(d2[i, order[i, :k]])
                        y_pred[i] = int(_multi_prediction(labels_sorted[i, :k], dists, k).label)
                cm = confusion_from_labels(fold.y_test, y_pred, classes)
                totals[k] = cm if totals[k] is None else totals[k] + cm
        return {
            k: None if cm is None else (balanced_accuracy(cm), fdr(cm)) for k, cm in totals.items()
        }

    def evaluate(self, subset: Sequence[int], k: int) -> tuple[float, float]:
        """Pooled (ba, fdr) for one subset at one grid k."""
        sub = tuple(sorted(check_subset(subset, self.n_features)))
        if k not in self._ks_set:
            raise InvalidParameterError(f"k={k} is not on the evaluator grid")
        key = frozenset(sub)
        cached = self._cache.get(key)
        if cached is None:
            cached = self._evaluate_all(sub)
            self._cache[key] = cached
        result = cached[k]
        if result is None:
            raise EvaluationError(
                f"k={k} exceeds every fold's training size (largest is {self.max_feasible_k})"
            )
        return result


def evaluate_subset_detailed(dataset, subset, k, task, threshold: float = 0.5):
    """Pooled confusion matrix, true labels, and drowsy scores for one subset.

    Fits scaling and a neighbor model per LOSO fold, scores the held-out
    session, and pools the fold matrices. Folds whose training side is
    smaller than k are skipped with a notice.
    """
    sub = check_subset(subset, dataset.n_features)
    if int(k) != k or k < 1:
        raise InvalidParameterError("k must be a positive integer")
    k = int(k)
    if not 0.0 <= threshold <= 1.0:
        raise InvalidParameterError("threshold must lie in [0, 1]")
    log = dataset.access_log
    labels_of = dataset.binary_labels if task is ClassTask.BINARY else dataset.multi_labels
    total = None
    y_parts = []
    s_parts = []
    for fold in loso_splits(dataset):
        if k > len(fold.train):
            logger.info(
                "fold %s: skipped for k=%d (%d training rows)",
                fold.held_out_session, k, len(fold.train),
            )
            continue
        with _scoped(log, fit_scope(fold.held_out_session)):
            params = fit_scaling(dataset, fold.train)
            X_tr = apply_scaling(dataset.feature_rows(fold.train), params)
            y_tr = labels_of(fold.train)
        model = KnnModel(k=k, feature_subset=sub, train_matrix=X_tr, train_labels=y_tr, task=task)
        with _scoped(log, predict_scope(fold.held_out_session)):
            X_te = apply_scaling(dataset.feature_rows(fold.test), params)
            y_te = labels_of(fold.test)
        cm, scores = score_on(model, X_te, y_te, threshold)
        total = cm if total is None else total + cm
        y_parts.append(y_te)
        s_parts.append(scores)
    if total is None:
        raise EvaluationError(f"k={k} exceeds every fold's training size")
    return total, np.concatenate(y_parts), np.concatenate(s_parts)


def evaluate_subset(dataset, subset, k, task, threshold: float = 0.5) -> tuple[float, float]:
    """Balanced accuracy and false-detection rate pooled over LOSO folds."""
    cm, _, _ = evaluate_subset_detailed(dataset, subset, k, task, threshold)
    return balanced_accuracy(cm), fdr(cm)


# --- correlation filter -----------------------------------------------------


def _abs_pearson(x: np.ndarray, y: np.ndarray) -> float:
    """|Pearson r| over rows where both are finite; NaN when degenerate."""
    m = np.isfinite(x) & np.isfinite(y)
    if np.count_nonzero(m) < 2:
        return math.nan
    xv = x[m]
    yv = y[m]
    sx = float(np.std(xv))
    sy = float(np.std(yv))
    if sx == 0.0 or sy == 0.0:
        return math.nan
    cov = float(np.mean((xv - np.mean(xv)) * (yv - np.mean(yv))))
    return abs(cov / (sx * sy))


def _class_vector(dataset: LabeledDataset, task: ClassTask) -> np.ndarray:
    if task is ClassTask.BINARY:
        return (dataset.y_binary == int(ClassLabel.DROWSY)).astype(float)
    return dataset.y_multi.astype(float)


def _merit_value(rcf_sum: float, rff_sum: float, n: int) -> float:
    # n * mean_rcf / sqrt(n + n(n-1) * mean_rff) with the pair mean taken
    # over the n(n-1)/2 unordered pairs, which collapses to the form below
    return rcf_sum / math.sqrt(n + 2.0 * rff_sum)


def _subset_merit(sub_sorted: Sequence[int], rcf, rff) -> float:
    rcf_sum = 0.0
    for j in sub_sorted:
        rcf_sum += rcf[j]
    rff_sum = 0.0
    for a in range(len(sub_sorted)):
        for b in range(a + 1, len(sub_sorted)):
            rff_sum += rff(sub_sorted[a], sub_sorted[b])
    return _merit_value(rcf_sum, rff_sum, len(sub_sorted))


@dataclass(frozen=True)
class CbfsResult:
    """Inclusion order of the filter with the merit after each inclusion."""

    order: tuple[int, ...]
    names: tuple[str, ...]
    merits: tuple[float, ...]
    skipped: tuple[int, ...]


def cbfs_merit(dataset: LabeledDataset, subset, task: ClassTask) -> float:
    """Merit of a subset: class relevance over redundancy.

    Correlations are Pearson over pairwise-complete rows against the class
    encoded 0/1 (binary) or 0/1/2 (multiclass). An undefined feature-class
    correlation makes the merit NaN; undefined pair correlations count as 0.
    """
    sub = tuple(sorted(check_subset(subset, dataset.n_features)))
    X = dataset.feature_rows(np.arange(len(dataset)))
    yv = _class_vector(dataset, task)
    rcf = {j: _abs_pearson(X[:, j], yv) for j in sub}
    if any(math.isnan(r) for r in rcf.values()):
        return math.nan

    def rff(a: int, b: int) -> float:
        r = _abs_pearson(X[:, a], X[:, b])
        return 0.0 if math.isnan(r) else r

    return _subset_merit(sub, rcf, rff)


def cbfs(dataset: LabeledDataset, task: ClassTask, *, catalog=None) -> CbfsResult:
    """Greedy forward filter on the correlation merit; stops when it stalls.

    Constant (or otherwise degenerate) features are skipped with a notice.
    Each step adds the candidate with the highest merit, ties toward the
    lower catalog index, and the search stops as soon as no candidate
    strictly improves the merit.
    """
    pool = range(dataset.n_features) if catalog is None else catalog
    cat = tuple(sorted(check_subset(pool, dataset.n_features)))
    X = dataset.feature_rows(np.arange(len(dataset)))
    yv = _class_vector(dataset, task)
    rcf: dict[int, float] = {}
    skipped = []
    for j in cat:
        r = _abs_pearson(X[:, j], yv)
        if math.isnan(r):
            skipped.append(j)
            logger.info("cbfs: feature %s skipped (degenerate correlation)", FEATURE_NAMES[j])
        else:
            rcf[j] = r
    if not rcf:
        raise InvalidParameterError("cbfs needs at least one non-constant feature")

    pair_cache: dict[tuple[int, int], float] = {}

    def rff(a: int, b: int) -> float:
        key = (a, b) if a < b else (b, a)
        val = pair_cache.get(key)
        if val is None:
            r = _abs_pearson(X[:, key[0]], X[:, key[1]])
            val = 0.0 if math.isnan(r) else r
            pair_cache[key] = val
        return val

    selected: list[int] = []
    merits: list[float] = []
    current = -math.inf
    while True:
        best = None
        for j in cat:
            if j in rcf and j not in selected:
                m = _subset_merit(sorted(selected + [j]), rcf, rff)
                if best is None or m > best[0]:
                    best = (m, j)
        if best is None or best[0] <= current:
            break
        current = best[0]
        selected.append(best[1])
        merits.append(best[0])
    return CbfsResult(
        tuple(selected),
        tuple(FEATURE_NAMES[j] for j in selected),
        tuple(merits),
        tuple(skipped),
    )


# --- greedy wrappers ---------------------------------------------------------


def _best_addition(ev, k: int, subset: tuple[int, ...], candidates):
    """Highest-BA single addition; ties go to the lower catalog index."""
    best = None
    for j in candidates:
        trial = tuple(sorted(subset + (j,)))
        ba, fdr_value = ev.evaluate(trial, k)
        if best is None or ba > best[0]:
            best = (ba, fdr_value, j, trial)
    return best


def _best_removal(ev, k: int, subset: tuple[int, ...], candidates):
    """Highest-BA single removal; ties go to the lower catalog index."""
    best = None
    for j in candidates:
        trial = tuple(i for i in subset if i != j)
        ba, fdr_value = ev.evaluate(trial, k)
        if best is None or ba > best[0]:
            best = (ba, fdr_value, j, trial)
    return best


def _sfs_trace(ev, k: int, cat: tuple[int, ...]) -> SelectionTrace:
    subset: tuple[int, ...] = ()
    steps = []
    while len(subset) < len(cat):
        ba, fdr_value, j, subset = _best_addition(
            ev, k, subset, [c for c in cat if c not in subset]
        )
        steps.append(SelectionStep("add", FEATURE_NAMES[j], subset, k, ba, fdr_value))
    return SelectionTrace("sfs", ev.task, k, (), math.nan, math.nan, tuple(steps), "exhausted")


def _sffs_trace(ev, k: int, cat: tuple[int, ...], max_len: int) -> SelectionTrace:
    if not 1 <= max_len <= len(cat):
        raise InvalidParameterError("max_len must lie in [1, catalog size]")
    subset: tuple[int, ...] = ()
    visited = {frozenset()}
    steps: list[SelectionStep] = []
    termination = None
    while termination is None:
        ba, fdr_value, j, subset = _best_addition(
            ev, k, subset, [c for c in cat if c not in subset]
        )
        steps.append(SelectionStep("add", FEATURE_NAMES[j], subset, k, ba, fdr_value))
        key = frozenset(subset)
        if key in visited:
            termination = "loop"
            break
        visited.add(key)
        if len(subset) >= max_len:
            termination = "max_len"
            break
        guarded = j  # the feature just added never backs straight out
        current_ba = ba
        while len(subset) > 1:
            candidates = [r for r in subset if r != guarded]
            if not candidates:
                break
            rba, rfdr, rj, trial = _best_removal(ev, k, subset, candidates)
            if not rba > current_ba:
                break
            subset = trial
            steps.append(SelectionStep("remove", FEATURE_NAMES[rj], subset, k, rba, rfdr))
            key = frozenset(subset)
            if key in visited:
                termination = "loop"
                break
            visited.add(key)
            current_ba = rba
    return SelectionTrace("sffs", ev.task, k, (), math.nan, math.nan, tuple(steps), termination)


def _sfbs_trace(ev, k: int, cat: tuple[int, ...], min_len: int) -> SelectionTrace:
    if min_len < 1:
        raise InvalidParameterError("min_len must be at least 1")
    floor = min(min_len, len(cat))
    subset = tuple(cat)
    start_ba, start_fdr = ev.evaluate(subset, k)
    visited = {frozenset(subset)}
    steps: list[SelectionStep] = []
    termination = "min_len" if len(subset) <= floor else None
    while termination is None:
        ba, fdr_value, j, subset = _best_removal(ev, k, subset, list(subset))
        steps.append(SelectionStep("remove", FEATURE_NAMES[j], subset, k, ba, fdr_value))
        key = frozenset(subset)
        if key in visited:
            termination = "loop"
            break
        visited.add(key)
        if len(subset) <= floor:
            termination = "min_len"
            break
        guarded = j  # the feature just removed never comes straight back
        current_ba = ba
        while len(subset) < len(cat):
            candidates = [c for c in cat if c not in subset and c != guarded]
            if not candidates:
                break
            aba, afdr, aj, trial = _best_addition(ev, k, subset, candidates)
            if not aba > current_ba:
                break
            subset = trial
            steps.append(SelectionStep("add", FEATURE_NAMES[aj], subset, k, aba, afdr))
            key = frozenset(subset)
            if key in visited:
                termination = "loop"
                break
            visited.add(key)
            current_ba = aba
    return SelectionTrace(
        "sfbs", ev.task, k, tuple(cat), start_ba, start_fdr, tuple(steps), termination
    )


def _pick_result(trace: SelectionTrace) -> SelectionResult:
    """Best scored state: highest BA, then fewer features, then earlier."""
    best = None
    for subset, ba, fdr_value in trace.states():
        if best is None or ba > best[0] or (ba == best[0] and len(subset) < len(best[1])):
            best = (ba, subset, fdr_value)
    ba, subset, fdr_value = best
    names = tuple(FEATURE_NAMES[j] for j in subset)
    return SelectionResult(names, subset, trace.k, ba, fdr_value, trace)


def _global_best(results: Sequence[SelectionResult]) -> SelectionResult:
    def key(r: SelectionResult):
        ba = math.inf if math.isnan(r.ba) else -r.ba
        f = math.inf if math.isnan(r.fdr) else r.fdr
        return (ba, r.best_k, f)

    return min(results, key=key)


def _as_kgrid(kgrid) -> KGrid:
    return kgrid if isinstance(kgrid, KGrid) else KGrid(tuple(kgrid))


def _resolve_evaluator(dataset, task, kgrid: KGrid, threshold, evaluator):
    if evaluator is None:
        return SubsetEvaluator(dataset, task, kgrid, threshold)
    if evaluator.task is not task:
        raise InvalidParameterError("evaluator task does not match the requested task")
    missing = [k for k in kgrid.values if k not in set(evaluator.ks)]
    if missing:
        raise InvalidParameterError(f"evaluator grid lacks k={missing[0]}")
    return evaluator


def _catalog_of(ev, catalog) -> tuple[int, ...]:
    pool = range(ev.n_features) if catalog is None else catalog
    return tuple(sorted(check_subset(pool, ev.n_features)))


def sfs(dataset, kgrid, task, *, catalog=None, threshold: float = 0.5, evaluator=None) -> SearchReport:
    """Forward wrapper: per k, grow greedily through the whole catalog and
    keep the best prefix (ties toward the shorter one); the global winner
    maximizes BA, then takes the lower k, then the lower FDR.

    Pass ``evaluator`` to reuse a prebuilt engine (and its cache) across
    searches; its threshold then governs.
    """
    grid = _as_kgrid(kgrid)
    ev = _resolve_evaluator(dataset, task, grid, threshold, evaluator)
    cat = _catalog_of(ev, catalog)
    results = tuple(_pick_result(_sfs_trace(ev, k, cat)) for k in grid.values)
    return SearchReport("sfs", ev.task, results, _global_best(results))


def sffs(
    dataset,
    kgrid,
    task,
    max_len: int = 15,
    *,
    catalog=None,
    threshold: float = 0.5,
    evaluator=None,
) -> SearchReport:
    """Floating forward wrapper: after each addition, keep removing features
    while a removal strictly improves BA (never the one just added). The
    search stops on a subset revisit ("loop") or at max_len features.
    """
    grid = _as_kgrid(kgrid)
    ev = _resolve_evaluator(dataset, task, grid, threshold, evaluator)
    cat = _catalog_of(ev, catalog)
    results = tuple(_pick_result(_sffs_trace(ev, k, cat, max_len)) for k in grid.values)
    return SearchReport("sffs", ev.task, results, _global_best(results))


def sfbs(
    dataset,
    kgrid,
    task,
    min_len: int = 5,
    *,
    catalog=None,
    threshold: float = 0.5,
    evaluator=None,
) -> SearchReport:
    """Floating backward wrapper: start from the full catalog, remove the
    least damaging feature per step, and re-add features while an addition
    strictly improves BA (never the one just removed). Stops on a revisit
    or at min_len features; the start state competes for best subset.
    """
    grid = _as_kgrid(kgrid)
    ev = _resolve_evaluator(dataset, task, grid, threshold, evaluator)
    cat = _catalog_of(ev, catalog)
    results = tuple(_pick_result(_sfbs_trace(ev, k, cat, min_len)) for k in grid.values)
    return SearchReport("sfbs", ev.task, results, _global_best(results))


def k_sweep(dataset, subset, task, ks, threshold: float = 0.5, *, evaluator=None):
    """(k, ba, fdr) curve for one subset; k values beyond every fold's
    training size are dropped from the curve with a notice."""
    grid = _as_kgrid(ks)
    ev = _resolve_evaluator(dataset, task, grid, threshold, evaluator)
    cap = ev.max_feasible_k
    dropped = [k for k in grid.values if k > cap]
    if dropped:
        logger.info("k sweep truncated at k=%d (%d values beyond fold capacity)", cap, len(dropped))
    curve = []
    for k in grid.values:
        if k > cap:
            continue
        ba, fdr_value = ev.evaluate(subset, k)
        curve.append((k, ba, fdr_value))
    return curve


def pick_best_k(curve) -> tuple[int, float, float]:
    """Best sweep point: highest BA, then lowest k, then lowest FDR."""
    if not curve:
        raise InvalidParameterError("cannot pick from an empty curve")

    def key(point):
        k, ba, f = point
        return (math.inf if math.isnan(ba) else -ba, k, math.inf if math.isnan(f) else f)

    return min(curve, key=key)


# --- artifacts ---------------------------------------------------------------

TRACE_CSV_HEADER = ("method", "task", "k", "step", "action", "feature", "ba", "fdr")


def _cell(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def write_trace_csv(path, report: SearchReport) -> None:
    """All per-k traces as one flat table; step numbering restarts per k."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_CSV_HEADER)
        for result in report.results:
            for i, s in enumerate(result.trace.steps, start=1):
                writer.writerow(
                    [report.method, report.task.value, s.k, i, s.action, s.feature,
                     _cell(s.ba), _cell(s.fdr)]
                )


def write_result_json(path, report: SearchReport) -> None:
    """Summary of the grid winner: method, k, feature set, BA, FDR."""
    best = report.best
    payload = {
        "method": report.method,
        "task": report.task.value,
        "k": best.best_k,
        "features": list(best.best_subset),
        "n_features": len(best.best_subset),
        "ba": None if math.isnan(best.ba) else best.ba,
        "fdr": None if math.isnan(best.fdr) else best.fdr,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_sweep_csv(path, curve) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("k", "ba", "fdr"))
        for k, ba, fdr_value in curve:
            writer.writerow([k, _cell(ba), _cell(fdr_value)])
