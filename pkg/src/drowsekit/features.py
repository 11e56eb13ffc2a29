"""Sliding-window feature extraction.

Turns a session's blink events, eye-closure trace, and head-pose signal into
fixed-length vectors on a sliding window. Each vector holds 35 features in a
frozen catalog order: per-blink descriptors compressed to window mean and
standard deviation, eye-closure percentage statistics, eyelid opening, and
head-movement event rates. Missing values are carried as NaN, never as zero.

Windows whose masked (low-confidence) spans exceed ``max_masked_gap_s`` are
invalidated wholesale. Windows with fewer than two describable blinks keep
their sample-based features but mark every blink-derived feature missing.

Baselining subtracts the per-feature mean of the windows that fit entirely
inside the first ``baseline_s`` seconds, expressing every later window as a
delta against the driver's rested state at the start of the drive.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .blinks import Blink, BlinkDescriptors, describe_all, eyelid_cleft
from .errors import BaselineUnavailableError, InvalidParameterError
from .signals import DEFAULT_IRIS_MM, EyeSignal, HeadSignal, RawSession, kss_at

logger = logging.getLogger(__name__)

_TIME_EPS = 1e-6  # follows grid timestamps through float rounding

_CATALOG: tuple[tuple[str, str], ...] = (
    ("blink_rate_per_min", "frequency"),
    ("blink_duration_mean_s", "time"),
    ("blink_duration_std_s", "time"),
    ("closing_duration_mean_s", "time"),
    ("closing_duration_std_s", "time"),
    ("opening_duration_mean_s", "time"),
    ("opening_duration_std_s", "time"),
    ("reopening_duration_mean_s", "time"),
    ("reopening_duration_std_s", "time"),
    ("plateau_duration_mean_s", "time"),
    ("amplitude_mean", "amplitude"),
    ("amplitude_std", "amplitude"),
    ("reopening_amplitude_mean", "amplitude"),
    ("avg_closing_velocity_mean", "velocity"),
    ("avg_closing_velocity_std", "velocity"),
    ("avg_opening_velocity_mean", "velocity"),
    ("avg_opening_velocity_std", "velocity"),
    ("peak_closing_velocity_mean", "velocity"),
    ("peak_opening_velocity_mean", "velocity"),
    ("avr_closing_mean_s", "amplitude-velocity-ratio"),
    ("avr_closing_std_s", "amplitude-velocity-ratio"),
    ("avr_opening_mean_s", "amplitude-velocity-ratio"),
    ("avr_opening_std_s", "amplitude-velocity-ratio"),
    ("blink_area_mean", "percentage"),
    ("blink_area_std", "percentage"),
    ("blink_form_skewness_mean", "blink-form"),
    ("perclos1", "perclos"),
    ("perclos1_subwindow_std", "perclos"),
    ("perclos2_mean", "perclos"),
    ("perclos2_std", "perclos"),
    ("eyelid_cleft_mean_mm", "eyelid"),
    ("nodding_rate_per_min", "head-movement"),
    ("bobbing_rate_per_min", "head-movement"),
    ("head_pitch_std_deg", "head-movement"),
    ("head_roll_std_deg", "head-movement"),
)

FEATURE_NAMES: tuple[str, ...] = tuple(name for name, _ in _CATALOG)
FEATURE_CATEGORIES: dict[str, str] = dict(_CATALOG)
FEATURE_INDEX: dict[str, int] = {name: i for i, name in enumerate(FEATURE_NAMES)}
N_FEATURES = len(FEATURE_NAMES)

CATEGORY_NAMES: tuple[str, ...] = tuple(dict.fromkeys(cat for _, cat in _CATALOG))

NON_BLINK_FEATURES = frozenset(
    {
        "perclos1",
        "perclos1_subwindow_std",
        "eyelid_cleft_mean_mm",
        "nodding_rate_per_min",
        "bobbing_rate_per_min",
        "head_pitch_std_deg",
        "head_roll_std_deg",
    }
)
BLINK_DERIVED_FEATURES = frozenset(FEATURE_NAMES) - NON_BLINK_FEATURES

# descriptor field -> (mean feature, std feature or None)
_AGGREGATES: tuple[tuple[str, str, str | None], ...] = (
    ("duration_s", "blink_duration_mean_s", "blink_duration_std_s"),
    ("closing_duration_s", "closing_duration_mean_s", "closing_duration_std_s"),
    ("opening_duration_s", "opening_duration_mean_s", "opening_duration_std_s"),
    ("reopening_duration_s", "reopening_duration_mean_s", "reopening_duration_std_s"),
    ("plateau_duration_s", "plateau_duration_mean_s", None),
    ("amplitude", "amplitude_mean", "amplitude_std"),
    ("reopening_amplitude", "reopening_amplitude_mean", None),
    ("avg_closing_velocity", "avg_closing_velocity_mean", "avg_closing_velocity_std"),
    ("avg_opening_velocity", "avg_opening_velocity_mean", "avg_opening_velocity_std"),
    ("peak_closing_velocity", "peak_closing_velocity_mean", None),
    ("peak_opening_velocity", "peak_opening_velocity_mean", None),
    ("avr_closing", "avr_closing_mean_s", "avr_closing_std_s"),
    ("avr_opening", "avr_opening_mean_s", "avr_opening_std_s"),
    ("area", "blink_area_mean", "blink_area_std"),
    ("form_skewness", "blink_form_skewness_mean", None),
)


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window geometry and validity thresholds."""

    width_s: float = 600.0
    step_s: float = 60.0
    baseline_s: float = 600.0
    subwindow_s: float = 60.0
    max_masked_gap_s: float = 2.0

    def validate(self) -> None:
        if self.width_s <= 0:
            raise InvalidParameterError("width_s must be positive")
        if not 0 < self.step_s <= self.width_s:
            raise InvalidParameterError("step_s must be in (0, width_s]")
        if self.baseline_s <= 0:
            raise InvalidParameterError("baseline_s must be positive")
        if not 0 < self.subwindow_s <= self.width_s:
            raise InvalidParameterError("subwindow_s must be in (0, width_s]")
        if self.max_masked_gap_s <= 0:
            raise InvalidParameterError("max_masked_gap_s must be positive")


@dataclass(frozen=True)
class FeatureVector:
    """One window's feature values in catalog order; NaN marks a missing value."""

    t_center_s: float
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != (N_FEATURES,):
            raise InvalidParameterError(f"feature vector must have {N_FEATURES} entries")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def value(self, name: str) -> float:
        return float(self.values[FEATURE_INDEX[name]])


class WindowRow(NamedTuple):
    t_center_s: float
    vector: FeatureVector
    kss: int


@dataclass(frozen=True)
class BaselineParams:
    """Per-feature rested-state means; NaN where no baseline window had the feature."""

    values: np.ndarray
    n_windows: int

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != (N_FEATURES,):
            raise InvalidParameterError(f"baseline must have {N_FEATURES} entries")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def missing_features(self) -> tuple[str, ...]:
        return tuple(n for n, v in zip(FEATURE_NAMES, self.values) if math.isnan(v))


def perclos1(eye: EyeSignal, closed_threshold: float = 0.8) -> float:
    """Fraction of valid sample time the eye is more than 80% closed."""
    n_valid = int(np.count_nonzero(eye.valid))
    if n_valid == 0:
        return math.nan
    n_closed = int(np.count_nonzero(eye.closure[eye.valid] > closed_threshold))
    return n_closed / n_valid


def perclos2(eye: EyeSignal, blinks: Sequence[Blink], closed_threshold: float = 0.8) -> float:
    """Closure fraction normalized by the mean blink duration (1/seconds)."""
    if not blinks:
        return math.nan
    p1 = perclos1(eye, closed_threshold)
    if math.isnan(p1):
        return math.nan
    mean_duration = sum(b.duration_s for b in blinks) / len(blinks)
    return p1 / mean_duration


def head_movement_features(
    head: HeadSignal,
    duration_s: float,
    excursion_deg: float = 2.0,
    max_event_s: float = 2.0,
) -> tuple[float, float]:
    """Nodding and bobbing rates: brief pitch/roll excursions per minute.

    An event is a contiguous run of samples deviating more than
    ``excursion_deg`` from the window median and lasting under ``max_event_s``.
    Longer deviations count as posture changes, not head drops.
    """
    if duration_s <= 0:
        raise InvalidParameterError("duration_s must be positive")
    if len(head) == 0:
        return math.nan, math.nan
    minutes = duration_s / 60.0
    nod = _excursion_rate(head.t_s, head.pitch_deg, minutes, excursion_deg, max_event_s)
    bob = _excursion_rate(head.t_s, head.roll_deg, minutes, excursion_deg, max_event_s)
    return nod, bob


def _excursion_rate(t, x, minutes, excursion_deg, max_event_s) -> float:
    over = np.abs(x - np.median(x)) > excursion_deg
    if not over.any():
        return 0.0
    period = float(np.median(np.diff(t))) if len(t) > 1 else max_event_s
    padded = np.concatenate(([False], over, [False]))
    d = np.diff(padded.astype(np.int8))
    run_starts = np.flatnonzero(d == 1)
    run_ends = np.flatnonzero(d == -1)
    count = int(np.count_nonzero((run_ends - run_starts) * period < max_event_s))
    return count / minutes


def _slice_eye(eye: EyeSignal, t0: float, t1: float) -> EyeSignal:
    a = int(np.searchsorted(eye.t_s, t0 - _TIME_EPS, side="left"))
    b = int(np.searchsorted(eye.t_s, t1 - _TIME_EPS, side="left"))
    return eye[a:b]


def _slice_head(head: HeadSignal, t0: float, t1: float) -> HeadSignal:
    a = int(np.searchsorted(head.t_s, t0 - _TIME_EPS, side="left"))
    b = int(np.searchsorted(head.t_s, t1 - _TIME_EPS, side="left"))
    return head[a:b]


def _longest_masked_run_s(eye: EyeSignal, period: float) -> float:
    invalid = ~eye.valid
    if not invalid.any():
        return 0.0
    padded = np.concatenate(([False], invalid, [False]))
    d = np.diff(padded.astype(np.int8))
    run_starts = np.flatnonzero(d == 1)
    run_ends = np.flatnonzero(d == -1)
    return float((run_ends - run_starts).max() * period)


def window_count(duration_s: float, config: WindowConfig) -> int:
    if duration_s + _TIME_EPS < config.width_s:
        return 0
    return int((duration_s - config.width_s + _TIME_EPS) / config.step_s) + 1


def extract_windows(
    session: RawSession,
    blinks: Sequence[Blink],
    config: WindowConfig = WindowConfig(),
    iris_mm: float = DEFAULT_IRIS_MM,
) -> list[WindowRow]:
    """Compute one 35-entry feature vector per sliding-window position.

    ``blinks`` come from detection on the (already masked) eye signal; blinks
    whose descriptors are degenerate are dropped up front and take no part in
    any feature. Window membership keys on blink onset time. The window label
    is the KSS value in force at the window's end.
    """
    config.validate()
    if iris_mm <= 0:
        raise InvalidParameterError("iris_mm must be positive")
    n = window_count(session.duration_s, config)
    if n == 0:
        return []
    kept, descs = describe_all(session.eye, blinks)
    onsets = np.array([b.t_onset for b in kept], dtype=float)
    offsets = np.array([b.t_offset for b in kept], dtype=float)
    period = 1.0 / session.sample_rate_hz
    rows: list[WindowRow] = []
    for i in range(n):
        t0 = i * config.step_s
        t1 = t0 + config.width_s
        values = _window_vector(
            session.eye, session.head, kept, descs, onsets, offsets, t0, t1, config, iris_mm, period
        )
        t_center = t0 + config.width_s / 2
        rows.append(WindowRow(t_center, FeatureVector(t_center, values), kss_at(session, t1)))
    return rows


def _window_vector(
    eye: EyeSignal,
    head: HeadSignal,
    kept: list[Blink],
    descs: list[BlinkDescriptors],
    onsets: np.ndarray,
    offsets: np.ndarray,
    t0: float,
    t1: float,
    config: WindowConfig,
    iris_mm: float,
    period: float,
) -> np.ndarray:
    v = np.full(N_FEATURES, np.nan)
    eye_w = _slice_eye(eye, t0, t1)
    if len(eye_w) == 0:
        return v
    if _longest_masked_run_s(eye_w, period) > config.max_masked_gap_s:
        logger.debug("window at t0=%.1f invalidated by masked gap", t0)
        return v

    head_w = _slice_head(head, t0, t1)
    if len(head_w):
        nod, bob = head_movement_features(head_w, t1 - t0)
        v[FEATURE_INDEX["nodding_rate_per_min"]] = nod
        v[FEATURE_INDEX["bobbing_rate_per_min"]] = bob
        v[FEATURE_INDEX["head_pitch_std_deg"]] = float(np.std(head_w.pitch_deg))
        v[FEATURE_INDEX["head_roll_std_deg"]] = float(np.std(head_w.roll_deg))

    v[FEATURE_INDEX["perclos1"]] = perclos1(eye_w)

    n_sub = int((config.width_s + _TIME_EPS) // config.subwindow_s)
    sub_bounds = [(t0 + j * config.subwindow_s, t0 + (j + 1) * config.subwindow_s) for j in range(n_sub)]
    p1_subs = [perclos1(_slice_eye(eye, a, b)) for a, b in sub_bounds]
    p1_ok = [x for x in p1_subs if not math.isnan(x)]
    if len(p1_ok) >= 2:
        v[FEATURE_INDEX["perclos1_subwindow_std"]] = float(np.std(p1_ok))

    in_window = (onsets >= t0 - _TIME_EPS) & (onsets < t1 - _TIME_EPS)
    w_blinks = [b for b, m in zip(kept, in_window) if m]
    w_descs = [d for d, m in zip(descs, in_window) if m]

    overlapping = [
        b for b, on, off in zip(kept, onsets, offsets) if off >= t0 - _TIME_EPS and on < t1 - _TIME_EPS
    ]
    v[FEATURE_INDEX["eyelid_cleft_mean_mm"]] = eyelid_cleft(eye_w, overlapping, iris_mm)

    if len(w_blinks) < 2:
        return v

    v[FEATURE_INDEX["blink_rate_per_min"]] = len(w_blinks) / ((t1 - t0) / 60.0)
    for field, mean_name, std_name in _AGGREGATES:
        arr = np.array([getattr(d, field) for d in w_descs], dtype=float)
        v[FEATURE_INDEX[mean_name]] = float(np.mean(arr))
        if std_name is not None:
            v[FEATURE_INDEX[std_name]] = float(np.std(arr))

    p2_vals = []
    for a, b in sub_bounds:
        sub_blinks = [blk for blk in w_blinks if a - _TIME_EPS <= blk.t_onset < b - _TIME_EPS]
        p2 = perclos2(_slice_eye(eye, a, b), sub_blinks)
        if not math.isnan(p2):
            p2_vals.append(p2)
    if p2_vals:
        v[FEATURE_INDEX["perclos2_mean"]] = float(np.mean(p2_vals))
    if len(p2_vals) >= 2:
        v[FEATURE_INDEX["perclos2_std"]] = float(np.std(p2_vals))
    return v


def compute_baseline(rows: Sequence[WindowRow], config: WindowConfig = WindowConfig()) -> BaselineParams:
    """Mean feature vector over the windows lying fully inside the baseline span."""
    config.validate()
    half = config.width_s / 2.0
    qualifying = [
        r.vector.values
        for r in rows
        if r.t_center_s - half >= -_TIME_EPS and r.t_center_s + half <= config.baseline_s + _TIME_EPS
    ]
    if not qualifying:
        raise BaselineUnavailableError(
            f"no window fits inside the first {config.baseline_s:g} s; session cannot be baselined"
        )
    stacked = np.vstack(qualifying)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        values = np.nanmean(stacked, axis=0)
    params = BaselineParams(values, len(qualifying))
    missing = params.missing_features()
    if missing:
        logger.info("baseline missing for %d feature(s): %s", len(missing), ", ".join(missing))
    return params


def apply_baseline(fv: FeatureVector, baseline: BaselineParams) -> FeatureVector:
    """Subtract the rested-state mean; missing stays missing on either side."""
    return FeatureVector(fv.t_center_s, fv.values - baseline.values)


FEATURE_CSV_HEADER: tuple[str, ...] = ("subject_id", "session_id", "t_center_s", "kss", *FEATURE_NAMES)


def _cell(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def write_features_csv(path, subject_id: str, session_id: str, rows: Sequence[WindowRow]) -> None:
    """Write window features for one session; missing values become empty fields."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FEATURE_CSV_HEADER)
        for r in rows:
            w.writerow(
                [subject_id, session_id, repr(float(r.t_center_s)), str(int(r.kss))]
                + [_cell(x) for x in r.vector.values]
            )


def read_features_csv(path) -> list[tuple[str, str, WindowRow]]:
    """Read back rows written by write_features_csv, NaN for empty fields."""
    out: list[tuple[str, str, WindowRow]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != FEATURE_CSV_HEADER:
            raise InvalidParameterError(f"unexpected feature CSV header in {path}")
        for rec in reader:
            subject, session, t_center, kss = rec[0], rec[1], float(rec[2]), int(rec[3])
            values = np.array([float(c) if c else math.nan for c in rec[4:]], dtype=float)
            out.append((subject, session, WindowRow(t_center, FeatureVector(t_center, values), kss)))
    return out
