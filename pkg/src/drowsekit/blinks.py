"""Blink detection and per-blink waveform descriptors.

Candidate blinks are segmented with a hysteresis pair of thresholds on the
closure signal (an event arms when closure rises through ``onset_threshold``
and disarms when it falls back through ``onset_threshold - hysteresis``).
Each candidate is then extended outward to the nearest local resting minima,
so a blink spans the full above-baseline excursion: t_onset and t_offset sit
at the resting level, and duration covers closing, plateau, and the whole
recovery. Events outside the [min, max] duration band are discarded, as are
events that cannot produce well-formed descriptors.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateBlinkError, InvalidParameterError
from .signals import DEFAULT_IRIS_MM, EyeSignal

logger = logging.getLogger(__name__)

PLATEAU_FRACTION = 0.95  # samples at >= this fraction of peak closure form the plateau


@dataclass(frozen=True)
class BlinkParams:
    """Detection thresholds and duration band."""

    onset_threshold: float = 0.5
    full_closure_threshold: float = 0.8  # closure above which the eye counts as fully shut
    hysteresis: float = 0.1
    min_duration_s: float = 0.05
    max_duration_s: float = 4.0

    def validate(self) -> None:
        if not 0.0 < self.onset_threshold < 1.0:
            raise InvalidParameterError(f"onset_threshold must lie in (0, 1), got {self.onset_threshold}")
        if not self.onset_threshold < self.full_closure_threshold <= 1.0:
            raise InvalidParameterError(
                "full_closure_threshold must lie in (onset_threshold, 1], got "
                f"{self.full_closure_threshold}"
            )
        if not 0.0 < self.hysteresis < self.onset_threshold:
            raise InvalidParameterError(f"hysteresis must lie in (0, onset_threshold), got {self.hysteresis}")
        if not 0.0 < self.min_duration_s < self.max_duration_s:
            raise InvalidParameterError(
                f"need 0 < min_duration_s < max_duration_s, got {self.min_duration_s}, {self.max_duration_s}"
            )


@dataclass(frozen=True)
class Blink:
    """One detected blink event. Timestamps are in seconds.

    t_onset/t_offset mark the local resting level around the excursion;
    t_peak_start/t_peak_end bound the maximal-closure plateau.
    """

    t_onset: float
    t_peak_start: float
    t_peak_end: float
    t_offset: float
    baseline_closure: float
    peak_closure: float

    @property
    def duration_s(self) -> float:
        return self.t_offset - self.t_onset


@dataclass(frozen=True)
class BlinkDescriptors:
    """Waveform descriptors for one blink.

    Velocities are in closure fraction per second, the area in fraction
    seconds. avr_* are amplitude-velocity ratios (seconds). The three extra
    shape fields (plateau duration, reopening amplitude, form skewness) feed
    the window-level feature catalog.
    """

    duration_s: float
    closing_duration_s: float
    opening_duration_s: float
    reopening_duration_s: float
    amplitude: float
    avg_closing_velocity: float
    avg_opening_velocity: float
    peak_closing_velocity: float
    peak_opening_velocity: float
    avr_closing: float
    avr_opening: float
    area: float
    plateau_duration_s: float
    reopening_amplitude: float
    form_skewness: float


def _cross_time(t0, c0, t1, c1, level) -> float:
    # linear interpolation of the level crossing between two samples
    if c1 == c0:
        return t0
    return t0 + (level - c0) / (c1 - c0) * (t1 - t0)


def _valid_runs(valid: np.ndarray):
    """Yield (start, stop) index pairs of contiguous valid spans."""
    if not valid.any():
        return
    v = valid.astype(np.int8)
    edges = np.diff(v)
    starts = list(np.flatnonzero(edges == 1) + 1)
    stops = list(np.flatnonzero(edges == -1) + 1)
    if v[0]:
        starts.insert(0, 0)
    if v[-1]:
        stops.append(len(valid))
    yield from zip(starts, stops)


def detect_blinks(eye: EyeSignal, params: BlinkParams = BlinkParams()) -> list[Blink]:
    """Detect blinks on the valid portion of an eye-closure signal.

    Events never span masked gaps; an excursion already in progress at the
    start of a valid run (or unfinished at its end) is skipped. Returned
    blinks are ordered by onset and do not overlap.
    """
    params.validate()
    out: list[Blink] = []
    for start, stop in _valid_runs(eye.valid):
        if stop - start < 2:
            continue
        t = eye.t_s[start:stop]
        c = eye.closure[start:stop]
        out.extend(_detect_in_run(t, c, params))
    out.sort(key=lambda b: b.t_onset)
    return out


def _detect_in_run(t: np.ndarray, c: np.ndarray, params: BlinkParams) -> list[Blink]:
    on = params.onset_threshold
    off = params.onset_threshold - params.hysteresis
    n = len(c)

    rises = np.flatnonzero((c[:-1] < on) & (c[1:] >= on)) + 1
    falls = np.flatnonzero((c[:-1] >= off) & (c[1:] < off)) + 1

    blinks: list[Blink] = []
    fall_pos = 0
    last_end = -1
    for i_up in rises:
        if i_up <= last_end:
            continue  # still inside the previous event's span
        while fall_pos < len(falls) and falls[fall_pos] <= i_up:
            fall_pos += 1
        if fall_pos == len(falls):
            break  # event never disarms inside this run
        i_down = falls[fall_pos]

        # walk outward to the local resting minima
        j = i_up - 1
        while j > 0 and c[j - 1] < c[j]:
            j -= 1
        left = j
        j = i_down
        while j + 1 < n and c[j + 1] < c[j]:
            j += 1
        right = j
        last_end = right

        baseline = float(min(c[left], c[right]))
        seg = c[left : right + 1]
        peak = float(seg.max())
        if peak <= baseline:
            continue

        duration = float(t[right] - t[left])
        if duration < params.min_duration_s or duration > params.max_duration_s:
            continue

        plateau_level = max(PLATEAU_FRACTION * peak, on)
        plateau_idx = np.flatnonzero(seg >= plateau_level)
        # boundary samples sit below the onset threshold, so the plateau is interior
        plateau_idx = plateau_idx[(plateau_idx > 0) & (plateau_idx < len(seg) - 1)]
        if len(plateau_idx) == 0:
            continue
        t_peak_start = float(t[left + plateau_idx[0]])
        t_peak_end = float(t[left + plateau_idx[-1]])
        if not (t[left] < t_peak_start and t_peak_end < t[right]):
            continue

        blinks.append(
            Blink(
                t_onset=float(t[left]),
                t_peak_start=t_peak_start,
                t_peak_end=t_peak_end,
                t_offset=float(t[right]),
                baseline_closure=baseline,
                peak_closure=peak,
            )
        )
    return blinks


def describe_blink(eye: EyeSignal, blink: Blink) -> BlinkDescriptors:
    """Compute waveform descriptors for one detected blink.

    The eye signal must cover [t_onset, t_offset]. Raises DegenerateBlinkError
    when a phase collapses (the caller should drop the blink).
    """
    lo = int(np.searchsorted(eye.t_s, blink.t_onset, side="left"))
    hi = int(np.searchsorted(eye.t_s, blink.t_offset, side="right"))
    t = eye.t_s[lo:hi]
    c = eye.closure[lo:hi]
    if len(t) < 3:
        raise DegenerateBlinkError(f"blink at t={blink.t_onset:.3f}s spans fewer than 3 samples")

    amplitude = blink.peak_closure - blink.baseline_closure
    closing = blink.t_peak_start - blink.t_onset
    plateau = blink.t_peak_end - blink.t_peak_start
    if amplitude <= 0 or closing <= 0:
        raise DegenerateBlinkError(f"blink at t={blink.t_onset:.3f}s has no closing phase")

    # first re-cross of baseline + amplitude/2 during the recovery
    half_level = blink.baseline_closure + 0.5 * amplitude
    rec = np.flatnonzero(t >= blink.t_peak_end)
    t_50 = None
    for a, b in zip(rec[:-1], rec[1:]):
        if c[a] > half_level >= c[b]:
            t_50 = _cross_time(float(t[a]), float(c[a]), float(t[b]), float(c[b]), half_level)
            break
    if t_50 is None or not (blink.t_peak_end < t_50 < blink.t_offset):
        raise DegenerateBlinkError(
            f"blink at t={blink.t_onset:.3f}s never re-crosses its half-amplitude level"
        )
    opening = t_50 - blink.t_peak_end
    reopening = blink.t_offset - t_50

    # peak velocities from central differences inside each phase
    slopes = np.full(len(t), np.nan)
    if len(t) >= 3:
        slopes[1:-1] = (c[2:] - c[:-2]) / (t[2:] - t[:-2])

    def peak_speed(t_lo, t_hi, fallback):
        m = (t >= t_lo) & (t <= t_hi) & ~np.isnan(slopes)
        if not m.any():
            return fallback
        return float(np.max(np.abs(slopes[m])))

    avg_closing_velocity = amplitude / closing
    avg_opening_velocity = amplitude / opening
    peak_closing_velocity = peak_speed(blink.t_onset, blink.t_peak_start, avg_closing_velocity)
    peak_opening_velocity = peak_speed(blink.t_peak_end, t_50, avg_opening_velocity)
    if peak_closing_velocity <= 0 or peak_opening_velocity <= 0:
        raise DegenerateBlinkError(f"blink at t={blink.t_onset:.3f}s has a zero peak velocity")

    area = float(np.trapezoid(c - blink.baseline_closure, t))
    reopening_amplitude = max(half_level - float(c[-1]), 0.0)
    recovery = blink.t_offset - blink.t_peak_end
    form_skewness = (recovery - closing) / (recovery + closing)

    return BlinkDescriptors(
        duration_s=blink.duration_s,
        closing_duration_s=closing,
        opening_duration_s=opening,
        reopening_duration_s=reopening,
        amplitude=amplitude,
        avg_closing_velocity=avg_closing_velocity,
        avg_opening_velocity=avg_opening_velocity,
        peak_closing_velocity=peak_closing_velocity,
        peak_opening_velocity=peak_opening_velocity,
        avr_closing=amplitude / peak_closing_velocity,
        avr_opening=amplitude / peak_opening_velocity,
        area=max(area, 0.0),
        plateau_duration_s=plateau,
        reopening_amplitude=reopening_amplitude,
        form_skewness=form_skewness,
    )


def describe_all(eye: EyeSignal, blinks: list[Blink]) -> tuple[list[Blink], list[BlinkDescriptors]]:
    """Describe every blink, dropping degenerates with a logged notice."""
    kept: list[Blink] = []
    descs: list[BlinkDescriptors] = []
    dropped = 0
    for b in blinks:
        try:
            descs.append(describe_blink(eye, b))
            kept.append(b)
        except DegenerateBlinkError:
            dropped += 1
    if dropped:
        logger.info("dropped %d degenerate blink(s) of %d detected", dropped, len(blinks))
    return kept, descs


def blink_interval_mask(eye: EyeSignal, blinks: list[Blink]) -> np.ndarray:
    """Boolean array marking samples that fall inside any blink span."""
    inside = np.zeros(len(eye), dtype=bool)
    for b in blinks:
        lo = int(np.searchsorted(eye.t_s, b.t_onset, side="left"))
        hi = int(np.searchsorted(eye.t_s, b.t_offset, side="right"))
        inside[lo:hi] = True
    return inside


def eyelid_cleft(eye: EyeSignal, blinks: list[Blink], iris_mm: float = DEFAULT_IRIS_MM) -> float:
    """Mean resting lid opening in millimetres over valid samples outside blinks.

    Returns nan when no sample qualifies.
    """
    if iris_mm <= 0:
        raise InvalidParameterError(f"iris_mm must be positive, got {iris_mm}")
    m = eye.valid & ~blink_interval_mask(eye, blinks)
    if not m.any():
        return float("nan")
    return float(np.mean(iris_mm * (1.0 - eye.closure[m])))


BLINK_CSV_HEADER = [
    "session_id",
    "t_onset",
    "t_peak_start",
    "t_peak_end",
    "t_offset",
    "baseline_closure",
    "peak_closure",
    "duration_s",
    "closing_duration_s",
    "opening_duration_s",
    "reopening_duration_s",
    "amplitude",
    "avg_closing_velocity",
    "avg_opening_velocity",
    "peak_closing_velocity",
    "peak_opening_velocity",
    "avr_closing",
    "avr_opening",
    "area",
    "plateau_duration_s",
    "reopening_amplitude",
    "form_skewness",
]


def write_blinks_csv(path, session_id: str, blinks: list[Blink], descs: list[BlinkDescriptors]) -> None:
    """Dump one session's blink events and descriptors for inspection."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BLINK_CSV_HEADER)
        for b, d in zip(blinks, descs):
            w.writerow(
                [session_id]
                + [
                    repr(float(x))
                    for x in (
                        b.t_onset, b.t_peak_start, b.t_peak_end, b.t_offset,
                        b.baseline_closure, b.peak_closure,
                        d.duration_s, d.closing_duration_s, d.opening_duration_s,
                        d.reopening_duration_s, d.amplitude, d.avg_closing_velocity,
                        d.avg_opening_velocity, d.peak_closing_velocity,
                        d.peak_opening_velocity, d.avr_closing, d.avr_opening,
                        d.area, d.plateau_duration_s, d.reopening_amplitude,
                        d.form_skewness,
                    )
                ]
            )
