"""Raw driving-session model: eye-closure and head-rotation signals plus KSS self-reports.

A session couples a camera-derived eye-closure fraction (0 = open, 1 = shut)
sampled at a fixed rate with head pitch/roll angles on the same clock and a
sparse sequence of 9-point sleepiness self-reports. Everything downstream
(blink detection, windowed features, labels) reads from this model.
"""

from __future__ import annotations

import csv
from bisect import bisect_right
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import InvalidParameterError, InvalidQueryError

DEFAULT_IRIS_MM = 12.0
KSS_MIN = 1
KSS_MAX = 9


def eye_closure_from_lid_distance(ld_mm: float, iris_mm: float = DEFAULT_IRIS_MM) -> float:
    """Convert an eyelid opening distance to a closure fraction.

    An opening equal to the iris diameter maps to 0 (fully open), an opening
    of zero maps to 1 (fully shut). Openings wider than the iris clamp to 0.

    Args:
        ld_mm: eyelid distance in millimetres, must be >= 0.
        iris_mm: iris diameter in millimetres, must be > 0.
    """
    if iris_mm <= 0:
        raise InvalidParameterError(f"iris_mm must be positive, got {iris_mm}")
    if ld_mm < 0:
        raise InvalidParameterError(f"ld_mm must be non-negative, got {ld_mm}")
    return max(1.0 - ld_mm / iris_mm, 0.0)


@dataclass(frozen=True)
class EyeSample:
    """One eye observation: closure fraction plus tracker confidence."""

    t_s: float
    closure: float
    confidence: float
    valid: bool = True


@dataclass(frozen=True)
class HeadSample:
    """One head-pose observation in degrees."""

    t_s: float
    pitch_deg: float
    roll_deg: float


@dataclass(frozen=True)
class KssReport:
    """A sleepiness self-report on the 9-point scale."""

    t_s: float
    kss: int


def _readonly(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    arr = arr.copy() if arr.base is not None or arr.flags.writeable else arr
    arr.setflags(write=False)
    return arr


class EyeSignal(Sequence):
    """Columnar sequence of eye samples backed by read-only numpy arrays."""

    __slots__ = ("t_s", "closure", "confidence", "valid")

    def __init__(self, t_s, closure, confidence, valid=None):
        self.t_s = _readonly(t_s)
        self.closure = _readonly(closure)
        self.confidence = _readonly(confidence)
        if valid is None:
            v = np.ones(self.t_s.shape, dtype=bool)
        else:
            v = np.array(valid, dtype=bool)
        v.setflags(write=False)
        self.valid = v
        n = len(self.t_s)
        if not (len(self.closure) == len(self.confidence) == len(self.valid) == n):
            raise InvalidParameterError("eye signal arrays must share one length")

    def __len__(self) -> int:
        return len(self.t_s)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return EyeSignal(self.t_s[i], self.closure[i], self.confidence[i], self.valid[i])
        return EyeSample(
            float(self.t_s[i]), float(self.closure[i]), float(self.confidence[i]), bool(self.valid[i])
        )

    def __iter__(self) -> Iterator[EyeSample]:
        for i in range(len(self)):
            yield self[i]

    def with_valid(self, valid: np.ndarray) -> "EyeSignal":
        return EyeSignal(self.t_s, self.closure, self.confidence, valid)


class HeadSignal(Sequence):
    """Columnar sequence of head samples backed by read-only numpy arrays."""

    __slots__ = ("t_s", "pitch_deg", "roll_deg")

    def __init__(self, t_s, pitch_deg, roll_deg):
        self.t_s = _readonly(t_s)
        self.pitch_deg = _readonly(pitch_deg)
        self.roll_deg = _readonly(roll_deg)
        if not (len(self.pitch_deg) == len(self.roll_deg) == len(self.t_s)):
            raise InvalidParameterError("head signal arrays must share one length")

    def __len__(self) -> int:
        return len(self.t_s)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return HeadSignal(self.t_s[i], self.pitch_deg[i], self.roll_deg[i])
        return HeadSample(float(self.t_s[i]), float(self.pitch_deg[i]), float(self.roll_deg[i]))

    def __iter__(self) -> Iterator[HeadSample]:
        for i in range(len(self)):
            yield self[i]


@dataclass(frozen=True)
class RawSession:
    """One driving session: synchronized signals plus the KSS report sequence."""

    subject_id: str
    session_id: str
    sample_rate_hz: float
    eye: EyeSignal
    head: HeadSignal
    kss_reports: tuple[KssReport, ...]

    @property
    def duration_s(self) -> float:
        # each sample covers one period, so the recording extends one period
        # past the last timestamp (a 20-min capture reports 1200 s, not 1200-dt)
        ends = []
        if len(self.eye):
            ends.append(float(self.eye.t_s[-1]))
        if len(self.head):
            ends.append(float(self.head.t_s[-1]))
        if not ends:
            return 0.0
        period = 1.0 / self.sample_rate_hz if self.sample_rate_hz > 0 else 0.0
        return max(ends) + period


def mask_low_confidence(session: RawSession, min_confidence: float = 0.5) -> RawSession:
    """Flag eye samples below the confidence floor as invalid.

    Returns a new session; sample count and timestamps are unchanged.
    Masking is idempotent for a fixed threshold.
    """
    if not 0.0 <= min_confidence <= 1.0:
        raise InvalidParameterError(f"min_confidence must lie in [0, 1], got {min_confidence}")
    valid = session.eye.valid & (session.eye.confidence >= min_confidence)
    return replace(session, eye=session.eye.with_valid(valid))


def kss_at(session: RawSession, t_s: float) -> int:
    """Step-function lookup: the most recent report at or before t_s."""
    times = [r.t_s for r in session.kss_reports]
    if not times:
        raise InvalidQueryError(f"session {session.session_id} has no KSS reports")
    pos = bisect_right(times, t_s)
    if pos == 0:
        raise InvalidQueryError(
            f"t={t_s} precedes the first KSS report at t={times[0]} in session {session.session_id}"
        )
    return session.kss_reports[pos - 1].kss


def validate_session(session: RawSession) -> list[str]:
    """Return a list of invariant violations, empty when the session is well formed."""
    problems: list[str] = []
    sid = session.session_id

    if session.sample_rate_hz <= 0:
        problems.append(f"{sid}: sample_rate_hz must be positive")
    if not session.subject_id:
        problems.append(f"{sid}: empty subject_id")
    if not session.session_id:
        problems.append("empty session_id")

    eye, head = session.eye, session.head
    if len(eye) == 0:
        problems.append(f"{sid}: eye signal is empty")
    if len(head) == 0:
        problems.append(f"{sid}: head signal is empty")

    for name, t in (("eye", eye.t_s), ("head", head.t_s)):
        if len(t) and t[0] < 0:
            problems.append(f"{sid}: {name} timestamps start before 0")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            problems.append(f"{sid}: {name} timestamps are not strictly increasing")

    if len(eye):
        if np.any((eye.closure < 0) | (eye.closure > 1)):
            problems.append(f"{sid}: eye closure outside [0, 1]")
        if np.any((eye.confidence < 0) | (eye.confidence > 1)):
            problems.append(f"{sid}: eye confidence outside [0, 1]")
    if len(head):
        if np.any(np.abs(head.pitch_deg) > 90) or np.any(np.abs(head.roll_deg) > 90):
            problems.append(f"{sid}: head angles outside [-90, 90] degrees")

    if len(eye) and len(head) and session.sample_rate_hz > 0:
        period = 1.0 / session.sample_rate_hz
        if abs(float(eye.t_s[0]) - float(head.t_s[0])) > period or abs(
            float(eye.t_s[-1]) - float(head.t_s[-1])
        ) > period:
            problems.append(f"{sid}: eye and head signals do not span the same interval")

    if not session.kss_reports:
        problems.append(f"{sid}: no KSS reports")
    else:
        times = [r.t_s for r in session.kss_reports]
        if times[0] != 0:
            problems.append(f"{sid}: first KSS report is not at t=0")
        if any(b <= a for a, b in zip(times, times[1:])):
            problems.append(f"{sid}: KSS report times are not strictly increasing")
        for r in session.kss_reports:
            if not isinstance(r.kss, int) or not KSS_MIN <= r.kss <= KSS_MAX:
                problems.append(f"{sid}: KSS value {r.kss!r} outside [{KSS_MIN}, {KSS_MAX}]")
                break

    return problems


# ---------------------------------------------------------------------------
# File formats. One CSV per session with eye and head columns on a shared
# clock, plus a sidecar metadata file carrying ids, rate, and KSS reports.

SESSION_CSV_HEADER = ["t_s", "closure", "confidence", "pitch_deg", "roll_deg"]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_session(session: RawSession, csv_path, meta_path=None) -> Path:
    """Write a session to a CSV plus sidecar metadata file; returns the meta path."""
    csv_path = Path(csv_path)
    meta_path = Path(meta_path) if meta_path is not None else csv_path.with_suffix(".meta")
    if len(session.eye) != len(session.head):
        raise InvalidParameterError(
            f"session {session.session_id}: eye and head lengths differ, cannot serialize"
        )
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SESSION_CSV_HEADER)
        for i in range(len(session.eye)):
            w.writerow(
                [
                    _fmt(session.eye.t_s[i]),
                    _fmt(session.eye.closure[i]),
                    _fmt(session.eye.confidence[i]),
                    _fmt(session.head.pitch_deg[i]),
                    _fmt(session.head.roll_deg[i]),
                ]
            )
    with open(meta_path, "w") as fh:
        fh.write(f"subject_id,{session.subject_id}\n")
        fh.write(f"session_id,{session.session_id}\n")
        fh.write(f"sample_rate_hz,{_fmt(session.sample_rate_hz)}\n")
        for r in session.kss_reports:
            fh.write(f"kss,{_fmt(r.t_s)},{r.kss}\n")
    return meta_path


def read_session(csv_path, meta_path=None) -> RawSession:
    """Read a session written by write_session."""
    csv_path = Path(csv_path)
    meta_path = Path(meta_path) if meta_path is not None else csv_path.with_suffix(".meta")

    subject_id: Optional[str] = None
    session_id: Optional[str] = None
    rate: Optional[float] = None
    reports: list[KssReport] = []
    with open(meta_path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            key = parts[0]
            if key == "subject_id":
                subject_id = parts[1]
            elif key == "session_id":
                session_id = parts[1]
            elif key == "sample_rate_hz":
                rate = float(parts[1])
            elif key == "kss":
                reports.append(KssReport(t_s=float(parts[1]), kss=int(parts[2])))
            else:
                raise InvalidParameterError(f"{meta_path}: unknown metadata key {key!r}")
    if subject_id is None or session_id is None or rate is None:
        raise InvalidParameterError(f"{meta_path}: missing subject_id, session_id, or sample_rate_hz")

    data = np.genfromtxt(csv_path, delimiter=",", skip_header=1, dtype=float)
    if data.ndim == 1:
        data = data.reshape(1, -1)
    t, closure, conf, pitch, roll = (data[:, j] for j in range(5))
    return RawSession(
        subject_id=subject_id,
        session_id=session_id,
        sample_rate_hz=rate,
        eye=EyeSignal(t, closure, conf),
        head=HeadSignal(t, pitch, roll),
        kss_reports=tuple(reports),
    )
