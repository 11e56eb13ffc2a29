"""Seeded generator of synthetic driving sessions with planted drowsiness drift.

Stands in for recorded drives: every session is a pure function of the config
seed plus (subject, session) indices, so corpora are bit-reproducible and can
be generated in parallel. The eye-closure trace is a train of raised-cosine
blink pulses riding on a resting level; head pitch and roll are smooth
low-amplitude noise plus brief nod and wobble events. Sleepiness follows a
monotone step path reported every 15 minutes, and a configurable set of
waveform parameters drifts linearly with the current KSS so that downstream
feature extraction can re-measure the planted effects.

Drift coefficients are expressed per KSS step above the rested reference
level (KSS 3). With the default drift, exactly three descriptors carry a
planted signal: the inter-blink interval shrinks (raising blink rate), the
resting closure rises (shrinking the eyelid cleft), and nod events become
more frequent. A blink-duration slope is available too (acting on the pulse
hold phase) but defaults to zero so the informative channels stay exactly
three. Pulse peaks stay below the eyes-closed threshold by default;
``rich_drift`` adds an amplitude slope so percentage eye-closure measures
activate at high KSS as well.

Two slowly varying behavioral wobbles, unrelated to sleepiness, confound
the planted channels in pairs: an ocular-agitation wobble speeds blinking
while settling the head, and a visual-relaxation wobble droops the lids
while settling the head. Each mimics part of the drowsiness signature, so
no two channels separate the classes cleanly; only the joint three-channel
pattern does. That makes every planted channel carry real marginal value
for a subset search instead of being mutually redundant.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidParameterError
from .signals import EyeSignal, HeadSignal, KssReport, RawSession, write_session

REFERENCE_KSS = 3
REPORT_INTERVAL_S = 900.0

# label shares the bundled 8-subject preset is calibrated to reproduce
REFERENCE_LABEL_SHARES = {
    "binary": (0.45, 0.55),
    "multi": (0.31, 0.36, 0.33),
}

_BASE_IBI_S = 6.0
_BASE_CLOSE_S = 0.16
_BASE_HOLD_S = 0.12
_BASE_REOPEN_S = 0.22
_BASE_AMPLITUDE = 0.555
_BASE_REST_CLOSURE = 0.05
_BASE_NOD_PER_MIN = 0.8
_BOB_PER_MIN = 0.3

_PHASE_JITTER = 0.16  # lognormal sigma on each pulse phase
_IBI_JITTER = 0.25
_AMP_NOISE = 0.015
_REST_SAMPLE_NOISE = 0.004
_REST_WANDER = 0.005  # residual channel-private wander of the resting level
_IBI_WANDER_S = 0.15

# behavioral wobbles: two unit-variance latent paths per session; wobble 1
# (ocular agitation) quickens blinks and stills the head, wobble 2 (visual
# relaxation) droops the lids and stills the head; neither tracks the KSS
_IBI_WOBBLE_S = 0.95  # seconds of inter-blink interval per unit of wobble 1
_REST_WOBBLE = 0.026  # resting closure per unit of wobble 2
_NOD_WOBBLE_PER_MIN = 0.30  # nod-rate drop per unit of either wobble

# ceilings that keep peak closure below the eyes-closed threshold whenever
# amplitude drift is off; with amplitude drift the guarantee lapses on purpose
_REST_CEILING = 0.18
_AMP_CEILING_FLAT = 0.605
_AMP_CEILING_DRIFTED = 0.92
_WANDER_KNOT_S = 60.0
_WANDER_PHI = 0.75
_PITCH_NOISE_DEG = 0.45
_ROLL_NOISE_DEG = 0.40
_NOISE_CORR_S = 0.35
_DROPOUT_PER_MIN = 0.15

# monotone 15-minute KSS step profiles, cycled per session so that the
# aggregate time per level lands near REFERENCE_LABEL_SHARES
_KSS_PROFILES = (
    (3, 5, 6, 7, 7, 8, 9),
    (2, 4, 5, 6, 7, 8, 9),
    (2, 3, 5, 7, 8, 8, 9),
)
_PROFILE_CYCLE = (0, 1, 2, 1, 0, 1, 0, 1)


@dataclass(frozen=True)
class DriftParams:
    """Per-descriptor sensitivity to drowsiness, per KSS step above rest.

    Signs follow the planted directions: a negative inter-blink-interval
    slope raises blink frequency with drowsiness, a positive rest-closure
    slope narrows the eyelid cleft, and so on. Zero disables a channel.
    """

    ibi_s_per_step: float = -0.55
    blink_duration_s_per_step: float = 0.0
    rest_closure_per_step: float = 0.014
    nodding_per_min_per_step: float = 0.36
    amplitude_per_step: float = 0.0

    @classmethod
    def zero(cls) -> "DriftParams":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)

    def as_dict(self) -> dict:
        return {
            "ibi_s_per_step": self.ibi_s_per_step,
            "blink_duration_s_per_step": self.blink_duration_s_per_step,
            "rest_closure_per_step": self.rest_closure_per_step,
            "nodding_per_min_per_step": self.nodding_per_min_per_step,
            "amplitude_per_step": self.amplitude_per_step,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DriftParams":
        return cls(**{k: float(v) for k, v in d.items()})


def rich_drift() -> DriftParams:
    """Drift preset that also raises pulse amplitude and rest closure.

    Pushes peak closure past the eyes-closed threshold at high KSS, so the
    percentage-closure features pick up a planted signal too.
    """
    return DriftParams(
        ibi_s_per_step=-0.55,
        blink_duration_s_per_step=0.012,
        rest_closure_per_step=0.02,
        nodding_per_min_per_step=0.17,
        amplitude_per_step=0.03,
    )


@dataclass(frozen=True)
class SubjectVariability:
    """Spread of per-subject baseline offsets (standard deviations).

    ``drift_gain_sigma``, when nonzero, adds a lognormal per-subject response
    gain on the interval, resting-closure, and nodding drift slopes: people
    then express drowsiness through different channels with different
    strength. Unit mean, so pooled drift keeps the configured sign. The
    duration and amplitude slopes stay unscaled so their per-step effect
    can be read off a single subject exactly. Off by default.
    """

    ibi_s: float = 0.5
    blink_duration_s: float = 0.025
    rest_closure: float = 0.010
    amplitude: float = 0.015
    nodding_per_min: float = 0.06
    drift_gain_sigma: float = 0.0

    @classmethod
    def zero(cls) -> "SubjectVariability":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def as_dict(self) -> dict:
        return {
            "ibi_s": self.ibi_s,
            "blink_duration_s": self.blink_duration_s,
            "rest_closure": self.rest_closure,
            "amplitude": self.amplitude,
            "nodding_per_min": self.nodding_per_min,
            "drift_gain_sigma": self.drift_gain_sigma,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubjectVariability":
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class SynthConfig:
    """Full recipe for one synthetic corpus; equal configs give equal bytes."""

    seed: int = 0
    n_subjects: int = 10
    sessions_per_subject: int = 1
    session_minutes: float = 103.0
    sample_rate_hz: float = 20.0
    drift: DriftParams = field(default_factory=DriftParams)
    subject_variability: SubjectVariability = field(default_factory=SubjectVariability)
    label_noise: float = 0.0

    def validate(self) -> None:
        if self.n_subjects < 1:
            raise InvalidParameterError("n_subjects must be a positive integer")
        if self.sessions_per_subject < 1:
            raise InvalidParameterError("sessions_per_subject must be a positive integer")
        if self.session_minutes <= 0:
            raise InvalidParameterError("session_minutes must be positive")
        if self.sample_rate_hz < 10.0:
            raise InvalidParameterError(
                "sample_rate_hz must be at least 10 for pulse shapes to survive sampling"
            )
        if not 0.0 <= self.label_noise <= 1.0:
            raise InvalidParameterError("label_noise must lie in [0, 1]")

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_subjects": self.n_subjects,
            "sessions_per_subject": self.sessions_per_subject,
            "session_minutes": self.session_minutes,
            "sample_rate_hz": self.sample_rate_hz,
            "drift": self.drift.as_dict(),
            "subject_variability": self.subject_variability.as_dict(),
            "label_noise": self.label_noise,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        return cls(
            seed=int(d["seed"]),
            n_subjects=int(d["n_subjects"]),
            sessions_per_subject=int(d["sessions_per_subject"]),
            session_minutes=float(d["session_minutes"]),
            sample_rate_hz=float(d["sample_rate_hz"]),
            drift=DriftParams.from_dict(d["drift"]),
            subject_variability=SubjectVariability.from_dict(d["subject_variability"]),
            label_noise=float(d["label_noise"]),
        )


def standard_config(seed: int = 0) -> SynthConfig:
    """The 10-subject, two-sessions-each corpus for classifier-level checks.

    Twenty sessions give the leave-one-subject-out folds enough held-out
    windows that subset-search scores resolve real gains from noise.
    """
    return SynthConfig(seed=seed, sessions_per_subject=2)


def share_calibrated_config(seed: int = 0) -> SynthConfig:
    """8-subject preset whose window labels land near REFERENCE_LABEL_SHARES.

    The profile cycle repeats every 8 sessions, so a corpus of exactly 8 hits
    the calibrated class shares; label noise stays off to keep them exact.
    """
    return SynthConfig(seed=seed, n_subjects=8, sessions_per_subject=1, label_noise=0.0)


@dataclass(frozen=True)
class SessionTruth:
    """Ground truth for one generated session."""

    subject_id: str
    session_id: str
    subject_index: int
    session_index: int
    true_kss: tuple[tuple[float, int], ...]
    reported_kss: tuple[tuple[float, int], ...]


@dataclass(frozen=True)
class CorpusManifest:
    """Per-session truth plus the generating config, for oracle checks."""

    config: SynthConfig
    sessions: tuple[SessionTruth, ...]

    def entry_for(self, session_id: str) -> SessionTruth:
        for e in self.sessions:
            if e.session_id == session_id:
                return e
        raise InvalidParameterError(f"no manifest entry for session {session_id!r}")

    def true_kss_at(self, session_id: str, t_s: float) -> int:
        path = self.entry_for(session_id).true_kss
        times = [t for t, _ in path]
        pos = bisect_right(times, t_s)
        if pos == 0:
            raise InvalidParameterError(f"t={t_s} precedes the first KSS step")
        return path[pos - 1][1]


def subject_id_for(subject_index: int) -> str:
    return f"p{subject_index:02d}"


def session_id_for(subject_index: int, session_index: int) -> str:
    return f"p{subject_index:02d}s{session_index:02d}"


def _kss_path(config: SynthConfig, subject_index: int, session_index: int):
    ordinal = subject_index * config.sessions_per_subject + session_index
    profile = _KSS_PROFILES[_PROFILE_CYCLE[ordinal % len(_PROFILE_CYCLE)]]
    duration_s = config.session_minutes * 60.0
    times, values = [], []
    j = 0
    while j * REPORT_INTERVAL_S < duration_s:
        times.append(j * REPORT_INTERVAL_S)
        values.append(profile[min(j, len(profile) - 1)])
        j += 1
    return times, values


def _report_path(times, values, rng, label_noise):
    reported = []
    for v in values:
        if label_noise > 0 and rng.random() < label_noise:
            v = int(np.clip(v + rng.choice((-1, 1)), 1, 9))
        reported.append(int(v))
    return reported


def _wander(rng, n_samples: int, rate: float, duration_s: float, sigma: float) -> np.ndarray:
    """Slowly varying zero-mean noise: AR(1) knots, linearly interpolated."""
    n_knots = int(duration_s / _WANDER_KNOT_S) + 2
    innov = rng.normal(0.0, sigma * math.sqrt(1.0 - _WANDER_PHI**2), n_knots)
    innov[0] = rng.normal(0.0, sigma)
    knots = lfilter([1.0], [1.0, -_WANDER_PHI], innov)
    knot_t = np.arange(n_knots) * _WANDER_KNOT_S
    t = np.arange(n_samples) / rate
    return np.interp(t, knot_t, knots)


def _ar1(rng, n: int, rate: float, sigma_stationary: float) -> np.ndarray:
    phi = math.exp(-1.0 / (_NOISE_CORR_S * rate))
    innov = rng.normal(0.0, sigma_stationary * math.sqrt(1.0 - phi**2), n)
    return lfilter([1.0], [1.0, -phi], innov)


def _event_times(rng, rate_per_min: np.ndarray, t: np.ndarray, min_gap_s: float) -> list[float]:
    """Inhomogeneous Poisson times via thinning against the peak rate."""
    peak = float(rate_per_min.max())
    if peak <= 0:
        return []
    duration_s = float(t[-1]) if len(t) else 0.0
    out: list[float] = []
    clock = 0.0
    while True:
        clock += rng.exponential(60.0 / peak)
        if clock >= duration_s:
            break
        local = float(np.interp(clock, t, rate_per_min))
        if rng.random() * peak >= local:
            continue
        if out and clock - out[-1] < min_gap_s:
            continue
        out.append(clock)
    return out


def _add_bump(x: np.ndarray, t: np.ndarray, rate: float, t0: float, span_s: float, amp: float) -> None:
    i0 = int(math.ceil(t0 * rate))
    i1 = int(math.floor((t0 + span_s) * rate))
    if i1 <= i0:
        return
    i1 = min(i1, len(x) - 1)
    u = t[i0 : i1 + 1] - t0
    x[i0 : i1 + 1] += amp * np.sin(math.pi * u / span_s) ** 2


def generate_session(config: SynthConfig, subject_index: int, session_index: int) -> RawSession:
    """Generate one session; a pure function of (config, subject, session)."""
    config.validate()
    if not 0 <= subject_index < config.n_subjects:
        raise InvalidParameterError(f"subject_index {subject_index} outside [0, {config.n_subjects})")
    if not 0 <= session_index < config.sessions_per_subject:
        raise InvalidParameterError(
            f"session_index {session_index} outside [0, {config.sessions_per_subject})"
        )

    rate = config.sample_rate_hz
    duration_s = config.session_minutes * 60.0
    n = int(round(duration_s * rate))
    t = np.arange(n) / rate
    drift = config.drift
    spread = config.subject_variability

    # subject offsets are keyed by subject alone so every session of one
    # subject shares a baseline, independent of generation order
    rng_subject = np.random.default_rng([config.seed, 101, subject_index])
    off_ibi = rng_subject.normal(0.0, spread.ibi_s) if spread.ibi_s > 0 else 0.0
    off_duration = rng_subject.normal(0.0, spread.blink_duration_s) if spread.blink_duration_s > 0 else 0.0
    off_rest = rng_subject.normal(0.0, spread.rest_closure) if spread.rest_closure > 0 else 0.0
    off_amp = rng_subject.normal(0.0, spread.amplitude) if spread.amplitude > 0 else 0.0
    off_nod = rng_subject.normal(0.0, spread.nodding_per_min) if spread.nodding_per_min > 0 else 0.0
    if spread.drift_gain_sigma > 0:
        g_ibi = _lognormal(rng_subject, spread.drift_gain_sigma)
        g_rest = _lognormal(rng_subject, spread.drift_gain_sigma)
        g_nod = _lognormal(rng_subject, spread.drift_gain_sigma)
    else:
        g_ibi = g_rest = g_nod = 1.0
    ibi_slope = drift.ibi_s_per_step * g_ibi
    rest_slope = drift.rest_closure_per_step * g_rest
    nod_slope = drift.nodding_per_min_per_step * g_nod

    rng = np.random.default_rng([config.seed, 202, subject_index, session_index])

    slot_times, true_values = _kss_path(config, subject_index, session_index)
    reported_values = _report_path(slot_times, true_values, rng, config.label_noise)
    slot_arr = np.asarray(slot_times)
    step_at = lambda ts: (
        true_values[int(np.searchsorted(slot_arr, ts, side="right")) - 1] - REFERENCE_KSS
    )
    steps = np.array([step_at(x) for x in slot_times], dtype=float)
    step_per_sample = steps[np.searchsorted(slot_arr, t, side="right") - 1]

    wobble1 = _wander(rng, n, rate, duration_s, 1.0)
    wobble2 = _wander(rng, n, rate, duration_s, 1.0)
    rest_wander = _wander(rng, n, rate, duration_s, _REST_WANDER)
    ibi_wander = _wander(rng, n, rate, duration_s, _IBI_WANDER_S)
    ibi_noise = -_IBI_WOBBLE_S * wobble1 + ibi_wander

    rest = (
        _BASE_REST_CLOSURE
        + off_rest
        + rest_slope * step_per_sample
        + _REST_WOBBLE * wobble2
        + rest_wander
        + rng.normal(0.0, _REST_SAMPLE_NOISE, n)
    )
    rest = np.clip(rest, 0.02, _REST_CEILING)

    # sequential blink train: the interval and pulse shape follow the KSS in
    # force at each onset
    pulses = np.zeros(n)
    min_close = 2.5 / rate
    min_hold = 2.0 / rate
    min_reopen = 2.5 / rate
    amp_hi = _AMP_CEILING_FLAT if drift.amplitude_per_step == 0 else _AMP_CEILING_DRIFTED
    t_blink = 2.0
    while t_blink < duration_s - 3.0:
        s = step_at(t_blink)
        d_close = max((_BASE_CLOSE_S) * _lognormal(rng, _PHASE_JITTER), min_close)
        d_hold = max(
            (_BASE_HOLD_S + off_duration + drift.blink_duration_s_per_step * s)
            * _lognormal(rng, _PHASE_JITTER),
            min_hold,
        )
        d_reopen = max((_BASE_REOPEN_S) * _lognormal(rng, _PHASE_JITTER), min_reopen)
        amp = float(
            np.clip(
                _BASE_AMPLITUDE + off_amp + drift.amplitude_per_step * s + rng.normal(0.0, _AMP_NOISE),
                0.505,
                amp_hi,
            )
        )
        _render_pulse(pulses, t, rate, t_blink, d_close, d_hold, d_reopen, amp)

        mu = _BASE_IBI_S + off_ibi + ibi_slope * s + float(np.interp(t_blink, t, ibi_noise))
        mu = max(mu, 1.6)
        t_blink += float(np.clip(mu * _lognormal(rng, _IBI_JITTER), 1.4, 25.0))

    closure = np.clip(rest + pulses, 0.0, 0.97)

    # head channels: smooth noise plus brief nod (pitch) and wobble (roll)
    # events; nod frequency carries the planted drift
    nod_rate = np.clip(
        _BASE_NOD_PER_MIN
        + off_nod
        + nod_slope * step_per_sample
        - _NOD_WOBBLE_PER_MIN * (wobble1 + wobble2),
        0.05,
        6.0,
    )
    nod_times = _event_times(rng, nod_rate, t, min_gap_s=2.0)
    bob_rate = np.full(n, _BOB_PER_MIN)
    bob_times = _event_times(rng, bob_rate, t, min_gap_s=2.0)

    pitch = _ar1(rng, n, rate, _PITCH_NOISE_DEG)
    for t0 in nod_times:
        span = float(np.clip(rng.normal(1.05, 0.15), 0.7, 1.5))
        amp_deg = float(np.clip(rng.normal(4.3, 0.6), 3.0, 7.0))
        _add_bump(pitch, t, rate, t0, span, -amp_deg)
    roll = _ar1(rng, n, rate, _ROLL_NOISE_DEG)
    for t0 in bob_times:
        span = float(np.clip(rng.normal(0.9, 0.12), 0.6, 1.3))
        amp_deg = float(np.clip(rng.normal(3.6, 0.5), 2.8, 6.0))
        _add_bump(roll, t, rate, t0, span, amp_deg)
    pitch = np.clip(pitch, -60.0, 60.0)
    roll = np.clip(roll, -60.0, 60.0)

    confidence = np.clip(0.93 + rng.normal(0.0, 0.015, n), 0.75, 1.0)
    n_drops = rng.poisson(_DROPOUT_PER_MIN * duration_s / 60.0)
    for _ in range(n_drops):
        t0 = rng.uniform(0.0, duration_s - 1.0)
        span = rng.uniform(0.15, 0.45)
        i0, i1 = int(t0 * rate), int((t0 + span) * rate)
        confidence[i0 : i1 + 1] = 0.15

    reports = tuple(KssReport(float(ts), int(v)) for ts, v in zip(slot_times, reported_values))
    return RawSession(
        subject_id=subject_id_for(subject_index),
        session_id=session_id_for(subject_index, session_index),
        sample_rate_hz=rate,
        eye=EyeSignal(t, closure, confidence),
        head=HeadSignal(t, pitch, roll),
        kss_reports=reports,
    )


def _lognormal(rng, sigma: float) -> float:
    # unit-mean multiplicative jitter
    return float(rng.lognormal(-0.5 * sigma * sigma, sigma))


def _render_pulse(pulses, t, rate, t0, d_close, d_hold, d_reopen, amp) -> None:
    support = d_close + d_hold + d_reopen
    i0 = int(math.ceil(t0 * rate))
    i1 = min(int(math.floor((t0 + support) * rate)), len(pulses) - 1)
    if i1 <= i0:
        return
    u = t[i0 : i1 + 1] - t0
    shape = np.empty(len(u))
    m1 = u < d_close
    shape[m1] = np.sin(math.pi * u[m1] / (2.0 * d_close)) ** 2
    m2 = (u >= d_close) & (u < d_close + d_hold)
    shape[m2] = 1.0
    m3 = u >= d_close + d_hold
    v = u[m3] - d_close - d_hold
    shape[m3] = np.cos(math.pi * np.minimum(v / d_reopen, 1.0) / 2.0) ** 2
    np.maximum(pulses[i0 : i1 + 1], amp * shape, out=pulses[i0 : i1 + 1])


def _session_truth(config, subject_index, session_index, session) -> SessionTruth:
    slot_times, true_values = _kss_path(config, subject_index, session_index)
    return SessionTruth(
        subject_id=session.subject_id,
        session_id=session.session_id,
        subject_index=subject_index,
        session_index=session_index,
        true_kss=tuple((float(a), int(b)) for a, b in zip(slot_times, true_values)),
        reported_kss=tuple((float(r.t_s), int(r.kss)) for r in session.kss_reports),
    )


def generate_corpus(config: SynthConfig) -> tuple[list[RawSession], CorpusManifest]:
    """Generate all sessions in subject-major order with their ground truth."""
    config.validate()
    sessions: list[RawSession] = []
    truths: list[SessionTruth] = []
    for si in range(config.n_subjects):
        for sj in range(config.sessions_per_subject):
            ses = generate_session(config, si, sj)
            sessions.append(ses)
            truths.append(_session_truth(config, si, sj, ses))
    return sessions, CorpusManifest(config=config, sessions=tuple(truths))


MANIFEST_NAME = "manifest.json"


def write_corpus(out_dir, sessions, manifest: CorpusManifest) -> Path:
    """Write one CSV + sidecar per session plus the JSON manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for ses in sessions:
        write_session(ses, out_dir / f"{ses.session_id}.csv")
    path = out_dir / MANIFEST_NAME
    payload = {
        "config": manifest.config.as_dict(),
        "sessions": [
            {
                "subject_id": e.subject_id,
                "session_id": e.session_id,
                "subject_index": e.subject_index,
                "session_index": e.session_index,
                "true_kss": [[a, b] for a, b in e.true_kss],
                "reported_kss": [[a, b] for a, b in e.reported_kss],
            }
            for e in manifest.sessions
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_manifest(path) -> CorpusManifest:
    with open(path) as fh:
        payload = json.load(fh)
    entries = tuple(
        SessionTruth(
            subject_id=e["subject_id"],
            session_id=e["session_id"],
            subject_index=int(e["subject_index"]),
            session_index=int(e["session_index"]),
            true_kss=tuple((float(a), int(b)) for a, b in e["true_kss"]),
            reported_kss=tuple((float(a), int(b)) for a, b in e["reported_kss"]),
        )
        for e in payload["sessions"]
    )
    return CorpusManifest(config=SynthConfig.from_dict(payload["config"]), sessions=entries)


__all__ = [
    "REFERENCE_KSS",
    "REPORT_INTERVAL_S",
    "REFERENCE_LABEL_SHARES",
    "DriftParams",
    "SubjectVariability",
    "SynthConfig",
    "SessionTruth",
    "CorpusManifest",
    "rich_drift",
    "standard_config",
    "share_calibrated_config",
    "generate_session",
    "generate_corpus",
    "write_corpus",
    "read_manifest",
    "subject_id_for",
    "session_id_for",
]
