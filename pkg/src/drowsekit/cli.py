"""Command-line entry points: one reproducible run per invocation.

Every command resolves one RunConfig (defaults, then the --config file, then
flag overrides), executes, and writes the effective config next to its
outputs. Re-running a command with that emitted file and the same arguments
reproduces the outputs byte for byte; nothing in any artifact depends on
wall-clock time or machine identity.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .blinks import BlinkParams, detect_blinks
from .dataset import (
    LabeledDataset,
    drop_drowsy_start_sessions,
    from_session_windows,
    read_labeled_csv,
    write_labeled_csv,
)
from .errors import BaselineUnavailableError, DrowsekitError, InvalidParameterError
from .features import (
    FEATURE_INDEX,
    FEATURE_NAMES,
    WindowConfig,
    WindowRow,
    apply_baseline,
    compute_baseline,
    extract_windows,
)
from .knn import ClassTask
from .metrics import MULTI_CLASSES
from .ovo import evaluate_ovo, write_ovo_json
from .selection import (
    KGrid,
    cbfs,
    evaluate_subset,
    k_sweep,
    sfbs,
    sffs,
    sfs,
    write_result_json,
    write_sweep_csv,
    write_trace_csv,
)
from .signals import mask_low_confidence, read_session
from .synth import SynthConfig, generate_corpus, write_corpus

SELECTION_METHODS = ("cbfs", "sfs", "sffs", "sfbs")
RUN_CONFIG_NAME = "run_config.json"


def _merge_section(defaults: dict, override: dict, where: str) -> dict:
    """Overlay a config fragment onto defaults, rejecting unknown keys."""
    merged = dict(defaults)
    for key, value in override.items():
        if key not in defaults:
            raise InvalidParameterError(f"unknown config key {where}{key!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise InvalidParameterError(f"config key {where}{key!r} must be an object")
            merged[key] = _merge_section(defaults[key], value, f"{where}{key}.")
        else:
            merged[key] = value
    return merged


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs, serializable to a single JSON file.

    ``seed`` is authoritative: construction rewrites the synth section's own
    seed to match it, so the emitted file always records the resolved value. ``jobs`` caps module-level workers; the current modules run single
    process, so it is validated and recorded only. Input/output paths are
    recorded exactly as given on the command line.
    """

    task: str = "binary"
    seed: int = 0
    jobs: int = 1
    method: str = "sfs"
    threshold: float = 0.5
    min_confidence: float = 0.5
    k_min: int = 50
    k_max: int = 400
    k_step: int = 25
    subset: tuple[str, ...] = ()
    input_path: str = ""
    output_path: str = ""
    window: WindowConfig = field(default_factory=WindowConfig)
    blinks: BlinkParams = field(default_factory=BlinkParams)
    synth: SynthConfig = field(default_factory=SynthConfig)

    def __post_init__(self):
        if self.synth.seed != self.seed:
            payload = self.synth.as_dict()
            payload["seed"] = self.seed
            object.__setattr__(self, "synth", SynthConfig.from_dict(payload))

    @property
    def class_task(self) -> ClassTask:
        return ClassTask(self.task)

    def kgrid(self) -> KGrid:
        if self.k_step < 1:
            raise InvalidParameterError("k_step must be a positive integer")
        if self.k_max < self.k_min:
            raise InvalidParameterError("k_max must be at least k_min")
        return KGrid(tuple(range(self.k_min, self.k_max + 1, self.k_step)))

    def validate(self) -> None:
        if self.task not in ("binary", "multiclass"):
            raise InvalidParameterError(f"task must be binary or multiclass, got {self.task!r}")
        if self.method not in SELECTION_METHODS:
            raise InvalidParameterError(f"unknown selection method {self.method!r}")
        if not 0.0 < self.threshold < 1.0:
            raise InvalidParameterError("threshold must lie strictly inside (0, 1)")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise InvalidParameterError("min_confidence must lie in [0, 1]")
        if self.jobs < 1:
            raise InvalidParameterError("jobs must be a positive integer")
        self.kgrid()
        self.window.validate()
        self.blinks.validate()
        self.synth.validate()
        for name in self.subset:
            if name not in FEATURE_INDEX:
                raise InvalidParameterError(f"unknown feature name {name!r}")

    def as_dict(self) -> dict:
        return {
            "task": self.task,
            "seed": self.seed,
            "jobs": self.jobs,
            "method": self.method,
            "threshold": self.threshold,
            "min_confidence": self.min_confidence,
            "kgrid": {"k_min": self.k_min, "k_max": self.k_max, "k_step": self.k_step},
            "subset": list(self.subset),
            "input_path": self.input_path,
            "output_path": self.output_path,
            "window": asdict(self.window),
            "blinks": asdict(self.blinks),
            "synth": self.synth.as_dict(),
        }

    @classmethod
    def from_dict(cls, payload) -> "RunConfig":
        if not isinstance(payload, dict):
            raise InvalidParameterError("run config must be a JSON object")
        merged = _merge_section(cls().as_dict(), payload, "")
        kg = merged["kgrid"]
        config = cls(
            task=str(merged["task"]),
            seed=int(merged["seed"]),
            jobs=int(merged["jobs"]),
            method=str(merged["method"]),
            threshold=float(merged["threshold"]),
            min_confidence=float(merged["min_confidence"]),
            k_min=int(kg["k_min"]),
            k_max=int(kg["k_max"]),
            k_step=int(kg["k_step"]),
            subset=tuple(str(s) for s in merged["subset"]),
            input_path=str(merged["input_path"]),
            output_path=str(merged["output_path"]),
            window=WindowConfig(**{k: float(v) for k, v in merged["window"].items()}),
            blinks=BlinkParams(**{k: float(v) for k, v in merged["blinks"].items()}),
            synth=SynthConfig.from_dict(merged["synth"]),
        )
        config.validate()
        return config


def load_run_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"config file {path}: invalid JSON ({exc})") from exc
    try:
        return RunConfig.from_dict(payload)
    except InvalidParameterError as exc:
        raise InvalidParameterError(f"config file {path}: {exc}") from exc


def save_run_config(path, run: RunConfig) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(run.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _sibling_config(out_path: Path) -> Path:
    return out_path.with_name(out_path.stem + ".run_config.json")


# ------------------------------------------------------------------ pipeline


def sessions_to_dataset(sessions, run: RunConfig) -> tuple[LabeledDataset, list[tuple[str, str]]]:
    """The full feature pipeline: mask, detect, window, baseline-correct, bin.

    Sessions already drowsy at t = 0 and sessions without a usable baseline
    span are excluded; the second return value lists (session_id, reason) for
    every exclusion.
    """
    kept, drowsy = drop_drowsy_start_sessions(sessions)
    exclusions = [(sid, f"drowsy at start (KSS {kss})") for sid, kss in drowsy]
    entries = []
    for ses in kept:
        masked = mask_low_confidence(ses, run.min_confidence)
        blinks = detect_blinks(masked.eye, run.blinks)
        rows = extract_windows(masked, blinks, run.window)
        try:
            baseline = compute_baseline(rows, run.window)
        except BaselineUnavailableError as exc:
            exclusions.append((ses.session_id, str(exc)))
            continue
        corrected = [
            WindowRow(r.t_center_s, apply_baseline(r.vector, baseline), r.kss) for r in rows
        ]
        entries.append((ses.subject_id, ses.session_id, corrected))
    if not entries:
        raise InvalidParameterError("every session was excluded; nothing to extract")
    return from_session_windows(entries), exclusions


def _load_sessions_dir(sessions_dir: Path):
    if not sessions_dir.is_dir():
        raise InvalidParameterError(f"session directory {sessions_dir} does not exist")
    paths = sorted(sessions_dir.glob("*.csv"))
    if not paths:
        raise InvalidParameterError(f"no sessions found in {sessions_dir}")
    return [read_session(p) for p in paths]


def _subset_indices(run: RunConfig, command: str) -> list[int]:
    if not run.subset:
        raise InvalidParameterError(
            f"{command} needs a feature subset (--features or the config's subset)"
        )
    return [FEATURE_INDEX[name] for name in run.subset]


def _score_cell(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def _write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ------------------------------------------------------------------ commands


def cmd_synth(run: RunConfig, out_dir: Path) -> int:
    config = run.synth
    sessions, manifest = generate_corpus(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_corpus(out_dir, sessions, manifest)
    save_run_config(out_dir / RUN_CONFIG_NAME, run)
    total_min = sum(s.duration_s for s in sessions) / 60.0
    print(
        f"wrote {len(sessions)} sessions ({config.n_subjects} subjects x "
        f"{config.sessions_per_subject}, {total_min:.0f} min total) to {out_dir}"
    )
    return 0


def cmd_extract(run: RunConfig, sessions_dir: Path, out_csv: Path) -> int:
    sessions = _load_sessions_dir(sessions_dir)
    dataset, exclusions = sessions_to_dataset(sessions, run)
    write_labeled_csv(out_csv, dataset)
    save_run_config(_sibling_config(out_csv), run)
    for sid, reason in exclusions:
        print(f"excluded {sid}: {reason}")
    n_sessions = len(set(dataset.session_ids))
    print(f"wrote {len(dataset)} windows from {n_sessions} sessions to {out_csv}")
    return 0


def cmd_select(run: RunConfig, features_csv: Path, out_dir: Path) -> int:
    dataset = read_labeled_csv(features_csv)
    out_dir.mkdir(parents=True, exist_ok=True)
    task = run.class_task
    if run.method == "cbfs":
        result = cbfs(dataset, task)
        _write_json(
            out_dir / "result.json",
            {
                "method": "cbfs",
                "task": task.value,
                "features": list(result.names),
                "n_features": len(result.names),
                "merits": [None if math.isnan(m) else m for m in result.merits],
                "skipped": [FEATURE_NAMES[j] for j in result.skipped],
            },
        )
        with open(out_dir / "trace.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("step", "feature", "merit"))
            for i, (name, merit) in enumerate(zip(result.names, result.merits), start=1):
                writer.writerow([i, name, _score_cell(merit)])
        final_merit = result.merits[-1] if result.merits else math.nan
        print(f"cbfs {task.value}: n={len(result.names)} merit={final_merit:.4f}")
        print("features: " + ", ".join(result.names))
    else:
        search = {"sfs": sfs, "sffs": sffs, "sfbs": sfbs}[run.method]
        report = search(dataset, run.kgrid(), task, threshold=run.threshold)
        write_trace_csv(out_dir / "trace.csv", report)
        write_result_json(out_dir / "result.json", report)
        best = report.best
        print(
            f"{run.method} {task.value}: k={best.best_k} n={len(best.best_subset)} "
            f"ba={best.ba:.4f} fdr={best.fdr:.4f}"
        )
        print("features: " + ", ".join(best.best_subset))
    save_run_config(out_dir / RUN_CONFIG_NAME, run)
    return 0


def cmd_sweep_k(run: RunConfig, features_csv: Path, out_csv: Path) -> int:
    indices = _subset_indices(run, "sweep-k")
    dataset = read_labeled_csv(features_csv)
    curve = k_sweep(dataset, indices, run.class_task, run.kgrid(), run.threshold)
    write_sweep_csv(out_csv, curve)
    save_run_config(_sibling_config(out_csv), run)
    print(f"wrote {len(curve)} (k, ba, fdr) rows to {out_csv}")
    return 0


def cmd_evaluate(run: RunConfig, features_csv: Path, k: int, out_path: Path | None) -> int:
    indices = _subset_indices(run, "evaluate")
    dataset = read_labeled_csv(features_csv)
    ba, fdr_value = evaluate_subset(dataset, indices, k, run.class_task, run.threshold)
    print(f"k={k} n={len(indices)} ba={ba:.4f} fdr={fdr_value:.4f}")
    if out_path is not None:
        _write_json(
            out_path,
            {
                "task": run.task,
                "k": k,
                "features": list(run.subset),
                "ba": None if math.isnan(ba) else ba,
                "fdr": None if math.isnan(fdr_value) else fdr_value,
            },
        )
        save_run_config(_sibling_config(out_path), run)
    return 0


def cmd_ovo(run: RunConfig, features_csv: Path, out_dir: Path) -> int:
    dataset = read_labeled_csv(features_csv)
    present = {int(v) for v in dataset.y_multi}
    for label in MULTI_CLASSES:
        if int(label) not in present:
            raise InvalidParameterError(
                f"multiclass labels required: class {label.tag!r} absent from {features_csv}"
            )
    catalog = [FEATURE_INDEX[name] for name in run.subset] if run.subset else None
    ba, fdr_value, report = evaluate_ovo(dataset, run.kgrid(), catalog=catalog)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_ovo_json(out_dir / "ovo.json", report)
    save_run_config(out_dir / RUN_CONFIG_NAME, run)
    print(f"combined: ba={ba:.4f} fdr={fdr_value:.4f}")
    for pair in report.pairs:
        print(
            f"{pair.name}: k={pair.k} n={len(pair.feature_names)} "
            f"ba={pair.ba:.4f} fdr={pair.fdr:.4f}"
        )
    return 0


def cmd_pipeline(run: RunConfig, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_dir = out_dir / "corpus"
    features_csv = out_dir / "features.csv"
    cmd_synth(replace(run, output_path=str(corpus_dir)), corpus_dir)
    cmd_extract(
        replace(run, input_path=str(corpus_dir), output_path=str(features_csv)),
        corpus_dir,
        features_csv,
    )
    cmd_select(
        replace(run, input_path=str(features_csv), output_path=str(out_dir / "selection")),
        features_csv,
        out_dir / "selection",
    )
    cmd_ovo(
        replace(run, input_path=str(features_csv), output_path=str(out_dir / "ovo")),
        features_csv,
        out_dir / "ovo",
    )
    save_run_config(out_dir / RUN_CONFIG_NAME, run)
    return 0


# ------------------------------------------------------------------- parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drowsekit",
        description="Drowsiness classification pipeline: synthetic corpora, "
        "blink/head feature extraction, subset search, and k-NN evaluation.",
    )
    parser.add_argument("--config", type=Path, default=None, help="run-config JSON file")
    parser.add_argument("--seed", type=int, default=None, help="override the run seed")
    parser.add_argument("--jobs", type=int, default=None, help="worker cap for module internals")
    parser.add_argument(
        "--task", choices=("binary", "multiclass"), default=None, help="classification task"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic session corpus")
    p.add_argument("out_dir", type=Path)

    p = sub.add_parser("extract", help="turn a session directory into a labeled feature CSV")
    p.add_argument("sessions_dir", type=Path)
    p.add_argument("out_csv", type=Path)

    p = sub.add_parser("select", help="run a feature-subset search over the k grid")
    p.add_argument("features_csv", type=Path)
    p.add_argument("out_dir", type=Path)
    p.add_argument("--method", choices=SELECTION_METHODS, default=None)

    p = sub.add_parser("sweep-k", help="write the (k, ba, fdr) curve for one subset")
    p.add_argument("features_csv", type=Path)
    p.add_argument("out_csv", type=Path)
    p.add_argument("--features", dest="subset", default=None, help="comma-separated names")
    p.add_argument("--k-min", dest="k_min", type=int, default=None)
    p.add_argument("--k-max", dest="k_max", type=int, default=None)
    p.add_argument("--k-step", dest="k_step", type=int, default=None)

    p = sub.add_parser("evaluate", help="score one subset at one k")
    p.add_argument("features_csv", type=Path)
    p.add_argument("--features", dest="subset", default=None, help="comma-separated names")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", type=Path, default=None, help="also write a result JSON here")

    p = sub.add_parser("ovo", help="train and score the one-vs-one multiclass refinement")
    p.add_argument("features_csv", type=Path)
    p.add_argument("out_dir", type=Path)

    p = sub.add_parser("pipeline", help="synth, extract, select, and ovo in one run")
    p.add_argument("out_dir", type=Path)
    p.add_argument("--method", choices=SELECTION_METHODS, default=None)

    return parser


def _apply_overrides(run: RunConfig, args) -> RunConfig:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.jobs is not None:
        updates["jobs"] = args.jobs
    if args.task is not None:
        updates["task"] = args.task
    method = getattr(args, "method", None)
    if method is not None:
        updates["method"] = method
    subset = getattr(args, "subset", None)
    if subset is not None:
        updates["subset"] = tuple(s.strip() for s in subset.split(",") if s.strip())
    for name in ("k_min", "k_max", "k_step"):
        value = getattr(args, name, None)
        if value is not None:
            updates[name] = value
    if updates:
        run = replace(run, **updates)
    run.validate()
    return run


def _dispatch(args, run: RunConfig) -> int:
    if args.command == "synth":
        return cmd_synth(replace(run, output_path=str(args.out_dir)), args.out_dir)
    if args.command == "extract":
        effective = replace(
            run, input_path=str(args.sessions_dir), output_path=str(args.out_csv)
        )
        return cmd_extract(effective, args.sessions_dir, args.out_csv)
    if args.command == "select":
        effective = replace(
            run, input_path=str(args.features_csv), output_path=str(args.out_dir)
        )
        return cmd_select(effective, args.features_csv, args.out_dir)
    if args.command == "sweep-k":
        effective = replace(
            run, input_path=str(args.features_csv), output_path=str(args.out_csv)
        )
        return cmd_sweep_k(effective, args.features_csv, args.out_csv)
    if args.command == "evaluate":
        out_path = args.out
        effective = replace(
            run,
            input_path=str(args.features_csv),
            output_path="" if out_path is None else str(out_path),
        )
        return cmd_evaluate(effective, args.features_csv, args.k, out_path)
    if args.command == "ovo":
        effective = replace(
            run, input_path=str(args.features_csv), output_path=str(args.out_dir)
        )
        return cmd_ovo(effective, args.features_csv, args.out_dir)
    if args.command == "pipeline":
        return cmd_pipeline(replace(run, output_path=str(args.out_dir)), args.out_dir)
    raise InvalidParameterError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = load_run_config(args.config) if args.config is not None else RunConfig()
        run = _apply_overrides(run, args)
        return _dispatch(args, run)
    except DrowsekitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


__all__ = [
    "RUN_CONFIG_NAME",
    "SELECTION_METHODS",
    "RunConfig",
    "load_run_config",
    "save_run_config",
    "sessions_to_dataset",
    "main",
]


if __name__ == "__main__":
    raise SystemExit(main())
