"""End-to-end command-line tests: every command, its artifacts, and its errors."""

import json

import numpy as np
import pytest

from drowsekit.cli import RUN_CONFIG_NAME, RunConfig, main as cli_main
from drowsekit.dataset import read_labeled_csv
from drowsekit.errors import InvalidParameterError
from drowsekit.features import FEATURE_INDEX
from drowsekit.knn import ClassTask
from drowsekit.selection import evaluate_subset
from drowsekit.signals import EyeSignal, HeadSignal, KssReport, RawSession, write_session

PLANTED = ["blink_rate_per_min", "eyelid_cleft_mean_mm", "nodding_rate_per_min"]


def write_config(path, **overrides):
    payload = {"kgrid": {"k_min": 5, "k_max": 15, "k_step": 5}}
    payload.update(overrides)
    path.write_text(json.dumps(payload))
    return path


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    """75-minute 3-subject corpus extracted once; binary classes present."""
    root = tmp_path_factory.mktemp("cli_small")
    config = write_config(root / "run.json", seed=3,
                          synth={"n_subjects": 3, "session_minutes": 75.0})
    assert cli_main(["--config", str(config), "synth", str(root / "corpus")]) == 0
    assert cli_main(
        ["--config", str(config), "extract", str(root / "corpus"), str(root / "features.csv")]
    ) == 0
    return root


@pytest.fixture(scope="module")
def multi_run(tmp_path_factory):
    """Full-length corpus whose windows cover all three classes."""
    root = tmp_path_factory.mktemp("cli_multi")
    config = write_config(root / "run.json", seed=2, subset=PLANTED,
                          synth={"n_subjects": 3, "session_minutes": 103.0})
    assert cli_main(["--config", str(config), "synth", str(root / "corpus")]) == 0
    assert cli_main(
        ["--config", str(config), "extract", str(root / "corpus"), str(root / "features.csv")]
    ) == 0
    return root


# --------------------------------------------------------------------- synth


def test_synth_writes_corpus_files(tmp_path, capsys):
    config = write_config(tmp_path / "c.json", seed=1,
                          synth={"n_subjects": 2, "session_minutes": 12.0})
    out = tmp_path / "corpus"
    assert cli_main(["--config", str(config), "synth", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["manifest.json", "p00s00.csv", "p00s00.meta",
                     "p01s00.csv", "p01s00.meta", RUN_CONFIG_NAME]
    assert "wrote 2 sessions" in capsys.readouterr().out


def test_synth_rerun_is_byte_identical(tmp_path, monkeypatch):
    config = write_config(tmp_path / "c.json", seed=1,
                          synth={"n_subjects": 2, "session_minutes": 12.0})
    for sub in ("a", "b"):
        (tmp_path / sub).mkdir()
        monkeypatch.chdir(tmp_path / sub)
        assert cli_main(["--config", str(config), "synth", "out"]) == 0
    files_a = sorted((tmp_path / "a" / "out").iterdir())
    files_b = sorted((tmp_path / "b" / "out").iterdir())
    assert [p.name for p in files_a] == [p.name for p in files_b]
    for pa, pb in zip(files_a, files_b):
        assert pa.read_bytes() == pb.read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    config = write_config(tmp_path / "c.json", seed=1,
                          synth={"n_subjects": 1, "session_minutes": 12.0})
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert cli_main(["--config", str(config), "synth", str(out_a)]) == 0
    assert cli_main(["--config", str(config), "--seed", "5", "synth", str(out_b)]) == 0
    emitted = json.loads((out_b / RUN_CONFIG_NAME).read_text())
    assert emitted["seed"] == 5 and emitted["synth"]["seed"] == 5
    assert (out_a / "p00s00.csv").read_bytes() != (out_b / "p00s00.csv").read_bytes()


def test_emitted_config_reproduces_run(tmp_path):
    config = write_config(tmp_path / "c.json", seed=4,
                          synth={"n_subjects": 1, "session_minutes": 12.0})
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert cli_main(["--config", str(config), "synth", str(out_a)]) == 0
    assert cli_main(["--config", str(out_a / RUN_CONFIG_NAME), "synth", str(out_b)]) == 0
    assert (out_a / "p00s00.csv").read_bytes() == (out_b / "p00s00.csv").read_bytes()
    assert (out_a / "manifest.json").read_bytes() == (out_b / "manifest.json").read_bytes()


def test_malformed_config_names_offending_key(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"bogus_key": 1}')
    assert cli_main(["--config", str(bad), "synth", str(tmp_path / "out")]) == 1
    assert "bogus_key" in capsys.readouterr().err


def test_invalid_json_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli_main(["--config", str(bad), "synth", str(tmp_path / "out")]) == 1
    assert "invalid JSON" in capsys.readouterr().err


def test_unwritable_output_path_names_path(tmp_path, capsys):
    config = write_config(tmp_path / "c.json", synth={"n_subjects": 1, "session_minutes": 12.0})
    blocker = tmp_path / "taken"
    blocker.write_text("a file, not a directory")
    assert cli_main(["--config", str(config), "synth", str(blocker)]) == 1
    assert "taken" in capsys.readouterr().err


# ------------------------------------------------------------------- extract


def test_extract_combines_all_sessions(tmp_path):
    config = write_config(tmp_path / "c.json", seed=6,
                          synth={"n_subjects": 3, "session_minutes": 20.0})
    corpus = tmp_path / "corpus"
    out_csv = tmp_path / "features.csv"
    assert cli_main(["--config", str(config), "synth", str(corpus)]) == 0
    assert cli_main(["--config", str(config), "extract", str(corpus), str(out_csv)]) == 0
    dataset = read_labeled_csv(out_csv)
    assert set(dataset.session_ids) == {"p00s00", "p01s00", "p02s00"}
    # 20-minute sessions hold 11 window positions each
    assert len(dataset) == 33
    assert (tmp_path / "features.run_config.json").exists()


def test_extract_excludes_drowsy_start_session(tmp_path, capsys):
    config = write_config(tmp_path / "c.json", seed=6,
                          synth={"n_subjects": 2, "session_minutes": 20.0})
    corpus = tmp_path / "corpus"
    assert cli_main(["--config", str(config), "synth", str(corpus)]) == 0
    t = np.arange(1200) / 20.0
    sleepy = RawSession(
        subject_id="zz",
        session_id="zz_sleepy",
        sample_rate_hz=20.0,
        eye=EyeSignal(t, 0.06 + 0.02 * np.sin(t), np.ones_like(t)),
        head=HeadSignal(t, np.zeros_like(t), np.zeros_like(t)),
        kss_reports=(KssReport(t_s=0.0, kss=8),),
    )
    write_session(sleepy, corpus / "zz_sleepy.csv")
    out_csv = tmp_path / "features.csv"
    assert cli_main(["--config", str(config), "extract", str(corpus), str(out_csv)]) == 0
    out = capsys.readouterr().out
    assert "excluded zz_sleepy: drowsy at start (KSS 8)" in out
    assert set(read_labeled_csv(out_csv).session_ids) == {"p00s00", "p01s00"}


def test_extract_empty_dir_errors(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert cli_main(["extract", str(empty), str(tmp_path / "out.csv")]) == 1
    assert "no sessions found" in capsys.readouterr().err


# -------------------------------------------------------------------- select


def test_select_sfs_schema_and_rerun_identical(small_run, monkeypatch):
    monkeypatch.chdir(small_run)
    for out in ("sel_a", "sel_b"):
        code = cli_main(["--config", "run.json", "select", "features.csv", out,
                         "--method", "sfs"])
        assert code == 0
    for name in ("result.json", "trace.csv"):
        assert (small_run / "sel_a" / name).read_bytes() == \
            (small_run / "sel_b" / name).read_bytes()
    payload = json.loads((small_run / "sel_a" / "result.json").read_text())
    assert set(payload) == {"method", "task", "k", "features", "n_features", "ba", "fdr"}
    assert payload["method"] == "sfs" and payload["task"] == "binary"
    assert payload["n_features"] == len(payload["features"]) > 0
    assert 0.0 <= payload["ba"] <= 1.0


def test_select_cbfs_emits_ranked_subset(small_run, capsys):
    out_dir = small_run / "sel_cbfs"
    code = cli_main(["--config", str(small_run / "run.json"), "select",
                     str(small_run / "features.csv"), str(out_dir), "--method", "cbfs"])
    assert code == 0
    payload = json.loads((out_dir / "result.json").read_text())
    assert payload["method"] == "cbfs"
    assert "k" not in payload
    assert len(payload["merits"]) == len(payload["features"]) > 0
    trace_lines = (out_dir / "trace.csv").read_text().strip().splitlines()
    assert trace_lines[0] == "step,feature,merit"
    assert len(trace_lines) == 1 + len(payload["features"])
    assert "cbfs binary" in capsys.readouterr().out


def test_select_unknown_method_is_usage_error(small_run, capsys):
    with pytest.raises(SystemExit) as exc:
        cli_main(["select", str(small_run / "features.csv"), str(small_run / "x"),
                  "--method", "random"])
    assert exc.value.code == 2


# ------------------------------------------------------------------- sweep-k


def test_sweep_k_rows_match_evaluate_subset(small_run):
    out_csv = small_run / "sweep.csv"
    code = cli_main(["--config", str(small_run / "run.json"), "sweep-k",
                     str(small_run / "features.csv"), str(out_csv),
                     "--features", ",".join(PLANTED[:2]),
                     "--k-min", "1", "--k-max", "10", "--k-step", "1"])
    assert code == 0
    lines = out_csv.read_text().strip().splitlines()
    assert lines[0] == "k,ba,fdr"
    assert len(lines) == 11
    dataset = read_labeled_csv(small_run / "features.csv")
    indices = [FEATURE_INDEX[name] for name in PLANTED[:2]]
    for row in (lines[5], lines[10]):
        k_str, ba_str, fdr_str = row.split(",")
        ba, fdr_value = evaluate_subset(dataset, indices, int(k_str), ClassTask.BINARY)
        assert float(ba_str) == ba
        assert float(fdr_str) == fdr_value


def test_sweep_k_unknown_feature_writes_nothing(small_run, capsys):
    out_csv = small_run / "sweep_bad.csv"
    code = cli_main(["--config", str(small_run / "run.json"), "sweep-k",
                     str(small_run / "features.csv"), str(out_csv),
                     "--features", "blink_rate_per_min,not_a_feature"])
    assert code == 1
    assert "not_a_feature" in capsys.readouterr().err
    assert not out_csv.exists()


def test_sweep_k_requires_a_subset(small_run, capsys):
    code = cli_main(["sweep-k", str(small_run / "features.csv"),
                     str(small_run / "sweep_none.csv")])
    assert code == 1
    assert "--features" in capsys.readouterr().err


# ------------------------------------------------------------------ evaluate


def test_evaluate_prints_and_writes_scores(small_run, capsys):
    out_json = small_run / "eval.json"
    code = cli_main(["evaluate", str(small_run / "features.csv"),
                     "--features", ",".join(PLANTED), "--k", "7",
                     "--out", str(out_json)])
    assert code == 0
    assert "ba=" in capsys.readouterr().out
    dataset = read_labeled_csv(small_run / "features.csv")
    indices = [FEATURE_INDEX[name] for name in PLANTED]
    ba, fdr_value = evaluate_subset(dataset, indices, 7, ClassTask.BINARY)
    payload = json.loads(out_json.read_text())
    assert payload["k"] == 7
    assert payload["ba"] == ba
    assert payload["fdr"] == fdr_value
    assert (small_run / "eval.run_config.json").exists()


# ----------------------------------------------------------------------- ovo


def test_ovo_report_schema_and_rerun_identical(multi_run):
    for out in ("ovo_a", "ovo_b"):
        code = cli_main(["--config", str(multi_run / "run.json"), "ovo",
                         str(multi_run / "features.csv"), str(multi_run / out)])
        assert code == 0
    a = (multi_run / "ovo_a" / "ovo.json").read_bytes()
    b = (multi_run / "ovo_b" / "ovo.json").read_bytes()
    assert a == b
    payload = json.loads(a)
    assert set(payload) == {"combined", "pairs"}
    assert set(payload["combined"]) == {"ba", "fdr"}
    names = {p["classifier"] for p in payload["pairs"]}
    assert names == {"awake_vs_questionable", "awake_vs_drowsy", "questionable_vs_drowsy"}


def test_ovo_missing_class_errors(tmp_path, capsys):
    # 60-minute sessions never reach KSS 8, so the drowsy class is absent
    config = write_config(tmp_path / "c.json", seed=2, subset=PLANTED,
                          synth={"n_subjects": 3, "session_minutes": 60.0})
    corpus = tmp_path / "corpus"
    out_csv = tmp_path / "features.csv"
    assert cli_main(["--config", str(config), "synth", str(corpus)]) == 0
    assert cli_main(["--config", str(config), "extract", str(corpus), str(out_csv)]) == 0
    assert cli_main(["--config", str(config), "ovo", str(out_csv), str(tmp_path / "ovo")]) == 1
    err = capsys.readouterr().err
    assert "multiclass labels required" in err and "drowsy" in err


# ------------------------------------------------------------------ pipeline


def test_pipeline_chains_all_stages(tmp_path):
    config = write_config(tmp_path / "c.json", seed=2, subset=PLANTED,
                          synth={"n_subjects": 3, "session_minutes": 103.0})
    out = tmp_path / "demo"
    assert cli_main(["--config", str(config), "pipeline", str(out)]) == 0
    assert (out / "corpus" / "manifest.json").exists()
    assert (out / "features.csv").exists()
    assert (out / "selection" / "result.json").exists()
    assert (out / "ovo" / "ovo.json").exists()
    assert (out / RUN_CONFIG_NAME).exists()


# ---------------------------------------------------------------- run config


def test_run_config_round_trip():
    config = RunConfig(task="multiclass", seed=11, method="sfbs", threshold=0.4,
                       k_min=10, k_max=30, k_step=10, subset=tuple(PLANTED))
    assert RunConfig.from_dict(config.as_dict()) == config


def test_run_config_validation_errors():
    with pytest.raises(InvalidParameterError):
        RunConfig(task="ternary").validate()
    with pytest.raises(InvalidParameterError):
        RunConfig(method="genetic").validate()
    with pytest.raises(InvalidParameterError):
        RunConfig(threshold=1.0).validate()
    with pytest.raises(InvalidParameterError):
        RunConfig(k_min=50, k_max=10).validate()
    with pytest.raises(InvalidParameterError):
        RunConfig(subset=("not_a_feature",)).validate()
    with pytest.raises(InvalidParameterError):
        RunConfig(jobs=0).validate()


def test_task_flag_recorded_in_effective_config(tmp_path):
    config = write_config(tmp_path / "c.json", synth={"n_subjects": 1, "session_minutes": 12.0})
    out = tmp_path / "corpus"
    assert cli_main(["--config", str(config), "--task", "multiclass", "synth", str(out)]) == 0
    assert json.loads((out / RUN_CONFIG_NAME).read_text())["task"] == "multiclass"
