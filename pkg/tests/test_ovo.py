"""Pairwise-decomposition tests: vote tables, pair training, combined scoring.

The separable construct plants one private feature per class pair (with
calm-side jitter so scaling keeps it), which pins both subset recovery and
the combined vote. Stub classifiers with hand-picked weights exercise the
vote arithmetic without any training.
"""

import json
import logging
import math

import numpy as np
import pytest

from drowsekit.dataset import ClassLabel, LabeledDataset, ScalingParams
from drowsekit.errors import CannotSplitError, EvaluationError, InvalidParameterError
from drowsekit.features import N_FEATURES
from drowsekit.knn import ClassTask, KnnModel
from drowsekit.metrics import MULTI_CLASSES
from drowsekit.ovo import (
    OVO_PAIRS,
    OvoModel,
    OvoPrediction,
    PairClassifier,
    evaluate_ovo,
    pair_dataset,
    pair_name,
    predict_ovo,
    train_ovo,
    train_pair,
    write_ovo_json,
)
from drowsekit.selection import KGrid, evaluate_subset


def build_dataset(rows, kss, subjects, sessions):
    return LabeledDataset(subjects, sessions, np.arange(len(kss), dtype=float), kss, np.array(rows))


def separable_dataset(seed=0, per=21):
    """One private feature per class pair; the third class straddles it.

    Column 0 splits awake from questionable, column 1 awake from drowsy,
    column 2 questionable from drowsy; column 3 is noise. Calm-side values
    carry jitter so the awake-fitted scaling retains every column.
    """
    rng = np.random.default_rng(seed)
    rows, kss, subjects, sessions = [], [], [], []
    for s in range(6):
        for i in range(per):
            level = i % 3
            x = rng.normal(0.0, 1.0, N_FEATURES)
            x[0] = (0.0, 6.0, 3.0 + rng.normal(0, 3))[level] + rng.normal(0, 0.3)
            x[1] = (0.0, 3.0 + rng.normal(0, 3), 6.0)[level] + rng.normal(0, 0.3)
            x[2] = (3.0 + rng.normal(0, 3), 0.0, 6.0)[level] + rng.normal(0, 0.3)
            rows.append(x)
            kss.append((3, 6, 8)[level])
            subjects.append(f"p{s:02d}")
            sessions.append(f"s{s:02d}")
    return build_dataset(rows, kss, subjects, sessions)


def graded_dataset(seed, per=21, gap=2.0, sigma=1.2):
    """Monotone drowsiness signal with heavy class overlap in the middle."""
    rng = np.random.default_rng(seed)
    rows, kss, subjects, sessions = [], [], [], []
    for s in range(6):
        for i in range(per):
            level = i % 3
            x = rng.normal(0.0, 1.0, N_FEATURES)
            x[0] = gap * level + rng.normal(0.0, sigma)
            rows.append(x)
            kss.append((3, 6, 8)[level])
            subjects.append(f"p{s:02d}")
            sessions.append(f"s{s:02d}")
    return build_dataset(rows, kss, subjects, sessions)


def questionable_locked_dataset(seed=0):
    """Every questionable sample lives in session s00."""
    rng = np.random.default_rng(seed)
    rows, kss, subjects, sessions = [], [], [], []
    for i in range(12):
        level = i % 2
        x = rng.normal(0.0, 1.0, N_FEATURES)
        x[0] = 2.0 * level + rng.normal(0.0, 0.5)
        rows.append(x)
        kss.append((3, 6)[level])
        subjects.append("p00")
        sessions.append("s00")
    for s in range(1, 4):
        for i in range(16):
            level = i % 2
            x = rng.normal(0.0, 1.0, N_FEATURES)
            x[0] = 4.0 * level + rng.normal(0.0, 0.5)
            rows.append(x)
            kss.append((3, 8)[level])
            subjects.append(f"p{s:02d}")
            sessions.append(f"s{s:02d}")
    return build_dataset(rows, kss, subjects, sessions)


def neutral_params():
    return ScalingParams(
        np.zeros(N_FEATURES), np.ones(N_FEATURES), np.ones(N_FEATURES, dtype=bool), ()
    )


def stub_pair(calmer, drowsier, weight, feature):
    """1-NN stub voting drowsier whenever x[feature] is nearer 5 than 0."""
    train = np.zeros((2, N_FEATURES))
    train[1, feature] = 5.0
    labels = np.array([int(ClassLabel.AWAKE), int(ClassLabel.DROWSY)])
    model = KnnModel(
        k=1,
        feature_subset=(feature,),
        train_matrix=train,
        train_labels=labels,
        task=ClassTask.BINARY,
    )
    return PairClassifier(
        name=pair_name(calmer, drowsier),
        calmer=calmer,
        drowsier=drowsier,
        feature_names=(f"f{feature}",),
        feature_indices=(feature,),
        k=1,
        ba=weight,
        fdr=math.nan,
        weight=weight,
        search=None,
        full_params=neutral_params(),
        full_model=model,
        fold_models={},
    )


def stub_model(weights=(0.93, 0.79, 0.77), features=(0, 0, 0)):
    pairs = tuple(
        stub_pair(lo, hi, w, f) for (lo, hi), w, f in zip(OVO_PAIRS, weights, features)
    )
    return OvoModel(pairs)


@pytest.fixture(scope="module")
def separable():
    return separable_dataset()


@pytest.fixture(scope="module")
def separable_report():
    ds = separable_dataset()
    return evaluate_ovo(ds, KGrid((3,)), catalog=(0, 1, 2, 3))


class TestVoting:
    def test_two_drowsy_votes_beat_one_heavier(self):
        # A-Q says questionable, the two drowsy-capable pairs say drowsy
        model = stub_model()
        x = np.zeros(N_FEATURES)
        x[0] = 5.0
        outcome = predict_ovo(model, x)
        assert outcome.label is ClassLabel.DROWSY
        assert outcome.weight_sums == (0.0, 0.93, 0.79 + 0.77)

    def test_awake_votes_win_when_calm(self):
        model = stub_model()
        outcome = predict_ovo(model, np.zeros(N_FEATURES))
        assert outcome.label is ClassLabel.AWAKE
        assert outcome.weight_sums == (0.93 + 0.79, 0.77, 0.0)

    def test_cyclic_tie_falls_to_awake(self):
        # distinct features let the three pairs disagree cyclically
        model = stub_model(weights=(0.8, 0.8, 0.8), features=(0, 1, 2))
        x = np.zeros(N_FEATURES)
        x[1] = 5.0  # A-D votes drowsy; the other two stay calm
        outcome = predict_ovo(model, x)
        assert outcome.weight_sums == (0.8, 0.8, 0.8)
        assert outcome.label is ClassLabel.AWAKE

    def test_label_invariant_to_weight_rescaling(self):
        x = np.zeros(N_FEATURES)
        x[0] = 5.0
        full = predict_ovo(stub_model(), x)
        halved = predict_ovo(stub_model(weights=(0.465, 0.395, 0.385)), x)
        assert full.label is halved.label

    def test_sums_reconstruct_from_votes(self):
        x = np.zeros(N_FEATURES)
        x[0] = 5.0
        outcome = predict_ovo(stub_model(), x)
        for i, cls in enumerate(MULTI_CLASSES):
            total = 0.0
            for _, level, weight in outcome.votes:
                if level is cls:
                    total += weight
            assert outcome.weight_sums[i] == total

    def test_prediction_label_validated(self):
        with pytest.raises(InvalidParameterError):
            OvoPrediction(ClassLabel.DROWSY, (1.0, 0.0, 0.0), ())

    def test_weights_validated(self):
        with pytest.raises(InvalidParameterError):
            stub_model(weights=(0.0, 0.8, 0.8))
        with pytest.raises(InvalidParameterError):
            stub_model(weights=(1.2, 0.8, 0.8))

    def test_pair_order_validated(self):
        pairs = tuple(
            stub_pair(lo, hi, 0.8, 0) for lo, hi in (OVO_PAIRS[1], OVO_PAIRS[0], OVO_PAIRS[2])
        )
        with pytest.raises(InvalidParameterError):
            OvoModel(pairs)


class TestPairDataset:
    def test_relabels_pair_levels(self, separable):
        sub, rows = pair_dataset(separable, ClassLabel.AWAKE, ClassLabel.QUESTIONABLE)
        original = separable.multi_labels(rows)
        relabeled = sub.binary_labels(np.arange(len(sub)))
        assert np.all((original == int(ClassLabel.QUESTIONABLE)) == (relabeled == int(ClassLabel.DROWSY)))
        assert np.array_equal(sub.feature_rows(np.arange(len(sub))), separable.feature_rows(rows))

    def test_order_enforced(self, separable):
        with pytest.raises(InvalidParameterError):
            pair_dataset(separable, ClassLabel.DROWSY, ClassLabel.AWAKE)
        with pytest.raises(InvalidParameterError):
            pair_dataset(separable, ClassLabel.AWAKE, ClassLabel.AWAKE)

    def test_missing_level_rejected(self):
        ds = questionable_locked_dataset()
        two_level = build_dataset(
            [ds.feature_rows([i])[0] for i in range(12, len(ds))],
            [int(ds.kss[i]) for i in range(12, len(ds))],
            [ds.subject_ids[i] for i in range(12, len(ds))],
            [ds.session_ids[i] for i in range(12, len(ds))],
        )
        with pytest.raises(InvalidParameterError):
            pair_dataset(two_level, ClassLabel.AWAKE, ClassLabel.QUESTIONABLE)


class TestTraining:
    def test_each_pair_recovers_its_planted_feature(self, separable_report):
        _, _, report = separable_report
        assert [p.feature_indices for p in report.pairs] == [(0,), (1,), (2,)]
        assert all(p.ba == 1.0 for p in report.pairs)
        assert all(p.weight == 1.0 for p in report.pairs)

    def test_pair_names_follow_fixed_order(self, separable_report):
        _, _, report = separable_report
        assert [p.name for p in report.pairs] == [
            "awake_vs_questionable",
            "awake_vs_drowsy",
            "questionable_vs_drowsy",
        ]

    def test_fdr_masked_for_the_pair_without_drowsy(self, separable_report):
        _, _, report = separable_report
        assert math.isnan(report.pairs[0].fdr)
        assert not math.isnan(report.pairs[1].fdr)
        assert not math.isnan(report.pairs[2].fdr)

    def test_training_is_deterministic(self, separable):
        a = train_ovo(separable, KGrid((3,)), catalog=(0, 1, 2, 3))
        b = train_ovo(separable, KGrid((3,)), catalog=(0, 1, 2, 3))
        for pa, pb in zip(a.pairs, b.pairs):
            assert (pa.name, pa.k, pa.feature_indices, pa.ba, pa.weight) == (
                pb.name,
                pb.k,
                pb.feature_indices,
                pb.ba,
                pb.weight,
            )
            assert repr(pa.search) == repr(pb.search)
            assert np.array_equal(pa.full_model.train_matrix, pb.full_model.train_matrix)

    def test_missing_class_rejected(self):
        ds = questionable_locked_dataset()
        two_level = build_dataset(
            [ds.feature_rows([i])[0] for i in range(12, len(ds))],
            [int(ds.kss[i]) for i in range(12, len(ds))],
            [ds.subject_ids[i] for i in range(12, len(ds))],
            [ds.session_ids[i] for i in range(12, len(ds))],
        )
        with pytest.raises(InvalidParameterError):
            train_ovo(two_level, KGrid((3,)), catalog=(0, 1))

    def test_pair_restriction_matches_binary_pipeline(self, separable):
        labels = separable.multi_labels(np.arange(len(separable)))
        keep = np.flatnonzero(
            (labels == int(ClassLabel.AWAKE)) | (labels == int(ClassLabel.DROWSY))
        )
        restricted = build_dataset(
            [separable.feature_rows([i])[0] for i in keep],
            [int(separable.kss[i]) for i in keep],
            [separable.subject_ids[i] for i in keep],
            [separable.session_ids[i] for i in keep],
        )
        pair = train_pair(
            separable, ClassLabel.AWAKE, ClassLabel.DROWSY, KGrid((3,)), catalog=(0, 1, 2, 3)
        )
        direct = evaluate_subset(restricted, pair.feature_indices, pair.k, ClassTask.BINARY)
        assert (pair.ba, pair.fdr) == direct

    def test_fold_without_a_pair_level_is_skipped(self, caplog):
        ds = questionable_locked_dataset()
        with caplog.at_level(logging.INFO, logger="drowsekit.ovo"):
            model = train_ovo(ds, KGrid((3,)), catalog=(0, 1))
        aq, ad, qd = model.pairs
        assert "s00" not in aq.fold_models
        assert "s00" not in qd.fold_models
        assert "s00" in ad.fold_models
        assert ("s00", "drowsier level absent in training") in aq.skipped_folds
        assert any("skipped" in r.message for r in caplog.records)
        assert any("abstains" in r.message for r in caplog.records)

    def test_grid_truncated_to_fold_capacity(self, separable, caplog):
        with caplog.at_level(logging.INFO, logger="drowsekit.ovo"):
            model = train_ovo(separable, KGrid((3, 999)), catalog=(0, 1, 2, 3))
        assert all(p.k == 3 for p in model.pairs)
        assert any("truncated" in r.message for r in caplog.records)

    def test_infeasible_grid_raises(self, separable):
        with pytest.raises(EvaluationError):
            train_ovo(separable, KGrid((999,)), catalog=(0, 1))

    def test_single_session_cannot_split(self):
        rng = np.random.default_rng(0)
        rows = [rng.normal(0.0, 1.0, N_FEATURES) for _ in range(9)]
        kss = [3, 6, 8] * 3
        ds = build_dataset(rows, kss, ["p00"] * 9, ["s00"] * 9)
        with pytest.raises(CannotSplitError):
            evaluate_ovo(ds, KGrid((1,)), catalog=(0,))


class TestCombinedEvaluation:
    def test_separable_combined_is_perfect(self, separable_report):
        ba, fdr_value, report = separable_report
        assert ba == 1.0
        assert fdr_value == 0.0
        assert report.ba == ba and report.fdr == fdr_value

    def test_confusion_covers_every_sample(self, separable, separable_report):
        _, _, report = separable_report
        assert report.confusion.total == len(separable)

    def test_new_samples_classified_by_level(self, separable_report):
        _, _, report = separable_report
        probes = {
            ClassLabel.AWAKE: (0.0, 0.0, 3.0),
            ClassLabel.QUESTIONABLE: (6.0, 3.0, 0.0),
            ClassLabel.DROWSY: (3.0, 6.0, 6.0),
        }
        for expected, values in probes.items():
            x = np.zeros(N_FEATURES)
            x[0], x[1], x[2] = values
            assert predict_ovo(report.model, x).label is expected

    def test_pairwise_scores_bound_the_combined_score(self):
        for seed in (0, 1, 2):
            ba, _, report = evaluate_ovo(graded_dataset(seed), KGrid((5,)), catalog=(0, 1))
            assert all(p.ba >= ba - 1e-9 for p in report.pairs)
            assert 0.4 < ba < 1.0


class TestOvoArtifacts:
    def test_report_json_layout(self, separable_report, tmp_path):
        _, _, report = separable_report
        path = tmp_path / "ovo.json"
        write_ovo_json(path, report)
        payload = json.loads(path.read_text())
        assert payload["combined"] == {"ba": 1.0, "fdr": 0.0}
        assert [p["classifier"] for p in payload["pairs"]] == [
            "awake_vs_questionable",
            "awake_vs_drowsy",
            "questionable_vs_drowsy",
        ]
        assert payload["pairs"][0]["fdr"] is None
        assert payload["pairs"][1]["fdr"] == 0.0
        for entry, pair in zip(payload["pairs"], report.pairs):
            assert entry["k"] == pair.k
            assert entry["features"] == list(pair.feature_names)
            assert entry["n_features"] == len(pair.feature_names)
            assert entry["weight"] == pair.weight
        assert path.read_text().endswith("\n")
