"""Metric arithmetic tests, including the rank-statistic AUC oracle."""

import json
import logging
import math

import numpy as np
import pytest

from drowsekit.dataset import ClassLabel
from drowsekit.errors import InvalidParameterError
from drowsekit.metrics import (
    BINARY_CLASSES,
    MULTI_CLASSES,
    ConfusionMatrix,
    balanced_accuracy,
    confusion_from_labels,
    fdr,
    format_metrics_text,
    metrics_report,
    roc_curve,
    write_metrics_json,
)


def binary_cm(tn, fp, fn, tp):
    # rows = true (awake, drowsy); cols = predicted (awake, drowsy)
    return ConfusionMatrix(np.array([[tn, fp], [fn, tp]]), BINARY_CLASSES)


def rank_statistic(scores, positives):
    """Brute-force pairwise AUC oracle: P(pos > neg) + 0.5 P(pos == neg)."""
    pos = [s for s, p in zip(scores, positives) if p]
    neg = [s for s, p in zip(scores, positives) if not p]
    wins = 0.0
    for a in pos:
        for b in neg:
            if a > b:
                wins += 1.0
            elif a == b:
                wins += 0.5
    return wins / (len(pos) * len(neg))


class TestConfusionMatrix:
    def test_shape_checked(self):
        with pytest.raises(InvalidParameterError):
            ConfusionMatrix(np.zeros((2, 3)), BINARY_CLASSES)

    def test_negative_rejected(self):
        with pytest.raises(InvalidParameterError):
            ConfusionMatrix(np.array([[1, -1], [0, 2]]), BINARY_CLASSES)

    def test_total(self):
        assert binary_cm(6, 4, 2, 8).total == 20

    def test_addition(self):
        a = binary_cm(1, 2, 3, 4)
        b = binary_cm(10, 0, 0, 10)
        c = a + b
        assert c.counts.tolist() == [[11, 2], [3, 14]]

    def test_from_labels(self):
        cm = confusion_from_labels([0, 0, 2, 2], [0, 2, 2, 0], BINARY_CLASSES)
        assert cm.counts.tolist() == [[1, 1], [1, 1]]

    def test_from_labels_rejects_unknown(self):
        with pytest.raises(InvalidParameterError):
            confusion_from_labels([0, 1], [0, 0], BINARY_CLASSES)


class TestBalancedAccuracy:
    def test_perfect_diagonal(self):
        assert balanced_accuracy(binary_cm(10, 0, 0, 5)) == 1.0

    def test_hand_arithmetic_exact(self):
        # TP=8, FN=2, TN=6, FP=4
        assert balanced_accuracy(binary_cm(6, 4, 2, 8)) == (8 / 10 + 6 / 10) / 2

    def test_constant_predictor_on_balanced_classes(self):
        assert balanced_accuracy(binary_cm(10, 0, 10, 0)) == 0.5

    def test_prevalence_invariance(self):
        a = binary_cm(6, 4, 2, 8)
        b = binary_cm(60, 40, 2, 8)  # awake class duplicated tenfold
        assert balanced_accuracy(a) == balanced_accuracy(b)

    def test_binary_identity_with_rates(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            tn, fp, fn, tp = rng.integers(1, 30, size=4)
            cm = binary_cm(tn, fp, fn, tp)
            fpr = fp / (tn + fp)
            fnr = fn / (fn + tp)
            assert balanced_accuracy(cm) == pytest.approx(1 - (fnr + fpr) / 2, abs=1e-12)

    def test_empty_class_skipped_with_notice(self, caplog):
        cm = ConfusionMatrix(np.array([[7, 3], [0, 0]]), BINARY_CLASSES)
        with caplog.at_level(logging.INFO):
            ba = balanced_accuracy(cm)
        assert ba == 7 / 10
        assert "skipped empty class" in caplog.text

    def test_all_empty_is_nan(self):
        cm = ConfusionMatrix(np.zeros((2, 2), dtype=int), BINARY_CLASSES)
        assert math.isnan(balanced_accuracy(cm))

    def test_three_class(self):
        counts = np.array([[5, 0, 0], [0, 3, 1], [0, 0, 2]])
        cm = ConfusionMatrix(counts, MULTI_CLASSES)
        assert balanced_accuracy(cm) == (1.0 + 3 / 4 + 1.0) / 3


class TestFdr:
    def test_no_alarms(self):
        assert fdr(binary_cm(10, 0, 5, 5)) == 0.0

    def test_every_non_drowsy_alarmed(self):
        assert fdr(binary_cm(0, 10, 0, 5)) == 1.0

    def test_hand_ratio_exact(self):
        assert fdr(binary_cm(6, 4, 2, 8)) == 4 / 10

    def test_multiclass_pools_non_drowsy_truths(self):
        # true awake: 5 (2 alarmed); true questionable: 5 (1 alarmed)
        counts = np.array([[3, 0, 2], [2, 2, 1], [0, 0, 7]])
        cm = ConfusionMatrix(counts, MULTI_CLASSES)
        assert fdr(cm) == 3 / 10

    def test_undefined_without_non_drowsy(self, caplog):
        cm = ConfusionMatrix(np.array([[0, 0], [2, 8]]), BINARY_CLASSES)
        with caplog.at_level(logging.INFO):
            assert math.isnan(fdr(cm))
        assert "undefined" in caplog.text

    def test_needs_drowsy_class(self):
        cm = ConfusionMatrix(
            np.array([[1, 0], [0, 1]]), (ClassLabel.AWAKE, ClassLabel.QUESTIONABLE)
        )
        with pytest.raises(InvalidParameterError):
            fdr(cm)


class TestRoc:
    def test_perfect_separation(self):
        curve = roc_curve([0.9, 0.8, 0.2, 0.1], [True, True, False, False])
        assert curve.auc == pytest.approx(1.0, abs=1e-12)

    def test_inverted_labels(self):
        curve = roc_curve([0.9, 0.8, 0.2, 0.1], [False, False, True, True])
        assert curve.auc == pytest.approx(0.0, abs=1e-12)

    def test_all_tied_scores(self):
        curve = roc_curve([0.5] * 10, [True] * 5 + [False] * 5)
        assert curve.auc == pytest.approx(0.5, abs=1e-12)

    def test_random_scorer_near_half(self):
        rng = np.random.default_rng(7)
        s = rng.random(10000)
        labels = rng.random(10000) < 0.5
        assert roc_curve(s, labels).auc == pytest.approx(0.5, abs=0.02)

    def test_trapezoid_equals_rank_statistic(self):
        rng = np.random.default_rng(11)
        for trial in range(30):
            n = int(rng.integers(5, 60))
            # coarse quantization forces plenty of ties
            s = np.round(rng.random(n), 1)
            labels = rng.random(n) < 0.5
            if labels.all() or not labels.any():
                continue
            assert roc_curve(s, labels).auc == pytest.approx(
                rank_statistic(s, labels), abs=1e-12
            )

    def test_curve_endpoints_and_monotonicity(self):
        rng = np.random.default_rng(3)
        s = rng.random(50)
        labels = rng.random(50) < 0.4
        curve = roc_curve(s, labels)
        assert curve.points[0] == (0.0, 0.0)
        assert curve.points[-1] == (1.0, 1.0)
        xs = [p[0] for p in curve.points]
        ys = [p[1] for p in curve.points]
        assert xs == sorted(xs) and ys == sorted(ys)

    def test_single_class_undefined(self, caplog):
        with caplog.at_level(logging.INFO):
            curve = roc_curve([0.1, 0.2], [True, True])
        assert math.isnan(curve.auc) and curve.points == ()

    def test_shape_mismatch_rejected(self):
        with pytest.raises(InvalidParameterError):
            roc_curve([0.1, 0.2], [True])


class TestReport:
    def test_report_fields(self):
        report = metrics_report(binary_cm(6, 4, 2, 8), auc=0.75)
        assert report["ba"] == (8 / 10 + 6 / 10) / 2
        assert report["fdr"] == 4 / 10
        assert report["auc"] == 0.75
        assert report["classes"] == ["awake", "drowsy"]
        assert report["counts"] == [[6, 4], [2, 8]]

    def test_text_format(self):
        text = format_metrics_text(metrics_report(binary_cm(6, 4, 2, 8), auc=0.75))
        assert text.startswith("ba=0.7")
        assert "counts[awake]=6,4" in text

    def test_json_round_trip_with_nan(self, tmp_path):
        report = metrics_report(binary_cm(6, 4, 2, 8))  # auc defaults to NaN
        path = tmp_path / "metrics.json"
        write_metrics_json(path, report)
        loaded = json.loads(path.read_text())
        assert loaded["auc"] is None
        assert loaded["ba"] == (8 / 10 + 6 / 10) / 2
        assert loaded["counts"] == [[6, 4], [2, 8]]
