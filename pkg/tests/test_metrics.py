from itertools import product
import numpy as np
import pytest

from optima.metrics.calibration import (PredictionLog, ReliabilityTable, expected_calibration_error,
                                        predictive_entropy, auroc, basic_metrics)


def _binary_log(confidence, correct):
    """ Two-class log whose top class has <confidence> and is right where <correct>. """
    confidence = np.asarray(confidence, dtype=np.float64)
    probs = np.stack((confidence, 1 - confidence), axis=1)
    labels = np.where(correct, 0, 1)
    return PredictionLog.classification(probs, labels)


class TestCalibration:

    def test_perfect(self):
        log = PredictionLog.classification(np.eye(3)[[0, 2, 1]], [0, 2, 1])
        ece, _ = expected_calibration_error(log)
        assert ece == 0.

    def test_hand_computed(self):
        """ Two occupied bins with gaps 0.45 and 0.35 give ECE 0.4. """
        log = _binary_log([0.95, 0.95, 0.65, 0.65], [True, False, True, True])
        ece, table = expected_calibration_error(log)
        np.testing.assert_allclose(ece, 0.4, atol=1e-12)
        assert table.counts.tolist() == [0, 0, 0, 0, 0, 0, 2, 0, 0, 2]
        np.testing.assert_allclose(table.confidence[[6, 9]], [0.65, 0.95])
        np.testing.assert_allclose(table.accuracy[[6, 9]], [1., 0.5])
        assert np.isnan(table.accuracy[0])

    def test_right_closed_bins(self):
        """ A confidence of exactly 0.7 falls in (0.6, 0.7]. """
        log = _binary_log([0.7, 1.0], [True, True])
        _, table = expected_calibration_error(log)
        assert table.counts[6] == 1 and table.counts[9] == 1
        assert table.counts.sum() == len(log)

    def test_confidence_above_one(self):
        """ A top probability rounding just above 1 is counted in the last bin. """
        log = PredictionLog.classification([[1 + 5e-7, 0.], [0.35, 0.65]], [0, 1])
        ece, table = expected_calibration_error(log)
        assert table.counts.size == 10
        assert table.counts[9] == 1 and table.counts[6] == 1
        assert 0. <= ece <= 1.

    def test_calibrated_generator(self):
        rng = np.random.default_rng(0)
        confidence = rng.uniform(0.5, 1., size=10**5)
        correct = rng.uniform(size=confidence.size) < confidence
        ece, _ = expected_calibration_error(_binary_log(confidence, correct))
        assert ece < 0.02

    def test_empty(self):
        with pytest.raises(ValueError):
            expected_calibration_error(PredictionLog.classification(np.zeros((0, 2)), []))

    def test_requires_classification(self):
        log = PredictionLog.regression(np.zeros(3), np.ones(3), np.zeros(3))
        with pytest.raises(ValueError):
            expected_calibration_error(log)

    def test_reordering(self):
        rng = np.random.default_rng(2)
        probs = rng.dirichlet(np.ones(3), size=50)
        labels = rng.integers(0, 3, size=50)
        order = rng.permutation(50)
        a, _ = expected_calibration_error(PredictionLog.classification(probs, labels))
        b, _ = expected_calibration_error(PredictionLog.classification(probs[order], labels[order]))
        np.testing.assert_allclose(a, b, rtol=1e-12)
        assert 0. <= a <= 1.

    def test_table_round_trip(self):
        _, table = expected_calibration_error(_binary_log([0.95, 0.65], [True, False]))
        restored = ReliabilityTable.from_dict(table.to_dict())
        np.testing.assert_array_equal(restored.counts, table.counts)
        np.testing.assert_array_equal(restored.accuracy, table.accuracy)

    def test_invalid_probabilities(self):
        with pytest.raises(ValueError):
            PredictionLog.classification([[0.6, 0.6]], [0])


class TestEntropy:

    def test_one_hot(self):
        assert predictive_entropy([0., 1., 0.]) == 0.

    def test_uniform(self):
        np.testing.assert_allclose(predictive_entropy(np.full(10, 0.1)), np.log(10), rtol=1e-12)

    def test_two_point(self):
        np.testing.assert_allclose(predictive_entropy([0.5, 0.5, 0., 0.]), np.log(2), rtol=1e-12)

    def test_rows(self):
        entropy = predictive_entropy(np.array([[1., 0.], [0.5, 0.5]]))
        np.testing.assert_allclose(entropy, [0., np.log(2)], rtol=1e-12)

    def test_negative(self):
        with pytest.raises(ValueError):
            predictive_entropy([1.2, -0.2])


class TestAuroc:

    def test_separated(self):
        assert auroc([0.1, 0.2, 0.3], [0.5, 0.9]) == 1.

    def test_identical(self):
        assert auroc([1., 2., 2., 5.], [5., 2., 1., 2.]) == 0.5

    def test_ties(self):
        """ Rank-based area agrees with exhaustive pair enumeration, ties counting one half. """
        scores_in, scores_out = [1., 2., 3.], [2., 3., 4.]
        pairs = [1. if o > i else 0.5 if o == i else 0. for i, o in product(scores_in, scores_out)]
        assert sum(pairs) == 7.
        np.testing.assert_allclose(auroc(scores_in, scores_out), 7 / 9, rtol=1e-12)

    def test_random_against_enumeration(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            scores_in = rng.integers(0, 5, size=int(rng.integers(1, 8))).astype(float)
            scores_out = rng.integers(0, 5, size=int(rng.integers(1, 8))).astype(float)
            pairs = [1. if o > i else 0.5 if o == i else 0.
                     for i, o in product(scores_in, scores_out)]
            np.testing.assert_allclose(auroc(scores_in, scores_out), np.mean(pairs), rtol=1e-12)

    def test_monotone_invariance(self):
        rng = np.random.default_rng(3)
        scores_in, scores_out = rng.normal(size=30), rng.normal(0.5, size=40)
        np.testing.assert_allclose(auroc(np.exp(scores_in), np.exp(scores_out)),
                                   auroc(scores_in, scores_out), rtol=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            auroc([], [1.])


class TestBasicMetrics:

    def test_accuracy(self):
        log = PredictionLog.classification(np.eye(2)[[0, 1, 1]], [0, 1, 1])
        assert basic_metrics(log)['accuracy'] == 1.

    def test_zero_mse(self):
        log = PredictionLog.regression([1., 2.], None, [1., 2.])
        assert basic_metrics(log)['mse'] == 0.

    def test_mse(self):
        """ Errors of 1 and 3 give a mean squared error of 5. """
        log = PredictionLog.regression([1., 3.], [0., 0.], [0., 0.])
        assert basic_metrics(log)['mse'] == 5.

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            PredictionLog.regression([1., 2.], None, [1.])
