"""Noise channels, confusion counting, and noise-layer initialization."""

import numpy as np
import pytest

from noisylab.model import theta_from_b
from noisylab.noise import (
    GAZETTEER_LIKE_MATRIX,
    ConfusionCounts,
    NoiseChannelSpec,
    apply_channel,
    estimate_confusion,
    identity_init,
    init_noise_weights,
    prediction_confusion_init,
)


class TestApplyChannel:
    def test_uniform_zero_rate_is_identity(self):
        labels = np.array([0, 1, 2, 3, 4, 0, 1])
        out = apply_channel(labels, NoiseChannelSpec.uniform(rho=0.0, k=5, seed=3))
        np.testing.assert_array_equal(out, labels)

    def test_identity_permutation_is_identity(self):
        labels = np.array([0, 2, 1, 2, 0])
        out = apply_channel(labels, NoiseChannelSpec.from_permutation([0, 1, 2]))
        np.testing.assert_array_equal(out, labels)

    def test_permutation_substitutes_deterministically(self):
        labels = np.array([0, 1, 2])
        out = apply_channel(labels, NoiseChannelSpec.from_permutation([1, 2, 0]))
        np.testing.assert_array_equal(out, np.array([1, 2, 0]))

    def test_seeded_reproducibility(self):
        labels = np.random.default_rng(0).integers(0, 5, size=1000)
        spec = NoiseChannelSpec.gazetteer_like(seed=11)
        np.testing.assert_array_equal(apply_channel(labels, spec), apply_channel(labels, spec))

    def test_different_seed_differs(self):
        labels = np.ones(500, dtype=np.int64)
        a = apply_channel(labels, NoiseChannelSpec.uniform(rho=0.5, k=5, seed=1))
        b = apply_channel(labels, NoiseChannelSpec.uniform(rho=0.5, k=5, seed=2))
        assert (a != b).any()

    def test_empirical_retention_rate_close_to_spec(self):
        # one low-recall row: PER keeps its label 26% of the time
        n = 10_000
        labels = np.full(n, 1, dtype=np.int64)
        spec = NoiseChannelSpec.empirical(GAZETTEER_LIKE_MATRIX, seed=7)
        out = apply_channel(labels, spec)
        retention = (out == 1).mean()
        assert abs(retention - 0.26) < 0.02

    def test_marginals_close_to_spec_for_all_classes(self):
        n = 10_000
        spec = NoiseChannelSpec.gazetteer_like(seed=21)
        for i in range(5):
            out = apply_channel(np.full(n, i, dtype=np.int64), spec)
            freq = np.bincount(out, minlength=5) / n
            np.testing.assert_allclose(freq, GAZETTEER_LIKE_MATRIX[i], atol=0.02)

    def test_uniform_marginals(self):
        n = 10_000
        rho = 0.3
        out = apply_channel(np.zeros(n, dtype=np.int64),
                            NoiseChannelSpec.uniform(rho=rho, k=5, seed=5))
        stay = (out == 0).mean()
        assert abs(stay - (1 - rho)) < 0.02
        for j in range(1, 5):
            assert abs((out == j).mean() - rho / 4) < 0.02

    def test_malformed_matrix_rejected(self):
        bad = np.array([[0.5, 0.2], [0.0, 1.0]])
        with pytest.raises(ValueError):
            NoiseChannelSpec.empirical(bad)

    def test_rho_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            NoiseChannelSpec.uniform(rho=1.5, k=3)

    def test_label_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            apply_channel(np.array([7]), NoiseChannelSpec.uniform(rho=0.1, k=5))


class TestEstimateConfusion:
    def test_equal_sequences_are_diagonal(self):
        y = np.array([0, 1, 2, 1, 0])
        counts = estimate_confusion(y, y, k=3).counts
        np.testing.assert_array_equal(counts, np.diag([2, 2, 1]))

    def test_hand_counted_case(self):
        counts = estimate_confusion([0, 0, 1], [0, 1, 1], k=2).counts
        np.testing.assert_array_equal(counts, np.array([[1, 1], [0, 1]]))

    def test_empty_input_all_zero(self):
        counts = estimate_confusion([], [], k=4).counts
        np.testing.assert_array_equal(counts, np.zeros((4, 4)))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            estimate_confusion([0, 1], [0], k=2)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            estimate_confusion([0, 3], [0, 1], k=2)

    def test_row_totals(self):
        counts = estimate_confusion([0, 0, 1], [0, 1, 1], k=2)
        np.testing.assert_array_equal(counts.row_totals, np.array([2, 1]))


class TestInitNoiseWeights:
    def test_hand_arithmetic(self):
        counts = ConfusionCounts(np.array([[10, 0], [0, 10]]))
        b = init_noise_weights(counts, alpha=1.0)
        np.testing.assert_allclose(b[0], [np.log(11 / 12), np.log(1 / 12)], atol=1e-15)
        np.testing.assert_allclose(theta_from_b(b)[0], [11 / 12, 1 / 12], atol=1e-15)

    def test_empty_row_becomes_uniform(self):
        counts = ConfusionCounts(np.zeros((5, 5), dtype=int))
        theta = theta_from_b(init_noise_weights(counts, alpha=1.0))
        np.testing.assert_allclose(theta, 0.2, atol=1e-15)

    def test_noiseless_corpus_gives_near_identity(self):
        y = np.random.default_rng(0).integers(0, 3, size=400)
        counts = estimate_confusion(y, y, k=3)
        theta = theta_from_b(init_noise_weights(counts, alpha=1.0))
        assert (counts.row_totals >= 50).all()
        assert (np.diag(theta) > 0.9).all()

    def test_softmax_reproduces_smoothed_rows_exactly(self):
        rng = np.random.default_rng(1)
        counts = ConfusionCounts(rng.integers(0, 40, size=(5, 5)))
        alpha = 0.7
        theta = theta_from_b(init_noise_weights(counts, alpha=alpha))
        c = counts.counts.astype(float)
        smoothed = (c + alpha) / (c.sum(axis=1, keepdims=True) + 5 * alpha)
        np.testing.assert_allclose(theta, smoothed, atol=1e-12)

    def test_alpha_must_be_positive(self):
        with pytest.raises(ValueError):
            init_noise_weights(ConfusionCounts(np.zeros((2, 2), dtype=int)), alpha=0.0)


class TestIdentityInit:
    def test_shape_and_values(self):
        b = identity_init(4)
        np.testing.assert_array_equal(b, np.eye(4))

    def test_theta_diagonal_k5(self):
        theta = theta_from_b(identity_init(5))
        np.testing.assert_allclose(np.diag(theta), np.e / (np.e + 4), atol=1e-12)

    def test_theta_diagonal_k2(self):
        theta = theta_from_b(identity_init(2))
        assert theta[0, 0] == pytest.approx(np.e / (np.e + 1), abs=1e-12)

    def test_k_must_be_at_least_two(self):
        with pytest.raises(ValueError):
            identity_init(1)


class TestPredictionConfusionInit:
    def test_predictions_equal_noisy_labels_gives_near_identity(self):
        z = np.random.default_rng(2).integers(0, 4, size=800)
        theta = theta_from_b(prediction_confusion_init(z, z, k=4))
        assert (np.diag(theta) > 0.9).all()

    def test_independent_predictions_give_near_uniform_rows(self):
        rng = np.random.default_rng(3)
        pred = rng.integers(0, 4, size=20_000)
        z = rng.integers(0, 4, size=20_000)
        theta = theta_from_b(prediction_confusion_init(pred, z, k=4))
        np.testing.assert_allclose(theta, 0.25, atol=0.02)

    def test_rows_normalize(self):
        rng = np.random.default_rng(4)
        theta = theta_from_b(prediction_confusion_init(
            rng.integers(0, 3, 50), rng.integers(0, 3, 50), k=3))
        np.testing.assert_allclose(theta.sum(axis=1), 1.0, atol=1e-12)
