import itertools

import numpy as np
import pytest

from app.errors import BadEpsilon, NoNegative, NoPositive, ShapeMismatch
from app.training.losses import (
    Batch,
    cross_entropy,
    mine_batch_hard,
    smooth_labels,
    total_loss,
    triplet_batch_hard,
)


def _random_labels(rng: np.random.Generator, n: int) -> np.ndarray:
    """Labels over 2..n//2 classes, every class holding at least two members."""
    n_classes = int(rng.integers(2, n // 2 + 1))
    labels = np.concatenate([np.arange(n_classes), np.arange(n_classes), rng.integers(0, n_classes, n - 2 * n_classes)])
    return rng.permutation(labels)


def _central_difference(fn, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    grad = np.zeros_like(x)
    for index in np.ndindex(x.shape):
        up, down = x.copy(), x.copy()
        up[index] += h
        down[index] -= h
        grad[index] = (fn(up) - fn(down)) / (2 * h)
    return grad


def _relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-8))


class TestSmoothLabels:
    def test_two_classes(self):
        np.testing.assert_allclose(smooth_labels(0, 2, 0.1), [0.9, 0.1])

    def test_sums_to_one(self):
        for k in range(2, 12):
            for eps in np.linspace(0.0, 1.0, 11):
                p = smooth_labels(k - 1, k, eps)
                assert np.all(p >= 0)
                assert p.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("eps", [-0.1, 1.5])
    def test_bad_epsilon(self, eps):
        with pytest.raises(BadEpsilon):
            smooth_labels(0, 3, eps)


class TestCrossEntropy:
    @pytest.mark.parametrize("k", range(2, 11))
    def test_uniform_logits_give_log_k(self, k):
        loss, _ = cross_entropy(np.zeros((3, k)), np.arange(3) % k, 0.1)
        assert abs(loss - np.log(k)) < 1e-12

    def test_confident_correct_logit_without_smoothing(self):
        loss, grad = cross_entropy(np.array([[50.0, 0.0]]), np.array([0]), 0.0)
        assert loss < 1e-20
        np.testing.assert_allclose(grad, 0.0, atol=1e-20)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n, k = int(rng.integers(1, 6)), int(rng.integers(2, 7))
            logits = rng.normal(0.0, 2.0, size=(n, k))
            labels = rng.integers(0, k, n)
            eps = float(rng.uniform(0.0, 0.5))
            _, grad = cross_entropy(logits, labels, eps)
            numeric = _central_difference(lambda z: cross_entropy(z, labels, eps)[0], logits)
            assert _relative_error(grad, numeric) < 1e-4


def _brute_force_triplet(features: np.ndarray, labels: np.ndarray, margin: float) -> float:
    n = features.shape[0]
    total = 0.0
    for a in range(n):
        d2 = lambda j: float(np.sum((features[a] - features[j]) ** 2))  # noqa: E731
        positives = [d2(p) for p in range(n) if p != a and labels[p] == labels[a]]
        negatives = [d2(q) for q in range(n) if labels[q] != labels[a]]
        hardest = max(max(positives) - q for q in negatives)
        total += max(0.0, hardest + margin)
    return total / n


class TestTripletBatchHard:
    def test_identical_features_give_margin(self):
        loss, grad = triplet_batch_hard(np.ones((6, 3)), np.array([0, 0, 1, 1, 2, 2]), 1.2)
        assert loss == pytest.approx(1.2)
        np.testing.assert_allclose(grad, 0.0, atol=1e-12)

    def test_separated_clusters_give_zero(self):
        features = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 0.0], [5.0, 0.0]])
        loss, grad = triplet_batch_hard(features, np.array([0, 0, 1, 1]), 1.2)
        assert loss == 0.0
        np.testing.assert_array_equal(grad, 0.0)

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            n = int(rng.integers(4, 13))
            labels = _random_labels(rng, n)
            features = rng.normal(size=(n, int(rng.integers(1, 5))))
            loss, _ = triplet_batch_hard(features, labels, 1.2)
            assert loss == pytest.approx(_brute_force_triplet(features, labels, 1.2), abs=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            n = int(rng.integers(4, 9))
            labels = _random_labels(rng, n)
            features = rng.normal(size=(n, 3))
            _, grad = triplet_batch_hard(features, labels, 1.2)
            numeric = _central_difference(lambda f: triplet_batch_hard(f, labels, 1.2)[0], features)
            assert _relative_error(grad, numeric) < 1e-4

    def test_ties_pick_lowest_index(self):
        features = np.array([[0.0], [1.0], [1.0], [-1.0], [-1.0]])
        labels = np.array([0, 0, 0, 1, 1])
        pos, neg, _ = mine_batch_hard(features, labels)
        assert pos[0] == 1
        assert neg[0] == 3

    def test_missing_positive(self):
        with pytest.raises(NoPositive):
            triplet_batch_hard(np.zeros((3, 2)), np.array([0, 1, 1]), 1.0)

    def test_missing_negative(self):
        with pytest.raises(NoNegative):
            triplet_batch_hard(np.zeros((3, 2)), np.array([0, 0, 0]), 1.0)


class TestTotalLoss:
    def _batch(self, seed: int = 3) -> Batch:
        rng = np.random.default_rng(seed)
        return Batch(features=rng.normal(size=(6, 3)), labels=[0, 0, 1, 1, 2, 2], logits=rng.normal(size=(6, 3)))

    def test_weighted_sum(self, config):
        value = total_loss(self._batch(), config)
        assert value.total == value.ce + 0.4 * value.tri

    def test_weighted_sum_arithmetic(self, config):
        # identical features put the triplet term at the margin
        batch = Batch(features=np.zeros((4, 2)), labels=[0, 0, 1, 1], logits=np.zeros((4, 2)))
        value = total_loss(batch, config.with_overrides(margin=1.25))
        assert value.tri == pytest.approx(1.25)
        assert value.total == pytest.approx(np.log(2) + 0.5)

    def test_lambda_zero_is_cross_entropy(self, config):
        batch = self._batch()
        value = total_loss(batch, config.with_overrides(lambda_=0.0))
        ce, grad_logits = cross_entropy(batch.logits, batch.labels, config.epsilon)
        assert value.total == ce
        np.testing.assert_array_equal(value.grad_logits, grad_logits)
        np.testing.assert_array_equal(value.grad_features, 0.0)

    def test_batch_shape_checks(self):
        with pytest.raises(ShapeMismatch):
            Batch(features=np.zeros((3, 2)), labels=[0, 1], logits=np.zeros((3, 2)))
        with pytest.raises(ShapeMismatch):
            Batch(features=np.zeros((2, 2)), labels=[0, 2], logits=np.zeros((2, 2)))


def test_all_triplets_enumerated_for_tiny_batch():
    features = np.array([[0.0], [0.5], [2.0], [2.2]])
    labels = np.array([0, 0, 1, 1])
    worst = []
    for a in range(4):
        terms = [
            np.sum((features[a] - features[p]) ** 2) - np.sum((features[a] - features[q]) ** 2) + 1.2
            for p, q in itertools.product(range(4), range(4))
            if p != a and labels[p] == labels[a] and labels[q] != labels[a]
        ]
        worst.append(max(0.0, max(terms)))
    loss, _ = triplet_batch_hard(features, labels, 1.2)
    assert loss == pytest.approx(np.mean(worst), abs=1e-12)
