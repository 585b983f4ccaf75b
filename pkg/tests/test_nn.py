import numpy as np
import pytest

from graphmix import nn
from graphmix.rng import Rng
from graphmix.sparse import CSRMatrix

from conftest import finite_difference, rel_error


def rand(shape, seed=0):
    return Rng(seed).derive("test").normal(size=shape)


class TestMatmul:
    def test_shapes_checked(self):
        with pytest.raises(ValueError):
            nn.matmul(np.zeros((2, 3)), np.zeros((4, 2)))

    def test_backward_matches_finite_differences(self):
        a = rand((4, 5), 1)
        b = rand((5, 3), 2)
        w = rand((4, 3), 3)  # fixed cotangent: loss = sum(w * (a @ b))

        def loss():
            return float((w * (a @ b)).sum())

        da, db = nn.matmul_backward(w, a, b)
        assert rel_error(finite_difference(loss, a), da) < 1e-6
        assert rel_error(finite_difference(loss, b), db) < 1e-6


class TestSpmm:
    def test_identity_is_exact(self):
        x = rand((6, 4), 4)
        s = CSRMatrix.identity(6)
        assert np.array_equal(s.matmul_dense(x), x)

    def test_backward_matches_finite_differences(self):
        gen = Rng(5).derive("test")
        n = 5
        dense = (gen.random((n, n)) < 0.5).astype(float) * gen.normal(size=(n, n))
        rows, cols = np.nonzero(dense)
        s = CSRMatrix.from_coo(rows, cols, dense[rows, cols], (n, n))
        x = rand((n, 3), 6)
        w = rand((n, 3), 7)

        def loss():
            return float((w * s.matmul_dense(x)).sum())

        dx = s.transpose().matmul_dense(w)
        assert rel_error(finite_difference(loss, x), dx) < 1e-6


class TestRelu:
    def test_forward(self):
        x = np.array([[-1.0, 0.0, 2.0]])
        assert np.array_equal(nn.relu(x), [[0.0, 0.0, 2.0]])

    def test_backward_matches_finite_differences(self):
        x = rand((4, 4), 8) + 0.1  # keep away from the kink
        w = rand((4, 4), 9)

        def loss():
            return float((w * nn.relu(x)).sum())

        assert rel_error(finite_difference(loss, x), nn.relu_backward(w, x)) < 1e-6


class TestDropout:
    def test_rate_zero_is_identity_and_draws_nothing(self):
        gen = Rng(0).derive("d")
        x = rand((3, 3), 1)
        out, mask = nn.dropout(x, 0.0, gen, train=True)
        assert out is x and mask is None
        # the generator was never touched: it agrees with a fresh twin
        assert gen.random() == Rng(0).derive("d").random()

    def test_eval_mode_is_identity(self):
        gen = Rng(0).derive("d")
        x = rand((3, 3), 1)
        out, mask = nn.dropout(x, 0.9, gen, train=False)
        assert out is x and mask is None

    def test_kept_entries_scaled(self):
        gen = Rng(1).derive("d")
        x = np.ones((50, 50))
        out, mask = nn.dropout(x, 0.5, gen)
        assert np.array_equal(np.unique(out), [0.0, 2.0])
        assert np.array_equal(out != 0, mask)

    def test_expectation_matches_input(self):
        gen = Rng(2).derive("d")
        x = np.full((5, 5), 3.0)
        total = np.zeros_like(x)
        for _ in range(10_000):
            out, _ = nn.dropout(x, 0.3, gen)
            total += out
        assert rel_error(total / 10_000, x) < 0.05

    def test_backward_matches_finite_differences(self):
        gen = Rng(3).derive("d")
        x = rand((4, 4), 10)
        _, mask = nn.dropout(x, 0.5, gen)
        w = rand((4, 4), 11)

        def loss():
            return float((w * (x * mask / 0.5)).sum())

        assert rel_error(finite_difference(loss, x), nn.dropout_backward(w, mask, 0.5)) < 1e-6

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            nn.dropout(np.ones((2, 2)), 1.0, Rng(0).derive("d"))

    def test_csr_masks_stored_values_only(self):
        gen = Rng(4).derive("d")
        s = CSRMatrix.from_coo([0, 0, 1], [0, 2, 1], [1.0, 1.0, 1.0], (2, 3))
        out = nn.dropout_csr(s, 0.5, gen)
        assert np.array_equal(out.indices, s.indices)
        assert set(np.unique(out.values)) <= {0.0, 2.0}
        assert nn.dropout_csr(s, 0.0, gen) is s


class TestSoftmax:
    def test_rows_sum_to_one(self):
        z = rand((10, 7), 12) * 50
        assert np.abs(nn.softmax(z).sum(axis=1) - 1).max() < 1e-12

    def test_shift_invariant(self):
        z = rand((3, 4), 13)
        assert np.allclose(nn.softmax(z), nn.softmax(z + 100.0), atol=1e-12)


class TestSoftmaxCrossEntropy:
    def test_uniform_logits_one_hot(self):
        logits = np.zeros((3, 4))
        targets = np.eye(4)[[0, 2, 3]]
        loss, _ = nn.softmax_cross_entropy(logits, targets)
        assert abs(loss - np.log(4)) < 1e-12

    def test_symmetric_soft_target_zero_gradient(self):
        logits = np.array([[1.0, 1.0]])
        targets = np.array([[0.5, 0.5]])
        _, d = nn.softmax_cross_entropy(logits, targets)
        assert np.abs(d).max() < 1e-12

    def test_gradient_matches_finite_differences(self):
        logits = rand((5, 4), 14)
        gen = Rng(15).derive("t")
        targets = gen.random((5, 4))
        targets /= targets.sum(axis=1, keepdims=True)
        weights = np.array([1.0, 0.0, 2.0, 1.0, 0.5])

        def loss():
            return nn.softmax_cross_entropy(logits, targets, weights)[0]

        _, d = nn.softmax_cross_entropy(logits, targets, weights)
        assert rel_error(finite_difference(loss, logits), d) < 1e-6

    def test_weighted_mean_normalization(self):
        logits = rand((4, 3), 16)
        targets = np.eye(3)[[0, 1, 2, 0]]
        loss_all, _ = nn.softmax_cross_entropy(logits, targets)
        loss_scaled, _ = nn.softmax_cross_entropy(logits, targets, np.full(4, 7.0))
        assert abs(loss_all - loss_scaled) < 1e-12

    def test_unselected_rows_ignored(self):
        logits = rand((3, 3), 17)
        targets = np.vstack([np.eye(3)[[0, 1]], np.full((1, 3), 9.0)])  # bad row unselected
        weights = np.array([1.0, 1.0, 0.0])
        loss, d = nn.softmax_cross_entropy(logits, targets, weights)
        ref, _ = nn.softmax_cross_entropy(logits[:2], targets[:2])
        assert abs(loss - ref) < 1e-12
        assert np.array_equal(d[2], np.zeros(3))

    def test_rejects_unnormalized_targets(self):
        with pytest.raises(ValueError):
            nn.softmax_cross_entropy(np.zeros((1, 3)), np.array([[0.5, 0.2, 0.2]]))

    def test_rejects_all_zero_weights(self):
        with pytest.raises(ValueError):
            nn.softmax_cross_entropy(np.zeros((2, 2)), np.eye(2), np.zeros(2))


class TestAdam:
    def test_first_step_from_unit_gradient(self):
        # independent evaluation of the update formulas
        m_hat = 1.0  # (0.1 * 1) / (1 - 0.9)
        v_hat = 1.0  # (0.001 * 1) / (1 - 0.999)
        expected = 1.0 - 0.01 * m_hat / (np.sqrt(v_hat) + 1e-8)
        p = nn.Parameter(np.array([[1.0]]))
        p.grad[:] = 1.0
        nn.adam_step(p, nn.AdamConfig(lr=0.01))
        assert abs(p.value[0, 0] - expected) < 1e-15
        assert abs(p.value[0, 0] - 0.99) < 1e-6
        assert p.grad[0, 0] == 0.0 and p.step_count == 1

    def test_zero_gradient_leaves_value(self):
        p = nn.Parameter(np.array([[2.0, -3.0]]))
        nn.adam_step(p, nn.AdamConfig(lr=0.1))
        assert np.array_equal(p.value, [[2.0, -3.0]])

    def test_weight_decay_shrinks_norm_monotonically(self):
        p = nn.Parameter(rand((3, 3), 18))
        cfg = nn.AdamConfig(lr=0.01, weight_decay=0.1)
        norms = [np.linalg.norm(p.value)]
        for _ in range(50):
            nn.adam_step(p, cfg)
            norms.append(np.linalg.norm(p.value))
        assert all(b < a for a, b in zip(norms, norms[1:]))

    def test_identical_runs_identical_trajectories(self):
        def run():
            p = nn.Parameter(np.array([[1.0, 2.0]]))
            out = []
            for i in range(5):
                p.grad[:] = [[0.1 * i, -0.2]]
                nn.adam_step(p, nn.AdamConfig(lr=0.05, weight_decay=0.01))
                out.append(p.value.copy())
            return np.concatenate(out)

        assert np.array_equal(run(), run())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            nn.AdamConfig(lr=0.0)
        with pytest.raises(ValueError):
            nn.AdamConfig(lr=0.1, beta1=1.0)
        with pytest.raises(ValueError):
            nn.AdamConfig(lr=0.1, weight_decay=-1.0)


class TestSampleBeta:
    def test_zero_alpha_sentinel(self):
        gen = Rng(0).derive("b")
        assert nn.sample_beta(0.0, gen) == 1.0
        # no draw consumed
        assert gen.random() == Rng(0).derive("b").random()

    def test_uniform_case_moments(self):
        gen = Rng(1).derive("b")
        draws = np.array([nn.sample_beta(1.0, gen) for _ in range(100_000)])
        assert abs(draws.mean() - 0.5) < 0.01
        assert abs(draws.var() - 1 / 12) < 0.05 / 12

    def test_rejects_negative_alpha(self):
        with pytest.raises(ValueError):
            nn.sample_beta(-0.1, Rng(0).derive("b"))

    def test_range(self):
        gen = Rng(2).derive("b")
        draws = np.array([nn.sample_beta(0.5, gen) for _ in range(1000)])
        assert draws.min() >= 0.0 and draws.max() <= 1.0


class TestParameter:
    def test_copy_is_independent(self):
        p = nn.Parameter(np.ones((2, 2)))
        p.grad[:] = 5.0
        q = p.copy()
        q.value[0, 0] = -1.0
        q.grad[0, 0] = 0.0
        assert p.value[0, 0] == 1.0 and p.grad[0, 0] == 5.0
        assert q.step_count == p.step_count
