import numpy as np
import pytest

from graphmix import nn
from graphmix.model import (
    FeatureSource,
    MixSpec,
    ModelParams,
    ema_update,
    fcn_backward,
    fcn_forward,
    fcn_mixup_backward,
    fcn_mixup_forward,
    gcn_backward,
    gcn_forward,
    gcn_hidden,
    load_checkpoint,
    save_checkpoint,
)
from graphmix.rng import Rng
from graphmix.sparse import CSRMatrix

from conftest import finite_difference, rel_error


def make_params(d=6, h=5, c=3, seed=0, use_bias=False):
    return ModelParams.init(d, h, c, Rng(seed), use_bias)


def random_a_hat(n, seed=0):
    from graphmix.graphdata import Graph, normalize_adjacency

    gen = Rng(seed).derive("g")
    dense = np.triu(gen.random((n, n)) < 0.5, 1)
    src, dst = np.nonzero(dense)
    return normalize_adjacency(Graph.from_edges(n, src, dst))


def one_hot_targets(n, c, seed=1):
    gen = Rng(seed).derive("y")
    return np.eye(c)[gen.integers(0, c, size=n)]


class TestForwardEquivalences:
    def test_identity_aggregation_collapses_to_fcn(self):
        n, d = 7, 6
        params = make_params(d=d)
        x = Rng(2).derive("x").normal(size=(n, d))
        eye = CSRMatrix.identity(n)
        g_logits, _ = gcn_forward(params, eye, x, 0.5, 0.3, Rng(9).derive("drop"), train=True)
        f_logits, _ = fcn_forward(params, x, 0.5, 0.3, Rng(9).derive("drop"), train=True)
        assert np.array_equal(g_logits, f_logits)

    def test_single_self_loop_node(self):
        params = make_params(d=4)
        x = np.array([[0.5, -1.0, 2.0, 0.25]])
        a = CSRMatrix.identity(1)
        logits, _ = gcn_forward(params, a, x, 0.0, 0.0, None, train=False)
        expected = nn.relu(x @ params.w1.value) @ params.w2.value
        assert np.allclose(logits, expected, atol=1e-14)

    def test_zero_feature_row_gives_zero_logits_without_bias(self):
        params = make_params(d=4)
        x = np.zeros((2, 4))
        x[1] = 1.0
        logits, _ = fcn_forward(params, x, 0.0, 0.0, None, train=False)
        assert np.array_equal(logits[0], np.zeros(3))

    def test_eval_mode_ignores_dropout(self):
        params = make_params()
        x = Rng(3).derive("x").normal(size=(5, 6))
        a, _ = fcn_forward(params, x, 0.9, 0.9, None, train=False)
        b, _ = fcn_forward(params, x, 0.0, 0.0, None, train=False)
        assert np.array_equal(a, b)


class TestMixup:
    def test_lambda_one_equals_plain_forward_bitwise(self):
        params = make_params()
        x = Rng(4).derive("x").normal(size=(6, 6))
        t = one_hot_targets(6, 3)
        perm = Rng(5).derive("p").permutation(6)
        mix = MixSpec(1.0, perm)
        a, mixed, _ = fcn_mixup_forward(params, x, t, mix, 0.5, 0.2, Rng(7).derive("d"))
        b, _ = fcn_forward(params, x, 0.5, 0.2, Rng(7).derive("d"), train=True)
        assert np.array_equal(a, b)
        assert np.array_equal(mixed, t)

    def test_identity_permutation_equals_plain_forward_for_any_lambda(self):
        params = make_params()
        x = Rng(6).derive("x").normal(size=(5, 6))
        t = one_hot_targets(5, 3)
        for lam in (0.0, 0.3, 0.8):
            mix = MixSpec(lam, np.arange(5))
            a, mixed, _ = fcn_mixup_forward(params, x, t, mix, 0.4, 0.0, Rng(8).derive("d"))
            b, _ = fcn_forward(params, x, 0.4, 0.0, Rng(8).derive("d"), train=True)
            assert np.allclose(a, b, rtol=1e-12, atol=1e-14)
            assert np.allclose(mixed, t, atol=1e-15)

    def test_half_mix_of_one_hot_targets(self):
        params = make_params(d=4, c=4)
        x = Rng(9).derive("x").normal(size=(2, 4))
        t = np.eye(4)[[0, 2]]
        mix = MixSpec(0.5, np.array([1, 0]))
        _, mixed, _ = fcn_mixup_forward(params, x, t, mix, 0.0, 0.0, None)
        assert np.allclose(mixed, [[0.5, 0, 0.5, 0], [0.5, 0, 0.5, 0]], atol=1e-15)

    def test_rejects_non_bijection(self):
        params = make_params()
        x = np.zeros((3, 6))
        t = one_hot_targets(3, 3)
        with pytest.raises(ValueError):
            fcn_mixup_forward(params, x, t, MixSpec(0.5, np.array([0, 0, 2])), 0.0, 0.0, None)

    def test_rejects_misaligned_targets(self):
        params = make_params()
        with pytest.raises(ValueError):
            fcn_mixup_forward(
                params, np.zeros((3, 6)), one_hot_targets(2, 3),
                MixSpec(0.5, np.arange(3)), 0.0, 0.0, None,
            )


class TestGradients:
    """Backward passes against central finite differences; dropout masks
    are frozen by rebuilding the generator from the same label."""

    def loss_and_grads(self, forward_backward, params):
        for p in params.parameters():
            p.zero_grad()
        loss = forward_backward()
        return loss, [p.grad.copy() for p in params.parameters()]

    def check_params(self, params, forward_backward, loss_only, tol=1e-5):
        _, grads = self.loss_and_grads(forward_backward, params)
        for p, g in zip(params.parameters(), grads):
            num = finite_difference(loss_only, p.value, eps=1e-6)
            assert rel_error(num, g) < tol

    def test_gcn_loss_gradients(self):
        n, d, c = 8, 6, 3
        params = make_params(d=d, c=c, use_bias=True)
        a_hat = random_a_hat(n, seed=1)
        x = Rng(10).derive("x").normal(size=(n, d))
        t = one_hot_targets(n, c)

        def forward(do_backward):
            gen = Rng(11).fresh("drop")
            logits, cache = gcn_forward(params, a_hat, x, 0.4, 0.3, gen, train=True)
            loss, d_logits = nn.softmax_cross_entropy(logits, t)
            if do_backward:
                gcn_backward(cache, d_logits, params, a_hat)
            return loss

        self.check_params(params, lambda: forward(True), lambda: forward(False))

    def test_fcn_loss_gradients(self):
        n, d, c = 7, 5, 3
        params = make_params(d=d, c=c)
        x = Rng(12).derive("x").normal(size=(n, d))
        t = one_hot_targets(n, c)

        def forward(do_backward):
            gen = Rng(13).fresh("drop")
            logits, cache = fcn_forward(params, x, 0.3, 0.2, gen, train=True)
            loss, d_logits = nn.softmax_cross_entropy(logits, t)
            if do_backward:
                fcn_backward(cache, d_logits, params)
            return loss

        self.check_params(params, lambda: forward(True), lambda: forward(False))

    def test_mixup_loss_gradients(self):
        n, d, c = 8, 6, 4
        params = make_params(d=d, c=c, use_bias=True)
        x = Rng(14).derive("x").normal(size=(n, d))
        t = one_hot_targets(n, c)
        mix = MixSpec(0.37, Rng(15).derive("p").permutation(n))

        def forward(do_backward):
            gen = Rng(16).fresh("drop")
            logits, mixed, cache = fcn_mixup_forward(params, x, t, mix, 0.4, 0.25, gen)
            loss, d_logits = nn.softmax_cross_entropy(logits, mixed)
            if do_backward:
                fcn_mixup_backward(cache, d_logits, params)
            return loss

        self.check_params(params, lambda: forward(True), lambda: forward(False))

    def test_sparse_features_match_dense_gradients(self):
        n, d, c = 6, 8, 3
        gen = Rng(17).derive("x")
        dense = (gen.random((n, d)) < 0.4) * gen.normal(size=(n, d))
        rows, cols = np.nonzero(dense)
        sparse = CSRMatrix.from_coo(rows, cols, dense[rows, cols], (n, d))
        t = one_hot_targets(n, c)
        a_hat = random_a_hat(n, seed=2)

        grads = []
        for x in (dense, sparse):
            params = make_params(d=d, c=c, seed=4)
            logits, cache = gcn_forward(params, a_hat, x, 0.0, 0.0, None, train=True)
            _, d_logits = nn.softmax_cross_entropy(logits, t)
            gcn_backward(cache, d_logits, params, a_hat)
            grads.append([p.grad.copy() for p in params.parameters()])
        for gd, gs in zip(*grads):
            assert np.allclose(gd, gs, atol=1e-13)


class TestWeightSharing:
    def test_mutation_through_one_view_changes_the_other(self):
        params = make_params()
        n = 5
        x = Rng(18).derive("x").normal(size=(n, 6))
        a_hat = random_a_hat(n, seed=3)
        before, _ = gcn_forward(params, a_hat, x, 0.0, 0.0, None, train=False)
        # one FCN-side update on the shared parameters
        logits, cache = fcn_forward(params, x, 0.0, 0.0, None, train=True)
        _, d_logits = nn.softmax_cross_entropy(logits, one_hot_targets(n, 3))
        fcn_backward(cache, d_logits, params)
        for p in params.parameters():
            nn.adam_step(p, nn.AdamConfig(lr=0.1))
        after, _ = gcn_forward(params, a_hat, x, 0.0, 0.0, None, train=False)
        assert not np.array_equal(before, after)


class TestEma:
    def test_update_formula(self):
        a = make_params(seed=1)
        b = make_params(seed=2)
        expected = 0.9 * a.w1.value + 0.1 * b.w1.value
        ema_update(a, b, 0.9)
        assert np.allclose(a.w1.value, expected, atol=1e-15)


class TestCheckpoint:
    @pytest.mark.parametrize("use_bias", [False, True])
    def test_round_trip_exact(self, tmp_path, use_bias):
        params = make_params(use_bias=use_bias)
        path = str(tmp_path / "ckpt.npz")
        save_checkpoint(params, path)
        back = load_checkpoint(path)
        assert np.array_equal(back.w1.value, params.w1.value)
        assert np.array_equal(back.w2.value, params.w2.value)
        assert (back.b1 is None) == (not use_bias)
        if use_bias:
            assert np.array_equal(back.b1.value, params.b1.value)
            assert np.array_equal(back.b2.value, params.b2.value)


class TestFeatureSource:
    def test_take_matches_direct_slicing(self):
        gen = Rng(19).derive("x")
        dense = gen.normal(size=(6, 4))
        rows, cols = np.nonzero(dense)
        sparse = CSRMatrix.from_coo(rows, cols, dense[rows, cols], dense.shape)
        ids = np.array([4, 1, 1, 5])
        assert np.array_equal(FeatureSource(dense).take(ids).x, dense[ids])
        assert np.array_equal(FeatureSource(sparse).take(ids).x.to_dense(), dense[ids])

    def test_hidden_export_is_eval_mode(self):
        params = make_params()
        n = 5
        x = Rng(20).derive("x").normal(size=(n, 6))
        a_hat = random_a_hat(n, seed=5)
        h = gcn_hidden(params, a_hat, x)
        z = a_hat.matmul_dense(x @ params.w1.value)
        assert np.array_equal(h, np.maximum(z, 0.0))
