import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import random_unit_bow
from essvec.numerics.adam import AdamState, adam_step
from essvec.numerics.dense import (DegenerateDistributionError, DenseLayer,
                                   cosine_similarity, dense_forward,
                                   init_layers, kl_divergence, softmax,
                                   stack_backward, stack_forward,
                                   zeros_grads)
from essvec.numerics.gradcheck import finite_difference_check


class TestDenseLayer:
    def test_forward_matches_manual_tanh(self, rng):
        layer = DenseLayer(weight=rng.standard_normal((3, 4)),
                           bias=rng.standard_normal(3), activation="tanh")
        x = rng.standard_normal(4)
        assert_allclose(dense_forward(layer, x),
                        np.tanh(layer.weight @ x + layer.bias), rtol=1e-15)

    def test_forward_matches_manual_softmax(self, rng):
        layer = DenseLayer(weight=rng.standard_normal((5, 3)),
                           bias=rng.standard_normal(5),
                           activation="softmax")
        x = rng.standard_normal(3)
        z = layer.weight @ x + layer.bias
        expected = np.exp(z - z.max())
        expected /= expected.sum()
        assert_allclose(dense_forward(layer, x), expected, rtol=1e-12)

    def test_sparse_input_equals_dense_input(self, rng):
        layer = DenseLayer(weight=rng.standard_normal((4, 10)),
                           bias=rng.standard_normal(4), activation="tanh")
        v = random_unit_bow(rng, 10)
        assert_allclose(dense_forward(layer, v),
                        dense_forward(layer, v.to_dense()), rtol=1e-12,
                        atol=1e-15)

    def test_dimension_mismatch_raises(self, rng):
        layer = DenseLayer(weight=np.zeros((2, 3)), bias=np.zeros(2),
                           activation="tanh")
        with pytest.raises(ValueError):
            dense_forward(layer, np.zeros(4))

    def test_rejects_nonfinite_weights(self):
        with pytest.raises(ValueError):
            DenseLayer(weight=np.array([[np.inf]]), bias=np.zeros(1),
                       activation="tanh")

    def test_unknown_activation(self):
        with pytest.raises(ValueError):
            DenseLayer(weight=np.zeros((1, 1)), bias=np.zeros(1),
                       activation="relu")


class TestInitLayers:
    def test_glorot_bounds(self):
        layers = init_layers((100, 60, 20), "softmax",
                             np.random.default_rng(0))
        for layer in layers:
            fan_out, fan_in = layer.weight.shape
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            assert np.all(np.abs(layer.weight) <= limit)
            assert np.all(layer.bias == 0.0)

    def test_activations_tanh_until_final(self):
        layers = init_layers((6, 5, 4, 3), "softmax",
                             np.random.default_rng(0))
        assert [l.activation for l in layers] == \
            ["tanh", "tanh", "softmax"]

    def test_deterministic(self):
        a = init_layers((6, 4), "tanh", np.random.default_rng(9))
        b = init_layers((6, 4), "tanh", np.random.default_rng(9))
        assert np.array_equal(a[0].weight, b[0].weight)


class TestStack:
    def _loss(self, layers, x, target):
        out, _ = stack_forward(layers, x)
        return 0.5 * float(np.sum((out - target) ** 2))

    def test_backward_matches_finite_differences(self):
        # seeded loop over random small stacks
        for seed in range(10):
            rng = np.random.default_rng(seed)
            dims = (4, 3, 2)
            layers = init_layers(dims, "tanh", rng)
            x = rng.standard_normal(4)
            target = rng.standard_normal(2)

            def flatten(arrs):
                return np.concatenate([a.ravel() for a in arrs])

            def unflatten(theta):
                off = 0
                for layer in layers:
                    for arr in (layer.weight, layer.bias):
                        arr[...] = theta[off:off + arr.size].reshape(
                            arr.shape)
                        off += arr.size

            theta0 = flatten([a for l in layers
                              for a in (l.weight, l.bias)])

            def loss_fn(theta):
                unflatten(theta)
                return self._loss(layers, x, target)

            def grad_fn(theta):
                unflatten(theta)
                out, cache = stack_forward(layers, x)
                grads = zeros_grads(layers)
                stack_backward(layers, cache, out - target, grads,
                               top_is_logit_grad=False)
                return flatten([a for gw, gb in grads for a in (gw, gb)])

            report = finite_difference_check(loss_fn, grad_fn, theta0)
            assert report.max_relative_error < 1e-6, report

    def test_input_gradient(self, rng):
        layers = init_layers((5, 4, 3), "tanh", rng)
        x0 = rng.standard_normal(5)
        target = rng.standard_normal(3)

        def loss_of_x(x):
            return self._loss(layers, x, target)

        out, cache = stack_forward(layers, x0)
        grads = zeros_grads(layers)
        gx = stack_backward(layers, cache, out - target, grads,
                            top_is_logit_grad=False, need_input_grad=True)
        step = 1e-6
        for i in range(5):
            e = np.zeros(5)
            e[i] = step
            numeric = (loss_of_x(x0 + e) - loss_of_x(x0 - e)) / (2 * step)
            assert abs(numeric - gx[i]) < 1e-8


class TestSoftmaxAndKl:
    def test_softmax_unit_sum_and_positive(self, rng):
        for _ in range(1000):
            z = rng.standard_normal(int(rng.integers(1, 20))) * 10
            s = softmax(z)
            assert abs(s.sum() - 1.0) < 1e-9
            assert np.all(s > 0)

    def test_softmax_shift_invariance(self, rng):
        z = rng.standard_normal(8)
        assert_allclose(softmax(z), softmax(z + 123.0), rtol=1e-12)

    def test_kl_known_value(self):
        p = np.array([0.5, 0.5])
        q = np.array([0.25, 0.75])
        expected = 0.5 * np.log(2) + 0.5 * np.log(0.5 / 0.75)
        assert_allclose(kl_divergence(p, q), expected, rtol=1e-12)

    def test_kl_self_is_zero(self, rng):
        for _ in range(50):
            p = random_unit_bow(rng, 12)
            assert kl_divergence(p, p.to_dense()) == 0.0

    def test_kl_nonnegative(self, rng):
        for _ in range(1000):
            dim = int(rng.integers(2, 15))
            p = random_unit_bow(rng, dim)
            q = softmax(rng.standard_normal(dim))
            assert kl_divergence(p, q) >= 0.0

    def test_kl_sparse_matches_dense(self, rng):
        p = random_unit_bow(rng, 10)
        q = softmax(rng.standard_normal(10))
        assert_allclose(kl_divergence(p, q),
                        kl_divergence(p.to_dense(), q), rtol=1e-12)

    def test_kl_zero_support_in_q_is_degenerate(self):
        p = np.array([1.0, 0.0])
        q = np.array([0.0, 1.0])
        with pytest.raises(DegenerateDistributionError):
            kl_divergence(p, q)
        # a training loop can catch it as a numeric failure
        with pytest.raises(FloatingPointError):
            kl_divergence(p, q)

    def test_kl_zero_p_entries_ignored(self):
        p = np.array([0.0, 1.0])
        q = np.array([0.5, 0.5])
        assert_allclose(kl_divergence(p, q), np.log(2), rtol=1e-12)


class TestCosine:
    def test_known_values(self):
        assert_allclose(cosine_similarity(np.array([1.0, 0.0]),
                                          np.array([0.0, 2.0])), 0.0)
        assert_allclose(cosine_similarity(np.array([1.0, 1.0]),
                                          np.array([2.0, 2.0])), 1.0)
        assert_allclose(cosine_similarity(np.array([1.0, 0.0]),
                                          np.array([-3.0, 0.0])), -1.0)

    def test_clipped_to_range(self, rng):
        for _ in range(1000):
            u = rng.standard_normal(4)
            w = rng.standard_normal(4)
            c = cosine_similarity(u, w)
            assert -1.0 <= c <= 1.0

    def test_zero_norm_raises(self):
        with pytest.raises(ValueError):
            cosine_similarity(np.zeros(3), np.ones(3))


def reference_adam(params, grads_seq, lr=1e-3, beta1=0.9, beta2=0.999,
                   eps=1e-8):
    """Straightforward reference used as an independent oracle."""
    p = [np.array(a, dtype=float) for a in params]
    m = [np.zeros_like(a) for a in p]
    v = [np.zeros_like(a) for a in p]
    for t, grads in enumerate(grads_seq, start=1):
        for i, g in enumerate(grads):
            m[i] = beta1 * m[i] + (1 - beta1) * g
            v[i] = beta2 * v[i] + (1 - beta2) * g * g
            mhat = m[i] / (1 - beta1 ** t)
            vhat = v[i] / (1 - beta2 ** t)
            p[i] = p[i] - lr * mhat / (np.sqrt(vhat) + eps)
    return p


class TestAdam:
    def test_matches_reference_over_steps(self, rng):
        params = [rng.standard_normal((3, 2)), rng.standard_normal(4)]
        grads_seq = [[rng.standard_normal((3, 2)), rng.standard_normal(4)]
                     for _ in range(7)]
        expected = reference_adam(params, grads_seq)
        live = [a.copy() for a in params]
        state = AdamState.init(live)
        for grads in grads_seq:
            adam_step(live, grads, state)
        for a, b in zip(live, expected):
            assert_allclose(a, b, rtol=1e-12, atol=1e-15)

    def test_first_step_size_bounded_by_lr(self, rng):
        # bias correction makes the first update ~lr-sized per coordinate
        p = [rng.standard_normal(5)]
        before = p[0].copy()
        state = AdamState.init(p, learning_rate=0.01)
        adam_step(p, [np.ones(5)], state)
        assert np.all(np.abs(p[0] - before) <= 0.01 + 1e-9)

    def test_zero_gradients_fresh_state_is_noop(self, rng):
        p = [rng.standard_normal(4)]
        before = p[0].copy()
        state = AdamState.init(p)
        adam_step(p, [np.zeros(4)], state)
        assert np.array_equal(p[0], before)

    def test_nonfinite_gradient_names_parameter(self, rng):
        p = [rng.standard_normal(2), rng.standard_normal(2)]
        state = AdamState.init(p)
        bad = [np.zeros(2), np.array([np.nan, 0.0])]
        with pytest.raises(FloatingPointError, match="second"):
            adam_step(p, bad, state, names=["first", "second"])

    def test_step_counter_advances(self, rng):
        p = [rng.standard_normal(2)]
        state = AdamState.init(p)
        adam_step(p, [np.ones(2)], state)
        adam_step(p, [np.ones(2)], state)
        assert state.step == 2

    def test_invalid_hyperparameters(self):
        with pytest.raises(ValueError):
            AdamState.init([np.zeros(1)], beta1=1.5)


class TestFiniteDifferenceCheck:
    def test_accepts_correct_gradient(self):
        A = np.array([[2.0, 0.5], [0.5, 1.0]])

        def loss_fn(x):
            return 0.5 * float(x @ A @ x)

        def grad_fn(x):
            return A @ x

        report = finite_difference_check(loss_fn, grad_fn,
                                         np.array([0.3, -0.7]))
        assert report.ok(1e-6)

    def test_flags_scaled_gradient(self):
        def loss_fn(x):
            return float(np.sum(x ** 2))

        def grad_fn(x):
            return 4.0 * x  # doubled on purpose

        report = finite_difference_check(loss_fn, grad_fn,
                                         np.array([1.0, 2.0]))
        assert not report.ok(1e-4)
        assert_allclose(report.max_relative_error, 0.5, rtol=1e-3)

    def test_reports_worst_parameter_name(self):
        def loss_fn(x):
            return float(np.sum(x ** 2))

        def grad_fn(x):
            g = 2.0 * x
            g[1] += 1.0  # corrupt one coordinate
            return g

        report = finite_difference_check(loss_fn, grad_fn,
                                         np.array([1.0, 1.0, 1.0]),
                                         names=["a", "b", "c"])
        assert report.worst_parameter == "b"
