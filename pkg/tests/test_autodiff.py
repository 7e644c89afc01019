"""Tensor library: forward semantics, backward semantics, gradient checks."""

import numpy as np
import pytest

from lares.autodiff import (
    Tensor,
    concat,
    conv2d,
    depthwise_conv2d,
    layer_norm,
    no_grad,
    pad2d,
    pixel_shuffle,
    pixel_unshuffle,
)
from lares.errors import (
    ContractError,
    DimensionError,
    GraphReleasedError,
    MissingGradientError,
)
from fd import assert_grads_close, max_rel_err, numerical_gradient


def t64(arr, grad=True):
    return Tensor(np.asarray(arr, dtype=np.float64), requires_grad=grad)


# ---------------------------------------------------------------------------
# backward semantics
# ---------------------------------------------------------------------------

class TestBackward:
    def test_sum_grad_is_ones(self, rng):
        x = t64(rng.uniform(-2, 2, (3, 4)))
        x.sum().backward()
        assert np.array_equal(x.grad, np.ones((3, 4)))

    def test_square_grad_is_2x(self, rng):
        x = t64(rng.uniform(-2, 2, (5,)))
        (x * x).sum().backward()
        assert np.allclose(x.grad, 2 * x.data, rtol=0, atol=0)

    def test_non_scalar_loss_rejected(self, rng):
        x = t64(rng.uniform(-1, 1, (4,)))
        with pytest.raises(ContractError):
            (x * x).backward()

    def test_detached_graph_rejected(self, rng):
        x = Tensor(rng.uniform(-1, 1, (4,)), requires_grad=False, dtype=np.float64)
        with pytest.raises(MissingGradientError):
            (x * x).sum().backward()

    def test_no_grad_context_detaches(self, rng):
        x = t64(rng.uniform(-1, 1, (4,)))
        with no_grad():
            y = (x * x).sum()
        with pytest.raises(MissingGradientError):
            y.backward()

    def test_backward_twice_rejected(self, rng):
        x = t64(rng.uniform(-1, 1, (4,)))
        loss = (x * x).sum()
        loss.backward()
        with pytest.raises(GraphReleasedError):
            loss.backward()

    def test_grad_accumulates_across_graphs(self, rng):
        x = t64(rng.uniform(-1, 1, (4,)))
        x.sum().backward()
        x.sum().backward()
        assert np.array_equal(x.grad, 2 * np.ones(4))

    def test_shared_subgraph_fan_out(self, rng):
        x = t64(rng.uniform(-1, 1, (4,)))
        y = x * 2.0
        ((y * y).sum() + y.sum()).backward()
        assert np.allclose(x.grad, 8 * x.data + 2)

    def test_dtype_mismatch_rejected(self):
        a = Tensor(np.ones(3, dtype=np.float32), requires_grad=True)
        b = Tensor(np.ones(3, dtype=np.float64), requires_grad=True)
        with pytest.raises(ContractError):
            a + b

    def test_forward_determinism_bit_identical(self, rng):
        x = rng.uniform(-2, 2, (2, 8)).astype(np.float32)
        w = rng.uniform(-1, 1, (8, 8)).astype(np.float32)

        def run():
            return ((Tensor(x) @ Tensor(w)).gelu().sigmoid() * 3.0).sum().data.tobytes()

        assert run() == run()

    def test_composite_graph_matches_finite_differences(self, rng):
        # conv -> gelu -> layer_norm -> sum, checked against central differences
        x = t64(rng.uniform(-2, 2, (1, 2, 5, 5)))
        k = t64(rng.uniform(-1, 1, (3, 2, 3, 3)))
        b = t64(rng.uniform(-0.5, 0.5, (3,)))
        gamma = t64(rng.uniform(0.5, 1.5, (3,)))
        beta = t64(rng.uniform(-0.5, 0.5, (3,)))

        def loss():
            y = conv2d(x, k, b, padding=1).gelu()
            y = y.transpose(0, 2, 3, 1)
            return layer_norm(y, gamma, beta).sum()

        assert_grads_close(loss, [x, k, b, gamma, beta], rel_tol=1e-4)


# ---------------------------------------------------------------------------
# elementwise and reduction gradients
# ---------------------------------------------------------------------------

UNARY_CASES = [
    ("exp", lambda x: x.exp(), (-2.0, 2.0)),
    ("log", lambda x: x.log(), (0.5, 3.0)),
    ("sqrt", lambda x: x.sqrt(), (0.5, 3.0)),
    ("abs", lambda x: x.abs(), (0.5, 2.0)),
    ("relu", lambda x: x.relu(), (0.25, 2.0)),
    ("sigmoid", lambda x: x.sigmoid(), (-2.0, 2.0)),
    ("gelu", lambda x: x.gelu(), (-2.0, 2.0)),
    ("square", lambda x: x * x, (-2.0, 2.0)),
    ("pow3", lambda x: x ** 3, (-2.0, 2.0)),
    ("neg", lambda x: -x, (-2.0, 2.0)),
]


class TestElementwise:
    @pytest.mark.parametrize("name,fn,rng_box", UNARY_CASES, ids=[c[0] for c in UNARY_CASES])
    def test_unary_gradients(self, name, fn, rng_box, rng):
        lo, hi = rng_box
        x = t64(rng.uniform(lo, hi, (3, 4)))
        assert_grads_close(lambda: fn(x).sum(), [x])

    def test_gelu_exact_gaussian_cdf(self):
        # erf-based form: gelu(1) = Phi(1) and the tanh approximation is off
        from scipy.stats import norm
        x = t64([1.0])
        assert abs(x.gelu().item() - norm.cdf(1.0)) < 1e-12

    def test_binary_and_broadcast_gradients(self, rng):
        a = t64(rng.uniform(0.5, 2, (3, 4)))
        b = t64(rng.uniform(0.5, 2, (4,)))
        assert_grads_close(lambda: ((a * b + b) / (a + 2.0)).sum(), [a, b])

    def test_matmul_gradients(self, rng):
        a = t64(rng.uniform(-1, 1, (5, 3)))
        b = t64(rng.uniform(-1, 1, (3, 4)))
        assert_grads_close(lambda: (a @ b).sum(), [a, b])

    def test_reduction_and_shape_gradients(self, rng):
        x = t64(rng.uniform(-1, 1, (2, 3, 4)))

        def loss():
            y = x.sum(axis=1).mean(axis=0)
            z = x.reshape(6, 4).transpose(1, 0)[1:3, ::2]
            return (y * y).sum() + z.sum()

        assert_grads_close(loss, [x])

    def test_concat_and_pad_gradients(self, rng):
        a = t64(rng.uniform(-1, 1, (2, 3)))
        b = t64(rng.uniform(-1, 1, (2, 2)))

        def loss():
            c = concat([a, b], axis=1)
            return (pad2d(c, 1, 2, axes=(0, 1)) * 0.5).sum() + (c * c).sum()

        assert_grads_close(loss, [a, b])


# ---------------------------------------------------------------------------
# conv2d
# ---------------------------------------------------------------------------

class TestConv2d:
    def test_identity_kernel(self, rng):
        x = t64(rng.uniform(-1, 1, (2, 1, 4, 5)), grad=False)
        k = t64(np.ones((1, 1, 1, 1)), grad=False)
        b = t64(np.zeros(1), grad=False)
        out = conv2d(x, k, b, padding=0)
        assert np.array_equal(out.data, x.data)

    def test_ones_kernel_hand_counts(self):
        # 3x3 all-ones kernel over an all-ones 3x3 image, zero padded:
        # the centre sees 9 taps, each corner sees 4
        x = t64(np.ones((1, 1, 3, 3)), grad=False)
        k = t64(np.ones((1, 1, 3, 3)), grad=False)
        b = t64(np.zeros(1), grad=False)
        out = conv2d(x, k, b, padding=1).data[0, 0]
        assert out[1, 1] == 9.0
        assert out[0, 0] == out[0, 2] == out[2, 0] == out[2, 2] == 4.0

    def test_gradients_match_finite_differences(self, rng):
        x = t64(rng.uniform(-2, 2, (2, 2, 4, 4)))
        k = t64(rng.uniform(-1, 1, (3, 2, 3, 3)))
        b = t64(rng.uniform(-1, 1, (3,)))
        assert_grads_close(lambda: conv2d(x, k, b, padding=1).sum(), [x, k, b], rel_tol=1e-6)
        assert_grads_close(lambda: conv2d(x, k, b, padding=0).sum(), [x, k, b], rel_tol=1e-6)

    def test_channel_mismatch_rejected(self, rng):
        x = t64(rng.uniform(-1, 1, (1, 2, 4, 4)), grad=False)
        k = t64(rng.uniform(-1, 1, (1, 3, 3, 3)), grad=False)
        with pytest.raises(DimensionError):
            conv2d(x, k, t64(np.zeros(1), grad=False), padding=1)


class TestDepthwiseConv2d:
    def test_center_tap_identity(self, rng):
        x = t64(rng.uniform(-1, 1, (1, 3, 5, 5)), grad=False)
        k = np.zeros((3, 3, 3))
        k[:, 1, 1] = 1.0
        out = depthwise_conv2d(x, t64(k, grad=False), t64(np.zeros(3), grad=False), padding=1)
        assert np.array_equal(out.data, x.data)

    def test_cross_channel_independence(self, rng):
        x = rng.uniform(-1, 1, (1, 3, 5, 5))
        k = t64(rng.uniform(-1, 1, (3, 3, 3)), grad=False)
        b = t64(rng.uniform(-1, 1, (3,)), grad=False)
        base = depthwise_conv2d(t64(x, grad=False), k, b, padding=1).data
        x2 = x.copy()
        x2[0, 0, 2, 2] += 5.0
        bumped = depthwise_conv2d(t64(x2, grad=False), k, b, padding=1).data
        assert bumped[0, 1:].tobytes() == base[0, 1:].tobytes()
        assert not np.array_equal(bumped[0, 0], base[0, 0])

    def test_gradients_match_finite_differences(self, rng):
        x = t64(rng.uniform(-2, 2, (2, 3, 4, 4)))
        k = t64(rng.uniform(-1, 1, (3, 3, 3)))
        b = t64(rng.uniform(-1, 1, (3,)))
        assert_grads_close(lambda: depthwise_conv2d(x, k, b, padding=1).sum(),
                           [x, k, b], rel_tol=1e-6)

    def test_channel_mismatch_rejected(self, rng):
        x = t64(rng.uniform(-1, 1, (1, 2, 4, 4)), grad=False)
        k = t64(rng.uniform(-1, 1, (3, 3, 3)), grad=False)
        with pytest.raises(DimensionError):
            depthwise_conv2d(x, k, t64(np.zeros(3), grad=False), padding=1)


class TestLayerNorm:
    def test_constant_input_zeros_out(self):
        x = t64(np.full((2, 5, 4), 3.25), grad=False)
        out = layer_norm(x, t64(np.ones(4), grad=False), t64(np.zeros(4), grad=False))
        assert np.abs(out.data).max() == 0.0

    def test_zero_gamma_gives_beta(self, rng):
        x = t64(rng.uniform(-2, 2, (3, 4)), grad=False)
        beta = rng.uniform(-1, 1, 4)
        out = layer_norm(x, t64(np.zeros(4), grad=False), t64(beta, grad=False))
        assert np.allclose(out.data, np.broadcast_to(beta, (3, 4)), atol=0)

    def test_zero_channels_rejected(self):
        with pytest.raises(DimensionError):
            layer_norm(t64(np.ones((2, 0)), grad=False),
                       t64(np.ones(0), grad=False), t64(np.zeros(0), grad=False))

    def test_gradients_match_finite_differences(self, rng):
        x = t64(rng.uniform(-2, 2, (2, 3, 4)))
        gamma = t64(rng.uniform(0.5, 1.5, (4,)))
        beta = t64(rng.uniform(-0.5, 0.5, (4,)))
        assert_grads_close(lambda: (layer_norm(x, gamma, beta) ** 2).sum(),
                           [x, gamma, beta], rel_tol=1e-6)


class TestPixelShuffle:
    def test_s1_identity(self, rng):
        x = t64(rng.uniform(-1, 1, (1, 3, 4, 4)), grad=False)
        assert np.array_equal(pixel_shuffle(x, 1).data, x.data)

    def test_shape_law(self, rng):
        x = t64(rng.uniform(-1, 1, (1, 4, 2, 2)), grad=False)
        assert pixel_shuffle(x, 2).shape == (1, 1, 4, 4)

    def test_bijection_and_sum_preserved(self, rng):
        x = t64(rng.uniform(-1, 1, (2, 12, 3, 5)), grad=False)
        y = pixel_shuffle(x, 2)
        assert np.array_equal(pixel_unshuffle(y, 2).data, x.data)
        assert np.isclose(y.data.sum(), x.data.sum(), rtol=1e-12)

    def test_indivisible_channels_rejected(self, rng):
        x = t64(rng.uniform(-1, 1, (1, 6, 2, 2)), grad=False)
        with pytest.raises(DimensionError):
            pixel_shuffle(x, 2)

    def test_gradient_is_permutation(self, rng):
        x = t64(rng.uniform(-1, 1, (1, 4, 3, 3)))
        (pixel_shuffle(x, 2) ** 2).sum().backward()
        assert np.allclose(x.grad, 2 * x.data)


# ---------------------------------------------------------------------------
# finite-difference self-check
# ---------------------------------------------------------------------------

def test_numerical_gradient_on_quadratic(rng):
    x = rng.uniform(-1, 1, (3,))
    g = numerical_gradient(lambda: float((x ** 2).sum()), x)
    assert max_rel_err(g, 2 * x) < 1e-8
