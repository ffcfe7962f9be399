import numpy as np
import pytest

from stopsnn import numerics
from stopsnn.errors import ShapeError


def inner(a, b):
    return float(np.sum(np.asarray(a) * np.asarray(b)))


class TestMatmul:
    def test_identity(self):
        out = numerics.matmul(np.eye(2), np.array([[3.0], [4.0]]))
        assert np.array_equal(out, [[3.0], [4.0]])

    def test_hand_value(self):
        out = numerics.matmul(np.array([[1.0, 2.0]]), np.array([[3.0], [4.0]]))
        assert np.array_equal(out, [[11.0]])

    def test_zero_annihilates(self):
        out = numerics.matmul(np.zeros((3, 4)), np.arange(8.0).reshape(4, 2))
        assert np.array_equal(out, np.zeros((3, 2)))

    def test_vector_rhs(self):
        out = numerics.matmul(np.array([[1.0, 2.0], [0.0, 1.0]]), np.array([5.0, 7.0]))
        assert np.array_equal(out, [19.0, 7.0])

    def test_mismatch_raises(self):
        with pytest.raises(ShapeError):
            numerics.matmul(np.zeros((2, 3)), np.zeros((4, 2)))


class TestConv2d:
    def test_scaling_kernel(self):
        out = numerics.conv2d(np.ones((1, 3, 3)), np.full((1, 1, 1, 1), 2.0))
        assert np.array_equal(out, np.full((1, 3, 3), 2.0))

    def test_hand_value(self):
        inp = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        kernel = np.array([[[[1.0, 0.0], [0.0, 1.0]]]])
        out = numerics.conv2d(inp, kernel)
        assert np.array_equal(out, [[[5.0]]])

    def test_zero_kernel(self):
        rng = np.random.default_rng(0)
        out = numerics.conv2d(rng.normal(size=(2, 4, 4)), np.zeros((3, 2, 3, 3)), padding=1)
        assert np.array_equal(out, np.zeros((3, 4, 4)))

    def test_non_integral_output_raises(self):
        with pytest.raises(ShapeError):
            numerics.conv2d(np.zeros((1, 5, 5)), np.zeros((1, 1, 2, 2)), stride=2)

    def test_channel_mismatch_raises(self):
        with pytest.raises(ShapeError):
            numerics.conv2d(np.zeros((2, 4, 4)), np.zeros((1, 3, 3, 3)))

    def test_matches_direct_summation(self):
        # independent oracle: quadruple loop over the cross-correlation definition
        rng = np.random.default_rng(7)
        inp = rng.normal(size=(2, 5, 5))
        kernels = rng.normal(size=(3, 2, 3, 3))
        stride, padding = 2, 1
        padded = np.pad(inp, ((0, 0), (1, 1), (1, 1)))
        expect = np.zeros((3, 3, 3))
        for o in range(3):
            for y in range(3):
                for x in range(3):
                    patch = padded[:, y * stride : y * stride + 3, x * stride : x * stride + 3]
                    expect[o, y, x] = np.sum(patch * kernels[o])
        out = numerics.conv2d(inp, kernels, stride=stride, padding=padding)
        np.testing.assert_allclose(out, expect, rtol=0, atol=1e-12)


class TestConvAdjointInput:
    def test_identity_kernel_passthrough(self):
        deltas = np.arange(9.0).reshape(1, 3, 3)
        kernel = np.ones((1, 1, 1, 1))
        out = numerics.conv2d_adjoint_input(deltas, kernel)
        assert np.array_equal(out, deltas)

    def test_zero_deltas(self):
        out = numerics.conv2d_adjoint_input(np.zeros((2, 3, 3)), np.ones((2, 1, 2, 2)))
        assert np.array_equal(out, np.zeros((1, 4, 4)))

    @pytest.mark.parametrize("stride,padding,k", [(1, 0, 2), (1, 1, 3), (2, 1, 3)])
    def test_adjoint_identity(self, stride, padding, k):
        rng = np.random.default_rng(stride * 10 + padding + k)
        cin, cout, h = 2, 3, 5 if stride == 1 else 5
        x = rng.normal(size=(cin, h, h))
        kernels = rng.normal(size=(cout, cin, k, k))
        y = numerics.conv2d(x, kernels, stride=stride, padding=padding)
        d = rng.normal(size=y.shape)
        back = numerics.conv2d_adjoint_input(d, kernels, stride=stride, padding=padding)
        assert abs(inner(y, d) - inner(x, back)) <= 1e-12 * max(1.0, abs(inner(y, d)))


class TestConvWeightGrad:
    def test_zero_deltas(self):
        out = numerics.conv2d_weight_grad(np.ones((1, 4, 4)), np.zeros((2, 3, 3)))
        assert np.array_equal(out, np.zeros((2, 1, 2, 2)))

    def test_hand_value(self):
        traces = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        deltas = np.ones((1, 2, 2))
        out = numerics.conv2d_weight_grad(traces, deltas)
        assert np.array_equal(out, [[[[10.0]]]])

    def test_single_position_is_outer_product(self):
        rng = np.random.default_rng(3)
        traces = rng.normal(size=(2, 3, 3))
        deltas = rng.normal(size=(4, 1, 1))
        out = numerics.conv2d_weight_grad(traces, deltas)
        expect = deltas[:, 0, 0][:, None, None, None] * traces[None, :, :, :]
        np.testing.assert_allclose(out, expect, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("stride,padding,k", [(1, 0, 2), (1, 1, 3), (2, 1, 3)])
    def test_matches_one_hot_brute_force(self, stride, padding, k):
        # per-scalar oracle: g[o,c,i,j] = <conv2d(traces, onehot_ocij), deltas>
        rng = np.random.default_rng(stride + padding + k)
        cin, cout = 2, 2
        size = 5 if stride == 2 else 4
        traces = rng.normal(size=(cin, size, size))
        h_out = (size + 2 * padding - k) // stride + 1
        deltas = rng.normal(size=(cout, h_out, h_out))
        grad = numerics.conv2d_weight_grad(traces, deltas, stride=stride, padding=padding)
        assert grad.shape == (cout, cin, k, k)
        for o in range(cout):
            for c in range(cin):
                for i in range(k):
                    for j in range(k):
                        onehot = np.zeros((cout, cin, k, k))
                        onehot[o, c, i, j] = 1.0
                        probe = numerics.conv2d(traces, onehot, stride=stride, padding=padding)
                        assert abs(grad[o, c, i, j] - inner(probe, deltas)) <= 1e-12

    def test_is_adjoint_in_kernel_argument(self):
        rng = np.random.default_rng(11)
        traces = rng.normal(size=(2, 4, 4))
        kernels = rng.normal(size=(3, 2, 3, 3))
        y = numerics.conv2d(traces, kernels, padding=1)
        d = rng.normal(size=y.shape)
        g = numerics.conv2d_weight_grad(traces, d, padding=1)
        assert abs(inner(y, d) - inner(kernels, g)) <= 1e-12 * max(1.0, abs(inner(y, d)))


class TestAvgPool:
    def test_constant_preserved(self):
        out = numerics.avgpool2d(np.full((2, 4, 4), 3.5), 2)
        assert np.array_equal(out, np.full((2, 2, 2), 3.5))

    def test_hand_value(self):
        out = numerics.avgpool2d(np.array([[[1.0, 2.0], [3.0, 4.0]]]), 2)
        assert np.array_equal(out, [[[2.5]]])

    def test_indivisible_raises(self):
        with pytest.raises(ShapeError):
            numerics.avgpool2d(np.zeros((1, 5, 4)), 2)

    def test_adjoint_identity(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(3, 6, 6))
        y = numerics.avgpool2d(x, 3)
        d = rng.normal(size=y.shape)
        back = numerics.avgpool2d_adjoint(d, 3)
        assert abs(inner(y, d) - inner(x, back)) <= 1e-12

    def test_adjoint_spreads_uniformly(self):
        out = numerics.avgpool2d_adjoint(np.array([[[4.0]]]), 2)
        assert np.array_equal(out, np.full((1, 2, 2), 1.0))


class TestKernelHygiene:
    def test_pure_and_bit_identical(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(2, 6, 6))
        k = rng.normal(size=(3, 2, 3, 3))
        a = numerics.conv2d(x, k, padding=1)
        b = numerics.conv2d(x, k, padding=1)
        assert np.array_equal(a, b)

    def test_finite_outputs(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(2, 4, 4)) * 1e6
        k = rng.normal(size=(2, 2, 3, 3)) * 1e6
        for out in (
            numerics.conv2d(x, k, padding=1),
            numerics.conv2d_adjoint_input(numerics.conv2d(x, k, padding=1), k, padding=1),
            numerics.avgpool2d(x, 2),
        ):
            assert np.all(np.isfinite(out))
