import numpy as np
import pytest

from hierlabel import tensor as T
from hierlabel.errors import (
    DegenerateLengthError,
    DimensionError,
    EmptySupportError,
    RankError,
)

from helpers import check_gradients, central_differences, rel_err


class TestMatmul:
    def test_identity(self):
        a = T.Tensor(np.eye(2))
        b = T.Tensor([[1.0, 2.0], [3.0, 4.0]])
        out = T.matmul(a, b)
        np.testing.assert_array_equal(out.data, [[1, 2], [3, 4]])

    def test_projector(self):
        p = T.Tensor([[1.0, 0.0], [0.0, 0.0]])
        b = T.Tensor([[5.0, 6.0], [7.0, 8.0]])
        out = T.matmul(p, b)
        np.testing.assert_array_equal(out.data, [[5, 6], [0, 0]])

    def test_shape_mismatch_names_both_shapes(self):
        a = T.Tensor(np.zeros((2, 3)))
        b = T.Tensor(np.zeros((4, 2)))
        with pytest.raises(DimensionError, match=r"\(2, 3\).*\(4, 2\)"):
            T.matmul(a, b)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        with T.use_dtype(np.float64):
            a = T.Tensor(rng.normal(size=(3, 4)), requires_grad=True)
            b = T.Tensor(rng.normal(size=(4, 2)), requires_grad=True)
            check_gradients(
                lambda: T.tsum(T.matmul(a, b)), [a, b], h=1e-3, tol=1e-4
            )

    def test_gradient_sums_over_leading_axes(self):
        # 3-d left operand: weight gradient aggregates all leading rows.
        rng = np.random.default_rng(8)
        with T.use_dtype(np.float64):
            a = T.Tensor(rng.normal(size=(2, 3, 4)), requires_grad=True)
            b = T.Tensor(rng.normal(size=(4, 5)), requires_grad=True)
            check_gradients(lambda: T.tsum(T.matmul(a, b)), [a, b], tol=1e-6)


class TestConv1d:
    def test_sliding_sum(self):
        words = T.Tensor(np.ones((3, 1)))
        filt = T.Tensor(np.ones((2, 1, 1)))
        out = T.conv1d(words, filt, np.ones(3))
        np.testing.assert_allclose(out.data[:, 0], [2.0, 2.0])

    def test_zero_input_gives_zeros(self):
        rng = np.random.default_rng(0)
        words = T.Tensor(np.zeros((5, 3)))
        filt = T.Tensor(rng.normal(size=(3, 3, 4)))
        out = T.conv1d(words, filt, np.ones(5))
        np.testing.assert_array_equal(out.data, np.zeros((3, 4)))

    def test_too_short_raises(self):
        words = T.Tensor(np.zeros((2, 3)))
        filt = T.Tensor(np.zeros((4, 3, 2)))
        with pytest.raises(DegenerateLengthError):
            T.conv1d(words, filt, np.ones(2))

    def test_masked_windows_hit_sentinel_and_get_no_gradient(self):
        rng = np.random.default_rng(1)
        words = T.Tensor(rng.normal(size=(5, 2)), requires_grad=True)
        filt = T.Tensor(rng.normal(size=(2, 2, 3)), requires_grad=True)
        mask = np.array([1, 1, 1, 0, 0])  # 3 valid words -> windows 0,1 valid
        out = T.conv1d(words, filt, mask)
        assert np.all(out.data[2:] == T.NEG_SENTINEL)
        T.backward(T.tsum(T.max_axis(out, 0)))
        assert np.all(words.grad[3:] == 0.0)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        with T.use_dtype(np.float64):
            words = T.Tensor(rng.normal(size=(6, 3)), requires_grad=True)
            filt = T.Tensor(rng.normal(size=(3, 3, 4)), requires_grad=True)
            mask = np.array([1, 1, 1, 1, 1, 0])
            check_gradients(
                lambda: T.tsum(T.max_axis(T.conv1d(words, filt, mask), 0)),
                [words, filt],
                tol=1e-4,
            )

    def test_brute_force_window_oracle(self):
        rng = np.random.default_rng(3)
        words = rng.normal(size=(7, 3)).astype(np.float32)
        filt = rng.normal(size=(3, 3, 2)).astype(np.float32)
        out = T.conv1d(T.Tensor(words), T.Tensor(filt), np.ones(7)).data
        for t in range(5):
            for f in range(2):
                expect = sum(
                    float(words[t + j] @ filt[j, :, f]) for j in range(3)
                )
                assert abs(out[t, f] - expect) <= 1e-5


class TestMaxOverTime:
    def test_basic(self):
        out = T.max_over_time(T.Tensor([[1.0, 5.0], [3.0, 2.0]]))
        np.testing.assert_array_equal(out.data, [3.0, 5.0])

    def test_single_row_identity(self):
        row = np.array([[4.0, -2.0, 0.5]])
        out = T.max_over_time(T.Tensor(row))
        np.testing.assert_array_equal(out.data, row[0])

    def test_empty_raises(self):
        with pytest.raises(DegenerateLengthError):
            T.max_over_time(T.Tensor(np.zeros((0, 3))))

    def test_gradient_is_one_hot_per_column(self):
        rng = np.random.default_rng(4)
        x = T.Tensor(rng.normal(size=(6, 4)), requires_grad=True)
        T.backward(T.tsum(T.max_over_time(x)))
        argmax = x.data.argmax(axis=0)
        expect = np.zeros_like(x.data)
        expect[argmax, np.arange(4)] = 1.0
        np.testing.assert_array_equal(x.grad, expect)

    def test_ties_route_to_first_index(self):
        x = T.Tensor(np.array([[2.0], [2.0], [1.0]]), requires_grad=True)
        T.backward(T.tsum(T.max_over_time(x)))
        np.testing.assert_array_equal(x.grad[:, 0], [1.0, 0.0, 0.0])

    def test_min_formulation_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = rng.normal(size=(5, 3)).astype(np.float32)
            ours = T.max_over_time(T.Tensor(x)).data
            oracle = -np.min(-x, axis=0)
            np.testing.assert_array_equal(ours, oracle)


class TestSoftmax:
    def test_uniform_on_equal_logits(self):
        out = T.softmax(T.Tensor([0.0, 0.0, 0.0, 0.0]))
        np.testing.assert_allclose(out.data, [0.25] * 4, atol=1e-7)

    def test_single_live_entry(self):
        out = T.softmax(T.Tensor([3.0, 99.0]), mask=np.array([1, 0]))
        np.testing.assert_array_equal(out.data, [1.0, 0.0])

    def test_fully_masked_raises(self):
        with pytest.raises(EmptySupportError):
            T.softmax(T.Tensor([1.0, 2.0]), mask=np.zeros(2))

    def test_large_logits_stable(self):
        out = T.softmax(T.Tensor([1000.0, 1000.0]))
        assert np.isfinite(out.data).all()
        np.testing.assert_allclose(out.data, [0.5, 0.5])

    def test_sums_to_one_and_gradients(self):
        rng = np.random.default_rng(6)
        with T.use_dtype(np.float64):
            for _ in range(5):
                x = T.Tensor(rng.normal(size=(7,)), requires_grad=True)
                probe = T.Tensor(rng.normal(size=(7,)))
                p = T.softmax(x)
                assert abs(p.data.sum() - 1.0) <= 1e-6
                check_gradients(
                    lambda: T.tsum(T.mul(T.softmax(x), probe)), [x], tol=1e-4
                )

    def test_masked_entries_zero_and_no_gradient(self):
        rng = np.random.default_rng(7)
        x = T.Tensor(rng.normal(size=(2, 5)), requires_grad=True)
        mask = np.array([[1, 1, 1, 0, 0], [1, 1, 1, 1, 1]])
        p = T.softmax(x, mask=mask)
        assert np.all(p.data[0, 3:] == 0.0)
        np.testing.assert_allclose(p.data.sum(axis=-1), [1.0, 1.0], atol=1e-6)
        T.backward(T.tsum(T.mul(p, T.Tensor(np.ones((2, 5))))))
        assert np.all(x.grad[0, 3:] == 0.0)


class TestElementwise:
    def test_sigmoid_at_zero(self):
        assert T.sigmoid(T.Tensor([0.0])).data[0] == pytest.approx(0.5)

    def test_sigmoid_extreme_inputs_stay_finite(self):
        out = T.sigmoid(T.Tensor([-500.0, 500.0]))
        assert np.isfinite(out.data).all()

    def test_add_broadcast_and_unbroadcast_gradient(self):
        a = T.Tensor(np.ones((2, 3)), requires_grad=True)
        b = T.Tensor(np.ones(3), requires_grad=True)
        T.backward(T.tsum(T.add(a, b)))
        np.testing.assert_array_equal(a.grad, np.ones((2, 3)))
        np.testing.assert_array_equal(b.grad, 2 * np.ones(3))

    def test_incompatible_shapes_raise(self):
        with pytest.raises(DimensionError):
            T.add(T.Tensor(np.ones(3)), T.Tensor(np.ones(4)))

    def test_dropout_inference_identity(self):
        x = T.Tensor(np.ones(100))
        rng = np.random.default_rng(0)
        out = T.dropout(x, 0.25, train=False, rng=rng)
        assert out is x

    def test_dropout_training_statistics(self):
        rng = np.random.default_rng(123)
        x = T.Tensor(np.ones(10_000))
        out = T.dropout(x, 0.25, train=True, rng=rng)
        survivors = out.data[out.data != 0.0]
        np.testing.assert_allclose(survivors, 4.0 / 3.0, rtol=1e-6)
        assert abs(survivors.size / 10_000 - 0.75) <= 0.05

    def test_concat_last_axis_roundtrip_gradient(self):
        a = T.Tensor(np.ones((2, 2)), requires_grad=True)
        b = T.Tensor(2 * np.ones((2, 3)), requires_grad=True)
        out = T.concat_last_axis([a, b])
        assert out.shape == (2, 5)
        T.backward(T.tsum(T.mul(out, out)))
        np.testing.assert_allclose(a.grad, 2 * np.ones((2, 2)))
        np.testing.assert_allclose(b.grad, 4 * np.ones((2, 3)))


class TestBackward:
    def test_sum_gives_ones(self):
        x = T.Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        T.backward(T.tsum(x))
        np.testing.assert_array_equal(x.grad, np.ones((2, 3)))

    def test_square_gives_two_x(self):
        x = T.Tensor([3.0], requires_grad=True)
        T.backward(T.tsum(T.mul(x, x)))
        np.testing.assert_allclose(x.grad, [6.0])

    def test_non_scalar_loss_raises(self):
        x = T.Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(RankError):
            T.backward(T.add(x, x))

    def test_unreachable_tracked_tensor_keeps_zero_gradient(self):
        x = T.Tensor(np.ones(3), requires_grad=True)
        unused = T.Tensor(np.ones(3), requires_grad=True)
        T.backward(T.tsum(T.mul(x, x)))
        np.testing.assert_array_equal(unused.grad, np.zeros(3))

    def test_diamond_graph_accumulates(self):
        x = T.Tensor([2.0], requires_grad=True)
        y = T.add(T.mul(x, x), x)  # x^2 + x -> 2x + 1 = 5
        T.backward(T.tsum(y))
        np.testing.assert_allclose(x.grad, [5.0])

    def test_deep_chain_does_not_recurse(self):
        x = T.Tensor([1.0], requires_grad=True)
        y = x
        for _ in range(5000):
            y = T.add(y, x)
        T.backward(T.tsum(y))
        np.testing.assert_allclose(x.grad, [5001.0])


class TestDeterminismAndPrecision:
    def test_forward_bitwise_deterministic(self):
        def run():
            rng = np.random.default_rng(99)
            a = T.Tensor(rng.normal(size=(8, 8)))
            b = T.Tensor(rng.normal(size=(8, 8)))
            return T.tanh(T.matmul(a, b)).data.tobytes()

        assert run() == run()

    def test_default_storage_is_float32(self):
        assert T.Tensor([1.0]).data.dtype == np.float32

    def test_shadow_mode_switches_dtype(self):
        with T.use_dtype(np.float64):
            assert T.Tensor([1.0]).data.dtype == np.float64
        assert T.Tensor([1.0]).data.dtype == np.float32

    def test_finite_after_forward_on_finite_inputs(self):
        rng = np.random.default_rng(11)
        x = T.Tensor(rng.normal(size=(4, 6)) * 100)
        for out in (
            T.tanh(x),
            T.sigmoid(x),
            T.softmax(x),
            T.max_axis(x, 1),
            T.clamp(x, -1.0, 1.0),
        ):
            assert np.isfinite(out.data).all()


class TestOpGradientSweep:
    """Finite-difference agreement on random small shapes for every
    differentiable op (64-bit shadow)."""

    def test_sweep(self):
        rng = np.random.default_rng(2024)
        with T.use_dtype(np.float64):
            for trial in range(20):
                m = int(rng.integers(1, 5))
                k = int(rng.integers(1, 5))
                n = int(rng.integers(1, 5))
                a = T.Tensor(rng.normal(size=(m, k)), requires_grad=True)
                b = T.Tensor(rng.normal(size=(k, n)), requires_grad=True)
                # probe keeps the softmax check sensitive to off-diagonal terms
                probe = T.Tensor(rng.normal(size=a.shape))
                cases = {
                    "matmul": lambda: T.tsum(T.matmul(a, b)),
                    "add": lambda: T.tsum(T.mul(T.add(a, a), a)),
                    "mul": lambda: T.tsum(T.mul(a, a)),
                    "tanh": lambda: T.tsum(T.tanh(a)),
                    "sigmoid": lambda: T.tsum(T.sigmoid(a)),
                    "log": lambda: T.tsum(T.log(T.sigmoid(a))),
                    "softmax": lambda: T.tsum(T.mul(T.softmax(a), probe)),
                }
                for name, build in cases.items():
                    check_gradients(build, [a, b] if name == "matmul" else [a], tol=1e-5)
