"""Tests for tensors, the computation record and the primitives."""

import numpy as np
import pytest

from smooth_action_gan.errors import NonFiniteError, RecordError, ShapeError
from smooth_action_gan.numerics import (
    Tape,
    Tensor,
    finite_difference_gradient,
    forward,
    ops,
    relative_error,
)


def _check(fn, *arrays, tol=1e-6):
    """Compare tape gradients of ``fn`` to central differences for every input."""
    tensors = [Tensor(a, dtype=np.float64) for a in arrays]
    out, tape = forward(fn, *tensors)
    analytic = tape.gradient(out, tensors)
    for i, array in enumerate(arrays):
        def scalar(x, i=i):
            inputs = [Tensor(x if j == i else a, dtype=np.float64) for j, a in enumerate(arrays)]
            return fn(*inputs).item()

        numeric = finite_difference_gradient(scalar, array)
        assert relative_error(analytic[i], numeric) < tol


class TestTensor:
    """Tests for the Tensor value type."""

    def test_values_are_read_only(self):
        """The wrapped array cannot be written."""
        t = Tensor([1.0, 2.0])
        with pytest.raises(ValueError):
            t.value[0] = 5.0

    def test_numpy_returns_copy(self):
        """numpy() gives a writable copy."""
        t = Tensor([1.0, 2.0])
        copy = t.numpy()
        copy[0] = 9.0
        assert t.value[0] == 1.0

    def test_rejects_non_finite(self):
        """NaN and Inf are refused at construction."""
        with pytest.raises(NonFiniteError):
            Tensor([1.0, np.nan])
        with pytest.raises(NonFiniteError):
            Tensor([np.inf])

    def test_rejects_empty_dimension(self):
        """Zero-sized dimensions are a shape error."""
        with pytest.raises(ShapeError):
            Tensor(np.zeros((0, 3)))

    def test_ids_are_unique(self):
        """Every tensor gets its own id."""
        assert Tensor(1.0).id != Tensor(1.0).id

    def test_operators_dispatch_to_primitives(self):
        """Arithmetic operators match numpy."""
        a = Tensor([[1.0, 2.0]])
        b = Tensor([[3.0], [4.0]])
        np.testing.assert_allclose((a @ b).value, [[11.0]])
        np.testing.assert_allclose((a + 1.0).value, [[2.0, 3.0]])
        np.testing.assert_allclose((-a).value, [[-1.0, -2.0]])
        np.testing.assert_allclose((a / 2.0).value, [[0.5, 1.0]])


class TestTape:
    """Tests for recording and reverse-mode differentiation."""

    def test_product_rule(self):
        """d(x*y)/dx = y and d(x*y)/dy = x."""
        x, y = Tensor(3.0), Tensor(4.0)
        out, tape = forward(lambda a, b: ops.mul(a, b), x, y)
        gx, gy = tape.gradient(out, [x, y])
        assert gx == pytest.approx(4.0)
        assert gy == pytest.approx(3.0)

    def test_mapping_sources(self):
        """gradient() with a mapping returns a dict keyed by name."""
        w = Tensor([[1.0, 2.0]])
        with Tape() as tape:
            tape.watch({"w": w})
            loss = ops.sum_(ops.mul(w, w))
        grads = tape.gradient(loss, {"w": w})
        np.testing.assert_allclose(grads["w"], [[2.0, 4.0]])

    def test_fan_out_accumulates(self):
        """A tensor used twice receives the sum of both paths."""
        x = Tensor(2.0)
        out, tape = forward(lambda a: ops.add(ops.mul(a, a), a), x)
        (g,) = tape.gradient(out, [x])
        assert g == pytest.approx(5.0)

    def test_record_is_single_use(self):
        """A second backward pass on a non-persistent record fails."""
        x = Tensor(2.0)
        out, tape = forward(lambda a: ops.mul(a, a), x)
        tape.backward(out)
        with pytest.raises(RecordError):
            tape.backward(out)

    def test_persistent_record_reusable(self):
        """Persistent records allow repeated backward passes."""
        x = Tensor(2.0)
        out, tape = forward(lambda a: ops.mul(a, a), x, persistent=True)
        first = tape.gradient(out, [x])[0]
        second = tape.gradient(out, [x])[0]
        assert first == second == pytest.approx(4.0)

    def test_unused_leaf_gets_zero(self):
        """Watched tensors that do not influence the output get zeros."""
        x, unused = Tensor([1.0, 2.0]), Tensor([[5.0]])
        with Tape() as tape:
            tape.watch(x, unused)
            out = ops.sum_(x)
        _, g_unused = tape.gradient(out, [x, unused])
        np.testing.assert_array_equal(g_unused, np.zeros((1, 1)))

    def test_unwatched_source_is_error(self):
        """Asking for a gradient of an unwatched tensor raises RecordError."""
        x, other = Tensor(1.0), Tensor(2.0)
        out, tape = forward(lambda a: ops.mul(a, other), x)
        with pytest.raises(RecordError):
            tape.gradient(out, [other])

    def test_seed_shape_checked(self):
        """A seed cotangent of the wrong shape is rejected."""
        x = Tensor([1.0, 2.0])
        out, tape = forward(lambda a: ops.mul(a, 2.0), x)
        with pytest.raises(ShapeError):
            tape.backward(out, seed=np.ones(3))

    def test_vector_seed(self):
        """A non-scalar output is differentiated along the seed direction."""
        x = Tensor([1.0, 2.0])
        out, tape = forward(lambda a: ops.mul(a, a), x)
        (g,) = tape.gradient(out, [x], seed=np.array([1.0, 0.0]))
        np.testing.assert_allclose(g, [2.0, 0.0])

    def test_constants_are_not_recorded(self):
        """Primitives on untracked tensors stay off the record."""
        x, c = Tensor(1.0), Tensor(3.0)
        with Tape() as tape:
            tape.watch(x)
            ops.mul(c, c)
            ops.mul(x, c)
        assert len(tape.nodes) == 1

    def test_replay_recomputes_outputs(self):
        """replay() reproduces every recorded output."""
        x = Tensor([[0.5, -1.0]])
        w = Tensor([[1.0], [2.0]])
        out, tape = forward(lambda a, b: ops.tanh(ops.matmul(a, b)), x, w)
        env = tape.replay()
        np.testing.assert_allclose(env[out.id], out.value)

    def test_non_finite_forward_raises(self):
        """A primitive producing Inf raises NonFiniteError."""
        with pytest.raises(NonFiniteError):
            ops.exp(Tensor([1000.0]))

    def test_nested_tapes_restore_outer(self):
        """Leaving an inner tape reactivates the outer one."""
        x = Tensor(2.0)
        with Tape() as outer:
            outer.watch(x)
            with Tape():
                pass
            y = ops.mul(x, x)
        assert outer.nodes[-1].output is y


class TestPrimitiveGradients:
    """Finite-difference checks of every primitive at 64-bit precision."""

    rng = np.random.default_rng(3)

    def test_matmul(self):
        """matmul gradients for both operands."""
        a, b = self.rng.normal(size=(2, 3)), self.rng.normal(size=(3, 4))
        _check(lambda x, y: ops.sum_(ops.tanh(ops.matmul(x, y))), a, b)

    def test_broadcast_add_and_mul(self):
        """Broadcast operands receive summed gradients."""
        a, b = self.rng.normal(size=(3, 2)), self.rng.normal(size=(2,))
        _check(lambda x, y: ops.sum_(ops.mul(ops.add(x, y), x)), a, b)

    def test_sub_and_div(self):
        """sub and div."""
        a, b = self.rng.normal(size=(2, 2)), self.rng.uniform(1.0, 2.0, size=(2, 2))
        _check(lambda x, y: ops.sum_(ops.div(ops.sub(x, y), y)), a, b)

    def test_nonlinearities(self):
        """tanh, sigmoid and exp."""
        a = self.rng.normal(size=(2, 3))
        _check(lambda x: ops.sum_(ops.add(ops.tanh(x), ops.mul(ops.sigmoid(x), ops.exp(x)))), a)

    def test_relu_away_from_kink(self):
        """relu passes gradient where the input is positive."""
        a = np.array([[-1.0, 0.5], [2.0, -0.3]])
        _check(lambda x: ops.sum_(ops.mul(ops.relu(x), x)), a)

    def test_log_and_sqrt(self):
        """log and sqrt on positive inputs."""
        a = self.rng.uniform(0.5, 2.0, size=(3,))
        _check(lambda x: ops.sum_(ops.add(ops.log(x), ops.sqrt(x))), a)

    def test_sqrt_gradient_zero_at_zero(self):
        """sqrt has zero gradient at the origin."""
        x = Tensor([0.0, 4.0])
        out, tape = forward(lambda a: ops.sum_(ops.sqrt(a)), x)
        (g,) = tape.gradient(out, [x])
        np.testing.assert_allclose(g, [0.0, 0.25])

    def test_sqrt_rejects_negative(self):
        """sqrt of a negative value is a ValueError."""
        with pytest.raises(ValueError):
            ops.sqrt(Tensor([-1.0]))

    def test_reductions(self):
        """sum, mean and sq_norm along axes."""
        a = self.rng.normal(size=(3, 4))
        _check(lambda x: ops.sq_norm(ops.mean(x, axis=0)), a)
        _check(lambda x: ops.sum_(ops.mul(ops.sum_(x, axis=1, keepdims=True), x)), a)

    def test_shape_ops(self):
        """concat, slice, reshape and transpose."""
        a, b = self.rng.normal(size=(2, 3)), self.rng.normal(size=(2, 2))

        def fn(x, y):
            joined = ops.concat([x, y], axis=1)
            part = ops.slice_(joined, 1, 4, axis=1)
            return ops.sq_norm(ops.matmul(ops.transpose(part), ops.reshape(x, (2, 3))))

        _check(fn, a, b)

    def test_softmax(self):
        """softmax has an exact Jacobian-vector product."""
        a = self.rng.normal(size=(2, 4))
        weights = self.rng.normal(size=(2, 4))
        _check(lambda x: ops.sum_(ops.mul(ops.softmax_(x), Tensor(weights))), a)

    def test_clip_gradient_inside_range(self):
        """clip passes gradient only inside its bounds."""
        x = Tensor([-2.0, 0.5, 2.0])
        out, tape = forward(lambda a: ops.sum_(ops.clip(a, -1.0, 1.0)), x)
        (g,) = tape.gradient(out, [x])
        np.testing.assert_allclose(g, [0.0, 1.0, 0.0])


class TestShapeErrors:
    """Tests for shape validation in the primitives."""

    def test_matmul_inner_mismatch(self):
        """Mismatched inner dimensions raise ShapeError."""
        with pytest.raises(ShapeError):
            ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_incompatible_broadcast(self):
        """Non-broadcastable shapes raise ShapeError."""
        with pytest.raises(ShapeError):
            ops.add(Tensor(np.ones((2, 3))), Tensor(np.ones((4,))))

    def test_slice_out_of_range(self):
        """Slices beyond the axis length raise ShapeError."""
        with pytest.raises(ShapeError):
            ops.slice_(Tensor(np.ones((2, 3))), 2, 5, axis=1)

    def test_bad_reshape(self):
        """Reshape to a different size raises ShapeError."""
        with pytest.raises(ShapeError):
            ops.reshape(Tensor(np.ones((2, 3))), (4,))


class TestPrimitiveValues:
    """Forward values of the primitives on known inputs."""

    def test_identity_matmul(self):
        """I_3 @ A returns A."""
        a = np.arange(6.0).reshape(3, 2)
        np.testing.assert_array_equal(ops.matmul(Tensor(np.eye(3)), Tensor(a)).value, a)

    def test_sigmoid_at_zero(self):
        """sigmoid(0) is one half everywhere."""
        np.testing.assert_array_equal(ops.sigmoid(Tensor(np.zeros((2, 3)))).value, 0.5)

    def test_tanh_saturates(self):
        """tanh saturates to +-1 without overflow."""
        np.testing.assert_allclose(ops.tanh(Tensor([-1e3, 0.0, 1e3])).value, [-1.0, 0.0, 1.0], atol=1e-12)

    def test_sum_gradient_is_ones(self):
        """d sum(x) / dx is all ones."""
        x = Tensor(np.array([0.3, -2.0, 5.0]))
        out, tape = forward(ops.sum_, x)
        np.testing.assert_array_equal(tape.gradient(out, [x])[0], np.ones(3))

    def test_sq_norm_gradient(self):
        """d ||x||^2 / dx at [1, 2] is [2, 4]."""
        x = Tensor(np.array([1.0, 2.0]))
        out, tape = forward(ops.sq_norm, x)
        np.testing.assert_allclose(tape.gradient(out, [x])[0], [2.0, 4.0])

    def test_deep_composite(self):
        """A five-layer composite of many primitives matches finite differences."""
        rng = np.random.default_rng(8)
        x, w1, w2 = rng.normal(size=(3, 4)), rng.normal(size=(4, 4)), rng.normal(size=(4, 2))

        def fn(a, b, c):
            h = ops.tanh(ops.matmul(a, b))
            h = ops.mul(ops.sigmoid(h), ops.exp(ops.scale(h, 0.5)))
            h = ops.softmax_(ops.matmul(h, c))
            h = ops.log(ops.add(h, 1.0))
            return ops.mean(ops.sqrt(ops.add(ops.sq_norm(h), 1.0)))

        _check(fn, x, w1, w2, tol=1e-5)
