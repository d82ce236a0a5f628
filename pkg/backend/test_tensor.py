# test_tensor.py
# Run: pytest test_tensor.py

import numpy as np
import pytest

from forecaster import tensor as T
from forecaster.errors import DimensionError, GradientError, NonFiniteError


def _weights(shape, seed=0):
    return T.constant(np.random.default_rng(seed).uniform(-2, 2, size=shape))


# ── Forward values ────────────────────────────────────

def test_matmul_shapes():
    a = T.constant(np.ones((2, 3)))
    b = T.constant(np.ones((3, 4)))
    assert T.matmul(a, b).shape == (2, 4)
    assert T.matmul(T.constant(np.ones((5, 2, 3))), b).shape == (5, 2, 4)
    assert T.matmul(T.constant(np.ones((5, 2, 3))), T.constant(np.ones((5, 3, 4)))).shape == (5, 2, 4)


def test_matmul_rejects_inner_mismatch():
    with pytest.raises(DimensionError):
        T.matmul(T.constant(np.ones((2, 3))), T.constant(np.ones((2, 3))))


def test_add_only_broadcasts_a_bias():
    x = T.constant(np.ones((4, 3)))
    assert T.add(x, T.constant(np.arange(3.0))).shape == (4, 3)
    with pytest.raises(DimensionError):
        T.add(x, T.constant(np.ones((1, 3))))
    with pytest.raises(DimensionError):
        T.mul(x, T.constant(np.arange(3.0)))


def test_softmax_sums_to_one():
    rng = np.random.default_rng(1)
    for length in range(1, 65):
        x = T.constant(rng.uniform(-50, 50, size=length))
        y = T.softmax(x).value
        assert np.all(y > 0)
        assert abs(y.sum() - 1.0) < 1e-12


def test_softmax_is_stable_for_large_inputs():
    y = T.softmax(T.constant([1000.0, 1000.0])).value
    np.testing.assert_allclose(y, [0.5, 0.5], atol=1e-15)


def test_softmax_of_empty_raises():
    with pytest.raises(DimensionError):
        T.softmax(T.constant(np.zeros(0)))


def test_non_finite_result_raises():
    with np.errstate(over="ignore"):
        with pytest.raises(NonFiniteError):
            T.scale(T.constant([1e308]), 10.0)
    with pytest.raises(NonFiniteError):
        T.constant([np.nan])


def test_take_and_concat_round_trip():
    x = T.constant(np.arange(12.0).reshape(3, 4))
    parts = [T.take(x, 0, 1), T.take(x, 1, 4)]
    np.testing.assert_array_equal(T.concat(parts, axis=1).value, x.value)
    with pytest.raises(DimensionError):
        T.take(x, 2, 5)


# ── Backward ──────────────────────────────────────────

def test_backward_needs_scalar():
    x = T.parameter(np.ones(3))
    with pytest.raises(GradientError):
        T.backward(T.tanh(x))


def test_backward_accumulates_across_calls():
    x = T.parameter(np.array([0.3, -0.7]))
    w = T.constant([1.5, 2.0])
    loss = T.total(T.mul(T.tanh(x), w))
    T.backward(loss)
    once = x.grad.copy()
    T.backward(loss)
    np.testing.assert_allclose(x.grad, 2 * once, rtol=0, atol=0)


def test_shared_node_gradients_add_up():
    x = T.parameter(np.array([1.5]))
    T.backward(T.total(T.mul(x, x)))
    np.testing.assert_allclose(x.grad, [3.0])


def test_tape_order_puts_parents_first():
    a = T.parameter(np.ones(2), name="a")
    b = T.parameter(np.ones(2), name="b")
    loss = T.total(T.mul(T.sigmoid(a), T.add(b, T.constant(np.ones(2), name="c"))))
    leaves = T.tape_leaves(loss)
    assert [leaf.name for leaf in leaves] == ["a", "b"]
    assert all(p.id < loss.id for p in (a, b))


def test_abs_subgradient_at_zero():
    x = T.parameter(np.array([0.0, 2.0, -1.0]))
    T.backward(T.total(T.absolute(x)))
    np.testing.assert_array_equal(x.grad, [0.0, 1.0, -1.0])


def test_elementwise_dispatch():
    a, b = T.constant([1.0, 2.0]), T.constant([3.0, 4.0])
    np.testing.assert_array_equal(T.elementwise("mul", a, b).value, [3.0, 8.0])
    np.testing.assert_array_equal(T.elementwise("relu", T.constant([-1.0, 1.0])).value, [0.0, 1.0])
    with pytest.raises(DimensionError):
        T.elementwise("add", a)


# ── Finite-difference oracle ──────────────────────────
# Every primitive, fp64, random inputs in [-2, 2], relative error < 1e-6.

_rng = np.random.default_rng(7)
_W23 = _weights((2, 3), 1)
_W34 = _weights((3, 4), 2)
_W5 = _weights((5,), 3)
_B = _weights((4,), 4)


def _weighted(node, seed=9):
    # random weighting keeps every coordinate of the gradient away from zero
    w = T.constant(np.random.default_rng(seed).uniform(0.5, 1.5, size=node.shape))
    return T.total(T.mul(node, w))


PRIMITIVES = {
    "matmul_left":   (lambda x: T.total(T.matmul(x, _W34)), (2, 3)),
    "matmul_right":  (lambda x: T.total(T.matmul(_W23, x)), (3, 4)),
    "matmul_shared": (lambda x: _weighted(T.matmul(x, _W34)), (2, 2, 3)),
    "matmul_batch":  (lambda x: _weighted(T.matmul(x, T.constant(np.ones((2, 3, 2))))), (2, 2, 3)),
    "transpose":     (lambda x: _weighted(T.transpose(x)), (2, 3)),
    "bias_add":      (lambda x: _weighted(T.add(T.constant(np.ones((3, 4))), x)), (4,)),
    "sub":           (lambda x: _weighted(T.sub(x, _W5)), (5,)),
    "mul":           (lambda x: T.total(T.mul(x, _W5)), (5,)),
    "scale":         (lambda x: _weighted(T.scale(x, -1.7)), (5,)),
    "tanh":          (lambda x: _weighted(T.tanh(x)), (5,)),
    "sigmoid":       (lambda x: _weighted(T.sigmoid(x)), (5,)),
    "relu":          (lambda x: _weighted(T.relu(x)), (5,)),
    "abs":           (lambda x: _weighted(T.absolute(x)), (5,)),
    "softmax":       (lambda x: T.total(T.mul(T.softmax(x), _W5)), (5,)),
    "concat":        (lambda x: _weighted(T.concat([x, T.tanh(x)], axis=0)), (5,)),
    "stack":         (lambda x: _weighted(T.stack([x, T.sigmoid(x)], axis=1)), (5,)),
    "reshape":       (lambda x: _weighted(T.reshape(x, (3, 2))), (2, 3)),
    "expand":        (lambda x: _weighted(T.expand(x, 1, 3)), (2, 4)),
    "take":          (lambda x: _weighted(T.take(x, 1, 3, axis=0)), (4, 2)),
    "mean":          (lambda x: T.mean(T.mul(x, x)), (5,)),
    "composite":     (lambda x: _weighted(T.tanh(T.add(T.matmul(x, _W34), _B))), (2, 3)),
}


@pytest.mark.parametrize("name", sorted(PRIMITIVES))
def test_primitive_gradient(name):
    f, shape = PRIMITIVES[name]
    point = np.random.default_rng(sum(map(ord, name))).uniform(-2, 2, size=shape)
    if name in ("relu", "abs"):
        # keep clear of the kink
        point = np.where(np.abs(point) < 0.1, 0.5, point)
    assert T.finite_diff_check(f, point) < 1e-6


def test_check_parameter_gradients_reports_worst_entry():
    w = T.parameter(_rng.uniform(-2, 2, size=(3, 2)), name="w")
    x = T.constant(_rng.uniform(-2, 2, size=(4, 3)))
    report = T.check_parameter_gradients(lambda: T.mean(T.tanh(T.matmul(x, w))), {"w": w})
    assert report.checked == 6
    assert report.max_error < 1e-6
    assert w.grad is None
