"""Gradient checks for the scalar-graph reverse-mode engine."""

import numpy as np
import pytest

from deepls.autodiff import Tensor


def central_diff(f, x, delta=1e-6):
    """Elementwise central difference of a scalar function of one array."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        bumped = x.copy()
        bumped[idx] += delta
        hi = f(bumped)
        bumped[idx] -= 2 * delta
        lo = f(bumped)
        grad[idx] = (hi - lo) / (2 * delta)
    return grad


def check_unary(op, x, tol=1e-6):
    leaf = Tensor(x)
    out = op(leaf).sum()
    out.backward()
    fd = central_diff(lambda v: float(op(Tensor(v)).sum().data), x)
    np.testing.assert_allclose(leaf.grad, fd, rtol=tol, atol=tol)


def test_add_mul_chain_gradients():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(4, 3))
    check_unary(lambda t: (t * 2.0 + 1.5) * t, x)


def test_sub_div_pow_gradients():
    rng = np.random.default_rng(1)
    x = rng.uniform(0.5, 2.0, size=(3, 3))
    check_unary(lambda t: (t - 0.25) / 3.0 + t**3, x)


def test_matmul_gradients_both_sides():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(4, 3))
    b = rng.normal(size=(3, 2))
    ta, tb = Tensor(a), Tensor(b)
    (ta @ tb).sum().backward()
    fd_a = central_diff(lambda v: float((Tensor(v) @ Tensor(b)).sum().data), a)
    fd_b = central_diff(lambda v: float((Tensor(a) @ Tensor(v)).sum().data), b)
    np.testing.assert_allclose(ta.grad, fd_a, rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(tb.grad, fd_b, rtol=1e-6, atol=1e-6)


def test_affine_matches_unfused_composition():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(5, 3))
    w = rng.normal(size=(2, 3))
    b = rng.normal(size=2)
    tx, tw, tb = Tensor(x), Tensor(w), Tensor(b)
    fused = tx.affine(tw, tb)
    np.testing.assert_allclose(fused.data, x @ w.T + b, rtol=1e-15)
    (fused * fused).sum().backward()
    ux, uw, ub = Tensor(x), Tensor(w), Tensor(b)
    unfused = ux @ uw.T + ub
    (unfused * unfused).sum().backward()
    np.testing.assert_allclose(tx.grad, ux.grad, rtol=1e-12)
    np.testing.assert_allclose(tw.grad, uw.grad, rtol=1e-12)
    np.testing.assert_allclose(tb.grad, ub.grad, rtol=1e-12)


def test_broadcast_add_unbroadcasts_gradient():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(4, 3))
    b = rng.normal(size=3)
    tx, tb = Tensor(x), Tensor(b)
    (tx + tb).sum().backward()
    np.testing.assert_allclose(tx.grad, np.ones((4, 3)))
    np.testing.assert_allclose(tb.grad, np.full(3, 4.0))


def test_getitem_scatters_gradient():
    x = np.arange(6.0)
    t = Tensor(x)
    (t[2:5].sum() * 2.0).backward()
    expected = np.zeros(6)
    expected[2:5] = 2.0
    np.testing.assert_allclose(t.grad, expected)


def test_reused_node_accumulates_gradient():
    t = Tensor(np.array([3.0]))
    y = t * t + t  # d/dt = 2t + 1 = 7
    y.sum().backward()
    np.testing.assert_allclose(t.grad, [7.0])


def test_sigmoid_values_and_gradient():
    t = Tensor(np.array([0.0]))
    s = t.sigmoid()
    assert s.data[0] == 0.5
    s.sum().backward()
    np.testing.assert_allclose(t.grad, [0.25])
    rng = np.random.default_rng(5)
    check_unary(lambda v: v.sigmoid() * v, rng.normal(size=(3, 2)))


def test_sigmoid_extreme_arguments_are_finite():
    t = Tensor(np.array([-800.0, -40.0, 0.0, 40.0, 800.0]))
    out = t.sigmoid()
    assert np.all(np.isfinite(out.data))
    np.testing.assert_allclose(out.data[0], 0.0, atol=1e-300)
    np.testing.assert_allclose(out.data[-1], 1.0)
    out.sum().backward()
    assert np.all(np.isfinite(t.grad))


def test_leaky_relu_values_and_gradient():
    t = Tensor(np.array([-1.0, 2.0]))
    out = t.leaky_relu(0.01)
    np.testing.assert_allclose(out.data, [-0.01, 2.0])
    out.sum().backward()
    np.testing.assert_allclose(t.grad, [0.01, 1.0])


def test_transpose_and_reshape_gradients():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(2, 3))
    check_unary(lambda t: (t.T @ t).reshape((9,)) * 0.5, x)


def test_backward_requires_scalar():
    t = Tensor(np.ones(3))
    with pytest.raises(ValueError):
        t.backward()
