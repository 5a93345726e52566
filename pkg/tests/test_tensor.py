import numpy as np
import pytest

from scengan.autodiff import (
    Tensor, add, concat, leaky_relu, matmul, mean_all, mul, no_grad, permute,
    relu, reshape, scale, sigmoid, sum_all,
)
from scengan.errors import StateError


def numeric_grad(fn, x, h=1e-6):
    """Central differences of a scalar-valued fn at x (float64)."""
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = fn(x)
        flat[i] = orig - h
        fm = fn(x)
        flat[i] = orig
        gf[i] = (fp - fm) / (2 * h)
    return g


def check_op(op, shape, seed=0):
    rng = np.random.default_rng(seed)
    xval = rng.standard_normal(shape)
    t = Tensor(xval.copy(), requires_grad=True, dtype=np.float64)
    out = op(t)
    v = rng.standard_normal(out.data.shape)
    out.backward(v)

    def scalar_fn(arr):
        return float((op(Tensor(arr, dtype=np.float64)).data * v).sum())

    expected = numeric_grad(scalar_fn, xval.copy())
    np.testing.assert_allclose(t.grad, expected, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("op,shape", [
    (lambda t: relu(t), (4, 5)),
    (lambda t: leaky_relu(t, 0.2), (4, 5)),
    (lambda t: sigmoid(t), (3, 4)),
    (lambda t: scale(t, -2.5), (6,)),
    (lambda t: reshape(t, (2, 10)), (4, 5)),
    (lambda t: permute(t, (0, 2, 3, 1)), (2, 3, 4, 5)),
    (lambda t: mean_all(t), (7, 3)),
    (lambda t: sum_all(t), (7, 3)),
])
def test_unary_ops_match_finite_differences(op, shape):
    check_op(op, shape)


def test_add_mul_broadcast_gradients():
    rng = np.random.default_rng(1)
    a = Tensor(rng.standard_normal((4, 3)), requires_grad=True, dtype=np.float64)
    b = Tensor(rng.standard_normal((3,)), requires_grad=True, dtype=np.float64)
    out = mul(add(a, b), b)
    out.backward(np.ones((4, 3)))
    assert a.grad.shape == (4, 3)
    assert b.grad.shape == (3,)
    # d/db of sum((a+b)*b) = sum over batch of (a + 2b)
    expected_b = (a.data + 2 * b.data).sum(axis=0)
    np.testing.assert_allclose(b.grad, expected_b, rtol=1e-12)


def test_matmul_gradients_are_chain_rule():
    rng = np.random.default_rng(2)
    x = Tensor(rng.standard_normal((4, 3)), requires_grad=True, dtype=np.float64)
    w = Tensor(rng.standard_normal((3, 5)), requires_grad=True, dtype=np.float64)
    out = matmul(x, w)
    g = rng.standard_normal((4, 5))
    out.backward(g)
    np.testing.assert_allclose(w.grad, x.data.T @ g, rtol=1e-12)
    np.testing.assert_allclose(x.grad, g @ w.data.T, rtol=1e-12)


def test_concat_splits_gradient():
    a = Tensor(np.ones((2, 3)), requires_grad=True)
    b = Tensor(np.ones((2, 2)), requires_grad=True)
    out = concat([a, b], axis=1)
    g = np.arange(10, dtype=np.float32).reshape(2, 5)
    out.backward(g)
    np.testing.assert_array_equal(a.grad, g[:, :3])
    np.testing.assert_array_equal(b.grad, g[:, 3:])


def test_gradient_linearity_over_fixed_graph():
    rng = np.random.default_rng(3)
    g1 = rng.standard_normal((4, 5))
    g2 = rng.standard_normal((4, 5))
    a, b = 0.7, -1.3

    def run(seed_grad):
        x = Tensor(rng_x.copy(), requires_grad=True, dtype=np.float64)
        out = sigmoid(matmul(x, Tensor(rng_w, dtype=np.float64)))
        out.backward(seed_grad)
        return x.grad

    rng_x = rng.standard_normal((4, 3))
    rng_w = rng.standard_normal((3, 5))
    combined = run(a * g1 + b * g2)
    separate = a * run(g1) + b * run(g2)
    np.testing.assert_allclose(combined, separate, rtol=1e-10)


def test_gradients_accumulate_across_backward_calls():
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True, dtype=np.float64)
    out1 = sum_all(mul(x, x))
    out1.backward()
    first = x.grad.copy()
    out2 = sum_all(mul(x, x))
    out2.backward()
    np.testing.assert_allclose(x.grad, 2 * first)


def test_backward_without_recorded_forward_is_state_error():
    leaf = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(StateError):
        leaf.backward()


def test_backward_rejects_mismatched_grad_shape():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    out = relu(x)
    with pytest.raises(StateError):
        out.backward(np.ones(3))


def test_no_grad_disables_tape():
    x = Tensor(np.ones(4), requires_grad=True)
    with no_grad():
        out = relu(x)
    assert out._parents == ()
    assert not out.requires_grad


def test_detach_cuts_graph():
    x = Tensor(np.ones(4), requires_grad=True)
    out = relu(x).detach()
    assert out._parents == ()
    with pytest.raises(StateError):
        out.backward()


def test_relu_examples():
    out = relu(Tensor(np.array([-1.0, 0.0, 2.0])))
    np.testing.assert_array_equal(out.data, [0.0, 0.0, 2.0])


def test_leaky_relu_examples():
    out = leaky_relu(Tensor(np.array([-1.0, 2.0])), 0.2)
    np.testing.assert_allclose(out.data, [-0.2, 2.0], rtol=1e-6)
