import numpy as np
import pytest

from scengan.autodiff import (
    Tensor,
    activation,
    batch_norm,
    conv2d,
    conv_transpose2d,
    dense,
    finite_difference_check,
    init_layer_params,
    layer_forward,
    max_pool2d,
    nudge_from_kinks,
    sigmoid,
)

LAYER_CASES = {
    "dense": (dense(6, 4), (5, 6)),
    "conv2d": (conv2d(2, 3, kernel=4, stride=2, padding=1), (2, 2, 8, 8)),
    "conv_transpose2d": (conv_transpose2d(2, 3, kernel=4, stride=2, padding=1), (2, 2, 4, 4)),
    "batch_norm": (batch_norm(5), (8, 5)),
    "relu": (activation("relu"), (4, 6)),
    "leaky_relu": (activation("leaky_relu"), (4, 6)),
    "sigmoid": (activation("sigmoid"), (4, 6)),
    "max_pool2d": (max_pool2d(2, 2), (2, 2, 6, 6)),
}


def layer_fn(spec, seed, dtype):
    rng = np.random.default_rng(seed)
    raw, state = init_layer_params(spec, rng, dtype)
    params = {k: Tensor(v, requires_grad=True, dtype=dtype) for k, v in raw.items()}
    return lambda t: layer_forward(spec, params, state, t, training=True)


@pytest.mark.parametrize("name", sorted(LAYER_CASES))
def test_layer_gradients_f64(name):
    spec, shape = LAYER_CASES[name]
    rng = np.random.default_rng(11)
    x = nudge_from_kinks(rng.standard_normal(shape))
    res = finite_difference_check(layer_fn(spec, 11, np.float64),
                                  Tensor(x, dtype=np.float64),
                                  tolerance=1e-6, h=1e-5)
    assert res.passed, f"{name}: max rel err {res.max_rel_error:.2e}"


@pytest.mark.parametrize("name", sorted(LAYER_CASES))
def test_layer_gradients_f32(name):
    spec, shape = LAYER_CASES[name]
    rng = np.random.default_rng(7)
    x = nudge_from_kinks(rng.standard_normal(shape)).astype(np.float32)
    res = finite_difference_check(layer_fn(spec, 7, np.float32),
                                  Tensor(x, dtype=np.float32),
                                  tolerance=1e-3, h=1e-3)
    assert res.passed, f"{name}: max rel err {res.max_rel_error:.2e}"


def test_dense_weight_gradient_via_check():
    rng = np.random.default_rng(3)
    spec = dense(4, 3)
    raw, state = init_layer_params(spec, rng, np.float64)
    params = {k: Tensor(v, requires_grad=True, dtype=np.float64) for k, v in raw.items()}
    x = Tensor(rng.standard_normal((6, 4)), dtype=np.float64)

    def as_weight_fn(wt):
        p = dict(params)
        p["w"] = wt
        return layer_forward(spec, p, state, x, training=True)

    res = finite_difference_check(as_weight_fn, params["w"], tolerance=1e-6, h=1e-5)
    assert res.passed


def test_sigmoid_slope_at_zero_is_one_quarter():
    res = finite_difference_check(sigmoid, Tensor(np.zeros((1, 1)), dtype=np.float64),
                                  tolerance=1e-6, h=1e-5)
    assert res.passed
    x = Tensor(np.zeros((1, 1)), requires_grad=True, dtype=np.float64)
    out = sigmoid(x)
    out.backward(np.ones((1, 1)))
    np.testing.assert_allclose(x.grad, 0.25, rtol=1e-12)


def test_failure_is_reported_not_raised():
    # a deliberately wrong "gradient": f(x) = x but tape says gradient 3x
    from scengan.autodiff.tensor import _make

    def broken(t):
        return _make(t.data.copy(), [(t, lambda g: 3.0 * g)])

    res = finite_difference_check(broken, Tensor(np.ones(4), dtype=np.float64),
                                  tolerance=1e-6, h=1e-5)
    assert not res.passed
    assert res.max_rel_error > 0.1


def test_nudge_from_kinks_moves_near_zero_values():
    x = np.array([-1.0, 5e-5, 0.0, 0.3])
    nudged = nudge_from_kinks(x, kinks=(0.0,), margin=1e-4)
    assert (np.abs(nudged) >= 1e-4).all()
    assert nudged[0] == -1.0 and nudged[3] == 0.3
