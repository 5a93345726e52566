import numpy as np
import pytest

from scengan.autodiff import (
    Tensor,
    activation,
    batch_norm,
    batch_norm_op,
    conv2d,
    conv_transpose2d,
    dense,
    init_layer_params,
    layer_forward,
    max_pool2d,
    reshape_to,
)
from scengan.autodiff.layers import LayerSpec, layer_forward_internal
from scengan.errors import ConfigurationError, DegenerateBatchError


def naive_conv2d(x, w, stride, padding):
    """Quadruple-loop reference; x (N,C,H,W), w (Co,Ci,K,K)."""
    n, ci, h, wd = x.shape
    co, _, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    oh = (h + 2 * padding - k) // stride + 1
    ow = (wd + 2 * padding - k) // stride + 1
    out = np.zeros((n, co, oh, ow))
    for nn in range(n):
        for c in range(co):
            for i in range(oh):
                for j in range(ow):
                    patch = xp[nn, :, i * stride:i * stride + k, j * stride:j * stride + k]
                    out[nn, c, i, j] = (patch * w[c]).sum()
    return out


def naive_conv_transpose2d(x, w, stride, padding, output_padding):
    """Adjoint of naive_conv2d; x (N,Ci,H,W), w (Ci,Co,K,K)."""
    n, ci, h, wd = x.shape
    _, co, k, _ = w.shape
    oh = stride * (h - 1) + k - 2 * padding + output_padding
    ow = stride * (wd - 1) + k - 2 * padding + output_padding
    canvas = np.zeros((n, co, oh + 2 * padding, ow + 2 * padding))
    for nn in range(n):
        for c_in in range(ci):
            for i in range(h):
                for j in range(wd):
                    canvas[nn, :, i * stride:i * stride + k, j * stride:j * stride + k] += \
                        x[nn, c_in, i, j] * w[c_in]
    return canvas[:, :, padding:padding + oh, padding:padding + ow]


def run_layer(spec, x_nchw, training=True, seed=0, dtype=np.float64):
    rng = np.random.default_rng(seed)
    raw, state = init_layer_params(spec, rng, dtype)
    params = {k: Tensor(v, requires_grad=True, dtype=dtype) for k, v in raw.items()}
    out = layer_forward(spec, params, state, Tensor(x_nchw, dtype=dtype), training)
    return out, params, state


# -- forward shape and value contracts ---------------------------------------


def test_dense_shape_example():
    spec = dense(100, 2048)
    out, _, _ = run_layer(spec, np.random.default_rng(0).standard_normal((32, 100)))
    assert out.data.shape == (32, 2048)


def test_conv2d_shape_example():
    spec = conv2d(1, 64, kernel=5, stride=2, padding=2)
    out, _, _ = run_layer(spec, np.random.default_rng(0).standard_normal((32, 1, 24, 24)))
    assert out.data.shape == (32, 64, 12, 12)


def test_default_kernel_halves_extents():
    spec = conv2d(1, 8)
    assert spec.output_shape((1, 24, 24)) == (8, 12, 12)
    tspec = conv_transpose2d(8, 4)
    assert tspec.output_shape((8, 12, 12)) == (4, 24, 24)


def test_shape_determinism_is_data_independent():
    spec = conv2d(2, 5, kernel=3, stride=2, padding=1)
    rng = np.random.default_rng(1)
    shapes = set()
    for _ in range(3):
        out, _, _ = run_layer(spec, rng.standard_normal((4, 2, 12, 16)) * rng.uniform(0.1, 100))
        shapes.add(out.data.shape)
    assert shapes == {(4, 5, 6, 8)}


def test_conv_forward_matches_naive_oracle():
    rng = np.random.default_rng(2)
    spec = conv2d(3, 4, kernel=5, stride=2, padding=2)
    x = rng.standard_normal((2, 3, 10, 8))
    out, params, _ = run_layer(spec, x)
    ref = naive_conv2d(x, params["w"].data.transpose(3, 2, 0, 1), 2, 2)
    ref += params["b"].data.reshape(1, -1, 1, 1)
    np.testing.assert_allclose(out.data, ref, rtol=1e-10, atol=1e-10)


def test_conv_transpose_matches_naive_oracle():
    rng = np.random.default_rng(3)
    spec = conv_transpose2d(3, 2, kernel=5, stride=2, padding=2)
    x = rng.standard_normal((2, 3, 5, 6))
    out, params, _ = run_layer(spec, x)
    ref = naive_conv_transpose2d(x, params["w"].data.transpose(2, 3, 0, 1), 2, 2, 1)
    ref += params["b"].data.reshape(1, -1, 1, 1)
    np.testing.assert_allclose(out.data, ref, rtol=1e-10, atol=1e-10)


def test_conv_transpose_is_exact_adjoint_of_conv():
    # <conv(x), y> == <x, convT(y)> for matching kernels
    rng = np.random.default_rng(4)
    k, s, p = 4, 2, 1
    w = rng.standard_normal((4, 4, 3, 5))  # (K,K,Ci,Co)
    from scengan.autodiff._conv_kernels import conv_forward, conv_input_grad

    x = rng.standard_normal((2, 8, 8, 3))
    y = rng.standard_normal((2, 4, 4, 5))
    cx, _ = conv_forward(x, w, s, p)
    aty = conv_input_grad(y, w, s, p, (8, 8))
    np.testing.assert_allclose((cx * y).sum(), (x * aty).sum(), rtol=1e-10)


def test_activation_layers():
    out, _, _ = run_layer(activation("relu"), np.array([[-1.0, 0.0, 2.0]]))
    np.testing.assert_array_equal(out.data, [[0.0, 0.0, 2.0]])
    out, _, _ = run_layer(activation("leaky_relu"), np.array([[-1.0, 2.0]]))
    np.testing.assert_allclose(out.data, [[-0.2, 2.0]])


def test_max_pool_shape_and_values():
    x = np.arange(16, dtype=np.float64).reshape(1, 1, 4, 4)
    out, _, _ = run_layer(max_pool2d(2, 2), x)
    np.testing.assert_array_equal(out.data.reshape(2, 2), [[5, 7], [13, 15]])


def test_reshape_layer_roundtrip_shape():
    spec = reshape_to(2, 3, 4)
    out, _, _ = run_layer(spec, np.random.default_rng(0).standard_normal((5, 24)))
    assert out.data.shape == (5, 2, 3, 4)


def test_bad_input_shape_is_configuration_error():
    with pytest.raises(ConfigurationError):
        run_layer(dense(10, 4), np.zeros((2, 7)))
    with pytest.raises(ConfigurationError):
        run_layer(conv2d(3, 4), np.zeros((2, 1, 8, 8)))


# -- batch norm ---------------------------------------------------------------


def test_batch_norm_normalizes_in_training_mode():
    rng = np.random.default_rng(5)
    x = Tensor(rng.standard_normal((64, 7)) * 3.0 + 5.0, dtype=np.float64)
    gamma = Tensor(np.ones(7), requires_grad=True, dtype=np.float64)
    beta = Tensor(np.zeros(7), requires_grad=True, dtype=np.float64)
    state = {"running_mean": np.zeros(7), "running_var": np.ones(7)}
    out = batch_norm_op(x, gamma, beta, state, training=True)
    assert np.abs(out.data.mean(axis=0)).max() < 1e-5
    assert np.abs(out.data.var(axis=0) - 1).max() < 1e-4


def test_batch_norm_batch_of_one_raises():
    gamma = Tensor(np.ones(3), requires_grad=True)
    beta = Tensor(np.zeros(3), requires_grad=True)
    state = {"running_mean": np.zeros(3), "running_var": np.ones(3)}
    with pytest.raises(DegenerateBatchError):
        batch_norm_op(Tensor(np.ones((1, 3))), gamma, beta, state, training=True)


def test_batch_norm_inference_uses_running_stats():
    gamma = Tensor(np.ones(2), requires_grad=True, dtype=np.float64)
    beta = Tensor(np.zeros(2), requires_grad=True, dtype=np.float64)
    state = {"running_mean": np.array([1.0, -1.0]), "running_var": np.array([4.0, 0.25])}
    x = Tensor(np.array([[3.0, 0.0]]), dtype=np.float64)
    out = batch_norm_op(x, gamma, beta, state, training=False)
    np.testing.assert_allclose(out.data, [[1.0, 2.0]], rtol=1e-4)


def test_batch_norm_running_stats_update_with_momentum():
    rng = np.random.default_rng(6)
    x = Tensor(rng.standard_normal((32, 3)) + 10.0, dtype=np.float64)
    gamma = Tensor(np.ones(3), requires_grad=True, dtype=np.float64)
    beta = Tensor(np.zeros(3), requires_grad=True, dtype=np.float64)
    state = {"running_mean": np.zeros(3), "running_var": np.ones(3)}
    batch_norm_op(x, gamma, beta, state, training=True, momentum=0.9)
    expected = 0.1 * x.data.mean(axis=0)
    np.testing.assert_allclose(state["running_mean"], expected, rtol=1e-9)


def test_fused_batch_norm_layer_runs_channels_first():
    spec = conv2d(1, 4, kernel=3, stride=2, padding=1, activation="relu",
                  has_batch_norm=True)
    out, _, state = run_layer(spec, np.random.default_rng(7).standard_normal((8, 1, 8, 8)))
    assert out.data.shape == (8, 4, 4, 4)
    assert (out.data >= 0).all()
    assert not np.array_equal(state["running_mean"], np.zeros(4))


def test_internal_layout_matches_public_contract():
    # public channels-first call agrees with the channels-last internal path
    rng = np.random.default_rng(8)
    spec = conv2d(2, 3, kernel=3, stride=2, padding=1)
    raw, state = init_layer_params(spec, rng, np.float64)
    params = {k: Tensor(v, requires_grad=True, dtype=np.float64) for k, v in raw.items()}
    x = rng.standard_normal((4, 2, 8, 8))
    pub = layer_forward(spec, params, state, Tensor(x, dtype=np.float64), True)
    internal = layer_forward_internal(
        spec, params, state, Tensor(np.ascontiguousarray(x.transpose(0, 2, 3, 1)),
                                    dtype=np.float64), True)
    np.testing.assert_allclose(pub.data, internal.data.transpose(0, 3, 1, 2), rtol=1e-12)
