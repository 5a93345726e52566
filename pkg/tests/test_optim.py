import numpy as np
import pytest

from scengan.autodiff import Parameter, clip_weights, max_abs_weight, rmsprop_step
from scengan.errors import ConfigurationError, StateError


def make_param(values, grad=None):
    p = Parameter("w", np.asarray(values, dtype=np.float32))
    if grad is not None:
        p.value.grad = np.asarray(grad, dtype=np.float32)
    return p


def test_rmsprop_first_step_arithmetic():
    p = make_param([0.0], grad=[1.0])
    rmsprop_step([p], alpha=0.1, rho=0.9, eps=0.0)
    np.testing.assert_allclose(p.rms, [0.1], rtol=1e-6)
    np.testing.assert_allclose(p.data, [-0.1 / np.sqrt(0.1)], rtol=1e-5)


def test_rmsprop_zero_gradient_decays_accumulator():
    p = make_param([1.0], grad=[0.0])
    p.rms[:] = 0.5
    rmsprop_step([p], alpha=0.1, rho=0.9, eps=1e-8)
    np.testing.assert_allclose(p.rms, [0.45], rtol=1e-6)
    np.testing.assert_allclose(p.data, [1.0], rtol=1e-6)


def test_rmsprop_two_identical_steps():
    p = make_param([0.0], grad=[1.0])
    rmsprop_step([p], alpha=0.1, rho=0.9, eps=0.0)
    p.value.grad = np.asarray([1.0], dtype=np.float32)
    rmsprop_step([p], alpha=0.1, rho=0.9, eps=0.0)
    np.testing.assert_allclose(p.rms, [0.19], rtol=1e-6)


def test_rmsprop_first_update_magnitude_is_gradient_scale_free():
    # with r=0 and eps=0 the first step is alpha*sqrt(1/(1-rho)) regardless of |g|
    for g in (1e-3, 1.0, 1e3):
        p = make_param([0.0], grad=[g])
        rmsprop_step([p], alpha=0.05, rho=0.9, eps=0.0)
        np.testing.assert_allclose(abs(p.data[0]), 0.05 * np.sqrt(1 / 0.1), rtol=1e-5)


def test_rmsprop_clears_gradients():
    p = make_param([0.0], grad=[1.0])
    rmsprop_step([p], alpha=0.1)
    assert p.value.grad is None


def test_rmsprop_missing_gradient_is_state_error():
    p = make_param([0.0])
    with pytest.raises(StateError):
        rmsprop_step([p], alpha=0.1)


def test_rmsprop_accumulator_stays_nonnegative():
    rng = np.random.default_rng(0)
    p = make_param(rng.standard_normal(50))
    for _ in range(20):
        p.value.grad = rng.standard_normal(50).astype(np.float32)
        rmsprop_step([p], alpha=1e-3)
        assert (p.rms >= 0).all()


def test_clip_examples():
    p = make_param([0.5, -0.003, -5.0])
    clip_weights([p], 0.01)
    np.testing.assert_allclose(p.data, [0.01, -0.003, -0.01], rtol=1e-7)


def test_clip_is_idempotent_bitwise():
    rng = np.random.default_rng(1)
    p = make_param(rng.standard_normal(1000))
    clip_weights([p], 0.01)
    once = p.data.copy()
    clip_weights([p], 0.01)
    assert np.array_equal(p.data, once)


def test_clip_rejects_nonpositive_bound():
    p = make_param([0.5])
    with pytest.raises(ConfigurationError):
        clip_weights([p], 0.0)
    with pytest.raises(ConfigurationError):
        clip_weights([p], -1.0)


def test_max_abs_weight():
    p1 = make_param([0.5, -0.2])
    p2 = make_param([[0.1, -0.9]])
    assert max_abs_weight([p1, p2]) == pytest.approx(0.9)
