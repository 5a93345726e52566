"""Named parameters, the RMSProp update and critic weight clipping."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError, NumericError, StateError
from .tensor import Tensor


class Parameter:
    """A named trainable tensor plus its squared-gradient running average."""

    __slots__ = ("name", "value", "rms")

    def __init__(self, name: str, array: np.ndarray):
        self.name = name
        self.value = Tensor(np.array(array, copy=True), requires_grad=True)
        self.rms = np.zeros_like(self.value.data)

    @property
    def data(self) -> np.ndarray:
        return self.value.data

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.data.shape})"


def clear_grads(params):
    for p in params:
        p.value.grad = None


def rmsprop_step(params, alpha: float, rho: float = 0.9, eps: float = 1e-8):
    """One RMSProp descent step on every parameter, then clear gradients.

    r <- rho * r + (1 - rho) * g^2
    w <- w - alpha * g / (sqrt(r) + eps)
    """
    if not 0.0 <= rho < 1.0:
        raise ConfigurationError(f"rho must be in [0, 1), got {rho}")
    params = list(params)
    for p in params:
        if p.value.grad is None:
            raise StateError(f"parameter {p.name!r} has no gradient; run backward first")
    for p in params:
        g = p.value.grad
        p.rms *= rho
        p.rms += (1.0 - rho) * g * g
        p.value.data -= alpha * g / (np.sqrt(p.rms) + eps)
        p.value.grad = None


def clip_weights(params, c: float):
    """Clamp every weight entry of every parameter into [-c, c] in place."""
    if not c > 0:
        raise ConfigurationError(f"clip bound must be positive, got {c}")
    for p in params:
        np.clip(p.value.data, -c, c, out=p.value.data)


def max_abs_weight(params) -> float:
    return max(float(np.abs(p.value.data).max()) for p in params)
