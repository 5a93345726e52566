"""Dense tensors with reverse-mode automatic differentiation.

A :class:`Tensor` wraps a numpy array together with an optional gradient
record. Operations build a tape (each result remembers its parents and a
per-parent gradient closure); :meth:`Tensor.backward` walks the tape in
reverse topological order and accumulates gradients into every tensor that
requires them. Only the operations the scenario-generation networks need
are provided.

float32 is the working precision; float64 is supported end to end for
gradient-verification suites.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from ..errors import StateError

DEFAULT_DTYPE = np.float32

_FLOAT_DTYPES = (np.float32, np.float64)

_TAPE_ENABLED = True


@contextmanager
def no_grad():
    """Disable tape recording inside the block (forward values only)."""
    global _TAPE_ENABLED
    prev = _TAPE_ENABLED
    _TAPE_ENABLED = False
    try:
        yield
    finally:
        _TAPE_ENABLED = prev


def _as_array(data, dtype=None):
    arr = np.asarray(data)
    if dtype is not None:
        return arr.astype(dtype, copy=False)
    if arr.dtype not in _FLOAT_DTYPES:
        return arr.astype(DEFAULT_DTYPE)
    return arr


class Tensor:
    """N-dimensional array with an optional reverse-mode gradient record."""

    __slots__ = ("data", "requires_grad", "grad", "_parents")

    def __init__(self, data, requires_grad=False, dtype=None, _parents=()):
        self.data = _as_array(data, dtype)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = tuple(_parents)

    # -- introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    def item(self):
        return float(self.data)

    def detach(self) -> "Tensor":
        """Same values, cut off from the recorded computation."""
        return Tensor(self.data, requires_grad=False)

    # -- graph plumbing ------------------------------------------------

    def _needs_tape(self):
        return self.requires_grad or bool(self._parents)

    def backward(self, output_grad=None):
        """Accumulate gradients of this tensor's parents.

        ``output_grad`` defaults to ones (the usual choice for a scalar
        loss). Gradients accumulate into ``.grad``; parameter tensors keep
        theirs until an optimizer step clears them.
        """
        if not self._parents:
            raise StateError("backward called on a tensor with no recorded computation")
        if output_grad is None:
            g = np.ones_like(self.data)
        else:
            g = _as_array(output_grad, self.data.dtype)
            if g.shape != self.data.shape:
                raise StateError(
                    f"output_grad shape {g.shape} does not match tensor shape {self.data.shape}"
                )

        order = self._topo_order()
        self.grad = g if self.grad is None else self.grad + g
        for node in order:
            ng = node.grad
            for parent, grad_fn in node._parents:
                contrib = grad_fn(ng)
                parent.grad = contrib if parent.grad is None else parent.grad + contrib

    def _topo_order(self):
        """Reverse topological order of the tape hanging off this tensor."""
        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent, _ in node._parents:
                if parent._parents and id(parent) not in visited:
                    stack.append((parent, False))
        order.reverse()
        return order

    # -- operators -----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(_ensure_tensor(other, self.dtype), -1.0))

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, other)
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])


def _ensure_tensor(x, dtype):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _make(out_data, parents):
    if not _TAPE_ENABLED:
        return Tensor(out_data)
    tracked = [(p, fn) for p, fn in parents if p._needs_tape()]
    return Tensor(out_data, requires_grad=bool(tracked), _parents=tracked)


# -- elementwise and linear ops -----------------------------------------


def add(a: Tensor, b) -> Tensor:
    b = _ensure_tensor(b, a.dtype)
    out = a.data + b.data
    return _make(out, [
        (a, lambda g: _unbroadcast(g, a.data.shape)),
        (b, lambda g: _unbroadcast(g, b.data.shape)),
    ])


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data * b.data
    return _make(out, [
        (a, lambda g: _unbroadcast(g * b.data, a.data.shape)),
        (b, lambda g: _unbroadcast(g * a.data, b.data.shape)),
    ])


def scale(a: Tensor, k) -> Tensor:
    k = float(k)
    return _make(a.data * k, [(a, lambda g: g * k)])


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D matrix product; gradients are the chain rule for an affine map."""
    out = a.data @ b.data
    return _make(out, [
        (a, lambda g: g @ b.data.T),
        (b, lambda g: a.data.T @ g),
    ])


def reshape(a: Tensor, shape) -> Tensor:
    orig = a.data.shape
    return _make(a.data.reshape(shape), [(a, lambda g: g.reshape(orig))])


def permute(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = np.ascontiguousarray(a.data.transpose(axes))
    return _make(out, [(a, lambda g: np.ascontiguousarray(g.transpose(inverse)))])


def concat(tensors, axis=0) -> Tensor:
    tensors = list(tensors)
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)
    parents = []
    for i, t in enumerate(tensors):
        lo, hi = offsets[i], offsets[i + 1]

        def grad_fn(g, lo=lo, hi=hi):
            index = [slice(None)] * g.ndim
            index[axis] = slice(lo, hi)
            return g[tuple(index)]

        parents.append((t, grad_fn))
    return _make(out, parents)


def sum_all(a: Tensor) -> Tensor:
    out = np.asarray(a.data.sum(), dtype=a.dtype)
    return _make(out, [(a, lambda g: np.broadcast_to(g, a.data.shape).copy())])


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size
    out = np.asarray(a.data.mean(), dtype=a.dtype)
    inv = np.asarray(1.0 / n, dtype=a.dtype)
    return _make(out, [(a, lambda g: np.broadcast_to(g * inv, a.data.shape).copy())])


# -- activations ---------------------------------------------------------


def relu(a: Tensor) -> Tensor:
    # subgradient 0 at the kink; mask recomputed lazily on backward
    return _make(np.maximum(a.data, 0), [(a, lambda g: g * (a.data > 0))])


def leaky_relu(a: Tensor, slope=0.2) -> Tensor:
    slope = a.dtype.type(slope)
    out = np.maximum(a.data, 0) + np.minimum(a.data, 0) * slope

    def grad(g):
        return g * np.where(a.data > 0, a.dtype.type(1), slope)

    return _make(out, [(a, grad)])


def sigmoid(a: Tensor) -> Tensor:
    from scipy.special import expit

    out = expit(a.data)
    return _make(out, [(a, lambda g: g * out * (1.0 - out))])
