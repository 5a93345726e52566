"""The layer kinds the scenario-generation networks are built from.

Each layer is described by an immutable :class:`LayerSpec`; parameters and
mutable state (batch-norm running statistics) live outside the spec so that
architectures serialize as plain records.

Shape contracts (``LayerSpec.output_shape``, ``layer_forward``) speak
channels-first (C, H, W). Internally every 4-D activation runs
channels-last through jitted kernels (see ``_conv_kernels``); the public
``layer_forward`` adapts at its boundary, while ``Network`` in the GAN
module keeps activations channels-last across the whole stack and converts
once at entry and exit. Dense layers flatten 4-D inputs in channels-last
order under both paths.

Convolutions use 5x5 kernels with stride 2x2 and padding 2 by default, so a
stride-2 stage exactly halves each spatial extent. Transposed convolutions
are the exact adjoint of the matching convolution, which makes their
gradients the forward convolution again. Weights are stored (K, K, C_in,
C_out).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DegenerateBatchError, NumericError
from . import _conv_kernels as _ck
from .tensor import Tensor, _make

ACTIVATIONS = ("relu", "leaky_relu", "sigmoid", "linear")

LAYER_KINDS = ("dense", "conv2d", "conv_transpose2d", "batch_norm", "activation",
               "max_pool2d", "reshape")

BN_MOMENTUM = 0.99
BN_EPS = 1e-5

WEIGHT_INIT_STD = 0.02


@dataclass(frozen=True)
class LayerSpec:
    """Shape-level description of one layer.

    ``dimensions`` is kind-specific:
      dense            -- (in_features, out_features)
      conv2d           -- (in_channels, out_channels, kernel, stride, padding)
      conv_transpose2d -- (in_channels, out_channels, kernel, stride, padding, output_padding)
      batch_norm       -- (num_features,)
      activation       -- (), with ``activation`` set
      max_pool2d       -- (kernel, stride)
      reshape          -- target (C, H, W) without the batch axis
    """

    kind: str
    dimensions: tuple = ()
    activation: str = ""
    leaky_slope: float = 0.2
    has_batch_norm: bool = False

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ConfigurationError(f"unknown layer kind {self.kind!r}")
        if self.kind == "activation" and self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")

    def output_shape(self, input_shape):
        """Deterministic output shape (no batch axis) for a given input shape."""
        if self.kind == "dense":
            fin, fout = self.dimensions
            if int(np.prod(input_shape)) != fin:
                raise ConfigurationError(
                    f"dense layer expects {fin} input features, got shape {tuple(input_shape)}"
                )
            return (fout,)
        if self.kind == "conv2d":
            cin, cout, k, s, p = self.dimensions
            _, h, w = _require_chw(input_shape, cin, self)
            oh = (h + 2 * p - k) // s + 1
            ow = (w + 2 * p - k) // s + 1
            if oh < 1 or ow < 1:
                raise ConfigurationError(f"conv2d output collapses for input {tuple(input_shape)}")
            return (cout, oh, ow)
        if self.kind == "conv_transpose2d":
            cin, cout, k, s, p, op = self.dimensions
            _, h, w = _require_chw(input_shape, cin, self)
            return (cout, s * (h - 1) + k - 2 * p + op, s * (w - 1) + k - 2 * p + op)
        if self.kind in ("batch_norm", "activation"):
            return tuple(input_shape)
        if self.kind == "max_pool2d":
            k, s = self.dimensions
            c, h, w = input_shape
            return (c, (h - k) // s + 1, (w - k) // s + 1)
        if self.kind == "reshape":
            if int(np.prod(input_shape)) != int(np.prod(self.dimensions)):
                raise ConfigurationError(f"cannot reshape {tuple(input_shape)} into {self.dimensions}")
            return tuple(self.dimensions)
        raise ConfigurationError(f"unknown layer kind {self.kind!r}")


def _require_chw(shape, cin, spec):
    if len(shape) != 3 or shape[0] != cin:
        raise ConfigurationError(
            f"{spec.kind} expects input (channels={cin}, H, W), got shape {tuple(shape)}"
        )
    return shape


DEFAULT_KERNEL = 4


def scaling_padding(kernel: int) -> int:
    """Padding for which a stride-s stage scales extents by exactly s."""
    return (kernel - 1) // 2


def dense(fin, fout, activation="", has_batch_norm=False):
    return LayerSpec("dense", (fin, fout), activation, has_batch_norm=has_batch_norm)


def conv2d(cin, cout, kernel=DEFAULT_KERNEL, stride=2, padding=None, activation="",
           has_batch_norm=False):
    if padding is None:
        padding = scaling_padding(kernel)
    return LayerSpec("conv2d", (cin, cout, kernel, stride, padding), activation,
                     has_batch_norm=has_batch_norm)


def conv_transpose2d(cin, cout, kernel=DEFAULT_KERNEL, stride=2, padding=None,
                     output_padding=None, activation="", has_batch_norm=False):
    if padding is None:
        padding = scaling_padding(kernel)
    if output_padding is None:
        # the output padding that makes a stride-s stage scale extents by exactly s
        output_padding = (2 * padding - kernel) % stride if stride > 1 else 0
    if output_padding > padding:
        raise ConfigurationError("output_padding may not exceed padding")
    return LayerSpec("conv_transpose2d", (cin, cout, kernel, stride, padding, output_padding),
                     activation, has_batch_norm=has_batch_norm)


def batch_norm(num_features):
    return LayerSpec("batch_norm", (num_features,))


def activation(name, leaky_slope=0.2):
    return LayerSpec("activation", (), name, leaky_slope=leaky_slope)


def max_pool2d(kernel=2, stride=2):
    return LayerSpec("max_pool2d", (kernel, stride))


def reshape_to(*shape):
    return LayerSpec("reshape", tuple(shape))


def init_layer_params(spec: LayerSpec, rng: np.random.Generator, dtype=np.float32):
    """Fresh parameter arrays for one layer: N(0, 0.02) weights, zero biases.

    Batch-norm scale starts at N(1, 0.02) rather than N(0, 0.02); a
    near-zero scale would erase the signal it normalizes.
    """
    params = {}
    if spec.kind == "dense":
        fin, fout = spec.dimensions
        params["w"] = rng.normal(0.0, WEIGHT_INIT_STD, (fin, fout)).astype(dtype)
        params["b"] = np.zeros(fout, dtype)
        nfeat = fout
    elif spec.kind in ("conv2d", "conv_transpose2d"):
        cin, cout, k = spec.dimensions[:3]
        params["w"] = rng.normal(0.0, WEIGHT_INIT_STD, (k, k, cin, cout)).astype(dtype)
        params["b"] = np.zeros(cout, dtype)
        nfeat = cout
    elif spec.kind == "batch_norm":
        nfeat = spec.dimensions[0]
    else:
        return params, {}

    state = {}
    if spec.kind == "batch_norm" or spec.has_batch_norm:
        params["bn_gamma"] = rng.normal(1.0, WEIGHT_INIT_STD, nfeat).astype(dtype)
        params["bn_beta"] = np.zeros(nfeat, dtype)
        state["running_mean"] = np.zeros(nfeat, dtype)
        state["running_var"] = np.ones(nfeat, dtype)
    return params, state


# -- channels-last primitive ops --------------------------------------------


def conv2d_op(x: Tensor, w: Tensor, b: Tensor, stride: int, padding: int) -> Tensor:
    """x (N,H,W,Ci), w (K,K,Ci,Co) -> (N,OH,OW,Co)."""
    k, _, ci, co = w.data.shape
    out, cols = _ck.conv_forward(x.data, w.data, stride, padding)
    out += b.data
    in_hw = x.data.shape[1:3]
    return _make(out, [
        (x, lambda g: _ck.conv_input_grad(np.ascontiguousarray(g), w.data,
                                          stride, padding, in_hw)),
        (w, lambda g: _ck.conv_weight_grad(cols, np.ascontiguousarray(g), k, ci)),
        (b, lambda g: g.reshape(-1, co).sum(axis=0)),
    ])


def conv_transpose2d_op(x: Tensor, w: Tensor, b: Tensor, stride: int, padding: int,
                        output_padding: int) -> Tensor:
    """Exact adjoint of conv2d_op with the same (kernel, stride, padding).

    x (N,H,W,Ci), w (K,K,Ci,Co) -> (N,OH,OW,Co) with
    OH = stride*(H-1) + K - 2*padding + output_padding. The backward packs
    the output gradient once and feeds both the input- and weight-gradient
    products from it.
    """
    k, _, ci, co = w.data.shape
    n, h, wd, _ = x.data.shape
    oh = stride * (h - 1) + k - 2 * padding + output_padding
    ow = stride * (wd - 1) + k - 2 * padding + output_padding
    # roles swap: x acts as the "output gradient" of the matching conv,
    # whose weight contracts over x's channel axis
    w_conv = np.ascontiguousarray(w.data.swapaxes(2, 3))  # (K,K,Co,Ci)
    out = _ck.conv_input_grad(x.data, w_conv, stride, padding, (oh, ow))
    out += b.data

    packed = {}

    def _grad_pair(g):
        if packed.get("id") != id(g):
            gx, cols_g = _ck.conv_forward(np.ascontiguousarray(g), w_conv, stride, padding)
            packed["id"] = id(g)
            packed["gx"] = gx
            packed["cols"] = cols_g
        return packed

    def grad_x(g):
        return _grad_pair(g)["gx"]

    def grad_w(g):
        gw = _ck.conv_weight_grad(_grad_pair(g)["cols"], x.data, k, co)
        return gw.swapaxes(2, 3)

    return _make(out, [
        (x, grad_x),
        (w, grad_w),
        (b, lambda g: g.reshape(-1, co).sum(axis=0)),
    ])


def batch_norm_op(x: Tensor, gamma: Tensor, beta: Tensor, state: dict, training: bool,
                  momentum: float = BN_MOMENTUM, eps: float = BN_EPS) -> Tensor:
    """Normalize each feature over the batch (and spatial positions, 4-D input).

    Features sit on the last axis (channels-last). Training mode uses batch
    statistics and folds them into the running averages; inference mode
    reads the running averages only.
    """
    nd = x.data.ndim
    if nd not in (2, 4):
        raise ConfigurationError(f"batch_norm expects 2-D or 4-D input, got {nd}-D")
    if training and x.data.shape[0] < 2:
        raise DegenerateBatchError("batch_norm in training mode needs batch size >= 2")
    nfeat = x.data.shape[-1]
    x2 = x.data.reshape(-1, nfeat)

    if training:
        mean, var = _ck.bn_batch_stats(x2)
        state["running_mean"] *= momentum
        state["running_mean"] += (1.0 - momentum) * mean.astype(state["running_mean"].dtype)
        state["running_var"] *= momentum
        state["running_var"] += (1.0 - momentum) * var.astype(state["running_var"].dtype)
        inv_std = (1.0 / np.sqrt(var + eps)).astype(x.data.dtype)
        out = _ck.bn_normalize(x2, mean, inv_std, gamma.data, beta.data).reshape(x.data.shape)

        memo = {}

        def _bwd(g):
            if memo.get("id") != id(g):
                dx, dgamma, dbeta = _ck.bn_backward(
                    np.ascontiguousarray(g).reshape(-1, nfeat), x2, mean, inv_std, gamma.data)
                memo["id"] = id(g)
                memo["parts"] = (dx, dgamma, dbeta)
            return memo["parts"]

        return _make(out, [
            (x, lambda g: _bwd(g)[0].reshape(x.data.shape)),
            (gamma, lambda g: _bwd(g)[1]),
            (beta, lambda g: _bwd(g)[2]),
        ])

    inv_std = (1.0 / np.sqrt(state["running_var"] + eps)).astype(x.data.dtype)
    mean = state["running_mean"].astype(x.data.dtype)
    out = _ck.bn_normalize(x2, mean, inv_std, gamma.data, beta.data).reshape(x.data.shape)
    scale = gamma.data * inv_std

    def grad_gamma(g):
        g2 = g.reshape(-1, nfeat)
        return ((x2 - mean) * inv_std * g2).sum(axis=0)

    return _make(out, [
        (x, lambda g: (g.reshape(-1, nfeat) * scale).reshape(x.data.shape)),
        (gamma, grad_gamma),
        (beta, lambda g: g.reshape(-1, nfeat).sum(axis=0)),
    ])


def max_pool2d_op(x: Tensor, kernel: int, stride: int) -> Tensor:
    """x (N,H,W,C) -> (N,OH,OW,C), first index wins ties."""
    n, h, w, c = x.data.shape
    view = np.lib.stride_tricks.sliding_window_view(x.data, (kernel, kernel), axis=(1, 2))
    view = view[:, ::stride, ::stride]
    oh, ow = view.shape[1], view.shape[2]
    flat = view.reshape(n, oh, ow, c, kernel * kernel)
    idx = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]

    def grad_x(g):
        gx = np.zeros_like(x.data)
        ki, kj = np.unravel_index(idx, (kernel, kernel))
        nn, ii, jj, cc = np.indices(idx.shape)
        np.add.at(gx, (nn, ii * stride + ki, jj * stride + kj, cc), g)
        return gx

    return _make(out, [(x, grad_x)])


def apply_activation(x: Tensor, name: str, leaky_slope: float = 0.2) -> Tensor:
    from . import tensor as T

    if name == "relu":
        return T.relu(x)
    if name == "leaky_relu":
        return T.leaky_relu(x, leaky_slope)
    if name == "sigmoid":
        return T.sigmoid(x)
    if name in ("", "linear"):
        return x
    raise ConfigurationError(f"unknown activation {name!r}")


# -- layer execution ---------------------------------------------------------


def layer_forward_internal(spec: LayerSpec, params: dict, state: dict, x: Tensor,
                           training: bool) -> Tensor:
    """Run one layer on a channels-last activation (no finiteness check)."""
    if spec.kind == "dense":
        h = x if x.data.ndim == 2 else x.reshape((x.data.shape[0], -1))
        fin = spec.dimensions[0]
        if h.data.shape[1] != fin:
            raise ConfigurationError(
                f"dense layer expects {fin} input features, got {h.data.shape[1]}"
            )
        out = h @ params["w"] + params["b"]
    elif spec.kind == "conv2d":
        cin, _, k, s, p = spec.dimensions
        if x.data.ndim != 4 or x.data.shape[3] != cin:
            raise ConfigurationError(
                f"conv2d expects (N,H,W,{cin}) internally, got {x.data.shape}"
            )
        out = conv2d_op(x, params["w"], params["b"], s, p)
    elif spec.kind == "conv_transpose2d":
        cin, _, k, s, p, op = spec.dimensions
        if x.data.ndim != 4 or x.data.shape[3] != cin:
            raise ConfigurationError(
                f"conv_transpose2d expects (N,H,W,{cin}) internally, got {x.data.shape}"
            )
        out = conv_transpose2d_op(x, params["w"], params["b"], s, p, op)
    elif spec.kind == "batch_norm":
        out = batch_norm_op(x, params["bn_gamma"], params["bn_beta"], state, training)
    elif spec.kind == "activation":
        return apply_activation(x, spec.activation, spec.leaky_slope)
    elif spec.kind == "max_pool2d":
        k, s = spec.dimensions
        out = max_pool2d_op(x, k, s)
    elif spec.kind == "reshape":
        if len(spec.dimensions) == 3:
            c, h, w = spec.dimensions
            out = x.reshape((x.data.shape[0], h, w, c))
        else:
            out = x.reshape((x.data.shape[0],) + tuple(spec.dimensions))
    else:
        raise ConfigurationError(f"unknown layer kind {spec.kind!r}")

    if spec.has_batch_norm and spec.kind != "batch_norm":
        out = batch_norm_op(out, params["bn_gamma"], params["bn_beta"], state, training)
    if spec.activation and spec.kind != "activation":
        out = apply_activation(out, spec.activation, spec.leaky_slope)
    return out


def layer_forward(spec: LayerSpec, params: dict, state: dict, x: Tensor,
                  training: bool) -> Tensor:
    """Run one layer on a channels-first batch; checks shape and finiteness.

    Adapts (N,C,H,W) inputs to the channels-last internals and back, so the
    observable contract is entirely channels-first.
    """
    expected = spec.output_shape(x.data.shape[1:])
    from .tensor import permute

    four_d_in = x.data.ndim == 4
    if four_d_in:
        x = permute(x, (0, 2, 3, 1))
    out = layer_forward_internal(spec, params, state, x, training)
    if out.data.ndim == 4:
        out = permute(out, (0, 3, 1, 2))
    if out.data.shape[1:] != tuple(expected):
        raise ConfigurationError(
            f"{spec.kind} produced shape {out.data.shape[1:]}, expected {tuple(expected)}"
        )
    if not np.isfinite(out.data).all():
        raise NumericError(f"non-finite values out of {spec.kind} layer")
    return out
