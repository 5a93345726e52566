"""Generator/critic construction, conditional inputs and sample generation.

Two builders are provided. ``build_conv_architecture`` follows the published
convolutional layout (MLP 2048 / 1024 / reshape to 128 channels, two
stride-2 transposed convolutions for the generator; the mirrored strided
convolutions plus MLP 1024 / 128 for the critic) with every width scalable
by a rational factor. ``build_mlp_architecture`` keeps only the MLP ladder,
for low-dimensional targets where convolutions make no sense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import (
    Parameter,
    Tensor,
    concat,
    conv2d,
    conv_transpose2d,
    dense,
    init_layer_params,
    reshape_to,
)
from ..autodiff.layers import DEFAULT_KERNEL, LayerSpec, layer_forward_internal
from ..autodiff.tensor import permute
from ..errors import ConfigurationError, DataError, NumericError


def _to_channels_last(t: Tensor) -> Tensor:
    n, c, h, w = t.data.shape
    if c == 1:
        return t.reshape((n, h, w, 1))
    return permute(t, (0, 2, 3, 1))


def _to_channels_first(t: Tensor) -> Tensor:
    n, h, w, c = t.data.shape
    if c == 1:
        return t.reshape((n, 1, h, w))
    return permute(t, (0, 3, 1, 2))


class Network:
    """An ordered stack of layers with named parameters and running state.

    Activations run channels-last internally; inputs and outputs are
    channels-first, converted once at each boundary (a free reshape for
    single-channel data). Finiteness is checked once on the output, which a
    non-finite value anywhere upstream necessarily poisons.
    """

    def __init__(self, prefix: str, specs, rng=None, dtype=np.float32):
        self.prefix = prefix
        self.specs = list(specs)
        self.layer_params = []
        self.layer_state = []
        rng = rng if rng is not None else np.random.default_rng(0)
        for i, spec in enumerate(self.specs):
            raw, state = init_layer_params(spec, rng, dtype)
            self.layer_params.append(
                {k: Parameter(f"{prefix}.l{i}.{k}", v) for k, v in raw.items()}
            )
            self.layer_state.append(state)
        self._value_dicts = [
            {k: p.value for k, p in params.items()} for params in self.layer_params
        ]

    def forward(self, x: Tensor, training: bool) -> Tensor:
        if x.data.ndim == 4:
            x = _to_channels_last(x)
        for spec, values, state in zip(self.specs, self._value_dicts, self.layer_state):
            x = layer_forward_internal(spec, values, state, x, training)
        if x.data.ndim == 4:
            x = _to_channels_first(x)
        if not np.isfinite(x.data).all():
            raise NumericError(f"non-finite output from network {self.prefix!r}")
        return x

    def parameters(self):
        for params in self.layer_params:
            yield from params.values()

    def named_arrays(self):
        """(name, array) pairs for every parameter, accumulator and running stat."""
        for i, (params, state) in enumerate(zip(self.layer_params, self.layer_state)):
            for k, p in sorted(params.items()):
                yield f"{self.prefix}.l{i}.{k}", p.value.data
                yield f"{self.prefix}.l{i}.{k}.rms", p.rms
            for k, arr in sorted(state.items()):
                yield f"{self.prefix}.l{i}.{k}", arr

    def load_arrays(self, arrays: dict):
        for i, (params, state) in enumerate(zip(self.layer_params, self.layer_state)):
            for k, p in params.items():
                p.value.data = np.array(arrays[f"{self.prefix}.l{i}.{k}"], copy=True)
                p.rms = np.array(arrays[f"{self.prefix}.l{i}.{k}.rms"], copy=True)
            for k in list(state):
                state[k] = np.array(arrays[f"{self.prefix}.l{i}.{k}"], copy=True)


@dataclass
class GanModel:
    generator: Network
    discriminator: Network
    noise_dim: int
    sample_shape: tuple
    label_dim: int
    critic_output: str
    arch: dict = field(default_factory=dict)
    data_meta: dict = field(default_factory=dict)

    @property
    def conditional(self) -> bool:
        return self.label_dim > 0


def _widths(scale):
    w = lambda base: max(1, math.ceil(base * scale))
    return w(2048), w(1024), w(128), w(64)


def build_conv_architecture(sample_shape, label_dim=0, scale=1.0, noise_dim=100,
                            critic_output="linear", critic_batch_norm=True,
                            kernel=None, seed=0) -> GanModel:
    """The convolutional generator/critic pair with widths scaled by ``scale``.

    Requires both spatial extents divisible by 4 (two stride-2 stages each
    way). All weights start from N(0, 0.02).
    """
    c, h, w = sample_shape
    if h % 4 or w % 4:
        raise ConfigurationError(
            f"sample shape {sample_shape} needs H and W divisible by 4"
        )
    if critic_output not in ("linear", "sigmoid"):
        raise ConfigurationError(f"critic_output must be linear or sigmoid, got {critic_output!r}")
    if kernel is None:
        kernel = DEFAULT_KERNEL
    w2048, w1024, ch128, ch64 = _widths(scale)
    h4, w4 = h // 4, w // 4
    # the size-preserving output stage needs an odd kernel
    k_out = kernel if kernel % 2 else kernel - 1

    g_specs = [
        dense(noise_dim + label_dim, w2048, activation="relu", has_batch_norm=True),
        dense(w2048, w1024, activation="relu", has_batch_norm=True),
        dense(w1024, ch128 * h4 * w4, activation="relu", has_batch_norm=True),
        reshape_to(ch128, h4, w4),
        conv_transpose2d(ch128, ch128, kernel, 2, activation="relu", has_batch_norm=True),
        conv_transpose2d(ch128, ch64, kernel, 2, activation="relu", has_batch_norm=True),
        conv_transpose2d(ch64, c, k_out, 1, activation="sigmoid"),
    ]
    d_act = "" if critic_output == "linear" else "sigmoid"
    d_specs = [
        conv2d(c + label_dim, ch64, kernel, 2, activation="leaky_relu"),
        conv2d(ch64, ch128, kernel, 2, activation="leaky_relu",
               has_batch_norm=critic_batch_norm),
        dense(ch128 * h4 * w4, w1024, activation="leaky_relu", has_batch_norm=critic_batch_norm),
        dense(w1024, ch128, activation="leaky_relu", has_batch_norm=critic_batch_norm),
        dense(ch128, 1, activation=d_act),
    ]
    rng = np.random.default_rng(seed)
    return GanModel(
        generator=Network("g", g_specs, rng),
        discriminator=Network("d", d_specs, rng),
        noise_dim=noise_dim,
        sample_shape=tuple(sample_shape),
        label_dim=label_dim,
        critic_output=critic_output,
        arch={"family": "conv", "scale": scale, "kernel": kernel,
              "critic_batch_norm": critic_batch_norm, "seed": seed},
    )


def build_mlp_architecture(sample_shape, label_dim=0, scale=1.0, noise_dim=100,
                           critic_output="linear", generator_output="linear",
                           critic_batch_norm=False, seed=0) -> GanModel:
    """MLP-only generator/critic pair for low-dimensional targets."""
    if critic_output not in ("linear", "sigmoid"):
        raise ConfigurationError(f"critic_output must be linear or sigmoid, got {critic_output!r}")
    if generator_output not in ("linear", "sigmoid"):
        raise ConfigurationError("generator_output must be linear or sigmoid")
    w2048, w1024, w128, _ = _widths(scale)
    out_dim = int(np.prod(sample_shape))
    c = sample_shape[0] if len(sample_shape) == 3 else 1

    g_out_act = "" if generator_output == "linear" else "sigmoid"
    g_specs = [
        dense(noise_dim + label_dim, w2048, activation="relu", has_batch_norm=True),
        dense(w2048, w1024, activation="relu", has_batch_norm=True),
        dense(w1024, w128, activation="relu", has_batch_norm=True),
        dense(w128, out_dim, activation=g_out_act),
        reshape_to(*sample_shape),
    ]
    d_in = int(np.prod(sample_shape)) + label_dim * int(np.prod(sample_shape[1:]) if len(sample_shape) == 3 else 1)
    d_act = "" if critic_output == "linear" else "sigmoid"
    d_specs = [
        dense(d_in, w1024, activation="leaky_relu"),
        dense(w1024, w128, activation="leaky_relu", has_batch_norm=critic_batch_norm),
        dense(w128, 1, activation=d_act),
    ]
    rng = np.random.default_rng(seed)
    return GanModel(
        generator=Network("g", g_specs, rng),
        discriminator=Network("d", d_specs, rng),
        noise_dim=noise_dim,
        sample_shape=tuple(sample_shape),
        label_dim=label_dim,
        critic_output=critic_output,
        arch={"family": "mlp", "scale": scale, "generator_output": generator_output,
              "critic_batch_norm": critic_batch_norm, "seed": seed},
    )


# -- conditioning ----------------------------------------------------------


def _validate_one_hot(y: np.ndarray, label_dim: int):
    if y.ndim != 2 or y.shape[1] != label_dim:
        raise DataError(f"labels must be (batch, {label_dim}), got {y.shape}")
    if not (np.isin(y, (0.0, 1.0)).all() and (y.sum(axis=1) == 1.0).all()):
        raise DataError("labels must be one-hot vectors")


def condition_inputs(x_or_z: Tensor, y) -> Tensor:
    """Attach one-hot labels to a network input.

    Noise vectors (2-D input) get the label concatenated; samples (4-D
    input) get one constant-valued channel per label entry. ``y`` of None
    or width 0 leaves the input untouched.
    """
    if y is None:
        return x_or_z
    yarr = y.data if isinstance(y, Tensor) else np.asarray(y, dtype=x_or_z.data.dtype)
    if yarr.size == 0:
        return x_or_z
    _validate_one_hot(yarr, yarr.shape[-1])
    if yarr.shape[0] != x_or_z.data.shape[0]:
        raise DataError("label batch does not match input batch")
    yt = y if isinstance(y, Tensor) else Tensor(yarr.astype(x_or_z.data.dtype, copy=False))
    if x_or_z.data.ndim == 2:
        return concat([x_or_z, yt], axis=1)
    if x_or_z.data.ndim == 4:
        n, _, h, w = x_or_z.data.shape
        channels = np.broadcast_to(
            yarr.astype(x_or_z.data.dtype)[:, :, None, None], (n, yarr.shape[1], h, w)
        ).copy()
        return concat([x_or_z, Tensor(channels)], axis=1)
    raise ConfigurationError("condition_inputs expects 2-D noise or 4-D samples")


def labels_from_classes(classes, label_dim: int, dtype=np.float32) -> np.ndarray:
    classes = np.asarray(classes, dtype=int)
    if classes.ndim == 0:
        classes = classes[None]
    if (classes < 0).any() or (classes >= label_dim).any():
        raise DataError(f"class index out of range for label_dim={label_dim}")
    out = np.zeros((classes.size, label_dim), dtype=dtype)
    out[np.arange(classes.size), classes] = 1.0
    return out


# -- sampling --------------------------------------------------------------


def generate(model: GanModel, count: int, y=None, seed: int = 0,
             batch_size: int = 256):
    """Draw ``count`` samples from the trained generator (inference-mode stats).

    ``y`` may be None, a class index applied to every sample, a single
    one-hot vector, or a (count, label_dim) one-hot array. Returns
    (samples, labels) as numpy arrays; labels is None for unconditional
    models.
    """
    if count < 0:
        raise ConfigurationError("count must be >= 0")
    labels = _resolve_labels(model, count, y)
    shape = (count,) + tuple(model.sample_shape)
    if count == 0:
        return np.zeros(shape, np.float32), labels
    from ..autodiff._conv_kernels import single_thread_blas
    from ..autodiff.tensor import no_grad

    rng = np.random.default_rng(seed)
    chunks = []
    done = 0
    with single_thread_blas(), no_grad():
        while done < count:
            b = min(batch_size, count - done)
            z = Tensor(rng.standard_normal((b, model.noise_dim)).astype(np.float32))
            yb = Tensor(labels[done:done + b]) if labels is not None else None
            out = model.generator.forward(condition_inputs(z, yb), training=False)
            chunks.append(out.data)
            done += b
    return np.concatenate(chunks, axis=0).reshape(shape), labels


def _resolve_labels(model: GanModel, count: int, y):
    if model.label_dim == 0:
        if y is not None:
            raise DataError("model is unconditional; no label may be supplied")
        return None
    if y is None:
        raise DataError("conditional model requires a label for generation")
    if np.isscalar(y):
        return np.repeat(labels_from_classes([int(y)], model.label_dim), count, axis=0)
    yarr = np.asarray(y, dtype=np.float32)
    if yarr.ndim == 1:
        _validate_one_hot(yarr[None, :], model.label_dim)
        return np.repeat(yarr[None, :], count, axis=0)
    _validate_one_hot(yarr, model.label_dim)
    if yarr.shape[0] != count:
        raise DataError(f"need {count} labels, got {yarr.shape[0]}")
    return yarr
