"""The alternating critic/generator training loop.

Per outer iteration: ``n_discri`` critic updates (sample a real batch and a
noise batch, descend the critic loss, clip weights into [-c, c]), then one
generator update descending -mean(D(G(z))). Both networks use RMSProp. The
whole run is a deterministic function of (seed, config, data).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import Tensor, clear_grads, clip_weights, max_abs_weight, rmsprop_step
from ..autodiff._conv_kernels import single_thread_blas
from ..autodiff.tensor import no_grad
from ..errors import ConfigurationError, DataError, NumericError
from .losses import discriminator_loss, generator_loss
from .model import GanModel, condition_inputs


@dataclass
class TrainConfig:
    alpha: float = 5e-5
    clip: float = 0.01
    batch_size: int = 32
    n_discri: int = 4
    total_iterations: int = 1000
    seed: int = 0
    eval_every: int = 100
    rho: float = 0.9
    eps: float = 1e-8

    def validate(self):
        if not self.alpha > 0:
            raise ConfigurationError("learning rate alpha must be positive")
        if not self.clip > 0:
            raise ConfigurationError("clip bound must be positive")
        if self.batch_size < 2:
            raise ConfigurationError("batch size must be at least 2")
        if self.n_discri < 1:
            raise ConfigurationError("n_discri must be at least 1")
        if self.total_iterations < 1 or self.eval_every < 1:
            raise ConfigurationError("iteration counts must be positive")


@dataclass
class TraceRow:
    iteration: int
    d_real: float
    d_fake: float
    w_estimate: float
    loss_g: float
    loss_d: float


@dataclass
class TrainTrace:
    rows: list = field(default_factory=list)
    n_discriminator_updates: int = 0
    n_generator_updates: int = 0

    COLUMNS = ("iter", "d_real", "d_fake", "w_est", "l_g", "l_d")

    def append(self, row: TraceRow):
        self.rows.append(row)

    def as_table(self):
        return [
            (r.iteration, r.d_real, r.d_fake, r.w_estimate, r.loss_g, r.loss_d)
            for r in self.rows
        ]


def _sample_batch(rng, n, m):
    return rng.choice(n, size=m, replace=False)


def train(model: GanModel, dataset, cfg: TrainConfig, on_eval=None,
          start_iteration: int = 0):
    """Run the alternating loop; returns (model, trace).

    ``on_eval(iteration, model, trace)`` fires at every logged iteration
    (checkpointing hook). A non-finite loss aborts with a NumericError
    carrying the partial trace.
    """
    cfg.validate()
    samples = np.asarray(dataset.samples, dtype=np.float32)
    n = samples.shape[0]
    if n < cfg.batch_size:
        raise DataError(f"dataset of {n} samples is smaller than batch size {cfg.batch_size}")
    if tuple(samples.shape[1:]) != tuple(model.sample_shape):
        raise ConfigurationError(
            f"dataset sample shape {samples.shape[1:]} does not match model {model.sample_shape}"
        )
    labels = getattr(dataset, "labels", None)
    if model.conditional:
        if labels is None:
            raise DataError("conditional model needs a labeled dataset")
        labels = np.asarray(labels, dtype=np.float32)
        if labels.shape != (n, model.label_dim):
            raise DataError(
                f"labels of shape {labels.shape} do not match label_dim {model.label_dim}"
            )
    else:
        labels = None

    meta = getattr(dataset, "meta", None)
    if meta is not None:
        model.data_meta = dict(model.data_meta)
        model.data_meta.update(meta.as_dict() if hasattr(meta, "as_dict") else dict(meta))

    # A resumed run derives a fresh deterministic stream from (seed, start).
    rng = np.random.default_rng(cfg.seed if start_iteration == 0
                                else [cfg.seed, start_iteration])

    trace = TrainTrace()
    g_params = list(model.generator.parameters())
    d_params = list(model.discriminator.parameters())

    with single_thread_blas():
        _run_loop(model, cfg, samples, labels, rng, trace, g_params, d_params,
                  start_iteration, on_eval)
    return model, trace


def _run_loop(model, cfg, samples, labels, rng, trace, g_params, d_params,
              start_iteration, on_eval):
    n = samples.shape[0]
    for it in range(start_iteration + 1, cfg.total_iterations + 1):
        try:
            d_real_m = d_fake_m = loss_d_val = 0.0
            for _ in range(cfg.n_discri):
                idx = _sample_batch(rng, n, cfg.batch_size)
                x = Tensor(samples[idx])
                yb = Tensor(labels[idx]) if labels is not None else None
                z = Tensor(rng.standard_normal((cfg.batch_size, model.noise_dim),
                                               dtype=np.float32))
                with no_grad():  # critic step: generator weights are frozen
                    fake = model.generator.forward(condition_inputs(z, yb), training=True)
                d_real = model.discriminator.forward(condition_inputs(x, yb), training=True)
                d_fake = model.discriminator.forward(condition_inputs(fake, yb), training=True)
                loss_d = discriminator_loss(d_real, d_fake)
                loss_d_val = float(loss_d.data)
                _abort_if_nan(loss_d_val, "critic loss", it, trace)
                loss_d.backward()
                rmsprop_step(d_params, cfg.alpha, cfg.rho, cfg.eps)
                clip_weights(d_params, cfg.clip)
                trace.n_discriminator_updates += 1
                d_real_m = float(d_real.data.mean())
                d_fake_m = float(d_fake.data.mean())
                w_est = -loss_d_val  # negation is exact: the dual estimate

            idx = _sample_batch(rng, n, cfg.batch_size)
            yb = Tensor(labels[idx]) if labels is not None else None
            z = Tensor(rng.standard_normal((cfg.batch_size, model.noise_dim),
                                           dtype=np.float32))
            gen_out = model.generator.forward(condition_inputs(z, yb), training=True)
            d_gen = model.discriminator.forward(condition_inputs(gen_out, yb), training=True)
            loss_g = generator_loss(d_gen)
            loss_g_val = float(loss_g.data)
            _abort_if_nan(loss_g_val, "generator loss", it, trace)
            loss_g.backward()
            rmsprop_step(g_params, cfg.alpha, cfg.rho, cfg.eps)
            clear_grads(d_params)  # chain rule deposited critic grads; drop them
            trace.n_generator_updates += 1
        except NumericError as err:
            if err.trace is None:
                err.trace = trace
            raise

        if it % cfg.eval_every == 0 or it == cfg.total_iterations:
            max_w = max_abs_weight(d_params)
            if max_w > cfg.clip * (1 + 1e-6):
                raise NumericError(
                    f"critic weights escaped the clip bound: {max_w} > {cfg.clip}", trace
                )
            trace.append(TraceRow(it, d_real_m, d_fake_m, w_est, loss_g_val, loss_d_val))
            if on_eval is not None:
                on_eval(it, model, trace)


def _abort_if_nan(value, what, iteration, trace):
    if not math.isfinite(value):
        raise NumericError(f"non-finite {what} at iteration {iteration}", trace)
