"""Critic-difference losses for minimax training.

The critic score difference mean(D(x)) - mean(D(G(z))) is the empirical
transport-distance estimate the training loop drives toward zero; the two
losses below are its two players' objectives.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import Tensor, mean_all, scale
from ..errors import DataError


def _require_batch(t: Tensor, what: str):
    if t.data.size == 0:
        raise DataError(f"empty batch passed to {what}")


def generator_loss(d_out_fake: Tensor) -> Tensor:
    """-mean of the critic's scores on generated samples."""
    _require_batch(d_out_fake, "generator_loss")
    return scale(mean_all(d_out_fake), -1.0)


def discriminator_loss(d_out_real: Tensor, d_out_fake: Tensor) -> Tensor:
    """-mean(D(real)) + mean(D(fake)); small when the critic separates well."""
    _require_batch(d_out_real, "discriminator_loss")
    _require_batch(d_out_fake, "discriminator_loss")
    return scale(mean_all(d_out_real), -1.0) + mean_all(d_out_fake)


def wasserstein_estimate(d_out_real, d_out_fake) -> float:
    """mean(D(real)) - mean(D(fake)), computed as the exact negation of the loss.

    Sharing the loss expression keeps the identity estimate == -loss
    bitwise, not merely approximate.
    """
    real = d_out_real if isinstance(d_out_real, Tensor) else Tensor(np.asarray(d_out_real))
    fake = d_out_fake if isinstance(d_out_fake, Tensor) else Tensor(np.asarray(d_out_fake))
    return -float(discriminator_loss(real, fake).data)
