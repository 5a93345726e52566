"""Gaussian-copula baseline: empirical marginals coupled by a normal
correlation structure estimated from rank statistics.

Fit: per dimension, the rank transform u = rank / (n + 1) maps observations
to (0, 1); inverse-normal scores of those ranks give a latent Gaussian
sample whose correlation matrix is the copula parameter (repaired to the
nearest samplable correlation matrix if estimation noise makes it
indefinite).

Sample: draw latent g ~ N(0, Sigma), map coordinates through the standard
normal CDF and invert each empirical marginal by linear interpolation
between order statistics, clamped at the observed extremes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import rankdata

from .errors import ConfigurationError, DataError, FormatError


@dataclass
class CopulaModel:
    sigma: np.ndarray            # (d, d) latent correlation
    marginals: list              # per-dimension sorted training values
    degenerate: np.ndarray       # per-dimension constant-marginal flags

    @property
    def d(self):
        return self.sigma.shape[0]


def fit(samples) -> CopulaModel:
    """Estimate a Gaussian copula from (n, d) observations.

    Needs n >= 2. A constant dimension is flagged degenerate: it
    contributes no dependence and is reproduced as the constant.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise DataError(f"samples must be (n, d), got shape {x.shape}")
    n, d = x.shape
    if n < 2:
        raise DataError(f"need at least 2 samples to fit, got {n}")

    scores = np.empty_like(x)
    degenerate = np.zeros(d, dtype=bool)
    for j in range(d):
        col = x[:, j]
        if np.all(col == col[0]):
            degenerate[j] = True
            scores[:, j] = 0.0
            continue
        u = rankdata(col, method="average") / (n + 1)
        scores[:, j] = ndtri(u)

    sigma = np.corrcoef(scores.T) if d > 1 else np.ones((1, 1))
    sigma = np.atleast_2d(sigma)
    for j in np.flatnonzero(degenerate):
        sigma[j, :] = 0.0
        sigma[:, j] = 0.0
        sigma[j, j] = 1.0
    sigma = _nearest_correlation(sigma)
    marginals = [np.sort(x[:, j]) for j in range(d)]
    return CopulaModel(sigma=sigma, marginals=marginals, degenerate=degenerate)


def _nearest_correlation(sigma, floor=1e-8):
    """Clip eigenvalues at the floor and re-unitize the diagonal."""
    sigma = (sigma + sigma.T) / 2.0
    vals, vecs = np.linalg.eigh(sigma)
    if vals.min() >= floor:
        return sigma
    vals = np.maximum(vals, floor)
    fixed = (vecs * vals) @ vecs.T
    scale = np.sqrt(np.diag(fixed))
    fixed = fixed / np.outer(scale, scale)
    np.fill_diagonal(fixed, 1.0)
    return fixed


def sample(model: CopulaModel, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` scenarios; deterministic per seed. count <= 0 is empty."""
    if count <= 0:
        return np.zeros((0, model.d))
    rng = np.random.default_rng(seed)
    try:
        chol = np.linalg.cholesky(model.sigma)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(model.sigma)
        chol = vecs * np.sqrt(np.maximum(vals, 0.0))
    g = rng.standard_normal((count, model.d)) @ chol.T
    u = ndtr(g)
    out = np.empty((count, model.d))
    for j in range(model.d):
        sorted_vals = model.marginals[j]
        if model.degenerate[j]:
            out[:, j] = sorted_vals[0]
            continue
        n = sorted_vals.size
        positions = np.arange(1, n + 1) / (n + 1)
        out[:, j] = np.interp(u[:, j], positions, sorted_vals,
                              left=sorted_vals[0], right=sorted_vals[-1])
    return out


# -- persistence (shared checkpoint container) --------------------------------


def save_copula(model: CopulaModel, path):
    from .gan.checkpoint import write_container
    import json

    meta = json.dumps({"d": model.d}, sort_keys=True)
    arrays = [("sigma", model.sigma.astype(np.float64)),
              ("degenerate", model.degenerate.astype(np.float64))]
    arrays += [(f"marginal.{j}", m.astype(np.float64))
               for j, m in enumerate(model.marginals)]
    write_container(path, "copula", [meta], arrays)


def load_copula(path) -> CopulaModel:
    from .gan.checkpoint import read_container
    import json

    block, records, arrays = read_container(path)
    if block != "copula":
        raise FormatError(f"expected a copula checkpoint, found {block!r}")
    try:
        d = int(json.loads(records[0])["d"])
        sigma = np.array(arrays["sigma"], dtype=np.float64)
        degenerate = np.array(arrays["degenerate"], dtype=np.float64).astype(bool)
        marginals = [np.array(arrays[f"marginal.{j}"], dtype=np.float64)
                     for j in range(d)]
    except (KeyError, IndexError, ValueError) as err:
        raise FormatError(f"malformed copula checkpoint: {err}") from err
    return CopulaModel(sigma=sigma, marginals=marginals, degenerate=degenerate)
