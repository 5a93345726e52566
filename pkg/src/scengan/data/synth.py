"""Synthetic ground-truth generators standing in for real archive data.

Three kinds:

  diurnal_solar -- clipped half-sine day profiles with a random daily
                   amplitude and small daylight noise; exactly zero at
                   night, so the midnight diagnostic of clean data is 0.
  ar1_wind      -- logistic-squashed stationary AR(1); the latent process
                   has a known lag-k autocorrelation of phi**k.
  multi_site    -- N sites with AR(1) dynamics driven by cross-correlated
                   innovations, so the latent cross-site correlation matrix
                   equals the requested target at every time step.

Each generator returns (series list, descriptor). The descriptor records
the analytic targets a test can check an estimate against.
"""

from __future__ import annotations

from datetime import datetime

import numpy as np

from ..errors import ConfigurationError
from .series import RawSeries

SYNTH_KINDS = ("diurnal_solar", "ar1_wind", "multi_site")

DEFAULT_CAPACITY_MW = 16.0
DEFAULT_START = datetime(2001, 1, 1)


def _logistic(x):
    from scipy.special import expit

    return expit(x)


def ar1_latent(n_steps: int, phi: float, rng: np.random.Generator) -> np.ndarray:
    """Stationary unit-variance AR(1): s_t = phi s_{t-1} + sqrt(1-phi^2) eps_t."""
    if not -1 < phi < 1:
        raise ConfigurationError(f"AR(1) coefficient must be in (-1,1), got {phi}")
    eps = rng.standard_normal(n_steps)
    s = np.empty(n_steps)
    s[0] = eps[0]
    c = np.sqrt(1.0 - phi * phi)
    for t in range(1, n_steps):
        s[t] = phi * s[t - 1] + c * eps[t]
    return s


def synth_dataset(kind: str, days: int, seed: int, capacity_mw=DEFAULT_CAPACITY_MW,
                  resolution_min=None, phi=0.9, sites=8, corr=None,
                  squash_scale=1.0, start=DEFAULT_START):
    """Generate a synthetic dataset; returns (list of RawSeries, descriptor)."""
    if kind not in SYNTH_KINDS:
        raise ConfigurationError(f"unknown synthetic kind {kind!r}")
    if days < 1:
        raise ConfigurationError("need at least one day")
    rng = np.random.default_rng(seed)

    if kind == "diurnal_solar":
        resolution_min = resolution_min or 5
        series = _diurnal_solar(days, resolution_min, capacity_mw, rng, start)
        descriptor = {
            "kind": kind, "days": days, "seed": seed, "capacity_mw": capacity_mw,
            "resolution_min": resolution_min,
            "daylight_hours": [6, 18],
            "night_max_normalized": 0.02,
        }
        return [series], descriptor

    if kind == "ar1_wind":
        resolution_min = resolution_min or 5
        steps = days * (24 * 60) // resolution_min
        latent = ar1_latent(steps, phi, rng)
        values = _logistic(squash_scale * latent) * capacity_mw
        series = RawSeries("wind0", start, resolution_min, values, capacity_mw)
        descriptor = {
            "kind": kind, "days": days, "seed": seed, "capacity_mw": capacity_mw,
            "resolution_min": resolution_min, "phi": phi,
            "squash_scale": squash_scale,
            "latent_acf": [phi ** k for k in range(25)],
        }
        return [series], descriptor

    resolution_min = resolution_min or 60
    corr = np.asarray(corr, dtype=np.float64) if corr is not None \
        else exponential_corr(sites, 0.85)
    if corr.shape != (sites, sites):
        raise ConfigurationError(f"correlation matrix must be {sites}x{sites}")
    try:
        chol = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError as err:
        raise ConfigurationError("target correlation matrix is not positive definite") from err
    steps = days * (24 * 60) // resolution_min
    eps = rng.standard_normal((steps, sites)) @ chol.T
    s = np.empty((steps, sites))
    s[0] = eps[0]
    c = np.sqrt(1.0 - phi * phi)
    for t in range(1, steps):
        s[t] = phi * s[t - 1] + c * eps[t]
    values = _logistic(squash_scale * s) * capacity_mw
    series = [
        RawSeries(f"site{j}", start, resolution_min, values[:, j], capacity_mw)
        for j in range(sites)
    ]
    descriptor = {
        "kind": kind, "days": days, "seed": seed, "capacity_mw": capacity_mw,
        "resolution_min": resolution_min, "phi": phi, "sites": sites,
        "squash_scale": squash_scale,
        "target_corr": corr.tolist(),
    }
    return series, descriptor


def exponential_corr(n: int, rho: float) -> np.ndarray:
    """Distance-decay correlation rho**|i-j|; always positive definite."""
    idx = np.arange(n)
    return rho ** np.abs(idx[:, None] - idx[None, :]).astype(np.float64)


def _diurnal_solar(days, resolution_min, capacity_mw, rng, start):
    steps_per_day = (24 * 60) // resolution_min
    t_hours = np.arange(steps_per_day) * resolution_min / 60.0
    daylight = (t_hours >= 6.0) & (t_hours < 18.0)
    phase = np.zeros(steps_per_day)
    phase[daylight] = np.sin(np.pi * (t_hours[daylight] - 6.0) / 12.0)
    out = np.zeros(days * steps_per_day)
    for d in range(days):
        amplitude = rng.uniform(0.5, 1.0)
        day = amplitude * phase.copy()
        noise = rng.normal(0.0, 0.01, steps_per_day)
        day[daylight] = np.clip(day[daylight] + noise[daylight], 0.0, 1.0)
        out[d * steps_per_day:(d + 1) * steps_per_day] = day
    return RawSeries("solar0", start, resolution_min, out * capacity_mw, capacity_mw)
