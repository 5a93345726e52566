"""Training-set perturbations: measurement noise and bad-data injection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DataError
from .dataset import ScenarioDataset


@dataclass
class NoiseReport:
    sigma: float
    added_noise_std: float      # empirical, before clamping
    noise_to_signal: float      # rms ratio against the clean data


def inject_noise(dataset: ScenarioDataset, sigma: float, seed: int):
    """Add i.i.d. Gaussian noise to normalized samples, clamped back to [0, 1].

    Returns (noisy dataset, NoiseReport). The noise-to-signal ratio is the
    rms ratio sigma_noise / sigma_signal of the clean values.
    """
    if sigma < 0:
        raise ConfigurationError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return dataset, NoiseReport(0.0, 0.0, 0.0)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, dataset.samples.shape).astype(np.float32)
    noisy = np.clip(dataset.samples + noise, 0.0, 1.0)
    signal_std = float(dataset.samples.std())
    report = NoiseReport(
        sigma=sigma,
        added_noise_std=float(noise.std()),
        noise_to_signal=float(noise.std() / signal_std) if signal_std > 0 else np.inf,
    )
    out = ScenarioDataset(noisy, dataset.meta, dataset.labels, dataset.start_times,
                          dataset.site_ids_per_sample, dataset.forecast_totals)
    return out, report


def inject_bad_data(solar: ScenarioDataset, wind: ScenarioDataset, rate: float,
                    seed: int) -> ScenarioDataset:
    """Replace floor(rate * n) randomly chosen solar samples with wind samples."""
    if not 0 <= rate <= 1:
        raise ConfigurationError(f"contamination rate must be in [0,1], got {rate}")
    if solar.sample_shape != wind.sample_shape:
        raise DataError(
            f"sample shapes differ: solar {solar.sample_shape} vs wind {wind.sample_shape}"
        )
    n_replace = int(rate * len(solar))
    if n_replace == 0:
        return solar
    rng = np.random.default_rng(seed)
    targets = rng.choice(len(solar), size=n_replace, replace=False)
    sources = rng.choice(len(wind), size=n_replace, replace=n_replace > len(wind))
    contaminated = solar.samples.copy()
    contaminated[targets] = wind.samples[sources]
    return ScenarioDataset(contaminated, solar.meta, solar.labels, solar.start_times,
                           solar.site_ids_per_sample, solar.forecast_totals)
