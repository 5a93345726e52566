"""Event-label assignment for conditional training.

Every scheme produces exhaustive, mutually exclusive classes encoded as
one-hot vectors, and labeling a sample depends only on that sample (plus
fixed boundaries), so labels are invariant under dataset reordering.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DataError
from .dataset import ScenarioDataset

MEAN_BOUNDARIES_MW = (0.5, 1.5, 3.0, 6.0)
RAMP_BOUNDARIES_MW = (4.0, 8.0, 12.0, 16.0)


@dataclass(frozen=True)
class LabelScheme:
    """kind in {mean_value, ramp, forecast_error, month} plus its boundaries."""

    kind: str
    boundaries_mw: tuple = ()
    ramp_window_min: int = 30

    def __post_init__(self):
        if self.kind not in ("mean_value", "ramp", "forecast_error", "month"):
            raise ConfigurationError(f"unknown label scheme {self.kind!r}")


def _one_hot(indices, n_classes):
    out = np.zeros((len(indices), n_classes), dtype=np.float32)
    out[np.arange(len(indices)), indices] = 1.0
    return out


def label_by_mean(dataset: ScenarioDataset, boundaries_mw=MEAN_BOUNDARIES_MW):
    """Classes by per-sample mean power in MW; boundary values go upward.

    The default boundaries (0.5 / 1.5 / 3 / 6 MW) give five classes, the
    last open-ended (mean >= 6).
    """
    boundaries = np.asarray(boundaries_mw, dtype=np.float64)
    if (np.diff(boundaries) <= 0).any():
        raise ConfigurationError("mean boundaries must be strictly increasing")
    means = dataset.values_mw().reshape(len(dataset), -1).mean(axis=1)
    indices = np.searchsorted(boundaries, means, side="right")
    names = [f"mean<{b}MW" for b in boundaries] + [f"mean>={boundaries[-1]}MW"]
    return dataset.with_labels(_one_hot(indices, len(boundaries) + 1), "mean_value", names)


def ramp_statistic(values_mw: np.ndarray, resolution_min: int,
                   window_minutes: int = 30) -> float:
    """Largest absolute power change over any window of the given length."""
    values_mw = np.asarray(values_mw, dtype=np.float64).reshape(-1)
    if window_minutes % resolution_min:
        raise ConfigurationError(
            f"window of {window_minutes} min is not a multiple of the "
            f"{resolution_min}-min resolution"
        )
    w = window_minutes // resolution_min
    if len(values_mw) <= w:
        raise DataError(f"series of {len(values_mw)} steps is shorter than the window")
    return float(np.abs(values_mw[w:] - values_mw[:-w]).max())


def label_by_ramp(dataset: ScenarioDataset, window_minutes: int = 30,
                  boundaries_mw=RAMP_BOUNDARIES_MW):
    """Classes by the per-sample ramp statistic; exact boundary values go to
    the lower class. A ramp above the final boundary (physically impossible
    when it equals the capacity) is a data error."""
    boundaries = np.asarray(boundaries_mw, dtype=np.float64)
    values = dataset.values_mw().reshape(len(dataset), -1)
    ramps = np.array([
        ramp_statistic(v, dataset.meta.resolution_min, window_minutes) for v in values
    ])
    over = ramps > boundaries[-1] * (1 + 1e-9)
    if over.any():
        raise DataError(
            f"sample {int(np.argmax(over))} has ramp {ramps[over][0]:.3f} MW above "
            f"the top boundary {boundaries[-1]} MW"
        )
    indices = np.searchsorted(boundaries, ramps, side="left")
    indices = np.minimum(indices, len(boundaries) - 1)
    names = [f"ramp<={b}MW" for b in boundaries]
    return dataset.with_labels(_one_hot(indices, len(boundaries)), "ramp", names)


def label_by_month(dataset: ScenarioDataset):
    """Twelve classes by the calendar month of each sample's first timestamp.

    A sample spanning a month boundary is labeled by where it starts.
    """
    if not dataset.start_times:
        raise DataError("dataset carries no timestamps; cannot label by month")
    indices = np.array([t.month - 1 for t in dataset.start_times])
    names = ["Jan", "Feb", "Mar", "Apr", "May", "Jun",
             "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]
    return dataset.with_labels(_one_hot(indices, 12), "month", names)


def forecast_total_boundaries(dataset: ScenarioDataset):
    """Quartile boundaries of total forecast power, for the training split."""
    if dataset.forecast_totals is None:
        raise DataError("dataset carries no forecast totals")
    totals = np.asarray(dataset.forecast_totals, dtype=np.float64)
    qs = np.quantile(totals, [0.25, 0.5, 0.75])
    if qs[0] == qs[-1]:
        warnings.warn("degenerate forecast quartiles; all samples will share class 0")
    return tuple(qs)


def label_by_forecast_error(dataset: ScenarioDataset, boundaries=None):
    """Four classes by quartile of each sample's total forecast power.

    ``boundaries`` defaults to quartiles computed on this dataset (use the
    training split's boundaries for held-out data); values below the first
    boundary, including out-of-range held-out samples, clamp to class 0.
    """
    if dataset.forecast_totals is None:
        raise DataError("dataset carries no forecast totals")
    if boundaries is None:
        boundaries = forecast_total_boundaries(dataset)
    bounds = np.asarray(boundaries, dtype=np.float64)
    totals = np.asarray(dataset.forecast_totals, dtype=np.float64)
    indices = np.searchsorted(bounds, totals, side="right")
    names = [f"forecast_q{k + 1}" for k in range(len(bounds) + 1)]
    return dataset.with_labels(_one_hot(indices, len(bounds) + 1),
                               "forecast_error", names)


def apply_scheme(dataset: ScenarioDataset, scheme: LabelScheme):
    if scheme.kind == "mean_value":
        bounds = scheme.boundaries_mw or MEAN_BOUNDARIES_MW
        return label_by_mean(dataset, bounds)
    if scheme.kind == "ramp":
        bounds = scheme.boundaries_mw or RAMP_BOUNDARIES_MW
        return label_by_ramp(dataset, scheme.ramp_window_min, bounds)
    if scheme.kind == "month":
        return label_by_month(dataset)
    return label_by_forecast_error(dataset)
