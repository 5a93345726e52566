"""Daily-sample datasets: shaping normalized series into training tensors.

Two shaping modes exist. ``single_site_grid`` cuts one site's consecutive
readings into H x W grids row-major (default 24x24, i.e. 576 consecutive
5-minute readings spanning 48 hours); samples from several sites pool into
one dataset. ``multi_site_day`` stacks N sites by T steps per day into one
N x T matrix per day.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import timedelta

import numpy as np

from ..errors import ConfigurationError, DataError
from .series import NormalizedSeries

MODES = ("single_site_grid", "multi_site_day")


@dataclass
class DatasetMeta:
    resolution_min: int
    capacity_mw: float
    site_count: int = 1
    mode: str = "single_site_grid"
    label_kind: str = ""
    class_names: tuple = ()
    site_ids: tuple = ()

    def as_dict(self):
        return {
            "resolution_min": self.resolution_min,
            "capacity_mw": self.capacity_mw,
            "site_count": self.site_count,
            "mode": self.mode,
            "label_kind": self.label_kind,
            "class_names": list(self.class_names),
            "site_ids": list(self.site_ids),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            resolution_min=int(d["resolution_min"]),
            capacity_mw=float(d["capacity_mw"]),
            site_count=int(d.get("site_count", 1)),
            mode=d.get("mode", "single_site_grid"),
            label_kind=d.get("label_kind", ""),
            class_names=tuple(d.get("class_names", ())),
            site_ids=tuple(d.get("site_ids", ())),
        )


@dataclass
class ScenarioDataset:
    """Normalized samples (n, C, H, W) with optional one-hot labels."""

    samples: np.ndarray
    meta: DatasetMeta
    labels: np.ndarray | None = None
    start_times: list = field(default_factory=list)
    site_ids_per_sample: list = field(default_factory=list)
    forecast_totals: np.ndarray | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 4:
            raise DataError(f"samples must be 4-D (n,C,H,W), got {self.samples.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.float32)
            if self.labels.ndim != 2 or self.labels.shape[0] != len(self):
                raise DataError("labels must be one one-hot row per sample")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def sample_shape(self):
        return tuple(self.samples.shape[1:])

    @property
    def label_dim(self):
        return 0 if self.labels is None else self.labels.shape[1]

    def class_indices(self):
        if self.labels is None:
            raise DataError("dataset has no labels")
        return self.labels.argmax(axis=1)

    def values_mw(self):
        return self.samples * np.float32(self.meta.capacity_mw)

    def subset(self, idx):
        idx = np.asarray(idx)
        return ScenarioDataset(
            samples=self.samples[idx],
            meta=self.meta,
            labels=None if self.labels is None else self.labels[idx],
            start_times=[self.start_times[i] for i in idx] if self.start_times else [],
            site_ids_per_sample=[self.site_ids_per_sample[i] for i in idx]
            if self.site_ids_per_sample else [],
            forecast_totals=None if self.forecast_totals is None
            else self.forecast_totals[idx],
        )

    def with_labels(self, labels, label_kind, class_names):
        meta = replace(self.meta, label_kind=label_kind, class_names=tuple(class_names))
        return ScenarioDataset(self.samples, meta, labels, self.start_times,
                               self.site_ids_per_sample, self.forecast_totals)


def shape_samples(series_list, mode="single_site_grid", grid_hw=(24, 24)) -> ScenarioDataset:
    """Shape normalized series into a dataset of (1, H, W) samples.

    single_site_grid: each series is cut into consecutive H*W-reading
    windows (row-major grids), pooled over series, chronological order per
    site. multi_site_day: all series stack into (1, n_sites, steps_per_day)
    day matrices; lengths and time bases must agree.
    """
    if mode not in MODES:
        raise ConfigurationError(f"unknown shaping mode {mode!r}")
    series_list = list(series_list)
    if not series_list:
        raise DataError("no series to shape")
    for s in series_list:
        if not isinstance(s, NormalizedSeries):
            raise DataError("shape_samples expects normalized series")
    first = series_list[0]

    if mode == "single_site_grid":
        h, w = grid_hw
        span = h * w
        samples, starts, sites = [], [], []
        for s in series_list:
            n_windows = len(s) // span
            if n_windows == 0 or len(s) % span:
                raise DataError(
                    f"series {s.site_id!r} length {len(s)} is not a multiple of {span}"
                )
            step = timedelta(minutes=s.resolution_min)
            for i in range(n_windows):
                window = s.values[i * span:(i + 1) * span]
                samples.append(window.reshape(1, h, w))
                starts.append(s.start + i * span * step)
                sites.append(s.site_id)
        meta = DatasetMeta(first.resolution_min, first.capacity_mw,
                           site_count=1, mode=mode,
                           site_ids=tuple(dict.fromkeys(sites)))
        return ScenarioDataset(np.stack(samples).astype(np.float32), meta,
                               start_times=starts, site_ids_per_sample=sites)

    steps_per_day = (24 * 60) // first.resolution_min
    n_sites = len(series_list)
    for s in series_list:
        if len(s) != len(first) or s.resolution_min != first.resolution_min \
                or s.start != first.start:
            raise DataError("multi_site_day requires aligned series of equal length")
    n_days = len(first) // steps_per_day
    if n_days == 0 or len(first) % steps_per_day:
        raise DataError(f"series length {len(first)} is not a whole number of days")
    stacked = np.stack([s.values for s in series_list])  # (sites, time)
    samples = []
    starts = []
    for d in range(n_days):
        samples.append(stacked[:, d * steps_per_day:(d + 1) * steps_per_day][None, :, :])
        starts.append(first.start + timedelta(days=d))
    meta = DatasetMeta(first.resolution_min, first.capacity_mw,
                       site_count=n_sites, mode=mode,
                       site_ids=tuple(s.site_id for s in series_list))
    return ScenarioDataset(np.stack(samples).astype(np.float32), meta,
                           start_times=starts,
                           site_ids_per_sample=[list(meta.site_ids)] * n_days)


def flatten_samples(dataset: ScenarioDataset, site_id=None) -> np.ndarray:
    """Undo single_site_grid shaping: samples back to one series, input order."""
    if dataset.meta.mode != "single_site_grid":
        raise ConfigurationError("flatten_samples applies to single_site_grid datasets")
    keep = range(len(dataset)) if site_id is None else [
        i for i, s in enumerate(dataset.site_ids_per_sample) if s == site_id
    ]
    return np.concatenate([dataset.samples[i].reshape(-1) for i in keep])


def split(dataset: ScenarioDataset, fraction: float, seed: int, stratified=True):
    """Seeded shuffle split into (train, validation).

    The train side rounds up. With labels present the split is stratified
    per class (proportions within one sample); classes too small to split
    fall back to one unstratified shuffle with a warning.
    """
    import math
    import warnings

    if not 0 < fraction < 1:
        raise ConfigurationError(f"fraction must be in (0,1), got {fraction}")
    n = len(dataset)
    rng = np.random.default_rng(seed)

    if stratified and dataset.labels is not None:
        classes = dataset.class_indices()
        counts = np.bincount(classes, minlength=dataset.label_dim)
        if (counts[counts > 0] < 2).any():
            warnings.warn("a class has fewer than 2 samples; splitting unstratified")
        else:
            train_idx, val_idx = [], []
            for k in range(dataset.label_dim):
                members = np.flatnonzero(classes == k)
                if members.size == 0:
                    continue
                perm = members[rng.permutation(members.size)]
                cut = math.ceil(fraction * members.size)
                train_idx.extend(perm[:cut])
                val_idx.extend(perm[cut:])
            return dataset.subset(np.sort(train_idx)), dataset.subset(np.sort(val_idx))

    perm = rng.permutation(n)
    cut = math.ceil(fraction * n)
    return dataset.subset(np.sort(perm[:cut])), dataset.subset(np.sort(perm[cut:]))
