"""Power time-series ingestion: CSV loading, normalization, CSV writing.

Input CSV layout: a ``timestamp`` header column (ISO-8601) followed by one
column per site, values in MW. Forecast files mirror the layout with
``_forecast`` suffixed columns. Scenario output files carry a leading
``sample_id`` column and a provenance comment header.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, DataError


@dataclass
class RawSeries:
    """One site's uniformly sampled power series in MW."""

    site_id: str
    start: datetime
    resolution_min: int
    values: np.ndarray
    capacity_mw: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.capacity_mw <= 0:
            raise ConfigurationError(f"capacity must be positive, got {self.capacity_mw}")
        if (self.values < 0).any():
            raise DataError(f"negative power values in series {self.site_id!r}")
        if (self.values > self.capacity_mw * (1 + 1e-6)).any():
            raise DataError(
                f"series {self.site_id!r} exceeds its capacity of {self.capacity_mw} MW"
            )

    def __len__(self):
        return len(self.values)

    def timestamps(self):
        step = timedelta(minutes=self.resolution_min)
        return [self.start + i * step for i in range(len(self.values))]


@dataclass
class NormalizedSeries:
    """A RawSeries scaled into [0, 1] by its capacity."""

    site_id: str
    start: datetime
    resolution_min: int
    values: np.ndarray
    capacity_mw: float

    def denormalize(self) -> RawSeries:
        return RawSeries(self.site_id, self.start, self.resolution_min,
                         self.values * self.capacity_mw, self.capacity_mw)

    def __len__(self):
        return len(self.values)


def normalize(series: RawSeries) -> NormalizedSeries:
    """Scale values by capacity into [0, 1]; keeps capacity for the inverse."""
    vals = np.clip(series.values / series.capacity_mw, 0.0, 1.0)
    return NormalizedSeries(series.site_id, series.start, series.resolution_min,
                            vals, series.capacity_mw)


@dataclass
class CsvSchema:
    """How to interpret a power CSV."""

    capacity_mw: float = 16.0
    timestamp_column: str = "timestamp"
    gap_fill: bool = False
    max_fill_steps: int = 3


def _parse_timestamp(text, row_num):
    try:
        return datetime.fromisoformat(text)
    except ValueError as err:
        raise DataError(f"row {row_num}: bad timestamp {text!r}") from err


def load_csv(path, schema: CsvSchema | None = None):
    """Parse a power CSV into one RawSeries per site column.

    Rejects non-monotonic or duplicated timestamps and, unless
    ``schema.gap_fill`` is set, any missing cell; fillable gaps are linearly
    interpolated up to ``max_fill_steps`` consecutive steps. Errors name the
    offending 1-based data row.
    """
    schema = schema or CsvSchema()
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise DataError(f"{path}: empty CSV")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != schema.timestamp_column:
        raise DataError(
            f"{path}: first column must be {schema.timestamp_column!r}, got {header[:1]}"
        )
    site_ids = header[1:]
    if not site_ids:
        raise DataError(f"{path}: no site columns")

    times = []
    columns = [[] for _ in site_ids]
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise DataError(f"row {i}: expected {len(header)} cells, got {len(row)}")
        times.append(_parse_timestamp(row[0], i))
        for j, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell == "":
                columns[j].append(np.nan)
            else:
                try:
                    columns[j].append(float(cell))
                except ValueError as err:
                    raise DataError(f"row {i}: bad value {cell!r}") from err

    if len(times) < 2:
        raise DataError(f"{path}: need at least two rows to infer resolution")
    deltas = [(b - a).total_seconds() for a, b in zip(times, times[1:])]
    step = deltas[0]
    for i, d in enumerate(deltas, start=2):
        if d <= 0:
            raise DataError(f"row {i}: timestamps not strictly increasing")
        if abs(d - step) > 1e-6:
            raise DataError(f"row {i}: non-uniform timestamp spacing")
    if step % 60:
        raise DataError(f"{path}: resolution must be whole minutes, got {step} s")
    resolution = int(step // 60)

    out = []
    for sid, col in zip(site_ids, columns):
        vals = np.asarray(col, dtype=np.float64)
        missing = np.isnan(vals)
        if missing.any():
            if not schema.gap_fill:
                first = int(np.argmax(missing)) + 1
                raise DataError(f"row {first}: missing value for site {sid!r} "
                                "(enable gap_fill to interpolate)")
            vals = _fill_gaps(vals, schema.max_fill_steps, sid)
        if (vals < 0).any():
            first = int(np.argmax(vals < 0)) + 1
            raise DataError(f"row {first}: negative power for site {sid!r}")
        out.append(RawSeries(sid, times[0], resolution, vals, schema.capacity_mw))
    return out


def _fill_gaps(vals, max_steps, site_id):
    filled = vals.copy()
    missing = np.isnan(filled)
    idx = np.flatnonzero(missing)
    if idx.size == 0:
        return filled
    runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    for run in runs:
        if len(run) > max_steps:
            raise DataError(
                f"row {run[0] + 1}: gap of {len(run)} steps for site {site_id!r} "
                f"exceeds fill limit {max_steps}"
            )
        lo, hi = run[0] - 1, run[-1] + 1
        if lo < 0 or hi >= len(filled):
            raise DataError(f"row {run[0] + 1}: gap at series edge for site {site_id!r}")
        filled[run] = np.interp(run, [lo, hi], [filled[lo], filled[hi]])
    return filled


def write_csv(path, series_list, header_comment=None):
    """Write RawSeries (shared time base) back to the input CSV layout."""
    first = series_list[0]
    for s in series_list[1:]:
        if len(s) != len(first) or s.resolution_min != first.resolution_min:
            raise DataError("all series must share length and resolution")
    with Path(path).open("w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["timestamp"] + [s.site_id for s in series_list])
        stamps = first.timestamps()
        for i, ts in enumerate(stamps):
            writer.writerow([ts.isoformat()] +
                            [format(s.values[i], ".6f") for s in series_list])


def write_scenario_csv(path, dataset, header_comment=None):
    """Write a generated scenario set in MW with a ``sample_id`` column.

    All samples share a synthetic time base starting at 2001-01-01 so the
    file mirrors the input layout; ``sample_id`` distinguishes scenarios.
    """
    from .dataset import ScenarioDataset  # local import to avoid a cycle

    assert isinstance(dataset, ScenarioDataset)
    base = datetime(2001, 1, 1)
    step = timedelta(minutes=dataset.meta.resolution_min)
    cap = dataset.meta.capacity_mw
    n, c, h, w = dataset.samples.shape
    multi = dataset.meta.mode == "multi_site_day"
    site_ids = dataset.meta.site_ids or (
        [f"site{j}" for j in range(h)] if multi else ["site0"]
    )
    with Path(path).open("w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "timestamp"] + list(site_ids))
        for i in range(n):
            sample = dataset.samples[i, 0]
            if multi:
                steps, per_step = sample.shape[1], sample.T
            else:
                flat = sample.reshape(-1)
                steps, per_step = flat.size, flat[:, None]
            for t in range(steps):
                ts = base + t * step
                writer.writerow([i, ts.isoformat()] +
                                [format(float(v) * cap, ".6f") for v in per_step[t]])


def read_scenario_csv(path, capacity_mw, resolution_min=None):
    """Load a scenario CSV back into per-sample value arrays (normalized)."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise DataError(f"{path}: empty scenario CSV")
    header = rows[0]
    if header[:2] != ["sample_id", "timestamp"]:
        raise DataError(f"{path}: expected sample_id,timestamp header, got {header[:2]}")
    site_ids = header[2:]
    groups = {}
    for i, row in enumerate(rows[1:], start=1):
        try:
            sid = int(row[0])
        except ValueError as err:
            raise DataError(f"row {i}: bad sample_id {row[0]!r}") from err
        groups.setdefault(sid, []).append([float(v) for v in row[2:]])
    samples = []
    for sid in sorted(groups):
        arr = np.asarray(groups[sid], dtype=np.float64) / capacity_mw
        samples.append(arr.T if len(site_ids) > 1 else arr.reshape(-1))
    return samples, site_ids
