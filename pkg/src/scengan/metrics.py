"""Statistical validation metrics for real-vs-generated scenario sets.

All functions are pure and permutation-invariant over sample order (the
spectral estimate orders samples canonically before concatenating).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DataError, UndefinedStatisticError


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelation R(tau) for tau = 0..max_lag.

    R(tau) = sum_t (S_t - mu)(S_{t+tau} - mu) / ((n - tau) * var), with the
    sample mean and biased sample variance, so R(0) == 1 exactly. A
    constant series has no defined autocorrelation.
    """
    x = np.asarray(series, dtype=np.float64).reshape(-1)
    n = x.size
    if max_lag < 0 or max_lag >= n:
        raise ConfigurationError(f"max_lag must be in [0, {n - 1}], got {max_lag}")
    mu = x.mean()
    c = x - mu
    var = float(np.mean(c * c))
    if var == 0.0:
        raise UndefinedStatisticError("autocorrelation of a constant series is undefined")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for tau in range(1, max_lag + 1):
        out[tau] = float(np.dot(c[:-tau], c[tau:])) / ((n - tau) * var)
    return out


def mean_sample_acf(samples, max_lag: int):
    """Average per-sample ACF over a set; skips degenerate (constant) samples.

    Returns (acf array, number skipped).
    """
    acc = np.zeros(max_lag + 1)
    used = 0
    skipped = 0
    for s in samples:
        try:
            acc += autocorrelation(np.asarray(s).reshape(-1), max_lag)
            used += 1
        except UndefinedStatisticError:
            skipped += 1
    if used == 0:
        raise UndefinedStatisticError("every sample in the set is constant")
    return acc / used, skipped


def ecdf(values):
    """Sorted support points and cumulative probabilities of an ECDF."""
    v = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))
    if v.size == 0:
        raise DataError("cannot build an ECDF from no values")
    return v, np.arange(1, v.size + 1) / v.size


def ecdf_and_ks(real_values, gen_values):
    """Two ECDFs plus the Kolmogorov-Smirnov distance via a sorted-merge scan."""
    xr, fr = ecdf(real_values)
    xg, fg = ecdf(gen_values)
    grid = np.concatenate([xr, xg])
    grid.sort(kind="mergesort")
    f_real = np.searchsorted(xr, grid, side="right") / xr.size
    f_gen = np.searchsorted(xg, grid, side="right") / xg.size
    ks = float(np.abs(f_real - f_gen).max())
    return (xr, fr), (xg, fg), ks


def ks_distance(real_values, gen_values) -> float:
    return ecdf_and_ks(real_values, gen_values)[2]


PSD_BAND_MIN_PERIOD_H = 2.0
PSD_BAND_MAX_PERIOD_H = 144.0  # six days


def psd(series, resolution_min: int, max_period_h=PSD_BAND_MAX_PERIOD_H,
        min_period_h=PSD_BAND_MIN_PERIOD_H):
    """Averaged periodogram over periods from six days down to two hours.

    Hann-windowed segments of six-day length with 50% overlap, each
    demeaned. Powers are normalized so the full-spectrum sum equals the
    window-compensated mean square of each segment (checked to 1% before
    band restriction; the relative error is returned for inspection).

    Returns (frequencies per hour, band powers, parseval relative error).
    """
    x = np.asarray(series, dtype=np.float64).reshape(-1)
    steps_per_hour = 60 / resolution_min
    seg_len = int(round(max_period_h * steps_per_hour))
    if x.size < seg_len:
        raise DataError(
            f"series of {x.size} steps is shorter than one {max_period_h}-hour segment"
        )
    window = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(seg_len) / seg_len)
    wpow = float(np.sum(window * window))
    hop = seg_len // 2
    n_segments = 1 + (x.size - seg_len) // hop

    freqs = np.fft.rfftfreq(seg_len, d=1.0 / steps_per_hour)  # cycles per hour
    accum = np.zeros(freqs.size)
    worst_parseval = 0.0
    for s in range(n_segments):
        seg = x[s * hop:s * hop + seg_len]
        seg = (seg - seg.mean()) * window
        spec = np.fft.rfft(seg)
        power = np.abs(spec) ** 2 / (seg_len * wpow) * 2.0
        power[0] /= 2.0
        if seg_len % 2 == 0:
            power[-1] /= 2.0
        total = float(np.sum(seg * seg)) / wpow
        if total > 0:
            worst_parseval = max(worst_parseval, abs(power.sum() - total) / total)
        accum += power
    accum /= n_segments
    if worst_parseval > 0.01:
        raise UndefinedStatisticError(
            f"spectral estimate violates the Parseval identity ({worst_parseval:.2e})"
        )

    lo, hi = 1.0 / max_period_h, 1.0 / min_period_h
    band = (freqs >= lo * (1 - 1e-9)) & (freqs <= hi * (1 + 1e-9))
    return freqs[band], accum[band], worst_parseval


def canonical_sample_order(samples, start_times=None):
    """Deterministic, permutation-invariant ordering for concatenation.

    Uses start timestamps when available (true temporal order); otherwise
    lexicographic byte order.
    """
    n = len(samples)
    if start_times is not None and len(start_times) == n and n > 0:
        return sorted(range(n), key=lambda i: (start_times[i], samples[i].tobytes()))
    return sorted(range(n), key=lambda i: samples[i].tobytes())


def concatenate_canonical(samples, start_times=None):
    order = canonical_sample_order(list(samples), start_times)
    return np.concatenate([np.asarray(samples[i], dtype=np.float64).reshape(-1)
                           for i in order])


def spatial_correlation(samples):
    """Pearson correlation between site rows, pooled over samples and time.

    ``samples`` is an iterable of (n_sites, T) matrices (or (1, n_sites, T)
    tensors). Zero-variance sites get NaN rows/columns and are reported.
    Returns (matrix, list of degenerate site indices).
    """
    mats = [np.asarray(s, dtype=np.float64).reshape(np.asarray(s).shape[-2:])
            for s in samples]
    if len(mats) < 2:
        raise DataError("need at least two samples for spatial correlation")
    n_sites = mats[0].shape[0]
    for m in mats:
        if m.shape[0] != n_sites:
            raise DataError("samples disagree on the number of sites")
    pooled = np.concatenate(mats, axis=1)
    std = pooled.std(axis=1)
    degenerate = [int(i) for i in np.flatnonzero(std == 0)]
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(pooled)
    corr = (corr + corr.T) / 2.0
    np.fill_diagonal(corr, 1.0)
    for i in degenerate:
        corr[i, :] = np.nan
        corr[:, i] = np.nan
        corr[i, i] = 1.0
    return corr, degenerate


def class_marginal_histograms(values_mw_per_class: dict, capacity_mw: float,
                              n_bins: int = 10):
    """Per-class frequency over n_bins equal bins spanning [0, capacity].

    The last bin is closed above, so a value exactly at capacity lands in
    it. Returns {class: frequencies}; an empty class maps to None.
    """
    edges = np.linspace(0.0, capacity_mw, n_bins + 1)
    out = {}
    for cls, values in values_mw_per_class.items():
        v = np.asarray(values, dtype=np.float64).reshape(-1)
        if v.size == 0:
            out[cls] = None
            continue
        counts, _ = np.histogram(v, bins=edges)
        out[cls] = counts / v.size
    return out


def histogram_entropy(frequencies) -> float:
    """Shannon entropy (nats) of a normalized histogram."""
    f = np.asarray(frequencies, dtype=np.float64)
    nz = f[f > 0]
    return float(-(nz * np.log(nz)).sum())


def midnight_power_mw(samples, meta, start_hour=0, end_hour=1):
    """Mean output in MW over the midnight hour across a sample set.

    Sample grids are assumed midnight-aligned (shaping starts at 00:00);
    positions are derived from the resolution.
    """
    arr = np.asarray(samples, dtype=np.float64)
    flat = arr.reshape(arr.shape[0], -1)
    if meta.mode == "multi_site_day":
        steps = arr.shape[-1]
        minutes = np.arange(steps) * meta.resolution_min
        mask = (minutes >= start_hour * 60) & (minutes < end_hour * 60)
        sel = arr.reshape(arr.shape[0], -1, steps)[:, :, mask]
    else:
        minutes = (np.arange(flat.shape[1]) * meta.resolution_min) % (24 * 60)
        mask = (minutes >= start_hour * 60) & (minutes < end_hour * 60)
        sel = flat[:, mask]
    if sel.size == 0:
        raise DataError("no sample positions fall inside the midnight window")
    return float(sel.mean() * meta.capacity_mw)
