"""Full evaluation of a generated scenario set against a real one.

``evaluate`` runs every applicable metric (per-metric failures are recorded,
not fatal), producing an :class:`EvalReport` that serializes to a text
summary plus flat CSV tables, with optional SVG plots.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .data.dataset import ScenarioDataset
from .errors import ScenGanError


@dataclass
class EvalConfig:
    max_lag: int = 24
    histogram_bins: int = 10
    ks_threshold: float = 0.1
    acf_threshold: float = 0.1
    corr_threshold: float = 0.15
    midnight_threshold_mw: float = 0.3


@dataclass
class EvalReport:
    lags: np.ndarray = None
    acf_real: np.ndarray = None
    acf_gen: np.ndarray = None
    acf_max_dev: float = None
    acf_skipped: tuple = (0, 0)
    ks_distance: float = None
    ecdf_real: tuple = None
    ecdf_gen: tuple = None
    psd_freq: np.ndarray = None
    psd_real: np.ndarray = None
    psd_gen: np.ndarray = None
    spatial_real: np.ndarray = None
    spatial_gen: np.ndarray = None
    spatial_max_dev: float = None
    class_hist_real: dict = None
    class_hist_gen: dict = None
    midnight_real_mw: float = None
    midnight_gen_mw: float = None
    verdicts: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def summary_lines(self):
        lines = ["scenario evaluation report", "=" * 27]
        if self.ks_distance is not None:
            lines.append(f"marginal KS distance: {self.ks_distance:.4f}"
                         f" [{self.verdicts.get('ks', '-')}]")
        if self.acf_max_dev is not None:
            lines.append(f"ACF max |real-gen| over lags 1..{len(self.lags) - 1}: "
                         f"{self.acf_max_dev:.4f} [{self.verdicts.get('acf', '-')}]")
        if self.spatial_max_dev is not None:
            lines.append(f"spatial correlation max deviation: {self.spatial_max_dev:.4f}"
                         f" [{self.verdicts.get('spatial', '-')}]")
        if self.midnight_gen_mw is not None:
            lines.append(f"midnight power, generated: {self.midnight_gen_mw:.4f} MW"
                         f" (real {self.midnight_real_mw:.4f} MW)"
                         f" [{self.verdicts.get('midnight', '-')}]")
        if self.psd_freq is not None:
            lines.append(f"PSD band bins: {len(self.psd_freq)}")
        if self.class_hist_real is not None:
            lines.append(f"per-class histograms over {len(self.class_hist_real)} classes")
        for name, err in self.errors.items():
            lines.append(f"skipped {name}: {err}")
        return lines


def _sample_values(ds: ScenarioDataset):
    return [ds.samples[i].reshape(-1) for i in range(len(ds))]


def evaluate(real: ScenarioDataset, gen: ScenarioDataset,
             config: EvalConfig | None = None) -> EvalReport:
    """Compare a generated set against a real set on every applicable metric."""
    config = config or EvalConfig()
    report = EvalReport()
    if real.sample_shape != gen.sample_shape:
        raise ScenGanError(
            f"sample shapes differ: real {real.sample_shape} vs generated {gen.sample_shape}"
        )
    cap = real.meta.capacity_mw

    try:
        acf_r, sk_r = metrics.mean_sample_acf(_sample_values(real), config.max_lag)
        acf_g, sk_g = metrics.mean_sample_acf(_sample_values(gen), config.max_lag)
        report.lags = np.arange(config.max_lag + 1)
        report.acf_real, report.acf_gen = acf_r, acf_g
        report.acf_skipped = (sk_r, sk_g)
        report.acf_max_dev = float(np.abs(acf_r[1:] - acf_g[1:]).max())
        report.verdicts["acf"] = "pass" if report.acf_max_dev <= config.acf_threshold else "fail"
    except ScenGanError as err:
        report.errors["acf"] = str(err)

    try:
        real_vals = real.values_mw().reshape(-1)
        gen_vals = gen.values_mw().reshape(-1)
        report.ecdf_real, report.ecdf_gen, report.ks_distance = \
            metrics.ecdf_and_ks(real_vals, gen_vals)
        report.verdicts["ks"] = "pass" if report.ks_distance <= config.ks_threshold else "fail"
    except ScenGanError as err:
        report.errors["ks"] = str(err)

    try:
        series_r = metrics.concatenate_canonical(
            [real.samples[i] for i in range(len(real))], real.start_times or None)
        series_g = metrics.concatenate_canonical(
            [gen.samples[i] for i in range(len(gen))], gen.start_times or None)
        f_r, p_r, _ = metrics.psd(series_r, real.meta.resolution_min)
        f_g, p_g, _ = metrics.psd(series_g, gen.meta.resolution_min)
        report.psd_freq, report.psd_real, report.psd_gen = f_r, p_r, p_g
    except ScenGanError as err:
        report.errors["psd"] = str(err)

    if real.meta.mode == "multi_site_day":
        try:
            corr_r, _ = metrics.spatial_correlation([s for s in real.samples])
            corr_g, _ = metrics.spatial_correlation([s for s in gen.samples])
            report.spatial_real, report.spatial_gen = corr_r, corr_g
            report.spatial_max_dev = float(np.nanmax(np.abs(corr_r - corr_g)))
            report.verdicts["spatial"] = (
                "pass" if report.spatial_max_dev <= config.corr_threshold else "fail"
            )
        except ScenGanError as err:
            report.errors["spatial"] = str(err)

    if real.labels is not None and gen.labels is not None \
            and real.label_dim == gen.label_dim:
        try:
            report.class_hist_real = _per_class_hist(real, cap, config.histogram_bins)
            report.class_hist_gen = _per_class_hist(gen, cap, config.histogram_bins)
        except ScenGanError as err:
            report.errors["class_hist"] = str(err)

    try:
        report.midnight_real_mw = metrics.midnight_power_mw(real.samples, real.meta)
        report.midnight_gen_mw = metrics.midnight_power_mw(gen.samples, gen.meta)
        report.verdicts["midnight"] = (
            "pass" if report.midnight_gen_mw <= config.midnight_threshold_mw else "fail"
        )
    except ScenGanError as err:
        report.errors["midnight"] = str(err)

    return report


def _per_class_hist(ds: ScenarioDataset, capacity_mw, bins):
    values = {}
    classes = ds.class_indices()
    for k in range(ds.label_dim):
        values[k] = ds.values_mw()[classes == k].reshape(-1)
    return metrics.class_marginal_histograms(values, capacity_mw, bins)


# -- serialization ------------------------------------------------------------


def write_report(report: EvalReport, out_dir, header_comment=None, plots=False):
    """Write report.txt plus one CSV per computed metric; SVGs if requested."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prefix = f"# {header_comment}\n" if header_comment else ""

    (out / "report.txt").write_text(
        prefix + "\n".join(report.summary_lines()) + "\n")

    def _csv(name, header, rows):
        with (out / name).open("w", newline="") as fh:
            if header_comment:
                fh.write(prefix)
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)

    if report.acf_real is not None:
        _csv("acf.csv", ["lag", "real", "generated"],
             [(int(l), float(r), float(g)) for l, r, g in
              zip(report.lags, report.acf_real, report.acf_gen)])
    if report.ks_distance is not None:
        xr, fr = report.ecdf_real
        xg, fg = report.ecdf_gen
        step = max(1, len(xr) // 512)
        rows = [(float(x), float(f), "", "") for x, f in zip(xr[::step], fr[::step])]
        stepg = max(1, len(xg) // 512)
        rows += [("", "", float(x), float(f)) for x, f in zip(xg[::stepg], fg[::stepg])]
        _csv("cdf.csv", ["real_x", "real_F", "gen_x", "gen_F"], rows)
        _csv("summary.csv", ["metric", "value", "verdict"],
             [("ks_distance", report.ks_distance, report.verdicts.get("ks", "-")),
              ("acf_max_dev", report.acf_max_dev, report.verdicts.get("acf", "-")),
              ("spatial_max_dev", report.spatial_max_dev,
               report.verdicts.get("spatial", "-")),
              ("midnight_gen_mw", report.midnight_gen_mw,
               report.verdicts.get("midnight", "-"))])
    if report.psd_freq is not None:
        _csv("psd.csv", ["freq_per_hour", "real_power", "gen_power"],
             [(float(f), float(r), float(g)) for f, r, g in
              zip(report.psd_freq, report.psd_real, report.psd_gen)])
    if report.spatial_real is not None:
        n = report.spatial_real.shape[0]
        _csv("spatial_corr.csv", ["i", "j", "real", "generated"],
             [(i, j, float(report.spatial_real[i, j]), float(report.spatial_gen[i, j]))
              for i in range(n) for j in range(n)])
    if report.class_hist_real is not None:
        rows = []
        for k in sorted(report.class_hist_real):
            hr = report.class_hist_real[k]
            hg = (report.class_hist_gen or {}).get(k)
            nb = len(hr) if hr is not None else (len(hg) if hg is not None else 0)
            for b in range(nb):
                rows.append((k, b,
                             float(hr[b]) if hr is not None else "",
                             float(hg[b]) if hg is not None else ""))
        _csv("class_histograms.csv", ["class", "bin", "real", "generated"], rows)

    if plots:
        plot_report(report, out)
    return out


def plot_report(report: EvalReport, out_dir):
    """Emit SVG figures: ACF overlay, CDF overlay, PSD log-log, correlation maps."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    if report.acf_real is not None:
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.plot(report.lags, report.acf_real, label="real")
        ax.plot(report.lags, report.acf_gen, "--", label="generated")
        ax.set_xlabel("lag")
        ax.set_ylabel("autocorrelation")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / "acf.svg")
        plt.close(fig)
    if report.ks_distance is not None:
        fig, ax = plt.subplots(figsize=(5, 3.2))
        xr, fr = report.ecdf_real
        xg, fg = report.ecdf_gen
        ax.step(xr, fr, where="post", label="real")
        ax.step(xg, fg, where="post", label="generated")
        ax.set_xlabel("power (MW)")
        ax.set_ylabel("F(x)")
        ax.legend(title=f"KS={report.ks_distance:.3f}")
        fig.tight_layout()
        fig.savefig(out / "cdf.svg")
        plt.close(fig)
    if report.psd_freq is not None:
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.loglog(report.psd_freq, np.maximum(report.psd_real, 1e-12), label="real")
        ax.loglog(report.psd_freq, np.maximum(report.psd_gen, 1e-12), "--",
                  label="generated")
        ax.set_xlabel("frequency (1/h)")
        ax.set_ylabel("power")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / "psd.svg")
        plt.close(fig)
    if report.spatial_real is not None:
        fig, axes = plt.subplots(1, 2, figsize=(7, 3.2))
        for ax, mat, title in ((axes[0], report.spatial_real, "real"),
                               (axes[1], report.spatial_gen, "generated")):
            im = ax.imshow(mat, vmin=-1, vmax=1, cmap="RdBu_r")
            ax.set_title(title)
        fig.colorbar(im, ax=axes, shrink=0.8)
        fig.savefig(out / "spatial_corr.svg")
        plt.close(fig)
