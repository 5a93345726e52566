"""Command-line surface: synth | train | generate | evaluate | baseline.

Every command is deterministic given (config file, seed), writes its
outputs under --out, and stamps each output with the configuration hash.
Exit codes: 0 success, 1 usage or data error, 2 numeric abort.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import config_hash, load_command_config
from .data import (
    CsvSchema,
    DatasetMeta,
    LabelScheme,
    ScenarioDataset,
    apply_scheme,
    load_csv,
    normalize,
    read_scenario_csv,
    shape_samples,
    split,
    synth_dataset,
    write_csv,
    write_scenario_csv,
)
from .errors import ConfigurationError, DataError, FormatError, NumericError, ScenGanError
from .gan import (
    TrainConfig,
    build_conv_architecture,
    build_mlp_architecture,
    generate,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .copula import fit as copula_fit, load_copula, sample as copula_sample, save_copula
from .report import EvalConfig, evaluate, write_report

LABEL_SCHEMES = {
    "mean": LabelScheme("mean_value"),
    "ramp": LabelScheme("ramp"),
    "month": LabelScheme("month"),
    "forecast_error": LabelScheme("forecast_error"),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scengan",
        description="GAN-based renewable power scenario generation and validation",
    )
    parser.add_argument("--config", default=None, help="INI config file path")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("synth", help="write a synthetic dataset CSV plus descriptor")
    common(p)
    p.add_argument("--kind", default=None, choices=("diurnal_solar", "ar1_wind", "multi_site"))
    p.add_argument("--days", type=int, default=None)
    p.add_argument("--sites", type=int, default=None)
    p.add_argument("--phi", type=float, default=None)
    p.add_argument("--capacity-mw", dest="capacity_mw", type=float, default=None)
    p.add_argument("--resolution-min", dest="resolution_min", type=int, default=None)

    p = sub.add_parser("train", help="train a model; writes checkpoint and trace CSV")
    common(p)
    p.add_argument("--data", default=None, help="input power CSV")
    p.add_argument("--labels", default=None,
                   choices=("none", "mean", "ramp", "month", "forecast_error"))
    p.add_argument("--arch", default=None, choices=("conv", "mlp"))
    p.add_argument("--scale", type=float, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--eval-every", dest="eval_every", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--clip", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--n-discri", dest="n_discri", type=int, default=None)
    p.add_argument("--shaping", default=None, choices=("single_site_grid", "multi_site_day"))
    p.add_argument("--grid-h", dest="grid_h", type=int, default=None)
    p.add_argument("--grid-w", dest="grid_w", type=int, default=None)
    p.add_argument("--capacity-mw", dest="capacity_mw", type=float, default=None)
    p.add_argument("--train-fraction", dest="train_fraction", type=float, default=None)
    p.add_argument("--resume", action="store_const", const=True, default=None)

    p = sub.add_parser("generate", help="sample scenarios from a checkpoint into CSV")
    common(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--per-class", dest="per_class", type=int, default=None)
    p.add_argument("--label", type=int, default=None)

    p = sub.add_parser("evaluate", help="compare real and generated scenario sets")
    common(p)
    p.add_argument("--real", default=None, help="real power CSV")
    p.add_argument("--generated", default=None, help="generated scenario CSV")
    p.add_argument("--labels", default=None, choices=("none", "mean", "ramp", "month"))
    p.add_argument("--shaping", default=None, choices=("single_site_grid", "multi_site_day"))
    p.add_argument("--grid-h", dest="grid_h", type=int, default=None)
    p.add_argument("--grid-w", dest="grid_w", type=int, default=None)
    p.add_argument("--capacity-mw", dest="capacity_mw", type=float, default=None)
    p.add_argument("--max-lag", dest="max_lag", type=int, default=None)
    p.add_argument("--plots", action="store_const", const=True, default=None)

    p = sub.add_parser("baseline", help="fit the copula baseline and sample scenarios")
    common(p)
    p.add_argument("--data", default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--shaping", default=None, choices=("single_site_grid", "multi_site_day"))
    p.add_argument("--grid-h", dest="grid_h", type=int, default=None)
    p.add_argument("--grid-w", dest="grid_w", type=int, default=None)
    p.add_argument("--capacity-mw", dest="capacity_mw", type=float, default=None)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses status 2 for usage errors; 2 is reserved for numeric aborts
        return 1 if exc.code else 0
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = load_command_config(args.command, args.config, overrides)
        handler = {
            "synth": cmd_synth,
            "train": cmd_train,
            "generate": cmd_generate,
            "evaluate": cmd_evaluate,
            "baseline": cmd_baseline,
        }[args.command]
        return handler(cfg)
    except NumericError as err:
        print(f"numeric abort: {err}", file=sys.stderr)
        return 2
    except (ConfigurationError, DataError, FormatError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except ScenGanError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def _outdir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(cfg) -> int:
    out = _outdir(cfg)
    token = f"config_hash={config_hash('synth', cfg)}"
    from .data import exponential_corr

    corr = exponential_corr(cfg.sites, cfg.corr_rho) if cfg.kind == "multi_site" else None
    series, descriptor = synth_dataset(
        cfg.kind, cfg.days, cfg.seed, capacity_mw=cfg.capacity_mw,
        resolution_min=cfg.resolution_min or None, phi=cfg.phi,
        sites=cfg.sites, squash_scale=cfg.squash_scale, corr=corr,
    )
    write_csv(out / "data.csv", series, header_comment=token)
    descriptor["config_hash"] = config_hash("synth", cfg)
    (out / "data.descriptor.json").write_text(json.dumps(descriptor, indent=2,
                                                         sort_keys=True) + "\n")
    print(f"wrote {out / 'data.csv'} ({cfg.kind}, {cfg.days} days)")
    return 0


def _load_shaped(path, shaping, grid_hw, capacity_mw, label_scheme=None):
    series = load_csv(path, CsvSchema(capacity_mw=capacity_mw))
    normalized = [normalize(s) for s in series]
    ds = shape_samples(normalized, mode=shaping, grid_hw=grid_hw)
    if label_scheme is not None:
        ds = apply_scheme(ds, label_scheme)
    return ds


def cmd_train(cfg) -> int:
    out = _outdir(cfg)
    token = f"config_hash={config_hash('train', cfg)}"
    scheme = LABEL_SCHEMES.get(cfg.labels)
    dataset = _load_shaped(cfg.data, cfg.shaping, (cfg.grid_h, cfg.grid_w),
                           cfg.capacity_mw, scheme)
    if 0 < cfg.train_fraction < 1:
        dataset, _ = split(dataset, cfg.train_fraction, cfg.seed,
                           stratified=cfg.stratified)
    label_dim = dataset.label_dim

    ckpt_path = out / "checkpoint.scgn"
    start_iteration = 0
    if cfg.resume and ckpt_path.exists():
        model = load_checkpoint(ckpt_path)
        start_iteration = int(model.data_meta.get("completed_iterations", 0))
    elif cfg.arch == "conv":
        model = build_conv_architecture(
            dataset.sample_shape, label_dim=label_dim, scale=cfg.scale,
            noise_dim=cfg.noise_dim, critic_output=cfg.critic_output,
            critic_batch_norm=cfg.critic_batch_norm,
            kernel=cfg.kernel or None, seed=cfg.seed)
    else:
        model = build_mlp_architecture(
            dataset.sample_shape, label_dim=label_dim, scale=cfg.scale,
            noise_dim=cfg.noise_dim, critic_output=cfg.critic_output,
            generator_output=cfg.generator_output,
            critic_batch_norm=cfg.critic_batch_norm, seed=cfg.seed)

    tc = TrainConfig(alpha=cfg.alpha, clip=cfg.clip, batch_size=cfg.batch_size,
                     n_discri=cfg.n_discri, total_iterations=cfg.iterations,
                     seed=cfg.seed, eval_every=cfg.eval_every)

    def checkpoint_hook(iteration, mdl, trace):
        mdl.data_meta["completed_iterations"] = iteration
        save_checkpoint(mdl, ckpt_path)
        _write_trace(out / "trace.csv", trace, token)

    try:
        model, trace = train(model, dataset, tc, on_eval=checkpoint_hook,
                             start_iteration=start_iteration)
    except NumericError as err:
        if err.trace is not None:
            _write_trace(out / "trace.csv", err.trace, token)
        raise
    model.data_meta["completed_iterations"] = tc.total_iterations
    save_checkpoint(model, ckpt_path)
    _write_trace(out / "trace.csv", trace, token)
    print(f"trained {cfg.iterations} iterations; checkpoint at {ckpt_path}")
    return 0


def _write_trace(path, trace, token):
    with Path(path).open("w", newline="") as fh:
        fh.write(f"# {token}\n")
        w = csv.writer(fh)
        w.writerow(("iter", "d_real", "d_fake", "w_est", "l_g", "l_d"))
        for row in trace.as_table():
            w.writerow([row[0]] + [format(v, ".9g") for v in row[1:]])


def cmd_generate(cfg) -> int:
    out = _outdir(cfg)
    token = f"config_hash={config_hash('generate', cfg)}"
    model = load_checkpoint(cfg.checkpoint)
    meta = DatasetMeta.from_dict(model.data_meta) if model.data_meta.get("resolution_min") \
        else DatasetMeta(resolution_min=5, capacity_mw=16.0)

    if model.label_dim and cfg.per_class > 0:
        chunks, labels = [], []
        for k in range(model.label_dim):
            s, l = generate(model, cfg.per_class, y=k, seed=cfg.seed + k)
            chunks.append(s)
            labels.append(l)
        samples = np.concatenate(chunks)
        label_arr = np.concatenate(labels)
    elif model.label_dim:
        if cfg.label < 0:
            raise DataError("conditional model: pass --label CLASS or --per-class N")
        samples, label_arr = generate(model, cfg.count, y=cfg.label, seed=cfg.seed)
    else:
        if cfg.label >= 0:
            raise DataError("unconditional model cannot generate a specific label")
        samples, label_arr = generate(model, cfg.count, seed=cfg.seed)

    ds = ScenarioDataset(samples, meta, labels=label_arr)
    write_scenario_csv(out / "scenarios.csv", ds, header_comment=token)
    print(f"wrote {len(ds)} scenarios to {out / 'scenarios.csv'}")
    return 0


def _load_generated(path, shaping, grid_hw, capacity_mw, resolution_min):
    samples, site_ids = read_scenario_csv(path, capacity_mw)
    shaped = []
    for s in samples:
        if shaping == "multi_site_day":
            shaped.append(s[None, :, :])
        else:
            h, w = grid_hw
            if s.size != h * w:
                raise DataError(
                    f"scenario of {s.size} values does not fill a {h}x{w} grid"
                )
            shaped.append(s.reshape(1, h, w))
    meta = DatasetMeta(resolution_min=resolution_min, capacity_mw=capacity_mw,
                       site_count=len(site_ids), mode=shaping,
                       site_ids=tuple(site_ids))
    return ScenarioDataset(np.stack(shaped), meta)


def cmd_evaluate(cfg) -> int:
    out = _outdir(cfg)
    token = f"config_hash={config_hash('evaluate', cfg)}"
    if not Path(cfg.real).exists():
        raise DataError(f"real data file {cfg.real} not found")
    if not Path(cfg.generated).exists():
        raise DataError(f"generated scenario file {cfg.generated} not found")
    scheme = LABEL_SCHEMES.get(cfg.labels)
    real = _load_shaped(cfg.real, cfg.shaping, (cfg.grid_h, cfg.grid_w),
                        cfg.capacity_mw, scheme)
    gen = _load_generated(cfg.generated, cfg.shaping, (cfg.grid_h, cfg.grid_w),
                          cfg.capacity_mw, real.meta.resolution_min)
    if scheme is not None and scheme.kind != "month":
        gen = apply_scheme(gen, scheme)
    ev = EvalConfig(max_lag=cfg.max_lag, ks_threshold=cfg.ks_threshold,
                    acf_threshold=cfg.acf_threshold, corr_threshold=cfg.corr_threshold)
    report = evaluate(real, gen, ev)
    write_report(report, out, header_comment=token, plots=cfg.plots)
    for line in report.summary_lines():
        print(line)
    return 0


def cmd_baseline(cfg) -> int:
    out = _outdir(cfg)
    token = f"config_hash={config_hash('baseline', cfg)}"
    dataset = _load_shaped(cfg.data, cfg.shaping, (cfg.grid_h, cfg.grid_w),
                           cfg.capacity_mw)
    if 0 < cfg.train_fraction < 1:
        dataset, _ = split(dataset, cfg.train_fraction, cfg.seed, stratified=False)
    flat = dataset.samples.reshape(len(dataset), -1).astype(np.float64)
    model = copula_fit(flat)
    save_copula(model, out / "copula.scgn")
    drawn = copula_sample(model, cfg.count, cfg.seed)
    samples = drawn.reshape((cfg.count,) + dataset.sample_shape).astype(np.float32)
    ds = ScenarioDataset(samples, dataset.meta)
    write_scenario_csv(out / "scenarios.csv", ds, header_comment=token)
    print(f"fit copula (d={model.d}); wrote {cfg.count} scenarios")
    return 0


if __name__ == "__main__":
    sys.exit(main())
