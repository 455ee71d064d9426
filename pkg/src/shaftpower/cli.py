"""Command-line interface.

Subcommands: gen-synth, fuse, train-baseline, finetune, train-scratch,
evaluate, correlations, full-experiment. Exit codes: 0 success,
2 configuration error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from . import serialize
from .data_model import SENSOR_COLUMNS, load_sensor_csv, parse_date
from .errors import (
    ConfigurationError,
    DataError,
    NumericalError,
    ShaftPowerError,
)
from .experiment import (
    ExperimentConfig,
    StageFailure,
    finetune_model,
    load_fleet_data,
    run_full_experiment,
    train_scratch_model,
    train_sensor_model,
)
from .features import correlation_report, write_correlation_csv
from .metrics import evaluate as evaluate_metrics
from .nn_core import load_checkpoint, predict, save_checkpoint
from .synthgen import FleetConfig, generate_fleet_data
from .weather_fusion import fuse as fuse_records
from .weather_fusion import load_grid


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    doc = serialize.load_file(path)
    if not isinstance(doc, dict):
        raise ConfigurationError("config file must contain a JSON object")
    return doc


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigurationError(f"bad seed list {text!r}: {exc}") from exc


def _experiment_config(args, require_out: bool = True) -> ExperimentConfig:
    doc = _load_config_file(getattr(args, "config", None))
    kwargs = {
        "data_dir": args.data_dir,
        "out_dir": getattr(args, "out_dir", None) or doc.get("out_dir") or ".",
    }
    for key in (
        "seeds",
        "base_vessel",
        "nmae_denominator",
        "encode_directions",
        "reinit_head",
        "sensor_overrides",
        "finetune_overrides",
        "scratch_overrides",
        "checkpoint_seed",
    ):
        if key in doc:
            kwargs[key] = doc[key]
    if doc.get("boundary"):
        kwargs["boundary"] = parse_date(doc["boundary"])
    if getattr(args, "seeds", None):
        kwargs["seeds"] = _parse_seeds(args.seeds)
    elif getattr(args, "seed", None) is not None:
        kwargs["seeds"] = (args.seed,)
    if getattr(args, "base_vessel", None):
        kwargs["base_vessel"] = args.base_vessel
    if getattr(args, "boundary", None):
        kwargs["boundary"] = parse_date(args.boundary)
    if require_out and not kwargs["out_dir"]:
        raise ConfigurationError("--out-dir is required")
    return ExperimentConfig(**kwargs)


def cmd_gen_synth(args) -> int:
    doc = _load_config_file(args.config)
    base = FleetConfig.tiny(seed=args.seed) if args.preset == "tiny" else FleetConfig(seed=args.seed)
    overrides = {}
    for key, value in doc.items():
        if key in ("boundary", "source_start", "target_start"):
            overrides[key] = parse_date(value)
        elif key in ("lat_range", "lon_range"):
            overrides[key] = tuple(value)
        else:
            overrides[key] = value
    cfg = replace(base, **overrides) if overrides else base
    manifest = generate_fleet_data(cfg, args.out_dir)
    total_sensor = sum(v["n_sensor_rows"] for v in manifest["vessels"])
    total_noon = sum(v["n_noon_rows"] for v in manifest["vessels"])
    print(
        f"generated {len(manifest['vessels'])} vessels "
        f"({total_sensor} sensor rows, {total_noon} noon rows) in {args.out_dir}"
    )
    return 0


FUSED_COLUMNS = SENSOR_COLUMNS + (
    "wave_height_m",
    "swell_height_m",
    "wave_dir_rel_deg",
    "wind_dir_rel_deg",
)


def cmd_fuse(args) -> int:
    data_dir = Path(args.data_dir)
    manifest_path = data_dir / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"stage fuse: fleet manifest not found: {manifest_path}")
    manifest = serialize.load_file(manifest_path)
    grid_path = data_dir / manifest["grid_file"]
    if not grid_path.exists():
        raise DataError(f"stage fuse: grid file not found: {grid_path}")
    grid = load_grid(grid_path)
    entry = _vessel_entry(manifest, args.vessel)
    ingest = load_sensor_csv(data_dir / entry["sensor_file"])
    fused, rejects = fuse_records(ingest.records, grid)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"fused_{args.vessel}.csv"
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FUSED_COLUMNS)
        from .data_model import format_timestamp

        for r in fused:
            writer.writerow(
                [format_timestamp(r.timestamp)]
                + [serialize.fmt_float(getattr(r, c)) for c in FUSED_COLUMNS[1:]]
            )
    rej_path = out_dir / f"fuse_rejects_{args.vessel}.csv"
    with open(rej_path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp", "axis", "value"])
        for rej in rejects:
            writer.writerow(
                [
                    format_timestamp(rej.record.timestamp),
                    rej.axis,
                    serialize.fmt_float(rej.value),
                ]
            )
    print(f"fused {len(fused)} records ({len(rejects)} rejected) -> {out_path}")
    return 0


def _vessel_entry(manifest: dict, vessel: str) -> dict:
    for entry in manifest["vessels"]:
        if entry["vessel_id"] == vessel:
            return entry
    raise ConfigurationError(f"vessel {vessel!r} not in fleet manifest")


def _single_vessel(args, config: ExperimentConfig):
    fleet = load_fleet_data(
        config.data_dir,
        boundary=config.boundary,
        encode_directions=config.encode_directions,
        vessels=[args.vessel],
    )
    if args.vessel not in fleet.vessels:
        raise ConfigurationError(f"vessel {args.vessel!r} not in data directory")
    return fleet.vessels[args.vessel]


def _emit_model(out_dir: Path, name: str, ckpt, report, metrics) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(ckpt, out_dir / f"{name}.json")
    serialize.dump_file(report.to_dict(), out_dir / f"{name}.report.json")
    serialize.dump_file(metrics.to_dict(), out_dir / f"{name}.metrics.json")
    print(serialize.dumps(metrics.to_dict()))


def cmd_train_baseline(args) -> int:
    config = _experiment_config(args)
    vd = _single_vessel(args, config)
    seed = config.seeds[0]
    ckpt, report, metrics = train_sensor_model(vd, config, seed)
    _emit_model(Path(config.out_dir), f"sensor_{args.vessel}", ckpt, report, metrics)
    return 0


def cmd_train_scratch(args) -> int:
    config = _experiment_config(args)
    vd = _single_vessel(args, config)
    seed = config.seeds[0]
    ckpt, report, metrics, _ = train_scratch_model(vd, config, seed)
    _emit_model(Path(config.out_dir), f"scratch_{args.vessel}", ckpt, report, metrics)
    return 0


def cmd_finetune(args) -> int:
    config = _experiment_config(args)
    vd = _single_vessel(args, config)
    base = load_checkpoint(args.checkpoint)
    seed = config.seeds[0]
    ckpt, report, metrics, _ = finetune_model(vd, base, config, seed)
    _emit_model(Path(config.out_dir), f"tl_{args.vessel}", ckpt, report, metrics)
    return 0


def cmd_evaluate(args) -> int:
    config = _experiment_config(args, require_out=False)
    vd = _single_vessel(args, config)
    ckpt = load_checkpoint(args.checkpoint)
    matrix = {
        ("sensor", "train"): vd.sensor_train_raw,
        ("sensor", "test"): vd.sensor_test_raw,
        ("noon", "train"): vd.noon_train,
        ("noon", "test"): vd.noon_test,
    }[(args.source, args.split)]
    from .features import apply_standardization

    std = apply_standardization(matrix, ckpt.feature_means, ckpt.feature_stds)
    preds = predict(ckpt.params, std.rows)
    metrics = evaluate_metrics(
        matrix.targets, preds, nmae_denominator=config.nmae_denominator
    )
    print(serialize.dumps(metrics.to_dict()))
    if getattr(args, "out_dir", None):
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        serialize.dump_file(
            metrics.to_dict(),
            out_dir / f"metrics_{args.vessel}_{args.source}_{args.split}.json",
        )
    return 0


def cmd_correlations(args) -> int:
    config = _experiment_config(args)
    vd = _single_vessel(args, config)
    matrix = vd.sensor_train_raw if args.source == "sensor" else vd.noon_train
    report = correlation_report(matrix)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"correlations_{args.vessel}_{args.source}.csv"
    write_correlation_csv(report, out_path)
    for name, r in report:
        print(f"{name}\t{r:+.4f}")
    return 0


def cmd_full_experiment(args) -> int:
    config = _experiment_config(args)
    result = run_full_experiment(config)
    print(f"base vessel: {result.base_vessel}")
    print(f"artifacts in {result.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shaftpower",
        description="Shaft power prediction: sensor-data baselines, "
        "noon-report fine-tuning, and the comparison harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic fleet")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=["acceptance", "tiny"], default="acceptance")
    p.add_argument("--config", help="JSON file with FleetConfig overrides")
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("fuse", help="attach weather to a vessel's sensor rows")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--vessel", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_fuse)

    for name, handler in (
        ("train-baseline", cmd_train_baseline),
        ("train-scratch", cmd_train_scratch),
    ):
        p = sub.add_parser(name)
        p.add_argument("--data-dir", required=True)
        p.add_argument("--vessel", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", required=True)
        p.add_argument("--config")
        p.add_argument("--boundary")
        p.set_defaults(func=handler)

    p = sub.add_parser("finetune", help="fine-tune a checkpoint on noon reports")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--vessel", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config")
    p.add_argument("--boundary")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on one split")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--vessel", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--source", choices=["sensor", "noon"], default="noon")
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--out-dir")
    p.add_argument("--config")
    p.add_argument("--boundary")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("correlations", help="per-feature correlation with power")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--vessel", required=True)
    p.add_argument("--source", choices=["sensor", "noon"], default="sensor")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config")
    p.add_argument("--boundary")
    p.set_defaults(func=cmd_correlations)

    p = sub.add_parser("full-experiment", help="the whole multi-seed protocol")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seeds", help="e.g. '0,1,2' (default 0-9)")
    p.add_argument("--base-vessel")
    p.add_argument("--config")
    p.add_argument("--boundary")
    p.set_defaults(func=cmd_full_experiment)

    return parser


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, StageFailure):
        return _exit_code(exc.cause)
    if isinstance(exc, ConfigurationError):
        return 2
    if isinstance(exc, NumericalError):
        return 4
    if isinstance(exc, DataError):
        return 3
    return 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ShaftPowerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
