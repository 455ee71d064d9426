"""End-to-end experiment harness.

For every seed it trains one sensor-data model per vessel, picks (or
accepts) a base vessel, then for each remaining vessel fine-tunes the
base model on that vessel's noon-report training rows and separately
trains an identical architecture from scratch on the same rows. All
three model families are evaluated on their test sets, aggregated over
seeds, and written out as CSV tables, plot data, checkpoints, and a
manifest. Identical configs reproduce identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np

from . import serialize
from .data_model import (
    SplitSpec,
    date_to_epoch,
    load_noon_csv,
    load_sensor_csv,
    parse_date,
    preprocess,
    temporal_split,
)
from .errors import ConfigurationError, DataError, ShaftPowerError
from .features import (
    FeatureMatrix,
    apply_standardization,
    build_features,
    standardize,
)
from .metrics import MetricsReport, RunAggregate, aggregate, evaluate, format_table
from .nn_core import (
    Checkpoint,
    DEFAULT_LAYER_DIMS,
    MlpParams,
    init_params,
    predict,
    save_checkpoint,
)
from .trainer import TrainConfig, TrainReport, fine_tune, train
from .weather_fusion import fuse, load_grid

ARMS = ("sensor", "scratch", "tl")


def derive_seed(base: int, *parts) -> int:
    """Stable 32-bit sub-seed for a named role under a master seed."""
    digest = hashlib.sha256(
        ":".join([str(base)] + [str(p) for p in parts]).encode()
    ).digest()
    return int.from_bytes(digest[:4], "big")


@dataclass(frozen=True)
class ExperimentConfig:
    data_dir: Path
    out_dir: Path
    seeds: tuple[int, ...] = tuple(range(10))
    base_vessel: str | None = None
    boundary: date | None = None
    nmae_denominator: str = "range"
    encode_directions: bool = False
    reinit_head: bool = False
    sensor_overrides: dict = field(default_factory=dict)
    finetune_overrides: dict = field(default_factory=dict)
    scratch_overrides: dict = field(default_factory=dict)
    checkpoint_seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "data_dir", Path(self.data_dir))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ConfigurationError("seed list must be non-empty")
        if self.nmae_denominator not in ("range", "mean"):
            raise ConfigurationError(
                f"nmae_denominator must be 'range' or 'mean', got {self.nmae_denominator!r}"
            )

    def sensor_config(self, seed: int) -> TrainConfig:
        return replace(TrainConfig.baseline(seed=seed), **self.sensor_overrides)

    def finetune_config(self, seed: int) -> TrainConfig:
        return replace(TrainConfig.finetune(seed=seed), **self.finetune_overrides)

    def scratch_config(self, seed: int) -> TrainConfig:
        # noon rows are scarce, so the from-scratch arm keeps the baseline
        # recipe but adopts the noon batch size
        return replace(
            TrainConfig.baseline(seed=seed), batch_size=16, **self.scratch_overrides
        )

    def to_dict(self) -> dict:
        return {
            "data_dir": str(self.data_dir),
            "out_dir": str(self.out_dir),
            "seeds": list(self.seeds),
            "base_vessel": self.base_vessel,
            "boundary": self.boundary.isoformat() if self.boundary else None,
            "nmae_denominator": self.nmae_denominator,
            "encode_directions": self.encode_directions,
            "reinit_head": self.reinit_head,
            "sensor_overrides": dict(self.sensor_overrides),
            "finetune_overrides": dict(self.finetune_overrides),
            "scratch_overrides": dict(self.scratch_overrides),
            "checkpoint_seed": self.checkpoint_seed,
        }


@dataclass
class VesselData:
    """Everything the harness needs for one vessel.

    The sensor matrices come standardized with the vessel's own training
    statistics; the raw versions stay around so a foreign checkpoint can
    be evaluated with its own scaler. Noon matrices stay raw because each
    training arm applies its own standardization.
    """

    vessel_id: str
    category: str
    sensor_train: FeatureMatrix
    sensor_test: FeatureMatrix
    sensor_train_raw: FeatureMatrix
    sensor_test_raw: FeatureMatrix
    noon_train: FeatureMatrix
    noon_test: FeatureMatrix

    @property
    def width(self) -> int:
        return self.sensor_train.width


@dataclass
class FleetData:
    manifest: dict
    boundary: date
    vessels: dict[str, VesselData]
    source_vessel: str | None


class StageFailure(ShaftPowerError):
    """Wraps an underlying error with the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage}: {cause}")


def _stage(name: str):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, StageFailure):
                raise StageFailure(name, exc) from exc
            return False

    return _Ctx()


def network_dims(width: int) -> tuple[int, ...]:
    return (width,) + DEFAULT_LAYER_DIMS[1:]


def load_fleet_data(
    data_dir,
    boundary: date | None = None,
    encode_directions: bool = False,
    vessels: list[str] | None = None,
) -> FleetData:
    """Run ingestion, cleaning, fusion, splitting, and feature building
    for every vessel in a generated data directory."""
    data_dir = Path(data_dir)
    with _stage("load-manifest"):
        manifest_path = data_dir / "manifest.json"
        if not manifest_path.exists():
            raise DataError(f"fleet manifest not found: {manifest_path}")
        manifest = serialize.load_file(manifest_path)
    with _stage("load-grid"):
        grid = load_grid(data_dir / manifest["grid_file"])
    if boundary is None:
        boundary = parse_date(manifest["boundary"])
    spec = SplitSpec(train_end=date_to_epoch(boundary))

    wanted = set(vessels) if vessels else None
    loaded: dict[str, VesselData] = {}
    for entry in manifest["vessels"]:
        vessel_id = entry["vessel_id"]
        if wanted and vessel_id not in wanted:
            continue
        with _stage(f"ingest-sensor[{vessel_id}]"):
            ingest = load_sensor_csv(data_dir / entry["sensor_file"])
            kept, _ = preprocess(ingest.records)
        with _stage(f"fuse[{vessel_id}]"):
            fused, _rejects = fuse(kept, grid)
            if not fused:
                raise DataError(f"no sensor rows inside the grid for {vessel_id}")
        with _stage(f"split-sensor[{vessel_id}]"):
            train_recs, test_recs = temporal_split(fused, spec)
        with _stage(f"features-sensor[{vessel_id}]"):
            m_train_raw, _ = build_features(train_recs, encode_directions)
            m_test_raw, _ = build_features(test_recs, encode_directions)
            m_train = standardize(m_train_raw)
            m_test = apply_standardization(
                m_test_raw, m_train.feature_means, m_train.feature_stds
            )
        with _stage(f"ingest-noon[{vessel_id}]"):
            noon_ingest = load_noon_csv(data_dir / entry["noon_file"])
            noon_kept, _ = preprocess(noon_ingest.records)
        with _stage(f"split-noon[{vessel_id}]"):
            noon_train_recs, noon_test_recs = temporal_split(noon_kept, spec)
        with _stage(f"features-noon[{vessel_id}]"):
            noon_train, _ = build_features(noon_train_recs, encode_directions)
            noon_test, _ = build_features(noon_test_recs, encode_directions)
        loaded[vessel_id] = VesselData(
            vessel_id=vessel_id,
            category=entry["category"],
            sensor_train=m_train,
            sensor_test=m_test,
            sensor_train_raw=m_train_raw,
            sensor_test_raw=m_test_raw,
            noon_train=noon_train,
            noon_test=noon_test,
        )
    if not loaded:
        raise DataError("no vessels loaded from data directory")
    return FleetData(
        manifest=manifest,
        boundary=boundary,
        vessels=loaded,
        source_vessel=manifest.get("source_vessel"),
    )


def select_base_vessel(sensor_reports: dict[str, MetricsReport]) -> str:
    """Vessel with the lowest sensor-test MAPE; ties break on lower NMAE,
    then lexicographic id."""
    if not sensor_reports:
        raise ConfigurationError("no sensor reports to select from")
    return min(
        sensor_reports.items(), key=lambda kv: (kv[1].mape, kv[1].nmae, kv[0])
    )[0]


def matrix_checksum(matrix: FeatureMatrix) -> str:
    digest = hashlib.sha256()
    digest.update(matrix.rows.tobytes())
    digest.update(matrix.targets.tobytes())
    return digest.hexdigest()


def train_sensor_model(
    vd: VesselData, config: ExperimentConfig, seed: int
) -> tuple[Checkpoint, TrainReport, MetricsReport]:
    """Baseline recipe on one vessel's sensor training matrix, evaluated
    on its sensor test matrix."""
    params = init_params(
        network_dims(vd.width), derive_seed(seed, vd.vessel_id, "sensor-init")
    )
    cfg = config.sensor_config(derive_seed(seed, vd.vessel_id, "sensor-shuffle"))
    model, report = train(params, vd.sensor_train, cfg)
    preds = predict(model, vd.sensor_test.rows)
    metrics = evaluate(
        vd.sensor_test.targets, preds, nmae_denominator=config.nmae_denominator
    )
    ckpt = Checkpoint(
        params=model,
        feature_means=vd.sensor_train.feature_means,
        feature_stds=vd.sensor_train.feature_stds,
        seed=seed,
        trained_on=f"sensor:{vd.vessel_id}",
    )
    return ckpt, report, metrics


def train_scratch_model(
    vd: VesselData, config: ExperimentConfig, seed: int
) -> tuple[Checkpoint, TrainReport, MetricsReport, np.ndarray]:
    """From-scratch training on the vessel's own noon training rows."""
    noon_std = standardize(vd.noon_train)
    params = init_params(
        network_dims(vd.width), derive_seed(seed, vd.vessel_id, "scratch-init")
    )
    cfg = config.scratch_config(derive_seed(seed, vd.vessel_id, "scratch-shuffle"))
    model, report = train(params, noon_std, cfg)
    test_std = apply_standardization(
        vd.noon_test, noon_std.feature_means, noon_std.feature_stds
    )
    preds = predict(model, test_std.rows)
    metrics = evaluate(
        vd.noon_test.targets, preds, nmae_denominator=config.nmae_denominator
    )
    ckpt = Checkpoint(
        params=model,
        feature_means=noon_std.feature_means,
        feature_stds=noon_std.feature_stds,
        seed=seed,
        trained_on=f"noon-scratch:{vd.vessel_id}",
    )
    return ckpt, report, metrics, preds


def finetune_model(
    vd: VesselData, base: Checkpoint, config: ExperimentConfig, seed: int
) -> tuple[Checkpoint, TrainReport, MetricsReport, np.ndarray]:
    """Fine-tune the base checkpoint on the vessel's noon training rows.

    The frozen feature layers expect inputs scaled exactly as during
    pretraining, so the base vessel's standardization is applied to the
    noon rows rather than refitting."""
    train_std = apply_standardization(
        vd.noon_train, base.feature_means, base.feature_stds
    )
    cfg = config.finetune_config(derive_seed(seed, vd.vessel_id, "tl-shuffle"))
    model, report = fine_tune(
        base.params, train_std, cfg, reinit_head=config.reinit_head
    )
    test_std = apply_standardization(
        vd.noon_test, base.feature_means, base.feature_stds
    )
    preds = predict(model, test_std.rows)
    metrics = evaluate(
        vd.noon_test.targets, preds, nmae_denominator=config.nmae_denominator
    )
    ckpt = Checkpoint(
        params=model,
        feature_means=base.feature_means,
        feature_stds=base.feature_stds,
        seed=seed,
        trained_on=f"noon-tl:{vd.vessel_id}",
    )
    return ckpt, report, metrics, preds


@dataclass
class ExperimentResult:
    out_dir: Path
    base_vessel: str
    aggregates: dict[tuple[str, str], RunAggregate]
    runs: dict[tuple[str, str], list[MetricsReport]]
    manifest: dict


def _recipe_dict(cfg: TrainConfig) -> dict:
    doc = dict(cfg.__dict__)
    doc["seed"] = "derived per (vessel, seed, arm)"
    return doc


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _cell(value) -> str:
    if isinstance(value, float):
        return serialize.fmt_float(value)
    return str(value)


def _agg_cells(agg: RunAggregate, metric_names, with_median=False) -> list[str]:
    cells = []
    for name in metric_names:
        cells.append(_cell(getattr(agg.mean, name)))
        cells.append(_cell(getattr(agg.sd, name)))
        if with_median:
            cells.append(_cell(getattr(agg.median, name)))
    return cells


def run_full_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute the whole protocol and write all artifacts under out_dir.

    Any failure rewrites the output manifest with the failing stage and
    re-raises, so partial outputs are explicitly marked incomplete.
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _run(config, out)
    except StageFailure as failure:
        serialize.dump_file(
            {
                "status": "incomplete",
                "failed_stage": failure.stage,
                "error": str(failure.cause),
                "config": config.to_dict(),
            },
            out / "manifest.json",
        )
        raise


def _run(config: ExperimentConfig, out: Path) -> ExperimentResult:
    fleet = load_fleet_data(
        config.data_dir,
        boundary=config.boundary,
        encode_directions=config.encode_directions,
    )
    vessel_ids = list(fleet.vessels)
    seeds = config.seeds
    checkpoint_seed = (
        config.checkpoint_seed if config.checkpoint_seed is not None else seeds[0]
    )

    (out / "tables").mkdir(exist_ok=True)
    (out / "plots").mkdir(exist_ok=True)
    (out / "checkpoints").mkdir(exist_ok=True)

    runs: dict[tuple[str, str], list[MetricsReport]] = {}
    base_ckpts: dict[int, Checkpoint] = {}
    sensor_ckpts: dict[tuple[str, int], Checkpoint] = {}
    saved_reports: dict[str, TrainReport] = {}

    # sensor arm: one model per (vessel, seed)
    for vessel_id in vessel_ids:
        vd = fleet.vessels[vessel_id]
        for seed in seeds:
            with _stage(f"sensor-train[{vessel_id},seed={seed}]"):
                ckpt, report, metrics = train_sensor_model(vd, config, seed)
            runs.setdefault((vessel_id, "sensor"), []).append(metrics)
            sensor_ckpts[(vessel_id, seed)] = ckpt
            if seed == checkpoint_seed:
                save_checkpoint(ckpt, out / "checkpoints" / f"sensor_{vessel_id}.json")
                saved_reports[f"sensor_{vessel_id}"] = report

    # base selection on mean sensor-test performance
    with _stage("select-base"):
        mean_sensor = {
            v: aggregate(runs[(v, "sensor")]).mean for v in vessel_ids
        }
        auto_choice = select_base_vessel(mean_sensor)
        base_vessel = config.base_vessel or auto_choice
        if base_vessel not in fleet.vessels:
            raise ConfigurationError(f"base vessel {base_vessel!r} not in fleet")
    for seed in seeds:
        base_ckpts[seed] = sensor_ckpts[(base_vessel, seed)]

    # noon arms; the scratch arm also covers the base vessel so the
    # sensor-vs-noon table has every row
    targets = [v for v in vessel_ids if v != base_vessel]
    checksums: dict[str, dict] = {}
    plot_sums: dict[str, dict[str, np.ndarray]] = {}

    for vessel_id in vessel_ids:
        vd = fleet.vessels[vessel_id]
        split_checksum = matrix_checksum(vd.noon_train)
        checksums[vessel_id] = {
            "noon_train_rows": int(vd.noon_train.n),
            "noon_test_rows": int(vd.noon_test.n),
            "noon_train_sha256": split_checksum,
            "consumed_by": [],
        }
        for seed in seeds:
            with _stage(f"scratch-train[{vessel_id},seed={seed}]"):
                if matrix_checksum(vd.noon_train) != split_checksum:
                    raise DataError("noon train split changed between arms")
                ckpt, report, metrics, preds = train_scratch_model(vd, config, seed)
            runs.setdefault((vessel_id, "scratch"), []).append(metrics)
            if vessel_id in targets:
                acc = plot_sums.setdefault(
                    vessel_id,
                    {
                        "scratch": np.zeros(vd.noon_test.n),
                        "tl": np.zeros(vd.noon_test.n),
                    },
                )
                acc["scratch"] += preds
            if seed == checkpoint_seed:
                save_checkpoint(ckpt, out / "checkpoints" / f"scratch_{vessel_id}.json")
                saved_reports[f"scratch_{vessel_id}"] = report
        checksums[vessel_id]["consumed_by"].append("scratch")

    for vessel_id in targets:
        vd = fleet.vessels[vessel_id]
        for seed in seeds:
            with _stage(f"finetune[{vessel_id},seed={seed}]"):
                if matrix_checksum(vd.noon_train) != checksums[vessel_id]["noon_train_sha256"]:
                    raise DataError("noon train split changed between arms")
                ckpt, report, metrics, preds = finetune_model(
                    vd, base_ckpts[seed], config, seed
                )
            runs.setdefault((vessel_id, "tl"), []).append(metrics)
            plot_sums[vessel_id]["tl"] += preds
            if seed == checkpoint_seed:
                save_checkpoint(ckpt, out / "checkpoints" / f"tl_{vessel_id}.json")
                saved_reports[f"tl_{vessel_id}"] = report
        checksums[vessel_id]["consumed_by"].append("tl")

    with _stage("aggregate"):
        aggregates = {key: aggregate(reports) for key, reports in runs.items()}

    with _stage("write-tables"):
        _write_tables(out, fleet, vessel_ids, targets, base_vessel, aggregates, runs, seeds)

    with _stage("write-plots"):
        k = float(len(seeds))
        for vessel_id in targets:
            vd = fleet.vessels[vessel_id]
            dates = [
                datetime.fromtimestamp(t, tz=timezone.utc).date().isoformat()
                for t in vd.noon_test.timestamps
            ]
            rows = [
                [
                    dates[i],
                    _cell(float(vd.noon_test.targets[i])),
                    _cell(float(plot_sums[vessel_id]["scratch"][i] / k)),
                    _cell(float(plot_sums[vessel_id]["tl"][i] / k)),
                ]
                for i in range(vd.noon_test.n)
            ]
            _write_csv(
                out / "plots" / f"{vessel_id}_noon_test.csv",
                ["date", "actual_kw", "predicted_scratch_kw", "predicted_tl_kw"],
                rows,
            )

    with _stage("write-reports"):
        for name, report in saved_reports.items():
            serialize.dump_file(
                report.to_dict(), out / "checkpoints" / f"{name}.report.json"
            )

    manifest = {
        "status": "complete",
        "config": config.to_dict(),
        "boundary": fleet.boundary.isoformat(),
        "base_vessel": base_vessel,
        "base_selection": {
            "mode": "configured" if config.base_vessel else "auto",
            "auto_choice": auto_choice,
            "mean_sensor_mape": {
                v: mean_sensor[v].mape for v in vessel_ids
            },
        },
        "recipes": {
            "sensor": _recipe_dict(config.sensor_config(0)),
            "finetune": _recipe_dict(config.finetune_config(0)),
            "scratch": _recipe_dict(config.scratch_config(0)),
        },
        "noon_splits": checksums,
        "checkpoint_seed": checkpoint_seed,
        "n_seeds": len(seeds),
        "seeds": list(seeds),
    }
    with _stage("write-manifest"):
        serialize.dump_file(manifest, out / "manifest.json")

    return ExperimentResult(
        out_dir=out,
        base_vessel=base_vessel,
        aggregates=aggregates,
        runs=runs,
        manifest=manifest,
    )


def _write_tables(out, fleet, vessel_ids, targets, base_vessel, aggregates, runs, seeds):
    k = len(seeds)

    rows = []
    for vessel_id in vessel_ids:
        for arm in ARMS:
            if (vessel_id, arm) not in runs:
                continue
            for seed, rep in zip(seeds, runs[(vessel_id, arm)]):
                rows.append(
                    [
                        vessel_id,
                        fleet.vessels[vessel_id].category,
                        arm,
                        seed,
                        rep.n,
                        _cell(rep.mae),
                        _cell(rep.nmae),
                        _cell(rep.mape),
                        _cell(rep.r2),
                    ]
                )
    _write_csv(
        out / "tables" / "runs.csv",
        ["vessel", "category", "arm", "seed", "n", "mae", "nmae", "mape", "r2"],
        rows,
    )

    rows = []
    for vessel_id in vessel_ids:
        sensor = aggregates[(vessel_id, "sensor")]
        noon = aggregates[(vessel_id, "scratch")]
        rows.append(
            [vessel_id, fleet.vessels[vessel_id].category, k]
            + _agg_cells(sensor, ("r2", "nmae", "mape"))
            + _agg_cells(noon, ("r2", "nmae", "mape"))
        )
    _write_csv(
        out / "tables" / "sensor_vs_noon.csv",
        ["vessel", "category", "n_seeds"]
        + [
            f"sensor_{m}_{s}" for m in ("r2", "nmae", "mape") for s in ("mean", "sd")
        ]
        + [f"noon_{m}_{s}" for m in ("r2", "nmae", "mape") for s in ("mean", "sd")],
        rows,
    )

    rows = []
    for vessel_id in targets:
        scratch = aggregates[(vessel_id, "scratch")]
        tl = aggregates[(vessel_id, "tl")]
        rows.append(
            [vessel_id, fleet.vessels[vessel_id].category, k]
            + _agg_cells(scratch, ("r2", "mae", "mape"))
            + _agg_cells(tl, ("r2", "mae", "mape"))
        )
    _write_csv(
        out / "tables" / "scratch_vs_tl.csv",
        ["vessel", "category", "n_seeds"]
        + [
            f"scratch_{m}_{s}" for m in ("r2", "mae", "mape") for s in ("mean", "sd")
        ]
        + [f"tl_{m}_{s}" for m in ("r2", "mae", "mape") for s in ("mean", "sd")],
        rows,
    )

    rows = []
    for vessel_id in targets:
        cells = [vessel_id, fleet.vessels[vessel_id].category, k]
        for arm in ("sensor", "tl", "scratch"):
            agg = aggregates[(vessel_id, arm)]
            cells += [
                _cell(agg.mean.nmae),
                _cell(agg.sd.nmae),
                _cell(agg.median.nmae),
            ]
        rows.append(cells)
    _write_csv(
        out / "tables" / "nmae_bridge.csv",
        ["vessel", "category", "n_seeds"]
        + [
            f"nmae_{arm}_{s}"
            for arm in ("sensor", "tl", "scratch")
            for s in ("mean", "sd", "median")
        ],
        rows,
    )

    def short(x: float) -> str:
        return format(x, ".4f")

    lines = [f"base vessel: {base_vessel}", ""]
    lines.append("shaft power prediction, sensor data vs noon reports (mean over seeds)")
    lines.append(
        format_table(
            ["vessel", "R2 (SD)", "NMAE (SD)", "MAPE (SD)", "R2 (NR)", "NMAE (NR)", "MAPE (NR)"],
            [
                [
                    v,
                    short(aggregates[(v, "sensor")].mean.r2),
                    short(aggregates[(v, "sensor")].mean.nmae),
                    short(aggregates[(v, "sensor")].mean.mape),
                    short(aggregates[(v, "scratch")].mean.r2),
                    short(aggregates[(v, "scratch")].mean.nmae),
                    short(aggregates[(v, "scratch")].mean.mape),
                ]
                for v in vessel_ids
            ],
        )
    )
    lines.append("")
    lines.append("noon-report test set, training from scratch vs transfer learning")
    lines.append(
        format_table(
            ["vessel", "R2 scratch", "MAE scratch", "MAPE scratch", "R2 TL", "MAE TL", "MAPE TL"],
            [
                [
                    v,
                    short(aggregates[(v, "scratch")].mean.r2),
                    short(aggregates[(v, "scratch")].mean.mae),
                    short(aggregates[(v, "scratch")].mean.mape),
                    short(aggregates[(v, "tl")].mean.r2),
                    short(aggregates[(v, "tl")].mean.mae),
                    short(aggregates[(v, "tl")].mean.mape),
                ]
                for v in targets
            ],
        )
    )
    lines.append("")
    lines.append("NMAE bridge: sensor model vs transfer learning vs scratch")
    lines.append(
        format_table(
            ["vessel", "NMAE sensor", "NMAE TL", "NMAE scratch"],
            [
                [
                    v,
                    short(aggregates[(v, "sensor")].mean.nmae),
                    short(aggregates[(v, "tl")].mean.nmae),
                    short(aggregates[(v, "scratch")].mean.nmae),
                ]
                for v in targets
            ],
        )
    )
    lines.append("")
    with open(out / "tables" / "summary.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
