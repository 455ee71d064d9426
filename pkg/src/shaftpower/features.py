"""Design-matrix construction, correlation screening, and input scaling.

The default feature vector is, in fixed order: speed through water, shaft
RPM, draft amidships (mean of aft and fore), wave height, swell height,
and the vessel-relative wave and wind directions. Directions are fed as
raw degrees; an optional sin/cos encoding widens the matrix to 9 columns.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .data_model import record_time
from .errors import ConfigurationError, DataError, UndefinedCorrelationError

FEATURE_COLUMNS = (
    "stw_knots",
    "rpm",
    "draft_mid_m",
    "wave_height_m",
    "swell_height_m",
    "wave_dir_rel_deg",
    "wind_dir_rel_deg",
)

ENCODED_FEATURE_COLUMNS = (
    "stw_knots",
    "rpm",
    "draft_mid_m",
    "wave_height_m",
    "swell_height_m",
    "wave_dir_rel_sin",
    "wave_dir_rel_cos",
    "wind_dir_rel_sin",
    "wind_dir_rel_cos",
)

_SOURCE_FIELDS = (
    "stw_knots",
    "rpm",
    "draft_aft_m",
    "draft_fore_m",
    "wave_height_m",
    "swell_height_m",
    "wave_dir_rel_deg",
    "wind_dir_rel_deg",
    "shaft_power_kw",
)


@dataclass(frozen=True)
class FeatureMatrix:
    """Design matrix plus targets and per-row time tags.

    ``feature_means``/``feature_stds`` are populated once the matrix is
    standardized and are the statistics to reuse on held-out rows.
    """

    rows: np.ndarray
    targets: np.ndarray
    timestamps: np.ndarray
    columns: tuple[str, ...]
    standardized: bool = False
    feature_means: np.ndarray | None = None
    feature_stds: np.ndarray | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        stamps = np.asarray(self.timestamps, dtype=np.float64)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "timestamps", stamps)
        object.__setattr__(self, "columns", tuple(self.columns))
        if rows.ndim != 2:
            raise ConfigurationError(f"rows must be 2-D, got shape {rows.shape}")
        n, width = rows.shape
        if n < 1:
            raise ConfigurationError("feature matrix needs at least one row")
        if len(self.columns) != width:
            raise ConfigurationError(
                f"{len(self.columns)} column names for width-{width} matrix"
            )
        if targets.shape != (n,) or stamps.shape != (n,):
            raise ConfigurationError("targets/timestamps must match row count")
        if self.standardized:
            means = np.asarray(self.feature_means, dtype=np.float64)
            stds = np.asarray(self.feature_stds, dtype=np.float64)
            object.__setattr__(self, "feature_means", means)
            object.__setattr__(self, "feature_stds", stds)
            if means.shape != (width,) or stds.shape != (width,):
                raise ConfigurationError("scaler stats must match matrix width")
            if (stds <= 0.0).any():
                raise ConfigurationError("scaler stds must be positive")

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def width(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class RejectedRow:
    index: int
    reason: str


def _feature_row(record, encode_directions: bool):
    values = {}
    for field in _SOURCE_FIELDS:
        v = getattr(record, field, None)
        if v is None:
            return None, field
        values[field] = float(v)
    draft_mid = 0.5 * (values["draft_aft_m"] + values["draft_fore_m"])
    base = [
        values["stw_knots"],
        values["rpm"],
        draft_mid,
        values["wave_height_m"],
        values["swell_height_m"],
    ]
    if encode_directions:
        for key in ("wave_dir_rel_deg", "wind_dir_rel_deg"):
            rad = np.radians(values[key])
            base.extend([np.sin(rad), np.cos(rad)])
    else:
        base.extend([values["wave_dir_rel_deg"], values["wind_dir_rel_deg"]])
    return (base, values["shaft_power_kw"]), None


def build_features(
    records, encode_directions: bool = False
) -> tuple[FeatureMatrix, list[RejectedRow]]:
    """Build the design matrix from fused sensor records or noon reports.

    Rows missing a source field (typically unfused weather) are rejected
    with the missing field named.
    """
    records = list(records)
    rows = []
    targets = []
    stamps = []
    rejects: list[RejectedRow] = []
    for i, record in enumerate(records):
        built, missing = _feature_row(record, encode_directions)
        if built is None:
            rejects.append(RejectedRow(i, missing))
            continue
        row, target = built
        rows.append(row)
        targets.append(target)
        stamps.append(record_time(record))
    if not rows:
        raise DataError(
            f"no usable rows out of {len(records)}; "
            f"first reject: {rejects[0].reason if rejects else 'none'}"
        )
    columns = ENCODED_FEATURE_COLUMNS if encode_directions else FEATURE_COLUMNS
    matrix = FeatureMatrix(
        rows=np.array(rows, dtype=np.float64),
        targets=np.array(targets, dtype=np.float64),
        timestamps=np.array(stamps, dtype=np.float64),
        columns=columns,
    )
    return matrix, rejects


def pearson(x, y) -> float:
    """Pearson correlation coefficient of two equal-length vectors."""
    a = np.asarray(x, dtype=np.float64).ravel()
    b = np.asarray(y, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ConfigurationError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size < 2:
        raise ConfigurationError("pearson needs at least 2 observations")
    da = a - np.mean(a)
    db = b - np.mean(b)
    denom = np.sqrt(np.sum(da * da)) * np.sqrt(np.sum(db * db))
    if denom == 0.0:
        raise UndefinedCorrelationError(
            "zero variance in at least one input; correlation undefined"
        )
    return float(np.sum(da * db) / denom)


def correlation_report(matrix: FeatureMatrix) -> list[tuple[str, float]]:
    """Per-feature correlation with the target, in column order.

    Diagnostic output only; no feature is dropped based on it.
    """
    return [
        (name, pearson(matrix.rows[:, i], matrix.targets))
        for i, name in enumerate(matrix.columns)
    ]


def write_correlation_csv(report, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature", "pearson_r"])
        for name, r in report:
            writer.writerow([name, format(r, ".17g")])


def standardize(matrix: FeatureMatrix) -> FeatureMatrix:
    """Z-score every column with population statistics and remember them
    for reuse on held-out data."""
    if matrix.standardized:
        raise ConfigurationError("matrix is already standardized")
    if matrix.n < 2:
        raise ConfigurationError("standardize needs at least 2 rows")
    means = matrix.rows.mean(axis=0)
    stds = matrix.rows.std(axis=0)
    flat = np.flatnonzero(stds <= 0.0)
    if flat.size:
        raise DataError(
            f"zero-variance feature column {matrix.columns[flat[0]]!r}"
        )
    return replace(
        matrix,
        rows=(matrix.rows - means) / stds,
        standardized=True,
        feature_means=means,
        feature_stds=stds,
    )


def apply_standardization(matrix: FeatureMatrix, means, stds) -> FeatureMatrix:
    """Scale a matrix with externally fitted statistics (no re-fitting)."""
    means = np.asarray(means, dtype=np.float64)
    stds = np.asarray(stds, dtype=np.float64)
    if means.shape != (matrix.width,) or stds.shape != (matrix.width,):
        raise ConfigurationError(
            f"scaler stats of width {means.shape} do not fit matrix width {matrix.width}"
        )
    if (stds <= 0.0).any():
        raise ConfigurationError("scaler stds must be positive")
    return replace(
        matrix,
        rows=(matrix.rows - means) / stds,
        standardized=True,
        feature_means=means,
        feature_stds=stds,
    )
