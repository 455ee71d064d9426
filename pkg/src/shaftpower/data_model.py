"""Observation records, CSV ingestion, cleaning filters, and the
temporal train/test split.

High-frequency sensor rows carry navigation state and shaft power;
weather is attached later by the fusion stage. Daily noon reports carry
their own weather with directions already vessel-relative.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path

from .errors import ConfigurationError, DataError
from .serialize import fmt_float

SENSOR_COLUMNS = (
    "timestamp",
    "stw_knots",
    "rpm",
    "draft_aft_m",
    "draft_fore_m",
    "lat_deg",
    "lon_deg",
    "course_deg",
    "shaft_power_kw",
)

NOON_COLUMNS = (
    "date",
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

VESSEL_CATEGORIES = ("sister", "similar", "different")

POWER_CAP_KW = 12000.0


@dataclass(frozen=True)
class SensorRecord:
    """One high-frequency observation; timestamp in UTC epoch seconds.

    The four weather fields stay None until fusion fills them in.
    """

    timestamp: float
    stw_knots: float
    rpm: float
    draft_aft_m: float
    draft_fore_m: float
    lat_deg: float
    lon_deg: float
    course_deg: float
    shaft_power_kw: float
    wave_height_m: float | None = None
    swell_height_m: float | None = None
    wave_dir_rel_deg: float | None = None
    wind_dir_rel_deg: float | None = None


@dataclass(frozen=True)
class NoonReport:
    """One daily report; directions are relative to the vessel course."""

    date: date
    stw_knots: float
    rpm: float
    draft_aft_m: float
    draft_fore_m: float
    wave_height_m: float
    swell_height_m: float
    wave_dir_rel_deg: float
    wind_dir_rel_deg: float
    shaft_power_kw: float


@dataclass(frozen=True)
class VesselMeta:
    vessel_id: str
    category: str
    length_m: float
    beam_m: float

    def __post_init__(self):
        if self.category not in VESSEL_CATEGORIES:
            raise ConfigurationError(
                f"vessel category {self.category!r} not one of {VESSEL_CATEGORIES}"
            )


@dataclass(frozen=True)
class SplitSpec:
    """Temporal boundary: rows strictly before it train, the rest test."""

    train_end: float


def parse_timestamp(text: str) -> float:
    """ISO-8601 UTC string to epoch seconds."""
    raw = text.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def format_timestamp(epoch_s: float) -> str:
    dt = datetime.fromtimestamp(epoch_s, tz=timezone.utc)
    if dt.microsecond:
        return dt.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_date(text: str) -> date:
    return date.fromisoformat(text.strip())


def date_to_epoch(d: date) -> float:
    """Midnight UTC of a calendar day, epoch seconds."""
    return datetime(d.year, d.month, d.day, tzinfo=timezone.utc).timestamp()


def record_time(record) -> float:
    """Epoch-seconds time key for either record type."""
    if isinstance(record, NoonReport):
        return date_to_epoch(record.date)
    return float(record.timestamp)


@dataclass(frozen=True)
class RowError:
    line_no: int
    reason: str


@dataclass
class IngestResult:
    records: list
    rejects: list[RowError]
    warnings: list[str]


def _read_rows(path, expected_columns) -> tuple[list[dict], list[str]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise DataError(f"{path}: empty file, no header")
        missing = [c for c in expected_columns if c not in header]
        if missing:
            raise DataError(f"{path}: missing required columns {missing}")
        rows = list(reader)
    warnings = []
    if not rows:
        warnings.append(f"{path}: no data rows")
    return rows, warnings


def load_sensor_csv(path) -> IngestResult:
    """Parse sensor rows in file order; malformed rows are collected with
    their line numbers and the rest retained."""
    rows, warnings = _read_rows(path, SENSOR_COLUMNS)
    records: list[SensorRecord] = []
    rejects: list[RowError] = []
    last_ts = None
    for line_no, row in enumerate(rows, start=2):
        try:
            ts = parse_timestamp(row["timestamp"])
            values = {c: float(row[c]) for c in SENSOR_COLUMNS[1:]}
        except (ValueError, TypeError) as exc:
            rejects.append(RowError(line_no, f"unparseable field: {exc}"))
            continue
        if not (-90.0 <= values["lat_deg"] <= 90.0):
            rejects.append(RowError(line_no, f"lat_deg {values['lat_deg']} out of range"))
            continue
        if not (-180.0 <= values["lon_deg"] <= 180.0):
            rejects.append(RowError(line_no, f"lon_deg {values['lon_deg']} out of range"))
            continue
        if not (0.0 <= values["course_deg"] < 360.0):
            rejects.append(
                RowError(line_no, f"course_deg {values['course_deg']} outside [0, 360)")
            )
            continue
        if last_ts is not None and ts <= last_ts:
            rejects.append(RowError(line_no, "timestamp not strictly increasing"))
            continue
        last_ts = ts
        records.append(SensorRecord(timestamp=ts, **values))
    return IngestResult(records, rejects, warnings)


def load_noon_csv(path) -> IngestResult:
    """Parse noon-report rows; one row per calendar day is enforced."""
    rows, warnings = _read_rows(path, NOON_COLUMNS)
    records: list[NoonReport] = []
    rejects: list[RowError] = []
    seen_dates = set()
    for line_no, row in enumerate(rows, start=2):
        try:
            day = parse_date(row["date"])
            values = {c: float(row[c]) for c in NOON_COLUMNS[1:]}
        except (ValueError, TypeError) as exc:
            rejects.append(RowError(line_no, f"unparseable field: {exc}"))
            continue
        if day in seen_dates:
            rejects.append(RowError(line_no, f"duplicate date {day.isoformat()}"))
            continue
        bad_dir = next(
            (
                c
                for c in ("wave_dir_rel_deg", "wind_dir_rel_deg")
                if not (0.0 <= values[c] < 360.0)
            ),
            None,
        )
        if bad_dir:
            rejects.append(RowError(line_no, f"{bad_dir} {values[bad_dir]} outside [0, 360)"))
            continue
        if values["wave_height_m"] < 0.0 or values["swell_height_m"] < 0.0:
            rejects.append(RowError(line_no, "negative wave or swell height"))
            continue
        seen_dates.add(day)
        records.append(NoonReport(date=day, **values))
    return IngestResult(records, rejects, warnings)


def write_sensor_csv(records, path) -> None:
    """Write the sensor schema with lossless 17-significant-digit floats."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SENSOR_COLUMNS)
        for r in records:
            writer.writerow(
                [format_timestamp(r.timestamp)]
                + [fmt_float(getattr(r, c)) for c in SENSOR_COLUMNS[1:]]
            )


def write_noon_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(NOON_COLUMNS)
        for r in records:
            writer.writerow(
                [r.date.isoformat()]
                + [fmt_float(getattr(r, c)) for c in NOON_COLUMNS[1:]]
            )


PREPROCESS_RULES = ("stw_below_2kn", "rpm_below_1", "power_below_1kw", "power_cap")


@dataclass
class DropReport:
    """Per-rule drop counts; a row failing several rules is attributed to
    the first failing rule in the documented order."""

    counts: dict[str, int]
    dropped: list

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def _first_violation(record, apply_power_cap: bool) -> str | None:
    if record.stw_knots < 2.0:
        return "stw_below_2kn"
    if record.rpm < 1.0:
        return "rpm_below_1"
    if record.shaft_power_kw < 1.0:
        return "power_below_1kw"
    if apply_power_cap and record.shaft_power_kw > POWER_CAP_KW:
        return "power_cap"
    return None


def preprocess(records, apply_power_cap: bool = True):
    """Drop rows with stw < 2 kn, rpm < 1, power < 1 kW, or power above
    the 12,000 kW cap. Boundary values are kept (strict comparisons).

    Returns (kept, DropReport); kept and dropped preserve input order and
    partition the input.
    """
    kept = []
    counts = {rule: 0 for rule in PREPROCESS_RULES}
    dropped = []
    for record in records:
        rule = _first_violation(record, apply_power_cap)
        if rule is None:
            kept.append(record)
        else:
            counts[rule] += 1
            dropped.append(record)
    return kept, DropReport(counts=counts, dropped=dropped)


def temporal_split(records, spec: SplitSpec):
    """Split time-ordered records at the boundary: strictly before it goes
    to train, at or after it goes to test. Both sides must be non-empty."""
    train = [r for r in records if record_time(r) < spec.train_end]
    test = [r for r in records if record_time(r) >= spec.train_end]
    if not train or not test:
        raise ConfigurationError(
            f"split boundary {spec.train_end} leaves {len(train)} train and "
            f"{len(test)} test rows; need both non-empty"
        )
    return train, test
