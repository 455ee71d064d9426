"""Synthetic fleet generator: seeded vessel specs, met-ocean grids,
high-frequency sensor streams, and daily noon reports aggregated from them.

The ground-truth propulsion law is a cubic rpm-power backbone plus wave,
swell, and draft resistance terms. Sister vessels share coefficients to
within a fraction of a percent, the similar vessel deviates by up to 10%,
and the different vessel deviates by up to 40% and bends the rpm exponent.
Noon reports are noisier than sensor rows (4x noise plus a reporting bias),
so models trained on them alone face the same handicap the transfer
pipeline is meant to overcome.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, asdict
from datetime import date
from pathlib import Path

import numpy as np

from . import serialize
from .data_model import (
    NoonReport,
    SensorRecord,
    VesselMeta,
    date_to_epoch,
    write_noon_csv,
    write_sensor_csv,
)
from .errors import ConfigurationError, DataError
from .weather_fusion import WeatherGrid, relative_direction, save_grid, trilinear_many


@dataclass(frozen=True)
class VesselSpec:
    """Coefficients of one vessel's ground-truth power law and its
    measurement noise levels."""

    vessel_id: str
    category: str
    power_coeff: float
    rpm_exponent: float
    wave_drag_coeff: float
    swell_drag_coeff: float
    draft_sensitivity: float
    noise_sd_sensor: float
    noise_sd_noon: float
    report_bias: float

    def __post_init__(self):
        if self.power_coeff <= 0.0:
            raise ConfigurationError("power_coeff must be positive")
        if self.noise_sd_sensor < 0.0 or self.noise_sd_noon < 0.0:
            raise ConfigurationError("noise SDs must be non-negative")


@dataclass(frozen=True)
class OperatingState:
    """Instantaneous operating point; fields may be scalars or arrays."""

    rpm: float
    stw_knots: float
    draft_mid_m: float
    wave_height_m: float
    swell_height_m: float
    wave_dir_rel_deg: float
    wind_dir_rel_deg: float


def ground_truth_power(spec: VesselSpec, state: OperatingState):
    """Deterministic shaft power (kW) for an operating point.

    Cubic-law propulsion plus quadratic wave drag weighted by relative
    wave heading, quadratic swell drag, and a draft-times-speed-squared
    resistance term. Vectorizes over array-valued states.
    """
    rpm = np.asarray(state.rpm, dtype=np.float64)
    heading = np.cos(np.radians(np.asarray(state.wave_dir_rel_deg, dtype=np.float64)))
    power = (
        spec.power_coeff * rpm**spec.rpm_exponent
        + spec.wave_drag_coeff
        * np.asarray(state.wave_height_m, dtype=np.float64) ** 2
        * (1.0 + 0.5 * heading)
        + spec.swell_drag_coeff * np.asarray(state.swell_height_m, dtype=np.float64) ** 2
        + spec.draft_sensitivity
        * np.asarray(state.draft_mid_m, dtype=np.float64)
        * np.asarray(state.stw_knots, dtype=np.float64) ** 2
    )
    if power.ndim == 0:
        return float(power)
    return power


_BASE = {
    "power_coeff": 0.012,
    "rpm_exponent": 3.0,
    "wave_drag_coeff": 42.0,
    "swell_drag_coeff": 22.0,
    "draft_sensitivity": 0.35,
}

_CATEGORY_JITTER = {"sister": 0.004, "similar": 0.10, "different": 0.35}

DIFFERENT_RPM_EXPONENT = 2.75
_RPM_REFERENCE = 65.0

SENSOR_NOISE_SD_KW = 120.0
NOON_NOISE_FACTOR = 4.0


def _perturbed(rng: np.random.Generator, value: float, rel: float) -> float:
    return value * (1.0 + rng.uniform(-rel, rel))


def make_vessel_spec(rng: np.random.Generator, vessel_id: str, category: str) -> VesselSpec:
    jitter = _CATEGORY_JITTER.get(category)
    if jitter is None:
        raise ConfigurationError(f"unknown vessel category {category!r}")
    coeff = {k: _perturbed(rng, v, jitter) for k, v in _BASE.items() if k != "rpm_exponent"}
    exponent = _BASE["rpm_exponent"]
    if category == "different":
        exponent = DIFFERENT_RPM_EXPONENT
        # keep the power scale comparable while bending the curve shape
        coeff["power_coeff"] *= _RPM_REFERENCE ** (_BASE["rpm_exponent"] - exponent)
    return VesselSpec(
        vessel_id=vessel_id,
        category=category,
        rpm_exponent=exponent,
        noise_sd_sensor=SENSOR_NOISE_SD_KW,
        noise_sd_noon=NOON_NOISE_FACTOR * SENSOR_NOISE_SD_KW,
        report_bias=float(rng.uniform(-140.0, 140.0)),
        **coeff,
    )


def make_fleet(
    seed: int, n_sisters: int = 4, n_similar: int = 1, n_different: int = 1
) -> list[VesselSpec]:
    """Seeded fleet: sisters first, then similar, then different vessels."""
    rng = np.random.default_rng(seed)
    specs = []
    for i in range(n_sisters):
        specs.append(make_vessel_spec(rng, f"sis_v{i + 1}", "sister"))
    for i in range(n_similar):
        specs.append(make_vessel_spec(rng, f"sim_v{i + 1}", "similar"))
    for i in range(n_different):
        specs.append(make_vessel_spec(rng, f"dif_v{i + 1}", "different"))
    return specs


@dataclass(frozen=True)
class VoyageScenario:
    """Shape of one vessel's voyage and its sampling cadence."""

    start: date
    duration_days: int
    sample_interval_s: int = 900
    seed: int = 0
    rpm_low: float = 48.0
    rpm_high: float = 85.0
    stw_per_rpm: float = 0.16
    port_every_days: float = 45.0
    port_duration_days: float = 1.5

    def __post_init__(self):
        if self.duration_days < 2:
            raise ConfigurationError("scenario must span at least 2 days")
        if self.sample_interval_s < 1 or 86400 % self.sample_interval_s != 0:
            raise ConfigurationError(
                f"sample interval {self.sample_interval_s}s must divide a day"
            )

    @property
    def samples_per_day(self) -> int:
        return 86400 // self.sample_interval_s


def gen_weather_grid(
    lat_range: tuple[float, float],
    lon_range: tuple[float, float],
    t_start: float,
    t_end: float,
    seed: int,
    spacing_deg: float = 0.5,
    step_s: int = 21600,
) -> WeatherGrid:
    """Smooth seeded wave/swell/direction fields on a regular lattice."""
    lat_axis = np.arange(lat_range[0], lat_range[1] + 1e-9, spacing_deg)
    lon_axis = np.arange(lon_range[0], lon_range[1] + 1e-9, spacing_deg)
    n_t = int(math.ceil((t_end - t_start) / step_s)) + 1
    time_axis = t_start + step_s * np.arange(n_t)

    rng = np.random.default_rng(seed)
    t = (time_axis - time_axis[0])[:, None, None] / 86400.0
    la = lat_axis[None, :, None]
    lo = lon_axis[None, None, :]

    def field(base, amp1, period1, amp2, sp_scale, lo_amp):
        p = rng.uniform(0.0, 2.0 * np.pi, size=4)
        return (
            base
            + amp1 * np.sin(2.0 * np.pi * t / period1 + p[0])
            + amp2 * np.sin(2.0 * np.pi * t / (period1 * 0.31) + p[1])
            + sp_scale * np.sin(1.1 * la + p[2])
            + lo_amp * np.cos(0.9 * lo + p[3])
        )

    wave = np.clip(field(2.1, 1.1, 9.0, 0.5, 0.45, 0.35), 0.05, None)
    swell = np.clip(field(1.2, 0.6, 14.0, 0.3, 0.25, 0.2), 0.05, None)
    wave_dir = field(180.0, 140.0, 11.0, 55.0, 30.0, 25.0) % 360.0
    wind_dir = field(200.0, 150.0, 6.0, 60.0, 25.0, 30.0) % 360.0

    fields = {
        "wave_height_m": np.round(wave, 5),
        "swell_height_m": np.round(swell, 5),
        "wave_dir_north_deg": np.round(wave_dir, 5) % 360.0,
        "wind_dir_north_deg": np.round(wind_dir, 5) % 360.0,
    }
    return WeatherGrid(
        lat_axis=lat_axis, lon_axis=lon_axis, time_axis=time_axis, fields=fields
    )


def _track(
    rng: np.random.Generator,
    stw: np.ndarray,
    interval_s: int,
    lat_range: tuple[float, float],
    lon_range: tuple[float, float],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reflecting random-walk track inside the grid box; returns
    (lat, lon, course)."""
    n = stw.size
    margin = 0.25
    lat_lo, lat_hi = lat_range[0] + margin, lat_range[1] - margin
    lon_lo, lon_hi = lon_range[0] + margin, lon_range[1] - margin
    lat = np.empty(n)
    lon = np.empty(n)
    heading = np.empty(n)
    lat[0] = rng.uniform(lat_lo + 0.5, lat_hi - 0.5)
    lon[0] = rng.uniform(lon_lo + 0.5, lon_hi - 0.5)
    theta = rng.uniform(0.0, 360.0)
    turns = rng.normal(0.0, 2.0, size=n)
    step_deg = stw * (interval_s / 3600.0) / 60.0
    for i in range(n):
        heading[i] = theta % 360.0
        if i == n - 1:
            break
        rad = math.radians(theta)
        nlat = lat[i] + step_deg[i] * math.cos(rad)
        nlon = lon[i] + step_deg[i] * math.sin(rad) / math.cos(math.radians(lat[i]))
        if nlat < lat_lo or nlat > lat_hi:
            theta = 180.0 - theta
            nlat = min(max(nlat, lat_lo), lat_hi)
        if nlon < lon_lo or nlon > lon_hi:
            theta = -theta
            nlon = min(max(nlon, lon_lo), lon_hi)
        theta = (theta + turns[i]) % 360.0
        lat[i + 1] = nlat
        lon[i + 1] = nlon
    return lat, lon, heading


def gen_sensor_stream(
    spec: VesselSpec, scenario: VoyageScenario, grid: WeatherGrid
) -> list[SensorRecord]:
    """One record per sample interval, weather filled from the grid, power
    from the ground-truth law plus Gaussian sensor noise. Deterministic
    per scenario seed."""
    rng = np.random.default_rng(scenario.seed)
    n = scenario.duration_days * scenario.samples_per_day
    t0 = date_to_epoch(scenario.start)
    times = t0 + scenario.sample_interval_s * np.arange(n, dtype=np.float64)
    days = (times - t0) / 86400.0

    phases = rng.uniform(0.0, 2.0 * np.pi, size=4)
    mid = 0.5 * (scenario.rpm_low + scenario.rpm_high)
    amp = 0.5 * (scenario.rpm_high - scenario.rpm_low)
    rpm = (
        mid
        + amp
        * (
            0.55 * np.sin(2.0 * np.pi * days / 17.0 + phases[0])
            + 0.30 * np.sin(2.0 * np.pi * days / 4.3 + phases[1])
            + 0.15 * np.sin(2.0 * np.pi * days / 1.1 + phases[2])
        )
        + rng.normal(0.0, 0.8, size=n)
    )
    rpm = np.clip(rpm, scenario.rpm_low * 0.9, scenario.rpm_high * 1.05)

    in_port = np.zeros(n, dtype=bool)
    n_stops = int(scenario.duration_days / scenario.port_every_days)
    for k in range(n_stops):
        start_day = rng.uniform(
            (k + 0.2) * scenario.port_every_days, (k + 0.8) * scenario.port_every_days
        )
        in_port |= (days >= start_day) & (days < start_day + scenario.port_duration_days)
    rpm[in_port] = 0.0

    stw = (
        scenario.stw_per_rpm
        * rpm
        * (1.0 + 0.04 * np.sin(2.0 * np.pi * days / 2.7 + phases[3]))
        + rng.normal(0.0, 0.2, size=n)
    )
    stw = np.clip(stw, 0.0, None)

    # drafts change between voyage legs, constant within one
    draft_mid = np.empty(n)
    trim = np.empty(n)
    day = 0.0
    while day < scenario.duration_days:
        leg_days = float(rng.uniform(6.0, 13.0))
        sel = (days >= day) & (days < day + leg_days)
        draft_mid[sel] = rng.uniform(8.6, 12.4)
        trim[sel] = rng.uniform(-0.5, 0.5)
        day += leg_days
    draft_aft = draft_mid + 0.5 * trim
    draft_fore = draft_mid - 0.5 * trim

    lat, lon, course = _track(
        rng,
        stw,
        scenario.sample_interval_s,
        (float(grid.lat_axis[0]), float(grid.lat_axis[-1])),
        (float(grid.lon_axis[0]), float(grid.lon_axis[-1])),
    )

    wave = trilinear_many(grid, "wave_height_m", times, lat, lon)
    swell = trilinear_many(grid, "swell_height_m", times, lat, lon)
    wave_north = trilinear_many(grid, "wave_dir_north_deg", times, lat, lon)
    wind_north = trilinear_many(grid, "wind_dir_north_deg", times, lat, lon)
    wave_rel = (wave_north - course) % 360.0
    wind_rel = (wind_north - course) % 360.0
    wave_rel[wave_rel >= 360.0] = 0.0
    wind_rel[wind_rel >= 360.0] = 0.0

    power = ground_truth_power(
        spec,
        OperatingState(
            rpm=rpm,
            stw_knots=stw,
            draft_mid_m=draft_mid,
            wave_height_m=wave,
            swell_height_m=swell,
            wave_dir_rel_deg=wave_rel,
            wind_dir_rel_deg=wind_rel,
        ),
    )
    if spec.noise_sd_sensor > 0.0:
        power = power + rng.normal(0.0, spec.noise_sd_sensor, size=n)

    return [
        SensorRecord(
            timestamp=float(times[i]),
            stw_knots=float(stw[i]),
            rpm=float(rpm[i]),
            draft_aft_m=float(draft_aft[i]),
            draft_fore_m=float(draft_fore[i]),
            lat_deg=float(lat[i]),
            lon_deg=float(lon[i]),
            course_deg=float(course[i]),
            shaft_power_kw=float(power[i]),
            wave_height_m=float(wave[i]),
            swell_height_m=float(swell[i]),
            wave_dir_rel_deg=float(wave_rel[i]),
            wind_dir_rel_deg=float(wind_rel[i]),
        )
        for i in range(n)
    ]


def circular_mean_deg(angles_deg) -> float:
    """Mean direction via unit vectors, result in [0, 360)."""
    rad = np.radians(np.asarray(angles_deg, dtype=np.float64))
    mean = math.degrees(
        math.atan2(float(np.mean(np.sin(rad))), float(np.mean(np.cos(rad))))
    )
    mean %= 360.0
    if mean >= 360.0:
        mean = 0.0
    return mean


def gen_noon_reports(
    stream: list[SensorRecord], spec: VesselSpec, seed: int
) -> list[NoonReport]:
    """Aggregate a sensor stream into one report per complete UTC day.

    Scalar fields take arithmetic daily means, directions circular means;
    the reported power is the daily mean plus the vessel's reporting bias
    and Gaussian noon noise. Days with incomplete sample coverage
    (trailing partial days) are dropped.
    """
    if not stream:
        raise DataError("empty sensor stream")
    interval = None
    if len(stream) > 1:
        interval = stream[1].timestamp - stream[0].timestamp
    by_day: dict[date, list[SensorRecord]] = {}
    for rec in stream:
        day = date.fromordinal(int(rec.timestamp // 86400) + date(1970, 1, 1).toordinal())
        by_day.setdefault(day, []).append(rec)
    if interval is None or interval <= 0 or 86400.0 % interval != 0.0:
        raise DataError("stream is not regularly sampled at a day-dividing interval")
    per_day = int(round(86400.0 / interval))
    complete = [d for d in sorted(by_day) if len(by_day[d]) == per_day]
    if not complete:
        raise DataError("stream does not cover one full day")

    rng = np.random.default_rng(seed)
    reports = []
    for day in complete:
        rows = by_day[day]
        mean = lambda field: float(np.mean([getattr(r, field) for r in rows]))
        power = mean("shaft_power_kw") + spec.report_bias
        if spec.noise_sd_noon > 0.0:
            power += float(rng.normal(0.0, spec.noise_sd_noon))
        reports.append(
            NoonReport(
                date=day,
                stw_knots=mean("stw_knots"),
                rpm=mean("rpm"),
                draft_aft_m=mean("draft_aft_m"),
                draft_fore_m=mean("draft_fore_m"),
                wave_height_m=mean("wave_height_m"),
                swell_height_m=mean("swell_height_m"),
                wave_dir_rel_deg=circular_mean_deg(
                    [r.wave_dir_rel_deg for r in rows]
                ),
                wind_dir_rel_deg=circular_mean_deg(
                    [r.wind_dir_rel_deg for r in rows]
                ),
                shaft_power_kw=power,
            )
        )
    return reports


_CATEGORY_DIMENSIONS = {
    "sister": (204.0, 32.0),
    "similar": (212.0, 34.0),
    "different": (209.0, 30.0),
}


def vessel_meta(spec: VesselSpec) -> VesselMeta:
    length, beam = _CATEGORY_DIMENSIONS[spec.category]
    return VesselMeta(
        vessel_id=spec.vessel_id, category=spec.category, length_m=length, beam_m=beam
    )


@dataclass(frozen=True)
class FleetConfig:
    """Sizing of a generated fleet: one richly instrumented source vessel
    plus target vessels whose noon histories are the scarce resource."""

    seed: int = 0
    boundary: date = date(2024, 1, 1)
    lat_range: tuple[float, float] = (45.0, 52.0)
    lon_range: tuple[float, float] = (-14.0, -6.0)
    grid_spacing_deg: float = 0.5
    grid_step_s: int = 21600
    n_sisters: int = 4
    n_similar: int = 1
    n_different: int = 1
    source_vessel: str = "sis_v1"
    source_start: date = date(2023, 5, 20)
    source_days: int = 290
    source_interval_s: int = 900
    target_start: date = date(2022, 11, 10)
    target_days: int = 420
    target_interval_s: int = 7200

    @classmethod
    def tiny(cls, seed: int = 0) -> "FleetConfig":
        """Small fleet for fast smoke tests."""
        return cls(
            seed=seed,
            n_sisters=2,
            n_similar=1,
            n_different=0,
            source_start=date(2023, 11, 20),
            source_days=50,
            source_interval_s=3600,
            target_start=date(2023, 10, 1),
            target_days=110,
            target_interval_s=14400,
        )


def _scenario_for(cfg: FleetConfig, spec: VesselSpec) -> VoyageScenario:
    if spec.vessel_id == cfg.source_vessel:
        return VoyageScenario(
            start=cfg.source_start,
            duration_days=cfg.source_days,
            sample_interval_s=cfg.source_interval_s,
            seed=_derive(cfg.seed, spec.vessel_id, "voyage"),
        )
    return VoyageScenario(
        start=cfg.target_start,
        duration_days=cfg.target_days,
        sample_interval_s=cfg.target_interval_s,
        seed=_derive(cfg.seed, spec.vessel_id, "voyage"),
    )


def _derive(base: int, *parts) -> int:
    digest = hashlib.sha256(
        ":".join([str(base)] + [str(p) for p in parts]).encode()
    ).digest()
    return int.from_bytes(digest[:4], "big")


def generate_fleet_data(cfg: FleetConfig, out_dir) -> dict:
    """Write per-vessel sensor and noon CSVs, the shared weather grid, and
    a manifest describing everything; returns the manifest dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    specs = make_fleet(cfg.seed, cfg.n_sisters, cfg.n_similar, cfg.n_different)
    if cfg.source_vessel not in {s.vessel_id for s in specs}:
        raise ConfigurationError(
            f"source vessel {cfg.source_vessel!r} not in generated fleet"
        )

    scenarios = {s.vessel_id: _scenario_for(cfg, s) for s in specs}
    t_lo = min(date_to_epoch(sc.start) for sc in scenarios.values())
    t_hi = max(
        date_to_epoch(sc.start) + sc.duration_days * 86400.0
        for sc in scenarios.values()
    )
    grid = gen_weather_grid(
        cfg.lat_range,
        cfg.lon_range,
        t_lo - cfg.grid_step_s,
        t_hi + cfg.grid_step_s,
        seed=_derive(cfg.seed, "grid"),
        spacing_deg=cfg.grid_spacing_deg,
        step_s=cfg.grid_step_s,
    )
    save_grid(grid, out / "grid.json")

    vessels = []
    for spec in specs:
        scenario = scenarios[spec.vessel_id]
        stream = gen_sensor_stream(spec, scenario, grid)
        noon = gen_noon_reports(stream, spec, seed=_derive(cfg.seed, spec.vessel_id, "noon"))
        sensor_file = f"{spec.vessel_id}_sensor.csv"
        noon_file = f"{spec.vessel_id}_noon.csv"
        write_sensor_csv(stream, out / sensor_file)
        write_noon_csv(noon, out / noon_file)
        meta = vessel_meta(spec)
        vessels.append(
            {
                "vessel_id": spec.vessel_id,
                "category": spec.category,
                "spec": asdict(spec),
                "meta": asdict(meta),
                "scenario": {
                    "start": scenario.start.isoformat(),
                    "duration_days": scenario.duration_days,
                    "sample_interval_s": scenario.sample_interval_s,
                    "seed": scenario.seed,
                },
                "sensor_file": sensor_file,
                "noon_file": noon_file,
                "n_sensor_rows": len(stream),
                "n_noon_rows": len(noon),
            }
        )

    manifest = {
        "kind": "synthetic-fleet",
        "seed": cfg.seed,
        "boundary": cfg.boundary.isoformat(),
        "source_vessel": cfg.source_vessel,
        "lat_range": list(cfg.lat_range),
        "lon_range": list(cfg.lon_range),
        "grid_file": "grid.json",
        "grid_spacing_deg": cfg.grid_spacing_deg,
        "grid_step_s": cfg.grid_step_s,
        "vessels": vessels,
    }
    serialize.dump_file(manifest, out / "manifest.json")
    return manifest

