"""Attach gridded met-ocean fields to sensor records.

Fields live on a regular (time, lat, lon) lattice and are read off by
trilinear interpolation. Direction fields are blended through their
(sin, cos) components and recomposed with atan2, because degreewise
interpolation across the 359->1 wrap would invent ~180 degree errors.
Queries outside the grid's bounding box are rejected, never extrapolated.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import serialize
from .data_model import SensorRecord, format_timestamp, parse_timestamp
from .errors import ConfigurationError, DataError, OutOfDomainError

REQUIRED_FIELDS = (
    "wave_height_m",
    "swell_height_m",
    "wave_dir_north_deg",
    "wind_dir_north_deg",
)

ANGULAR_FIELDS = ("wave_dir_north_deg", "wind_dir_north_deg")


@dataclass(frozen=True)
class WeatherGrid:
    """Regular lat/lon/time lattice of named 3-D fields.

    Every field array has shape (len(time_axis), len(lat_axis),
    len(lon_axis)); the grid is read-only after construction.
    """

    lat_axis: np.ndarray
    lon_axis: np.ndarray
    time_axis: np.ndarray
    fields: dict[str, np.ndarray]

    def __post_init__(self):
        for name in ("lat_axis", "lon_axis", "time_axis"):
            axis = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, axis)
            if axis.ndim != 1 or axis.size < 2:
                raise ConfigurationError(f"{name} needs at least 2 points")
            if not np.all(np.diff(axis) > 0):
                raise ConfigurationError(f"{name} must be strictly increasing")
        shape = (self.time_axis.size, self.lat_axis.size, self.lon_axis.size)
        fields = {}
        for name, values in self.fields.items():
            arr = np.asarray(values, dtype=np.float64)
            if arr.shape != shape:
                raise ConfigurationError(
                    f"field {name!r} has shape {arr.shape}, axes imply {shape}"
                )
            if not np.isfinite(arr).all():
                raise ConfigurationError(f"field {name!r} has non-finite entries")
            fields[name] = arr
        for name, arr in fields.items():
            if name in ANGULAR_FIELDS:
                if (arr < 0.0).any() or (arr >= 360.0).any():
                    raise ConfigurationError(f"field {name!r} outside [0, 360)")
            elif name.endswith("_m") and (arr < 0.0).any():
                raise ConfigurationError(f"field {name!r} has negative heights")
        object.__setattr__(self, "fields", fields)


def _locate(axis: np.ndarray, values: np.ndarray, name: str):
    """Bracketing lower index and fractional offset per query value."""
    lo, hi = axis[0], axis[-1]
    bad = (values < lo) | (values > hi) | ~np.isfinite(values)
    if bad.any():
        v = float(values[np.argmax(bad)])
        raise OutOfDomainError(name, v, float(lo), float(hi))
    idx = np.searchsorted(axis, values, side="right") - 1
    idx = np.clip(idx, 0, axis.size - 2)
    frac = (values - axis[idx]) / (axis[idx + 1] - axis[idx])
    return idx, frac


def _blend(field: np.ndarray, it, ft, ia, fa, io, fo) -> np.ndarray:
    """Weighted sum of the 8 lattice corners around each query point."""
    out = np.zeros(it.shape, dtype=np.float64)
    for dt in (0, 1):
        wt = ft if dt else 1.0 - ft
        for da in (0, 1):
            wa = fa if da else 1.0 - fa
            for do in (0, 1):
                wo = fo if do else 1.0 - fo
                out += wt * wa * wo * field[it + dt, ia + da, io + do]
    return out


def trilinear_many(grid: WeatherGrid, field_name: str, times, lats, lons) -> np.ndarray:
    """Vectorized trilinear lookup for arrays of query points."""
    if field_name not in grid.fields:
        raise ConfigurationError(f"grid has no field {field_name!r}")
    t = np.atleast_1d(np.asarray(times, dtype=np.float64))
    la = np.atleast_1d(np.asarray(lats, dtype=np.float64))
    lo = np.atleast_1d(np.asarray(lons, dtype=np.float64))
    it, ft = _locate(grid.time_axis, t, "time")
    ia, fa = _locate(grid.lat_axis, la, "lat")
    io, fo = _locate(grid.lon_axis, lo, "lon")
    field = grid.fields[field_name]
    if field_name in ANGULAR_FIELDS:
        rad = np.radians(field)
        s = _blend(np.sin(rad), it, ft, ia, fa, io, fo)
        c = _blend(np.cos(rad), it, ft, ia, fa, io, fo)
        deg = np.degrees(np.arctan2(s, c)) % 360.0
        deg[deg >= 360.0] = 0.0
        return deg
    return _blend(field, it, ft, ia, fa, io, fo)


def trilinear(grid: WeatherGrid, field_name: str, time: float, lat: float, lon: float) -> float:
    """Interpolate one field at one point inside the grid's bounding box.

    Exact at lattice nodes; linear fields are reproduced exactly. Raises
    OutOfDomainError naming the offending axis for queries outside the box.
    """
    return float(trilinear_many(grid, field_name, [time], [lat], [lon])[0])


def relative_direction(dir_north_deg: float, course_deg: float) -> float:
    """Convert a direction relative to north into one relative to the
    vessel course, non-negative in [0, 360)."""
    rel = (float(dir_north_deg) - float(course_deg)) % 360.0
    if rel >= 360.0 or rel < 0.0:
        rel = 0.0
    return rel


@dataclass(frozen=True)
class FuseReject:
    record: SensorRecord
    axis: str
    value: float


def fuse(records, grid: WeatherGrid) -> tuple[list[SensorRecord], list[FuseReject]]:
    """Fill each record's weather fields from the grid at its position
    and time, converting directions to vessel-relative.

    Records outside the grid box go to the reject list with the first
    offending axis; |fused| + |rejects| == |input|.
    """
    missing = [f for f in REQUIRED_FIELDS if f not in grid.fields]
    if missing:
        raise ConfigurationError(f"grid is missing required fields {missing}")
    records = list(records)
    if not records:
        return [], []

    t = np.array([r.timestamp for r in records], dtype=np.float64)
    la = np.array([r.lat_deg for r in records], dtype=np.float64)
    lo = np.array([r.lon_deg for r in records], dtype=np.float64)

    def in_box(axis, v):
        return (v >= axis[0]) & (v <= axis[-1])

    ok_t = in_box(grid.time_axis, t)
    ok_la = in_box(grid.lat_axis, la)
    ok_lo = in_box(grid.lon_axis, lo)
    ok = ok_t & ok_la & ok_lo

    rejects = []
    for i in np.flatnonzero(~ok):
        if not ok_t[i]:
            rejects.append(FuseReject(records[i], "time", float(t[i])))
        elif not ok_la[i]:
            rejects.append(FuseReject(records[i], "lat", float(la[i])))
        else:
            rejects.append(FuseReject(records[i], "lon", float(lo[i])))

    sel = np.flatnonzero(ok)
    if sel.size == 0:
        return [], rejects

    values = {
        name: trilinear_many(grid, name, t[sel], la[sel], lo[sel])
        for name in REQUIRED_FIELDS
    }
    fused = []
    for j, i in enumerate(sel):
        r = records[i]
        fused.append(
            replace(
                r,
                wave_height_m=float(values["wave_height_m"][j]),
                swell_height_m=float(values["swell_height_m"][j]),
                wave_dir_rel_deg=relative_direction(
                    float(values["wave_dir_north_deg"][j]), r.course_deg
                ),
                wind_dir_rel_deg=relative_direction(
                    float(values["wind_dir_north_deg"][j]), r.course_deg
                ),
            )
        )
    return fused, rejects


def grid_to_dict(grid: WeatherGrid) -> dict:
    return {
        "lat_axis": grid.lat_axis.tolist(),
        "lon_axis": grid.lon_axis.tolist(),
        "time_axis": [format_timestamp(t) for t in grid.time_axis.tolist()],
        "fields": {
            name: {
                "shape": list(arr.shape),
                "values": arr.ravel().tolist(),
            }
            for name, arr in grid.fields.items()
        },
    }


def grid_from_dict(doc: dict) -> WeatherGrid:
    try:
        time_axis = np.array(
            [parse_timestamp(t) for t in doc["time_axis"]], dtype=np.float64
        )
        fields = {
            name: np.asarray(spec["values"], dtype=np.float64).reshape(spec["shape"])
            for name, spec in doc["fields"].items()
        }
        return WeatherGrid(
            lat_axis=np.asarray(doc["lat_axis"], dtype=np.float64),
            lon_axis=np.asarray(doc["lon_axis"], dtype=np.float64),
            time_axis=time_axis,
            fields=fields,
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"malformed grid document: {exc}") from exc


def save_grid(grid: WeatherGrid, path) -> None:
    serialize.dump_file(grid_to_dict(grid), path, float_style="repr")


def load_grid(path) -> WeatherGrid:
    path = Path(path)
    if not path.exists():
        raise DataError(f"grid file not found: {path}")
    return grid_from_dict(serialize.load_file(path))
