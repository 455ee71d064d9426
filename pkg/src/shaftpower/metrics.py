"""Regression evaluation metrics and multi-run aggregation.

MAE is reported in target units, NMAE normalizes by the target range
(max - min; a mean denominator is available as an option), MAPE is in
percent, and R2 may go negative for worse-than-mean predictors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DataError

MAPE_GUARD = 1e-9


def _pair(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(y, dtype=np.float64).ravel()
    b = np.asarray(y_hat, dtype=np.float64).ravel()
    if a.size == 0:
        raise ConfigurationError("metrics need non-empty inputs")
    if a.shape != b.shape:
        raise ConfigurationError(f"length mismatch: {a.shape} vs {b.shape}")
    return a, b


def mae(y, y_hat) -> float:
    """Mean absolute error."""
    a, b = _pair(y, y_hat)
    return float(np.mean(np.abs(a - b)))


def nmae(y, y_hat, denominator: str = "range") -> float:
    """MAE normalized by the spread of the actual values.

    ``denominator="range"`` divides by max(y) - min(y);
    ``denominator="mean"`` divides by mean(y) instead.
    """
    a, b = _pair(y, y_hat)
    if denominator == "range":
        span = float(np.max(a) - np.min(a))
        if span <= 0.0:
            raise DataError("target range is zero; NMAE undefined")
    elif denominator == "mean":
        span = float(np.mean(a))
        if span == 0.0:
            raise DataError("target mean is zero; NMAE undefined")
    else:
        raise ConfigurationError(f"unknown NMAE denominator {denominator!r}")
    return float(np.mean(np.abs(a - b))) / span


def mape(y, y_hat, guard: float = MAPE_GUARD) -> float:
    """Mean absolute percentage error, in percent."""
    a, b = _pair(y, y_hat)
    bad = np.flatnonzero(np.abs(a) < guard)
    if bad.size:
        raise DataError(
            f"actual values below {guard} at indices {bad[:10].tolist()}; "
            "MAPE undefined"
        )
    return float(100.0 * np.mean(np.abs((a - b) / a)))


def r2(y, y_hat) -> float:
    """Coefficient of determination: 1 - SS_res / SS_tot."""
    a, b = _pair(y, y_hat)
    ss_tot = float(np.sum((a - np.mean(a)) ** 2))
    if ss_tot <= 0.0:
        raise DataError("actual values are constant; R2 undefined")
    ss_res = float(np.sum((a - b) ** 2))
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class MetricsReport:
    """One evaluation: MAE (kW), NMAE, MAPE (percent), R2, sample count."""

    mae: float
    nmae: float
    mape: float
    r2: float
    n: int

    def to_dict(self) -> dict:
        return {
            "mae": self.mae,
            "nmae": self.nmae,
            "mape": self.mape,
            "r2": self.r2,
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricsReport":
        return cls(
            mae=float(doc["mae"]),
            nmae=float(doc["nmae"]),
            mape=float(doc["mape"]),
            r2=float(doc["r2"]),
            n=int(doc["n"]),
        )


METRIC_NAMES = ("mae", "nmae", "mape", "r2")


def evaluate(y, y_hat, nmae_denominator: str = "range") -> MetricsReport:
    """All four metrics for one prediction vector."""
    a, _ = _pair(y, y_hat)
    return MetricsReport(
        mae=mae(y, y_hat),
        nmae=nmae(y, y_hat, denominator=nmae_denominator),
        mape=mape(y, y_hat),
        r2=r2(y, y_hat),
        n=int(a.size),
    )


@dataclass(frozen=True)
class RunAggregate:
    """Per-metric mean, population SD, and median over k repeated runs."""

    mean: MetricsReport
    sd: MetricsReport
    median: MetricsReport
    k: int


def aggregate(reports: Sequence[MetricsReport]) -> RunAggregate:
    """Aggregate repeated evaluations of the same test set."""
    if not reports:
        raise ConfigurationError("aggregate needs at least one report")
    ns = {r.n for r in reports}
    if len(ns) != 1:
        raise ConfigurationError(
            f"reports cover different sample counts {sorted(ns)}; refusing to mix"
        )
    n = reports[0].n
    k = len(reports)

    def stats(name: str) -> tuple[float, float, float]:
        values = np.array([getattr(r, name) for r in reports], dtype=np.float64)
        return (
            float(np.mean(values)),
            float(np.std(values)),
            float(np.median(values)),
        )

    columns = {name: stats(name) for name in METRIC_NAMES}
    mean = MetricsReport(*(columns[m][0] for m in METRIC_NAMES), n=n)
    sd = MetricsReport(*(columns[m][1] for m in METRIC_NAMES), n=n)
    median = MetricsReport(*(columns[m][2] for m in METRIC_NAMES), n=n)
    return RunAggregate(mean=mean, sd=sd, median=median, k=k)


def format_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Plain-text table with aligned columns."""
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(str(c).ljust(widths[i]) for i, c in enumerate(row)))
    return "\n".join(lines)
