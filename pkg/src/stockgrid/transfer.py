"""Weather-year transfer through hour-of-week quadratic regressions.

Hours are bucketed by (weekday|weekend, hour of day): 48 buckets. In each
bucket, heating demand is regressed on system HDD and cooling demand on
system CDD with an ordinary least-squares quadratic; "other" demand is the
bucket mean. Applying the set to another year's degree days yields that
year's demand. Predictions are clamped at zero, and hours whose regressor
falls outside the fitted range are flagged rather than refused.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .building import HourlyEndUseDemand, hour_and_weekend
from .errors import StructuralError

log = logging.getLogger(__name__)

DAY_CLASSES = ("weekday", "weekend")
BUCKETS = tuple((dc, h) for dc in DAY_CLASSES for h in range(24))
SCHEMA_VERSION = 1


def bucket_key(day_class: str, hour: int) -> str:
    return f"{day_class}-{hour:02d}"


def day_classes(timestamps) -> np.ndarray:
    """Per-hour bucket index 0..47 (weekday hours first). Holidays count as weekdays."""
    hour, weekend = hour_and_weekend(timestamps)
    return np.where(weekend, 24, 0) + hour


@dataclass
class HourOfWeekRegressionSet:
    heating: dict  # bucket key -> (c0, c1, c2)
    cooling: dict
    other: dict  # bucket key -> mean MW
    fit_range: dict  # "heating"/"cooling" -> bucket key -> (min, max)
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        for name in ("heating", "cooling", "other"):
            d = getattr(self, name)
            if len(d) != len(BUCKETS):
                raise StructuralError(f"{name}: expected {len(BUCKETS)} buckets, got {len(d)}")
        if any(v < 0 for v in self.other.values()):
            raise StructuralError("other-demand averages must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "heating": {k: list(v) for k, v in self.heating.items()},
            "cooling": {k: list(v) for k, v in self.cooling.items()},
            "other": dict(self.other),
            "fit_range": {e: {k: list(v) for k, v in r.items()} for e, r in self.fit_range.items()},
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HourOfWeekRegressionSet":
        return cls(
            heating={k: tuple(v) for k, v in d["heating"].items()},
            cooling={k: tuple(v) for k, v in d["cooling"].items()},
            other={k: float(v) for k, v in d["other"].items()},
            fit_range={e: {k: tuple(v) for k, v in r.items()} for e, r in d["fit_range"].items()},
            warnings=list(d.get("warnings", [])),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "HourOfWeekRegressionSet":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_quadratic(x, y):
    """Least-squares ``y ~ c0 + c1 x + c2 x^2``.

    Degrades to a line with 2 distinct x values and to a constant with 1;
    rank-deficient designs degrade the same way. Returns ``(coeffs, note)``
    where ``note`` is None for a full quadratic fit.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) == 0:
        raise StructuralError("empty bucket")
    distinct = len(np.unique(x))
    for degree in (2, 1, 0):
        if distinct < degree + 1:
            continue
        design = np.vander(x, degree + 1, increasing=True)
        coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
        if rank < degree + 1:
            continue
        out = tuple(float(c) for c in coef) + (0.0,) * (2 - degree)
        note = None if degree == 2 else f"degree {degree} fallback ({distinct} distinct regressor values)"
        return out, note
    return (float(np.mean(y)), 0.0, 0.0), "constant fallback"


def fit_transfer(demand: HourlyEndUseDemand, dd, timestamps=None) -> HourOfWeekRegressionSet:
    """Fit the 48+48 regressions and 48 other-demand means on one year."""
    timestamps = dd.timestamps if timestamps is None else timestamps
    n = len(dd)
    if len(demand) != n or len(timestamps) != n:
        raise StructuralError("demand, degree days and calendar must be aligned")
    idx = day_classes(timestamps)
    heating, cooling, other, warnings = {}, {}, {}, []
    ranges = {"heating": {}, "cooling": {}}
    for b, (dc, hour) in enumerate(BUCKETS):
        key = bucket_key(dc, hour)
        sel = idx == b
        if not sel.any():
            raise StructuralError(f"no hours in bucket {key}")
        for name, x, y, store in (
            ("heating", dd.hdd[sel], demand.heating_kwh_e[sel], heating),
            ("cooling", dd.cdd[sel], demand.cooling_kwh_e[sel], cooling),
        ):
            coef, note = fit_quadratic(x, y)
            store[key] = coef
            ranges[name][key] = (float(x.min()), float(x.max()))
            if note:
                msg = f"{name} {key}: {note}"
                warnings.append(msg)
                log.warning(msg)
        other[key] = float(np.mean(demand.other_kwh_e[sel]))
    return HourOfWeekRegressionSet(heating, cooling, other, ranges, warnings)


@dataclass
class TransferResult:
    demand: HourlyEndUseDemand
    extrapolated: np.ndarray  # bool per hour


def apply_transfer(reg: HourOfWeekRegressionSet, dd, timestamps=None) -> TransferResult:
    timestamps = dd.timestamps if timestamps is None else timestamps
    if len(timestamps) != len(dd):
        raise StructuralError("degree days and calendar must be aligned")
    idx = day_classes(timestamps)
    n = len(dd)
    out = {"heating": np.zeros(n), "cooling": np.zeros(n)}
    other = np.zeros(n)
    extrap = np.zeros(n, dtype=bool)
    for b, (dc, hour) in enumerate(BUCKETS):
        key = bucket_key(dc, hour)
        sel = idx == b
        if not sel.any():
            continue
        for name, x in (("heating", dd.hdd[sel]), ("cooling", dd.cdd[sel])):
            try:
                c0, c1, c2 = getattr(reg, name)[key]
                lo, hi = reg.fit_range[name][key]
            except KeyError:
                raise StructuralError(f"regression set has no {name} bucket {key}") from None
            out[name][sel] = np.maximum(0.0, c0 + c1 * x + c2 * x * x)
            extrap[np.flatnonzero(sel)[(x < lo) | (x > hi)]] = True
        other[sel] = reg.other[key]
    zeros = np.zeros(n)
    demand = HourlyEndUseDemand(out["heating"], out["cooling"], other, zeros, zeros.copy(), units="MW")
    return TransferResult(demand, extrap)
