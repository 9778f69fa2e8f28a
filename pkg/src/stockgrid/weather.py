"""Zone weather ingestion, hourly degree days and the population-weighted metrics.

Degree days here are *hourly*: ``hdd[h] = max(0, base - T[h]) / 24``. A full
day at a constant temperature therefore accumulates the familiar daily value,
and ``24 * hdd[h]`` recovers the degree difference for that hour. Daily
conventions are more common elsewhere; mixing them up silently scales every
regression slope by 24.

Timestamps are naive local standard time (no DST), stored as
``datetime64[h]`` marking the start of each hour.
"""

from __future__ import annotations

import calendar
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError, StructuralError, ValidationError

DEFAULT_BASE_C = 18.5
TEMP_BOUNDS_C = (-60.0, 60.0)
EPW_HEADER_ROWS = 8
EPW_DRY_BULB_FIELD = 6  # zero-based; the 7th data field


def hours_in_year(year: int) -> int:
    return 8784 if calendar.isleap(year) else 8760


def year_timestamps(year: int) -> np.ndarray:
    start = np.datetime64(f"{year}-01-01T00", "h")
    return start + np.arange(hours_in_year(year))


@dataclass(frozen=True)
class ZoneWeatherSeries:
    zone_id: str
    station_id: str
    year: int
    timestamps: np.ndarray
    dry_bulb: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[h]")
        t = np.asarray(self.dry_bulb, dtype=float)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "dry_bulb", t)
        n = hours_in_year(self.year)
        if len(ts) != n or len(t) != n:
            raise StructuralError(
                f"zone {self.zone_id}: expected {n} hourly values for {self.year}, "
                f"got {len(t)} temperatures and {len(ts)} timestamps"
            )
        steps = np.diff(ts).astype(int)
        if np.any(steps != 1):
            bad = int(np.flatnonzero(steps != 1)[0])
            raise StructuralError(
                f"zone {self.zone_id}: timestamps not hourly/increasing at index {bad + 1}"
            )
        if ts[0] != np.datetime64(f"{self.year}-01-01T00", "h"):
            raise StructuralError(f"zone {self.zone_id}: series does not start on Jan 1 00:00")
        lo, hi = TEMP_BOUNDS_C
        out = (t < lo) | (t > hi) | ~np.isfinite(t)
        if np.any(out):
            i = int(np.flatnonzero(out)[0])
            raise ValidationError(
                f"zone {self.zone_id}: dry-bulb {t[i]} at hour {i} outside [{lo}, {hi}] C"
            )

    def __len__(self):
        return len(self.dry_bulb)


@dataclass(frozen=True)
class PopulationWeightSet:
    weights: dict

    def __post_init__(self):
        w = {str(k): float(v) for k, v in self.weights.items()}
        if not w:
            raise StructuralError("empty population weight set")
        if any(v < 0 or not np.isfinite(v) for v in w.values()):
            raise ValidationError("population weights must be finite and nonnegative")
        total = sum(w.values())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"population weights sum to {total}, expected 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_populations(cls, populations: dict) -> "PopulationWeightSet":
        total = float(sum(populations.values()))
        if total <= 0:
            raise ValidationError("total population must be positive")
        return cls({k: v / total for k, v in populations.items()})

    def zones(self):
        return sorted(self.weights)


@dataclass(frozen=True)
class DegreeDaySeries:
    base_temperature: float
    hdd: np.ndarray
    cdd: np.ndarray
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "hdd", np.asarray(self.hdd, dtype=float))
        object.__setattr__(self, "cdd", np.asarray(self.cdd, dtype=float))
        if self.timestamps is not None:
            object.__setattr__(self, "timestamps", np.asarray(self.timestamps, dtype="datetime64[h]"))
        if self.hdd.shape != self.cdd.shape:
            raise StructuralError("hdd and cdd lengths differ")
        if np.any(self.hdd < 0) or np.any(self.cdd < 0):
            raise ValidationError("degree days must be nonnegative")

    def __len__(self):
        return len(self.hdd)


@dataclass(frozen=True)
class MeanTemperature:
    """Population-weighted mean temperature plus the hours it cannot describe.

    ``cooling_not_captured`` marks hours with zero system HDD, where the
    metric sits at the base temperature regardless of any cooling load.
    """

    values: np.ndarray
    cooling_not_captured: np.ndarray = field(repr=False)


# --------------------------------------------------------------------------
# parsing


def _to_float(text, path, lineno, what):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ParseError(f"cannot read {what} from {text!r}", path, lineno) from None


def _read_epw(path: Path, zone_id: str | None, year: int | None) -> ZoneWeatherSeries:
    station = ""
    stamps = []
    temps = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno <= EPW_HEADER_ROWS:
                if lineno == 1 and row and row[0].strip().upper() == "LOCATION" and len(row) > 5:
                    station = row[5].strip()
                continue
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) <= EPW_DRY_BULB_FIELD:
                raise ParseError(f"expected at least 7 fields, got {len(row)}", path, lineno)
            try:
                y, mo, d, hr = (int(row[i]) for i in range(4))
            except ValueError:
                raise ParseError("date fields are not integers", path, lineno) from None
            if not 1 <= hr <= 24:
                raise ParseError(f"hour {hr} outside 1..24", path, lineno)
            y = year if year is not None else y
            try:
                stamp = np.datetime64(f"{y:04d}-{mo:02d}-{d:02d}T00", "h") + (hr - 1)
            except ValueError:
                raise ParseError(f"invalid date {y}-{mo}-{d}", path, lineno) from None
            stamps.append(stamp)
            temps.append(_to_float(row[EPW_DRY_BULB_FIELD], path, lineno, "dry-bulb"))
    if not stamps:
        raise StructuralError(f"{path}: no data rows")
    ts = np.array(stamps, dtype="datetime64[h]")
    file_year = int(str(ts[0])[:4])
    return ZoneWeatherSeries(
        zone_id=zone_id or path.stem,
        station_id=station or path.stem,
        year=file_year,
        timestamps=ts,
        dry_bulb=np.array(temps),
    )


def _read_simple_csv(path: Path, zone_id: str | None, station_id: str | None) -> ZoneWeatherSeries:
    stamps = []
    temps = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["timestamp", "dry_bulb_c"]:
            raise ParseError("header must be 'timestamp,dry_bulb_c'", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise ParseError("expected 2 fields", path, lineno)
            try:
                stamps.append(np.datetime64(row[0].strip(), "h"))
            except ValueError:
                raise ParseError(f"bad timestamp {row[0]!r}", path, lineno) from None
            temps.append(_to_float(row[1], path, lineno, "dry_bulb_c"))
    if not stamps:
        raise StructuralError(f"{path}: no data rows")
    ts = np.array(stamps, dtype="datetime64[h]")
    return ZoneWeatherSeries(
        zone_id=zone_id or path.stem,
        station_id=station_id or path.stem,
        year=int(str(ts[0])[:4]),
        timestamps=ts,
        dry_bulb=np.array(temps),
    )


def parse_weather_file(path, format="epw", zone_id=None, station_id=None, year=None) -> ZoneWeatherSeries:
    """Read one zone's hourly dry-bulb record.

    ``format`` is ``"epw"`` (8 header rows, dry bulb in the 7th field, hour
    1..24 meaning the hour ending at that time) or ``"simple_csv"`` (header
    ``timestamp,dry_bulb_c``, ISO timestamps marking the start of the hour).
    ``year`` coerces EPW rows to one calendar year (useful for TMY files).
    """
    path = Path(path)
    if format == "epw":
        return _read_epw(path, zone_id, year)
    if format == "simple_csv":
        return _read_simple_csv(path, zone_id, station_id)
    raise ConfigError(f"unknown weather format {format!r}; use 'epw' or 'simple_csv'")


def write_simple_csv(series: ZoneWeatherSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "dry_bulb_c"])
        for ts, t in zip(series.timestamps, series.dry_bulb):
            w.writerow([str(ts) + ":00", repr(float(t))])


def write_epw(series: ZoneWeatherSeries, path) -> None:
    """Minimal EPW writer: valid header skeleton, date fields and dry bulb.

    Fields other than dry bulb carry EPW "missing" markers.
    """
    start_day = calendar.day_name[calendar.weekday(series.year, 1, 1)]
    header = [
        f"LOCATION,{series.zone_id},TX,USA,synthetic,{series.station_id},0,0,-6,0",
        "DESIGN CONDITIONS,0",
        "TYPICAL/EXTREME PERIODS,0",
        "GROUND TEMPERATURES,0",
        "HOLIDAYS/DAYLIGHT SAVINGS,No,0,0,0",
        "COMMENTS 1,synthetic fixture",
        "COMMENTS 2,",
        f"DATA PERIODS,1,1,Data,{start_day},1/1,12/31",
    ]
    tail = ",".join(["99.9", "999", "999999"])
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(line + "\n")
        for ts, t in zip(series.timestamps, series.dry_bulb):
            s = str(ts)
            y, mo, d, hr = int(s[0:4]), int(s[5:7]), int(s[8:10]), int(s[11:13])
            fh.write(f"{y},{mo},{d},{hr + 1},60,A7A7A7A7,{float(t)!r},{tail}\n")


def load_population_csv(path) -> PopulationWeightSet:
    """Read ``zone_id,population`` rows and normalize to weights."""
    path = Path(path)
    pops = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"zone_id", "population"} <= set(reader.fieldnames):
            raise ParseError("header must contain zone_id,population", path, 1)
        for lineno, row in enumerate(reader, start=2):
            z = row["zone_id"].strip()
            if z in pops:
                raise StructuralError(f"{path}:{lineno}: duplicate zone {z}")
            pops[z] = _to_float(row["population"], path, lineno, "population")
    return PopulationWeightSet.from_populations(pops)


# --------------------------------------------------------------------------
# degree days


def hourly_degree_days(series: ZoneWeatherSeries, base: float = DEFAULT_BASE_C) -> DegreeDaySeries:
    t = series.dry_bulb
    hdd = np.maximum(0.0, base - t) / 24.0
    cdd = np.maximum(0.0, t - base) / 24.0
    return DegreeDaySeries(base_temperature=base, hdd=hdd, cdd=cdd, timestamps=series.timestamps)


def population_weighted_dd(per_zone: dict, weights: PopulationWeightSet) -> DegreeDaySeries:
    if set(per_zone) != set(weights.weights):
        missing = set(weights.weights) ^ set(per_zone)
        raise StructuralError(f"zone key mismatch between series and weights: {sorted(missing)}")
    zones = sorted(per_zone)
    first = per_zone[zones[0]]
    for z in zones[1:]:
        dd = per_zone[z]
        if dd.base_temperature != first.base_temperature:
            raise StructuralError(f"zone {z}: base temperature {dd.base_temperature} != {first.base_temperature}")
        if len(dd) != len(first):
            raise StructuralError(f"zone {z}: length {len(dd)} != {len(first)}")
    hdd = np.zeros(len(first))
    cdd = np.zeros(len(first))
    for z in zones:
        w = weights.weights[z]
        hdd += w * per_zone[z].hdd
        cdd += w * per_zone[z].cdd
    return DegreeDaySeries(first.base_temperature, hdd, cdd, first.timestamps)


def mean_temperature(system_hdd: DegreeDaySeries) -> MeanTemperature:
    """Temperature that, applied at every station, reproduces the system HDD."""
    hdd = system_hdd.hdd
    values = system_hdd.base_temperature - 24.0 * hdd
    return MeanTemperature(values=values, cooling_not_captured=hdd == 0)


def system_metrics(weather: dict, weights: PopulationWeightSet, base: float = DEFAULT_BASE_C):
    """Convenience: per-zone DD -> weighted DD -> mean temperature."""
    per_zone = {z: hourly_degree_days(s, base) for z, s in weather.items()}
    system = population_weighted_dd(per_zone, weights)
    return system, mean_temperature(system)
