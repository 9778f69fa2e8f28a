"""Deterministic synthetic fixtures.

Real ERCOT and NREL inputs are large and not redistributable, so the test
suite and example runs use a synthetic eight-zone weather year with a
February cold-wave, a synthetic 2018-like "transfer" year, and a grid series
whose load-shed event is constructed to carry a fixed reference row
(71 shed hours, 20.0 GW peak, 1000 GWh, 29.4 % of estimated demand at the
peak shed hour).

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .building import hour_and_weekend
from .weather import (
    DEFAULT_BASE_C,
    PopulationWeightSet,
    ZoneWeatherSeries,
    system_metrics,
    write_epw,
    write_simple_csv,
    year_timestamps,
)

COLDEST_MEAN_C = -14.2
SHED_HOURS = 71
SHED_PEAK_MW = 20000.0
SHED_TOTAL_MWH = 1_000_000.0
SHED_PEAK_PCT = 0.294
SHED_START = np.datetime64("2021-02-15T01", "h")
SHED_PEAK_AT = np.datetime64("2021-02-15T19", "h")

# zone: (annual mean C, seasonal amplitude, diurnal amplitude, relative cold-wave depth)
ZONE_CLIMATE = {
    "COAST": (21.0, 8.0, 4.5, 0.70),
    "EAST": (18.5, 10.0, 5.5, 0.95),
    "FAR_WEST": (18.0, 10.5, 7.5, 0.95),
    "NORTH": (17.5, 11.5, 6.5, 1.10),
    "NORTH_C": (19.0, 10.5, 5.5, 1.05),
    "SOUTHERN": (22.5, 7.0, 4.5, 0.55),
    "SOUTH_C": (20.5, 9.0, 5.5, 0.85),
    "WEST": (18.0, 10.5, 6.5, 1.05),
}


def load_zones() -> list:
    doc = json.loads(resources.files("stockgrid").joinpath("data").joinpath("zones.json").read_text())
    return doc["zones"]


def zone_populations() -> dict:
    return {z["zone_id"]: z["population"] for z in load_zones()}


def default_weights() -> PopulationWeightSet:
    return PopulationWeightSet.from_populations(zone_populations())


def design_temperatures() -> dict:
    return {z["zone_id"]: {"heating": z["heating_design_c"], "cooling": z["cooling_design_c"]} for z in load_zones()}


def _ar1(rng, n, phi, sd):
    eps = rng.normal(0.0, sd * np.sqrt(1 - phi * phi), n)
    x = np.empty(n)
    x[0] = rng.normal(0.0, sd)
    for i in range(1, n):
        x[i] = phi * x[i - 1] + eps[i]
    return x


def _cold_wave_shape(ts) -> np.ndarray:
    """Cold-wave envelope in [0, ~1]: onset Feb 10, deepest Feb 15-16, gone by Feb 21."""
    t = (ts - np.datetime64("2021-01-01T00", "h")).astype(float) / 24.0  # day of year, 0-based
    onset = 0.5 * (1 + np.tanh((t - 41.0) / 0.8))  # Feb 11
    decay = 0.5 * (1 - np.tanh((t - 48.6) / 0.7))  # Feb 18
    plateau = onset * decay
    dip1 = np.exp(-0.5 * ((t - 45.25) / 0.35) ** 2)  # Feb 15 06:00
    dip2 = np.exp(-0.5 * ((t - 46.29) / 0.35) ** 2)  # Feb 16 07:00
    return 0.72 * plateau + 0.22 * dip1 + 0.30 * dip2


def synthetic_year(year: int = 2021, seed: int = 2021, cold_wave: bool = True,
                   weights: PopulationWeightSet | None = None) -> dict:
    """Eight-zone hourly weather; the cold wave is scaled so the coldest hour's
    population-weighted mean temperature is exactly ``COLDEST_MEAN_C``."""
    weights = weights or default_weights()
    ts = year_timestamps(year)
    n = len(ts)
    doy = (ts - ts[0]).astype(float) / 24.0
    hour, _ = hour_and_weekend(ts)
    rng = np.random.Generator(np.random.PCG64(seed))
    common = _ar1(rng, n, 0.985, 3.0)
    base = {}
    for zone in sorted(ZONE_CLIMATE):
        mean, seas, diur, _ = ZONE_CLIMATE[zone]
        own = _ar1(rng, n, 0.97, 1.5)
        seasonal = mean - seas * np.cos(2 * np.pi * (doy - 15.0) / 365.25)
        diurnal = -diur * np.cos(2 * np.pi * (hour - 4) / 24.0)
        base[zone] = seasonal + diurnal + common + own
    if not cold_wave:
        return {z: ZoneWeatherSeries(z, _station(z), year, ts, np.round(t, 6)) for z, t in base.items()}

    shape = _cold_wave_shape(ts)
    # damp synoptic noise during the event so the two dips stay the coldest hours
    calm = 1.0 - 0.8 * np.clip(shape / 0.72, 0, 1)
    for z in base:
        mean, seas, diur, _ = ZONE_CLIMATE[z]
        noise = base[z] - (mean - seas * np.cos(2 * np.pi * (doy - 15.0) / 365.25)) + diur * np.cos(2 * np.pi * (hour - 4) / 24.0)
        base[z] = base[z] - (1.0 - calm) * noise
    depth = {z: ZONE_CLIMATE[z][3] for z in base}
    w = weights.weights

    def temps(scale):
        return {z: base[z] - scale * depth[z] * shape for z in base}

    def weighted_mean(tz):
        hdd = sum(w[z] * np.maximum(0.0, DEFAULT_BASE_C - tz[z]) for z in tz)
        return DEFAULT_BASE_C - hdd

    scale = 25.0
    for _ in range(20):
        m = weighted_mean(temps(scale))
        i = int(np.argmin(m))
        # all zones are below base at the coldest hour, so the metric is linear in scale there
        b = sum(w[z] * base[z][i] for z in base)
        d = sum(w[z] * depth[z] * shape[i] for z in base)
        new = (b - COLDEST_MEAN_C) / d
        if abs(new - scale) < 1e-13:
            break
        scale = new
    tz = temps(scale)
    return {z: ZoneWeatherSeries(z, _station(z), year, ts, tz[z]) for z in sorted(tz)}


def _station(zone):
    for z in load_zones():
        if z["zone_id"] == zone:
            return z["station_id"]
    return zone


@dataclass(frozen=True)
class GridFixture:
    timestamps: np.ndarray
    served_mw: np.ndarray
    available_generation_mw: np.ndarray
    requested_shed_mw: np.ndarray
    estimated_unserved_mw: np.ndarray  # NaN where no estimate
    res_frac: np.ndarray
    com_frac: np.ndarray
    ind_frac: np.ndarray


def _shed_profile() -> np.ndarray:
    """71 integer-MW shed values: max exactly 20000, sum exactly 1,000,000."""
    k = np.arange(SHED_HOURS)
    peak_idx = int((SHED_PEAK_AT - SHED_START).astype(int))
    g = 0.55 + 0.35 * np.exp(-0.5 * ((k - peak_idx) / 14.0) ** 2) + 0.12 * np.sin(k / 5.0)
    g = np.clip(g, 0.2, None)
    others = np.delete(np.arange(SHED_HOURS), peak_idx)
    vals = np.zeros(SHED_HOURS)
    vals[peak_idx] = SHED_PEAK_MW
    rest = SHED_TOTAL_MWH - SHED_PEAK_MW
    v = np.round(g[others] / g[others].sum() * rest)
    v[0] += rest - v.sum()
    vals[others] = v
    assert vals.max() == SHED_PEAK_MW and np.count_nonzero(vals == SHED_PEAK_MW) == 1
    assert vals.sum() == SHED_TOTAL_MWH and vals.min() > 0
    return vals


def synthetic_grid(weather: dict, weights: PopulationWeightSet | None = None) -> GridFixture:
    """Served load, generation, shed and sector fractions for the cold-wave year.

    Sector demand is a smooth function of population-weighted degree hours,
    independent of the building engine, so calibration has real work to do.
    """
    weights = weights or default_weights()
    system, _ = system_metrics(weather, weights)
    ts = system.timestamps
    n = len(ts)
    dh = 24.0 * system.hdd
    ch = 24.0 * system.cdd
    hour, weekend = hour_and_weekend(ts)
    res_shape = np.array([0.70, 0.64, 0.60, 0.58, 0.60, 0.70, 0.88, 0.98, 0.92, 0.88, 0.88, 0.90,
                          0.93, 0.97, 1.02, 1.10, 1.20, 1.30, 1.34, 1.30, 1.24, 1.14, 0.98, 0.82])
    com_wd = np.array([0.62] * 6 + [0.80, 1.00] + [1.22] * 10 + [1.05, 0.90] + [0.70] * 4)
    com_we = np.full(24, 0.70)
    res = 9300.0 * res_shape[hour] + 820.0 * dh + 7.0 * dh**2 + 1250.0 * ch
    com = 11500.0 * np.where(weekend, com_we[hour], com_wd[hour]) + 330.0 * dh + 3.0 * dh**2 + 780.0 * ch
    ind = 15500.0 + 600.0 * np.sin(2 * np.pi * np.arange(n) / 168.0)
    est = res + com + ind

    shed = np.zeros(n)
    i0 = int((SHED_START - ts[0]).astype(int))
    shed[i0:i0 + SHED_HOURS] = _shed_profile()
    ip = int((SHED_PEAK_AT - ts[0]).astype(int))
    target = SHED_PEAK_MW / SHED_PEAK_PCT
    k = target / est[ip]
    bump = np.exp(-0.5 * ((np.arange(n) - ip) / 18.0) ** 2)
    adj = 1.0 + (k - 1.0) * bump
    res, com, ind = res * adj, com * adj, ind * adj
    est = res + com + ind
    est[ip] = target  # exact at the peak shed hour

    served = est - shed
    scale = served / est
    res_s, com_s, ind_s = res * scale, com * scale, ind * scale
    total = res_s + com_s + ind_s
    res_frac = res_s / total
    com_frac = com_s / total
    ind_frac = 1.0 - res_frac - com_frac
    gen = np.where(shed > 0, served + 300.0, est * 1.12 + 2000.0)
    unserved = np.where(shed > 0, shed, np.nan)
    return GridFixture(ts, served, gen, shed, unserved, res_frac, com_frac, ind_frac)


def write_grid_csv(grid: GridFixture, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "served_mw", "available_generation_mw", "requested_shed_mw", "estimated_unserved_mw"])
        for i, t in enumerate(grid.timestamps):
            u = grid.estimated_unserved_mw[i]
            w.writerow([str(t) + ":00", repr(float(grid.served_mw[i])), repr(float(grid.available_generation_mw[i])),
                        repr(float(grid.requested_shed_mw[i])), "" if np.isnan(u) else repr(float(u))])


def write_fractions_csv(grid: GridFixture, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "res_frac", "com_frac", "ind_frac"])
        for i, t in enumerate(grid.timestamps):
            w.writerow([str(t) + ":00", repr(float(grid.res_frac[i])), repr(float(grid.com_frac[i])), repr(float(grid.ind_frac[i]))])


def write_population_csv(path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["zone_id", "population"])
        for z, p in sorted(zone_populations().items()):
            w.writerow([z, p])


def write_bundle(directory, sample_sizes=(5000, 1000), scenarios=None, weather_format="epw",
                 with_transfer=False, seed=2021) -> Path:
    """Write a complete runnable fixture (weather, grid, fractions, config).

    Returns the path of the generated ``config.json``.
    """
    d = Path(directory)
    (d / "weather").mkdir(parents=True, exist_ok=True)
    weights = default_weights()
    weather = synthetic_year(2021, weights=weights)
    if weather_format not in ("epw", "simple_csv"):
        raise ValueError(f"weather_format must be 'epw' or 'simple_csv', not {weather_format!r}")
    ext = "epw" if weather_format == "epw" else "csv"
    writer = write_epw if weather_format == "epw" else write_simple_csv
    wcfg = {}
    for z, s in weather.items():
        p = d / "weather" / f"{z}_2021.{ext}"
        writer(s, p)
        wcfg[z] = {"path": f"weather/{p.name}", "format": weather_format}
    grid = synthetic_grid(weather, weights)
    write_grid_csv(grid, d / "grid.csv")
    write_fractions_csv(grid, d / "fractions.csv")
    write_population_csv(d / "population.csv")
    config = {
        "schema_version": 1,
        "weather": wcfg,
        "population": "population.csv",
        "grid": "grid.csv",
        "fractions": "fractions.csv",
        "distributions": {"residential": "@texas_like_residential", "commercial": "@texas_like_commercial"},
        "scenarios": list(scenarios or ["baseline", "efficiency", "electrification", "efficiency_electrification"]),
        "base_temperature": DEFAULT_BASE_C,
        "seed": seed,
        "sample_size": {"residential": sample_sizes[0], "commercial": sample_sizes[1]},
        "output_dir": "out",
        "window": {"start": "2021-02-14T00:00", "end": "2021-02-21T00:00"},
        "analysis_month": 2,
    }
    if with_transfer:
        w18 = synthetic_year(2018, seed=2018, cold_wave=False, weights=weights)
        tcfg = {}
        for z, s in w18.items():
            p = d / "weather" / f"{z}_2018.{ext}"
            writer(s, p)
            tcfg[z] = {"path": f"weather/{p.name}", "format": weather_format}
        config["transfer"] = {"sector": "commercial", "weather": tcfg}
    path = d / "config.json"
    path.write_text(json.dumps(config, indent=2))
    return path
