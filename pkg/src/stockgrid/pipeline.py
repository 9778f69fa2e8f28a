"""Config-driven orchestration: stock -> scenarios -> calibrated system demand.

Stages, per scenario: sample, retrofit, simulate, aggregate, optional
commercial weather-year transfer, calibrate against served sector load,
compose with industrial served load. Outputs are deterministic: the same
config always yields byte-identical files, whatever the thread count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .building import DEFAULT_PARAMS, HourlyEndUseDemand, SectorAccumulator, SimParams, simulate_building
from .calibration import MonthlyBiasFactors, apply_factors, compute_factors, months_of
from .errors import ConfigError, DataError, StockGridError, StructuralError
from .grid import (
    GridSeries,
    compose_demand,
    decompose_sectors,
    load_fractions_csv,
    load_grid_csv,
    requested_shed_report,
    shortfall,
    window_mask,
)
from .retrofit import PACKAGE_NAMES, SCENARIOS, default_packages, load_package, scenario_stock
from .sampler import SECTORS, load_distribution, read_text, sample_sector, sample_stock
from .transfer import apply_transfer, fit_transfer
from .weather import (
    DEFAULT_BASE_C,
    DegreeDaySeries,
    MeanTemperature,
    load_population_csv,
    parse_weather_file,
    system_metrics,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
END_USE_COLUMNS = ("heating", "cooling", "other")
DEMAND_COLUMNS = (
    ("timestamp", "mean_temp_c")
    + tuple(f"{s}_{e}_mw" for s in ("res", "com") for e in END_USE_COLUMNS)
    + ("residential_mw", "commercial_mw", "industrial_mw", "total_mw", "gas_mw_th", "unmet_mw_th")
)


class StageError(StockGridError):
    """Wraps a module error with the pipeline stage it came from."""

    def __init__(self, stage: str, exc: Exception):
        self.stage = stage
        self.cause = exc
        super().__init__(f"[{stage}] {exc}")


@dataclass
class RunConfig:
    config_dir: Path
    weather: dict  # zone -> {"path", "format"}
    population: str
    grid: str
    fractions: str
    distributions: dict  # sector -> path or @name
    scenarios: list
    base_temperature: float = DEFAULT_BASE_C
    seed: int = 2021
    sample_size: dict = field(default_factory=lambda: {"residential": 5000, "commercial": 1000})
    output_dir: str = "out"
    packages: dict = field(default_factory=dict)  # package name -> path; shipped defaults otherwise
    zones: str = "@zones"
    window: dict | None = None
    analysis_month: int = 2
    transfer: dict | None = None
    sim_params: dict | None = None
    raw: dict = field(default_factory=dict, repr=False)

    def resolve(self, p) -> Path | str:
        s = str(p)
        if s.startswith("@"):
            return s
        path = Path(s)
        return path if path.is_absolute() else self.config_dir / path

    @property
    def out_path(self) -> Path:
        return Path(self.resolve(self.output_dir))

    @property
    def window_tuple(self):
        if not self.window:
            return None
        return (self.window["start"], self.window["end"])

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True).encode()).hexdigest()


_KNOWN_KEYS = {
    "schema_version", "weather", "population", "grid", "fractions", "distributions", "scenarios",
    "base_temperature", "seed", "sample_size", "output_dir", "packages", "zones", "window",
    "analysis_month", "transfer", "sim_params",
}


def load_config(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    doc.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("weather", "population", "grid", "fractions", "distributions", "scenarios"):
        if key not in doc:
            raise ConfigError(f"config missing required key {key!r}")
    sizes = doc.get("sample_size", {"residential": 5000, "commercial": 1000})
    if isinstance(sizes, int):
        sizes = {s: sizes for s in SECTORS}
    cfg = RunConfig(
        config_dir=path.resolve().parent,
        weather=doc["weather"],
        population=doc["population"],
        grid=doc["grid"],
        fractions=doc["fractions"],
        distributions=doc["distributions"],
        scenarios=list(doc["scenarios"]),
        base_temperature=float(doc.get("base_temperature", DEFAULT_BASE_C)),
        seed=int(doc.get("seed", 2021)),
        sample_size=dict(sizes),
        output_dir=doc.get("output_dir", "out"),
        packages=doc.get("packages", {}),
        zones=doc.get("zones", "@zones"),
        window=doc.get("window"),
        analysis_month=int(doc.get("analysis_month", 2)),
        transfer=doc.get("transfer"),
        sim_params=doc.get("sim_params"),
        raw=doc,
    )
    validate_config(cfg)
    return cfg


def _check_file(cfg: RunConfig, p, what: str):
    r = cfg.resolve(p)
    if isinstance(r, str):
        try:
            read_text(r)
        except (FileNotFoundError, OSError):
            raise ConfigError(f"{what}: no shipped data named {r}") from None
        return
    if not r.is_file():
        raise ConfigError(f"{what}: file not found: {r}")


def _check_weather(cfg: RunConfig, spec: dict, what: str):
    if spec.get("format", "epw") not in ("epw", "simple_csv"):
        raise ConfigError(f"{what}: unknown format {spec.get('format')!r}")
    _check_file(cfg, spec["path"], what)


def validate_config(cfg: RunConfig) -> None:
    if not cfg.scenarios:
        raise ConfigError("no scenarios requested")
    bad = [s for s in cfg.scenarios if s not in SCENARIOS]
    if bad:
        raise ConfigError(f"unknown scenarios {bad}; choose from {list(SCENARIOS)}")
    if len(set(cfg.scenarios)) != len(cfg.scenarios):
        raise ConfigError("duplicate scenarios")
    if any(s != "baseline" for s in cfg.scenarios) and "baseline" not in cfg.scenarios:
        raise ConfigError("calibration needs the baseline scenario in the run")
    for sector in SECTORS:
        n = cfg.sample_size.get(sector)
        if not isinstance(n, int) or n < 1:
            raise ConfigError(f"sample_size.{sector} must be an integer >= 1")
        if sector not in cfg.distributions:
            raise ConfigError(f"no distribution for {sector}")
        _check_file(cfg, cfg.distributions[sector], f"distribution {sector}")
    for name, p in cfg.packages.items():
        if name not in PACKAGE_NAMES:
            raise ConfigError(f"unknown package {name!r}")
        _check_file(cfg, p, f"package {name}")
    if not cfg.weather:
        raise ConfigError("no weather files")
    for zone, spec in cfg.weather.items():
        _check_weather(cfg, spec, f"weather {zone}")
    for key in ("population", "grid", "fractions", "zones"):
        _check_file(cfg, getattr(cfg, key), key)
    if cfg.transfer:
        if cfg.transfer.get("sector", "commercial") not in SECTORS:
            raise ConfigError("transfer.sector must be residential or commercial")
        for zone, spec in cfg.transfer.get("weather", {}).items():
            _check_weather(cfg, spec, f"transfer weather {zone}")
    if not 1 <= cfg.analysis_month <= 12:
        raise ConfigError("analysis_month must be 1..12")
    SimParams.from_dict(cfg.sim_params)


# --------------------------------------------------------------------------
# inputs


@dataclass
class Inputs:
    weather: dict
    weights: object
    system_dd: DegreeDaySeries
    mean_temp: MeanTemperature
    grid: GridSeries
    sectors_served: dict
    design_temperatures: dict
    distributions: dict
    packages: dict
    params: SimParams

    @property
    def timestamps(self):
        return self.grid.timestamps


def _load_weather(cfg: RunConfig, spec: dict) -> dict:
    out = {}
    for zone, w in sorted(spec.items()):
        out[zone] = parse_weather_file(cfg.resolve(w["path"]), format=w.get("format", "epw"), zone_id=zone)
    return out


def _design_temperatures(cfg: RunConfig) -> dict:
    doc = json.loads(read_text(cfg.resolve(cfg.zones)))
    return {z["zone_id"]: {"heating": z["heating_design_c"], "cooling": z["cooling_design_c"]} for z in doc["zones"]}


def load_inputs(cfg: RunConfig) -> Inputs:
    stage = "inputs"
    try:
        weather = _load_weather(cfg, cfg.weather)
        weights = load_population_csv(cfg.resolve(cfg.population))
        system_dd, mean_temp = system_metrics(weather, weights, cfg.base_temperature)
        grid = load_grid_csv(cfg.resolve(cfg.grid))
        ts_f, fractions = load_fractions_csv(cfg.resolve(cfg.fractions))
        if not np.array_equal(ts_f, grid.timestamps):
            raise StructuralError("fractions and grid timestamps differ")
        if not np.array_equal(system_dd.timestamps, grid.timestamps):
            raise StructuralError("weather and grid timestamps differ")
        sectors = decompose_sectors(grid, fractions)
        design = _design_temperatures(cfg)
        missing = set(weather) - set(design)
        if missing:
            raise ConfigError(f"no design temperatures for zones {sorted(missing)}")
        dists = {s: load_distribution(cfg.resolve(cfg.distributions[s])) for s in SECTORS}
        packages = packages_for(cfg)
        params = SimParams.from_dict(cfg.sim_params)
    except StockGridError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise StageError(stage, exc) from exc
    return Inputs(weather, weights, system_dd, mean_temp, grid, sectors, design, dists, packages, params)


# --------------------------------------------------------------------------
# simulation


def simulate_stock(stock, weather: dict, design: dict, params: SimParams = DEFAULT_PARAMS,
                   threads: int = 1) -> HourlyEndUseDemand:
    """Simulate and aggregate a weighted stock (MW).

    Buildings are reduced in ``building_id`` order regardless of ``threads``,
    so the sums are bit-identical for any degree of parallelism.
    """
    stock = sorted(stock, key=lambda b: b.building_id)
    n_hours = len(next(iter(weather.values())))
    acc = SectorAccumulator(n_hours)

    def run(b):
        return simulate_building(b, weather[b.zone_id], design, params)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for b, d in zip(stock, pool.map(run, stock)):
                acc.add(b, d)
    else:
        for b in stock:
            acc.add(b, run(b))
    return acc.result()


@dataclass
class ScenarioResult:
    name: str
    sectors: dict  # sector -> calibrated HourlyEndUseDemand (MW)
    industrial_mw: np.ndarray
    raw: dict  # sector -> uncalibrated HourlyEndUseDemand (MW)

    @property
    def res_com_mw(self) -> np.ndarray:
        return self.sectors["residential"].electricity + self.sectors["commercial"].electricity

    @property
    def total_mw(self) -> np.ndarray:
        return compose_demand(
            self.sectors["residential"].electricity, self.sectors["commercial"].electricity, self.industrial_mw
        )


@dataclass
class SimulationResult:
    inputs: Inputs
    scenarios: dict  # name -> ScenarioResult
    factors: dict  # sector -> MonthlyBiasFactors
    transfer_warnings: list = field(default_factory=list)


def _calibrate(demand: HourlyEndUseDemand, factors: MonthlyBiasFactors, ts) -> HourlyEndUseDemand:
    elec = {k: apply_factors(getattr(demand, k), factors, ts) for k in ("heating_kwh_e", "cooling_kwh_e", "other_kwh_e")}
    # gas and unmet heat are reported as modeled
    return HourlyEndUseDemand(**elec, gas_kwh_th=demand.gas_kwh_th, unmet_kwh_th=demand.unmet_kwh_th, units="MW")


def run_simulation(cfg: RunConfig, threads: int = 1, inputs: Inputs | None = None) -> SimulationResult:
    inputs = inputs or load_inputs(cfg)
    ts = inputs.timestamps
    try:
        stocks = {s: sample_sector(inputs.distributions[s], cfg.sample_size[s], cfg.seed) for s in SECTORS}
    except StockGridError as exc:
        raise StageError("sample", exc) from exc

    transfer_sector = (cfg.transfer or {}).get("sector", "commercial") if cfg.transfer else None
    transfer_weather = None
    if cfg.transfer:
        try:
            transfer_weather = _load_weather(cfg, cfg.transfer["weather"])
            dd_fit, _ = system_metrics(transfer_weather, inputs.weights, cfg.base_temperature)
        except StockGridError as exc:
            raise StageError("transfer-inputs", exc) from exc

    raw, warnings = {}, []
    for scenario in cfg.scenarios:
        raw[scenario] = {}
        for sector in SECTORS:
            try:
                stock = scenario_stock(stocks[sector], scenario, inputs.packages)
            except StockGridError as exc:
                raise StageError("retrofit", exc) from exc
            try:
                if sector == transfer_sector:
                    fitted = simulate_stock(stock, transfer_weather, inputs.design_temperatures, inputs.params, threads)
                    reg = fit_transfer(fitted, dd_fit)
                    result = apply_transfer(reg, inputs.system_dd)
                    n_ex = int(result.extrapolated.sum())
                    warnings += [f"{scenario}: {w}" for w in reg.warnings]
                    if n_ex:
                        warnings.append(f"{scenario}: {n_ex} hours extrapolated beyond the fitted degree-day range")
                    demand = result.demand
                else:
                    demand = simulate_stock(stock, inputs.weather, inputs.design_temperatures, inputs.params, threads)
            except StockGridError as exc:
                raise StageError("simulate", exc) from exc
            raw[scenario][sector] = demand

    try:
        factors = {
            s: compute_factors(raw["baseline"][s].electricity, inputs.sectors_served[s], ts, sector=s) for s in SECTORS
        }
    except StockGridError as exc:
        raise StageError("calibrate", exc) from exc

    scenarios = {}
    for scenario in cfg.scenarios:
        cal = {s: _calibrate(raw[scenario][s], factors[s], ts) for s in SECTORS}
        scenarios[scenario] = ScenarioResult(scenario, cal, inputs.sectors_served["industrial"], raw[scenario])
    for w in warnings:
        log.warning(w)
    return SimulationResult(inputs, scenarios, factors, warnings)


# --------------------------------------------------------------------------
# outputs


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def write_demand_csv(result: ScenarioResult, mean_temp, ts, path) -> None:
    r, c = result.sectors["residential"], result.sectors["commercial"]
    cols = [
        mean_temp,
        r.heating_kwh_e, r.cooling_kwh_e, r.other_kwh_e,
        c.heating_kwh_e, c.cooling_kwh_e, c.other_kwh_e,
        r.electricity, c.electricity, result.industrial_mw, result.total_mw,
        r.gas_kwh_th + c.gas_kwh_th, r.unmet_kwh_th + c.unmet_kwh_th,
    ]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DEMAND_COLUMNS)
        for i, t in enumerate(ts):
            w.writerow([str(t) + ":00"] + [_fmt(col[i]) for col in cols])


def read_demand_csv(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing demand file {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != DEMAND_COLUMNS:
            raise StructuralError(f"{path}: unexpected columns {header}")
        rows = list(reader)
    out = {"timestamp": np.array([r[0] for r in rows], dtype="datetime64[h]")}
    data = np.array([[float(v) for v in r[1:]] for r in rows]) if rows else np.zeros((0, len(DEMAND_COLUMNS) - 1))
    for j, name in enumerate(DEMAND_COLUMNS[1:]):
        out[name] = data[:, j]
    return out


def demand_filename(scenario: str) -> str:
    return f"demand_{scenario}.csv"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def coldest_hour(mean_temp, window_sel) -> int:
    t = np.where(window_sel, mean_temp, np.inf)
    return int(np.argmin(t))


def summarize(cfg: RunConfig, sim: SimulationResult) -> dict:
    """Table-5-style summary: shortfall rows, coldest-hour peak, annual totals."""
    inputs = sim.inputs
    ts = inputs.timestamps
    window = cfg.window_tuple
    sel = window_mask(ts, window)
    i_cold = coldest_hour(inputs.mean_temp.values, sel)
    rows = {}
    base_total = sim.scenarios["baseline"].total_mw.sum() if "baseline" in sim.scenarios else None
    for name, res in sim.scenarios.items():
        rep = shortfall(res.total_mw, inputs.grid, window, scenario=name)
        total = res.total_mw
        rows[name] = {
            "shortfall": rep.to_dict(),
            "window_peak_mw": float(total[sel].max()),
            "coldest_hour_demand_mw": float(total[i_cold]),
            "coldest_hour_res_com_mw": float(res.res_com_mw[i_cold]),
            "annual_twh": float(total.sum() / 1e6),
            "annual_res_com_twh": float(res.res_com_mw.sum() / 1e6),
            "annual_savings_frac": None if base_total is None else float((base_total - total.sum()) / base_total),
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "window": cfg.window,
        "coldest_hour": str(ts[i_cold]),
        "coldest_mean_temp_c": float(inputs.mean_temp.values[i_cold]),
        "requested_shed": requested_shed_report(inputs.grid, window).to_dict(),
        "scenarios": rows,
    }


def write_manifest(cfg: RunConfig, out: Path, files: list, extra: dict | None = None) -> Path:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "config_sha256": cfg.config_hash(),
        "versions": {"stockgrid": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "sample_size": cfg.sample_size,
        "scenarios": cfg.scenarios,
        "outputs": {f: sha256_file(out / f) for f in sorted(files)},
    }
    manifest.update(extra or {})
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_outputs(cfg: RunConfig, sim: SimulationResult, out: Path | None = None) -> dict:
    out = Path(out or cfg.out_path)
    out.mkdir(parents=True, exist_ok=True)
    inputs = sim.inputs
    ts = inputs.timestamps
    files = []
    for name, res in sim.scenarios.items():
        fn = demand_filename(name)
        write_demand_csv(res, inputs.mean_temp.values, ts, out / fn)
        files.append(fn)
    with open(out / "weather_metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "system_hdd", "system_cdd", "mean_temp_c", "cooling_not_captured"])
        mt = inputs.mean_temp
        for i, t in enumerate(ts):
            w.writerow([str(t) + ":00", f"{inputs.system_dd.hdd[i]:.9f}", f"{inputs.system_dd.cdd[i]:.9f}",
                        f"{mt.values[i]:.6f}", int(mt.cooling_not_captured[i])])
    files.append("weather_metrics.csv")
    write_json(out / "calibration_factors.json",
               {"schema_version": SCHEMA_VERSION, "sectors": {s: f.to_dict() for s, f in sim.factors.items()}})
    files.append("calibration_factors.json")
    summary = summarize(cfg, sim)
    summary["warnings"] = sim.transfer_warnings
    write_json(out / "summary.json", summary)
    files.append("summary.json")
    write_manifest(cfg, out, files)
    return summary


def packages_for(cfg: RunConfig) -> dict:
    packages = default_packages()
    for name, p in cfg.packages.items():
        packages[name] = load_package(cfg.resolve(p))
    return packages


# --------------------------------------------------------------------------
# convergence


@dataclass(frozen=True)
class ConvergencePoint:
    sample_size: int
    mean_annual_kwh: float
    mean_month_kwh: float
    relative_change: float | None  # vs previous size


def convergence_scan(dist, sizes, seed: int, weather: dict, design: dict, month: int = 2,
                     params: SimParams = DEFAULT_PARAMS, threads: int = 1) -> list:
    """Mean per-building baseline electricity for increasing sample sizes.

    Samples are nested, so each building is simulated once and every size
    reuses the prefix of the largest sample.
    """
    sizes = sorted(set(int(n) for n in sizes))
    if not sizes or sizes[0] < 1:
        raise ConfigError("convergence sizes must be positive")
    stock = sample_stock(dist, sizes[-1], seed)
    ts = next(iter(weather.values())).timestamps
    in_month = months_of(ts) == month

    def run(b):
        e = simulate_building(b, weather[b.zone_id], design, params).electricity
        return float(e.sum()), float(e[in_month].sum())

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per = list(pool.map(run, stock))
    else:
        per = [run(b) for b in stock]
    annual = np.array([p[0] for p in per])
    month_e = np.array([p[1] for p in per])
    out, prev = [], None
    for n in sizes:
        mean = float(annual[:n].mean())
        change = None if prev is None else abs(mean - prev) / prev
        out.append(ConvergencePoint(n, mean, float(month_e[:n].mean()), change))
        prev = mean
    return out
