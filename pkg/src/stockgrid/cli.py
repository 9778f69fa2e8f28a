"""Command-line interface.

Subcommands::

    simulate         run every scenario and write demand CSVs, summary, manifest
    shortfall        shortfall reports, hourly shortfall CSV and plot
    report           figure data (CSV) and SVG renderings, crossover temperature
    fit-transfer     fit and save hour-of-week regressions on the transfer year
    convergence      mean per-building consumption against sample size
    validate-config  check a config without running anything

Demand CSV columns (one file per scenario, ``demand_<scenario>.csv``)::

    timestamp, mean_temp_c, res_heating_mw, res_cooling_mw, res_other_mw,
    com_heating_mw, com_cooling_mw, com_other_mw, residential_mw,
    commercial_mw, industrial_mw, total_mw, gas_mw_th, unmet_mw_th

Exit codes: 0 success, 2 config error, 3 data error, 4 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import pipeline as P
from . import svg
from .calibration import months_of
from .errors import ConfigError, DataError, StockGridError
from .grid import (
    crossover_temperature,
    daily_peaks,
    ercot_estimated_demand,
    hourly_shortfall,
    requested_shed_report,
    savings_scatter,
    shortfall,
    window_mask,
)
from .sampler import SECTORS, load_distribution, sample_sector
from .transfer import fit_transfer
from .weather import system_metrics

log = logging.getLogger("stockgrid")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INVARIANT = 0, 2, 3, 4


def _exit_code(exc: BaseException) -> int:
    cause = exc.cause if isinstance(exc, P.StageError) else exc
    if isinstance(cause, ConfigError):
        return EXIT_CONFIG
    if isinstance(cause, DataError):
        return EXIT_DATA
    return EXIT_INVARIANT


def _config(args) -> P.RunConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out_dir is not None:
        overrides["output_dir"] = str(Path(args.out_dir).resolve())
    return P.load_config(args.config, overrides)


def _out(cfg: P.RunConfig) -> Path:
    out = cfg.out_path
    out.mkdir(parents=True, exist_ok=True)
    return out


def _refresh_manifest(cfg, out: Path) -> None:
    files = sorted(p.name for p in out.iterdir() if p.is_file() and p.name != "manifest.json")
    P.write_manifest(cfg, out, files)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _load_demands(cfg, out: Path, scenarios=None) -> dict:
    demands = {}
    for s in scenarios or cfg.scenarios:
        path = out / P.demand_filename(s)
        if not path.is_file():
            raise DataError(f"no demand CSV for scenario {s!r} in {out}; run `simulate` first")
        demands[s] = P.read_demand_csv(path)
    return demands


def _stamp(ts) -> list:
    return [str(t) + ":00" for t in ts]


def _hours_since(ts, start) -> np.ndarray:
    return (np.asarray(ts, dtype="datetime64[h]") - np.datetime64(start, "h")).astype(float)


def _day_ticks(ts):
    ts = np.asarray(ts, dtype="datetime64[h]")
    days = np.unique(ts.astype("datetime64[D]"))
    return [(float((d - ts[0]).astype("timedelta64[h]").astype(int)), str(d)[5:]) for d in days]


# --------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    cfg = _config(args)
    print(f"config OK: {len(cfg.scenarios)} scenarios, {len(cfg.weather)} weather zones, seed {cfg.seed}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    sim = P.run_simulation(cfg, threads=args.threads)
    summary = P.write_outputs(cfg, sim, _out(cfg))
    _refresh_manifest(cfg, _out(cfg))
    for name, row in summary["scenarios"].items():
        sf = row["shortfall"]
        print(f"{name:28s} shortfall {sf['total_gwh']:8.1f} GWh  peak {sf['peak_gw']:5.1f} GW  "
              f"coldest-hour demand {row['coldest_hour_demand_mw'] / 1000:6.1f} GW")
    return EXIT_OK


def cmd_shortfall(args) -> int:
    cfg = _config(args)
    out = _out(cfg)
    inputs = P.load_inputs(cfg)
    grid = inputs.grid
    window = cfg.window_tuple
    demands = _load_demands(cfg, out)
    sel = window_mask(grid.timestamps, window)
    reports = {s: shortfall(d["total_mw"], grid, window, scenario=s).to_dict() for s, d in demands.items()}
    ref = requested_shed_report(grid, window).to_dict()
    P.write_json(out / "shortfall.json", {"schema_version": P.SCHEMA_VERSION, "window": cfg.window,
                                          "requested_shed": ref, "scenarios": reports})
    ts = grid.timestamps[sel]
    hourly = {s: hourly_shortfall(d["total_mw"], grid)[sel] for s, d in demands.items()}
    hourly["requested_shed"] = grid.requested_shed_mw[sel]
    _write_csv(out / "shortfall_hourly.csv", ["timestamp"] + [f"{k}_mw" for k in hourly],
               [[t] + [f"{hourly[k][i]:.3f}" for k in hourly] for i, t in enumerate(_stamp(ts))])
    x = _hours_since(ts, ts[0])
    svg.line_plot(out / "shortfall.svg", x, {k: v / 1000 for k, v in hourly.items()},
                  title="Electricity shortfall", xlabel="date", ylabel="GW", xticklabels=_day_ticks(ts))
    _refresh_manifest(cfg, out)
    print(f"{'requested shed':28s} {ref['total_gwh']:8.1f} GWh  peak {ref['peak_gw']:5.1f} GW  "
          f"{100 * ref['peak_pct_of_demand']:.1f}%  {ref['shortfall_hours']} h")
    for s, r in reports.items():
        print(f"{s:28s} {r['total_gwh']:8.1f} GWh  peak {r['peak_gw']:5.1f} GW  "
              f"{100 * r['peak_pct_of_demand']:.1f}%  {r['shortfall_hours']} h")
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _config(args)
    out = _out(cfg)
    inputs = P.load_inputs(cfg)
    grid = inputs.grid
    ts = grid.timestamps
    demands = _load_demands(cfg, out)
    mt = inputs.mean_temp
    names = list(demands)

    # end-use stack, baseline (or first scenario)
    ref = "baseline" if "baseline" in demands else names[0]
    d = demands[ref]
    stack = {
        "industrial_mw": d["industrial_mw"],
        "other_mw": d["res_other_mw"] + d["com_other_mw"],
        "cooling_mw": d["res_cooling_mw"] + d["com_cooling_mw"],
        "heating_mw": d["res_heating_mw"] + d["com_heating_mw"],
    }
    _write_csv(out / "enduse_stack.csv", ["timestamp"] + list(stack),
               [[t] + [f"{stack[k][i]:.3f}" for k in stack] for i, t in enumerate(_stamp(ts))])

    # hourly demand over the event window
    sel = window_mask(ts, cfg.window_tuple)
    est = ercot_estimated_demand(grid)
    cols = {f"{s}_mw": demands[s]["total_mw"] for s in names}
    cols.update({"ercot_estimated_mw": est, "available_generation_mw": grid.available_generation_mw})
    _write_csv(out / "hourly_demand.csv", ["timestamp", "mean_temp_c"] + list(cols),
               [[t, f"{mt.values[i]:.4f}"] + [f"{cols[k][i]:.3f}" for k in cols]
                for i, t in zip(np.flatnonzero(sel), _stamp(ts[sel]))])
    x = _hours_since(ts[sel], ts[sel][0])
    svg.line_plot(out / "hourly_demand.svg", x, {k[:-3]: v[sel] / 1000 for k, v in cols.items()},
                  title="Hourly system demand", xlabel="date", ylabel="GW", xticklabels=_day_ticks(ts[sel]))

    # scatters over the analysis month
    month = months_of(ts) == cfg.analysis_month
    heating_hours = month & ~mt.cooling_not_captured
    temp = mt.values[month]
    res_com = {s: demands[s]["residential_mw"] + demands[s]["commercial_mw"] for s in names}
    rows = [[t, f"{mt.values[i]:.4f}"] + [f"{res_com[s][i]:.3f}" for s in names]
            for i, t in zip(np.flatnonzero(month), _stamp(ts[month]))]
    _write_csv(out / "scatter_demand.csv", ["timestamp", "mean_temp_c"] + [f"{s}_res_com_mw" for s in names], rows)
    svg.scatter_plot(out / "scatter_demand.svg", {s: (temp, v[month] / 1000) for s, v in res_com.items()},
                     title="Residential + commercial demand", xlabel="mean temperature (C)", ylabel="GW")
    crossover = None
    if "baseline" in demands:
        sav_rows, sav_series = [], {}
        for s in names:
            if s == "baseline":
                continue
            pts = savings_scatter(res_com[s][month], res_com["baseline"][month], temp)
            sav_series[s] = (pts[:, 0], 100 * pts[:, 1])
            sav_rows += [[s, f"{a:.4f}", f"{b:.6f}"] for a, b in pts]
        _write_csv(out / "scatter_savings.csv", ["scenario", "mean_temp_c", "savings_frac"], sav_rows)
        if sav_series:
            svg.scatter_plot(out / "scatter_savings.svg", sav_series, title="Savings vs baseline",
                             xlabel="mean temperature (C)", ylabel="%")
        if "electrification" in demands:
            crossover = crossover_temperature(demands["electrification"]["total_mw"], demands["baseline"]["total_mw"],
                                              mt.values, heating_hours)
    P.write_json(out / "crossover.json", {"schema_version": P.SCHEMA_VERSION, "analysis_month": cfg.analysis_month,
                                          "electrification_vs_baseline_c": crossover})

    # daily peaks
    peaks = {s: daily_peaks(demands[s]["total_mw"], ts) for s in names}
    days = next(iter(peaks.values())).days
    _write_csv(out / "daily_peaks.csv", ["date"] + [f"{s}_peak_mw" for s in names],
               [[str(day)] + [f"{peaks[s].peaks_mw[i]:.3f}" for s in names] for i, day in enumerate(days)])
    P.write_json(out / "daily_peaks_summary.json",
                 {"schema_version": P.SCHEMA_VERSION, "scenarios": {s: p.seasons for s, p in peaks.items()}})
    svg.line_plot(out / "daily_peaks.svg", np.arange(len(days)), {s: p.peaks_mw / 1000 for s, p in peaks.items()},
                  title="Daily peak demand", xlabel="day of year", ylabel="GW")
    _refresh_manifest(cfg, out)
    if crossover is not None:
        print(f"electrification exceeds baseline below {crossover:.2f} C mean temperature")
    print(f"report written to {out}")
    return EXIT_OK


def cmd_fit_transfer(args) -> int:
    cfg = _config(args)
    if not cfg.transfer:
        raise ConfigError("config has no transfer section")
    out = _out(cfg)
    inputs = P.load_inputs(cfg)
    sector = cfg.transfer.get("sector", "commercial")
    weather = P._load_weather(cfg, cfg.transfer["weather"])
    dd, _ = system_metrics(weather, inputs.weights, cfg.base_temperature)
    stock = sample_sector(inputs.distributions[sector], cfg.sample_size[sector], cfg.seed)
    demand = P.simulate_stock(stock, weather, inputs.design_temperatures, inputs.params, args.threads)
    reg = fit_transfer(demand, dd)
    reg.save(out / f"transfer_{sector}.json")
    _refresh_manifest(cfg, out)
    print(f"saved {out / f'transfer_{sector}.json'} ({len(reg.warnings)} warnings)")
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg = _config(args)
    out = _out(cfg)
    inputs = P.load_inputs(cfg)
    sizes = [int(s) for s in args.sizes.split(",")]
    rows, series = [], {}
    for sector in args.sectors.split(","):
        if sector not in SECTORS:
            raise ConfigError(f"unknown sector {sector!r}")
        pts = P.convergence_scan(load_distribution(cfg.resolve(cfg.distributions[sector])), sizes, cfg.seed,
                                 inputs.weather, inputs.design_temperatures, cfg.analysis_month,
                                 inputs.params, args.threads)
        series[sector] = pts
        for p in pts:
            rows.append([sector, p.sample_size, f"{p.mean_annual_kwh:.4f}", f"{p.mean_month_kwh:.4f}",
                         "" if p.relative_change is None else f"{p.relative_change:.6f}"])
            change = "" if p.relative_change is None else f"  change {100 * p.relative_change:.2f}%"
            print(f"{sector:12s} n={p.sample_size:6d}  {p.mean_annual_kwh:12.1f} kWh/yr{change}")
    _write_csv(out / "convergence.csv",
               ["sector", "sample_size", "mean_annual_kwh", "mean_month_kwh", "relative_change"], rows)
    for sector, pts in series.items():
        first = pts[-1].mean_annual_kwh
        svg.line_plot(out / f"convergence_{sector}.svg", [p.sample_size for p in pts],
                      {sector: [p.mean_annual_kwh / first for p in pts]},
                      title=f"{sector} mean annual consumption", xlabel="sample size", ylabel="relative to largest")
    _refresh_manifest(cfg, out)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="run config JSON")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="override output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override sampling seed")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker threads (results do not depend on it)")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="stockgrid", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", default="config.json", help="run config JSON")
    parser.add_argument("--out-dir", default=None, help="override output directory")
    parser.add_argument("--seed", type=int, default=None, help="override sampling seed")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (
        ("simulate", cmd_simulate, "run all scenarios and write demand CSVs"),
        ("shortfall", cmd_shortfall, "shortfall reports from demand CSVs"),
        ("report", cmd_report, "figure data and SVG plots from demand CSVs"),
        ("fit-transfer", cmd_fit_transfer, "fit hour-of-week regressions on the transfer year"),
        ("convergence", cmd_convergence, "sample-size convergence scan"),
        ("validate-config", cmd_validate, "check a config file"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        if name == "convergence":
            p.add_argument("--sizes", default="250,500,1000,2000,5000,10000")
            p.add_argument("--sectors", default="residential")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except StockGridError as exc:
        code = _exit_code(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
