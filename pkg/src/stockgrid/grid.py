"""System-level analytics: sector decomposition, demand composition, shortfall.

The electricity shortfall in an hour is ``max(0, demand - available
generation)``, counted only in hours where the operator requested load shed
(``requested_shed_mw > 0``). Reports give the number of shortfall hours, the
peak shortfall, that peak as a fraction of the demand in the same hour, and
the total energy.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .calibration import months_of
from .errors import ParseError, StructuralError, ValidationError

log = logging.getLogger(__name__)

GRID_COLUMNS = ("timestamp", "served_mw", "available_generation_mw", "requested_shed_mw", "estimated_unserved_mw")
FRACTION_COLUMNS = ("timestamp", "res_frac", "com_frac", "ind_frac")
SUMMER = (6, 7, 8)
WINTER = (1, 2, 12)
SHOULDER = (3, 4, 5, 9, 10, 11)


@dataclass(frozen=True)
class GridSeries:
    timestamps: np.ndarray
    served_load_mw: np.ndarray
    available_generation_mw: np.ndarray
    requested_shed_mw: np.ndarray
    estimated_load_without_shed_mw: np.ndarray  # NaN where absent

    def __post_init__(self):
        n = len(self.timestamps)
        for name in ("served_load_mw", "available_generation_mw", "requested_shed_mw", "estimated_load_without_shed_mw"):
            arr = getattr(self, name)
            if len(arr) != n:
                raise StructuralError(f"grid column {name} has {len(arr)} rows, expected {n}")
            vals = arr[~np.isnan(arr)]
            if np.any(vals < 0):
                raise ValidationError(f"grid column {name} has negative values")

    def __len__(self):
        return len(self.timestamps)


@dataclass(frozen=True)
class SectoralFractions:
    residential: np.ndarray
    commercial: np.ndarray
    industrial: np.ndarray

    def __post_init__(self):
        r, c, i = self.residential, self.commercial, self.industrial
        if not (len(r) == len(c) == len(i)):
            raise StructuralError("fraction series are not aligned")
        stacked = np.stack([r, c, i])
        if np.any(stacked < 0) or np.any(stacked > 1):
            raise ValidationError("sector fractions must lie in [0, 1]")
        bad = np.abs(r + c + i - 1.0) > 1e-9
        if np.any(bad):
            raise ValidationError(f"sector fractions do not sum to 1 at hour {int(np.flatnonzero(bad)[0])}")


@dataclass(frozen=True)
class ShortfallReport:
    scenario: str
    shortfall_hours: int
    peak_mw: float
    peak_pct_of_demand: float
    total_gwh: float
    peak_at: str | None = None

    def __post_init__(self):
        if self.total_gwh < 0 or not 0 <= self.peak_pct_of_demand <= 1:
            raise ValidationError(f"inconsistent shortfall report {self}")

    @property
    def peak_gw(self) -> float:
        return self.peak_mw / 1000.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["peak_gw"] = self.peak_gw
        return d


# --------------------------------------------------------------------------
# io


def _float_or_nan(text, path, lineno, col):
    text = text.strip()
    if text == "":
        return np.nan
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"column {col}: cannot parse {text!r}", path, lineno) from None


def _read_table(path, columns, optional=()):
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = [c for c in columns if c not in fields and c not in optional]
        if missing:
            raise ParseError(f"missing columns {missing}", path, 1)
        stamps, cols = [], {c: [] for c in columns[1:]}
        for lineno, row in enumerate(reader, start=2):
            try:
                stamps.append(np.datetime64(row["timestamp"].strip(), "h"))
            except ValueError:
                raise ParseError(f"bad timestamp {row['timestamp']!r}", path, lineno) from None
            for c in columns[1:]:
                cols[c].append(_float_or_nan(row.get(c) or "", path, lineno, c))
    ts = np.array(stamps, dtype="datetime64[h]")
    if len(ts) > 1 and np.any(np.diff(ts).astype(int) != 1):
        raise StructuralError(f"{path}: timestamps must be hourly and increasing")
    return ts, {c: np.array(v, dtype=float) for c, v in cols.items()}


def load_grid_csv(path) -> GridSeries:
    """Read the grid series.

    ``estimated_unserved_mw`` is the operator's estimate of load left unserved
    by shedding; load without shed is ``served + estimated_unserved`` where
    the estimate is present.
    """
    ts, cols = _read_table(path, GRID_COLUMNS)
    for c in ("served_mw", "available_generation_mw", "requested_shed_mw"):
        if np.any(np.isnan(cols[c])):
            raise ParseError(f"column {c} has blank values", path)
    est = cols["served_mw"] + cols["estimated_unserved_mw"]
    return GridSeries(ts, cols["served_mw"], cols["available_generation_mw"], cols["requested_shed_mw"], est)


def load_fractions_csv(path):
    ts, cols = _read_table(path, FRACTION_COLUMNS)
    if any(np.any(np.isnan(v)) for v in cols.values()):
        raise ParseError("blank fraction values", path)
    return ts, SectoralFractions(cols["res_frac"], cols["com_frac"], cols["ind_frac"])


# --------------------------------------------------------------------------
# operations


def decompose_sectors(served: GridSeries, fractions: SectoralFractions) -> dict:
    if len(fractions.residential) != len(served):
        raise StructuralError("fractions and grid series are not aligned")
    load = served.served_load_mw
    res = fractions.residential * load
    com = fractions.commercial * load
    # residual keeps the reconstruction exact in floating point
    ind = load - res - com
    return {"residential": res, "commercial": com, "industrial": ind}


def compose_demand(res_modeled, com_modeled, industrial_served) -> np.ndarray:
    r, c, i = (np.asarray(x, dtype=float) for x in (res_modeled, com_modeled, industrial_served))
    if not (r.shape == c.shape == i.shape):
        raise StructuralError("demand components are not aligned")
    return r + c + i


def ercot_estimated_demand(grid: GridSeries) -> np.ndarray:
    shed = grid.requested_shed_mw > 0
    est = grid.estimated_load_without_shed_mw
    missing = shed & np.isnan(est)
    if np.any(missing):
        i = int(np.flatnonzero(missing)[0])
        raise StructuralError(f"shed requested at {grid.timestamps[i]} but no load estimate")
    return np.where(shed, est, grid.served_load_mw)


def window_mask(timestamps, window) -> np.ndarray:
    """Hours in ``[start, end)``. ``window=None`` selects everything."""
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    if window is None:
        return np.ones(len(ts), dtype=bool)
    start, end = (np.datetime64(w, "h") for w in window)
    if end <= start:
        raise StructuralError("empty window")
    if start < ts[0] or end > ts[-1] + 1:
        raise StructuralError(f"window {start}..{end} outside data {ts[0]}..{ts[-1]}")
    return (ts >= start) & (ts < end)


def hourly_shortfall(demand, grid: GridSeries) -> np.ndarray:
    demand = np.asarray(demand, dtype=float)
    if len(demand) != len(grid):
        raise StructuralError("demand and grid series are not aligned")
    gap = np.maximum(0.0, demand - grid.available_generation_mw)
    return np.where(grid.requested_shed_mw > 0, gap, 0.0)


def _report(name, values, denominator, timestamps, sel) -> ShortfallReport:
    v = np.where(sel, values, 0.0)
    hours = int(np.count_nonzero(v > 0))
    if hours == 0:
        return ShortfallReport(name, 0, 0.0, 0.0, 0.0, None)
    i = int(np.argmax(v))
    pct = float(v[i] / denominator[i]) if denominator[i] > 0 else 0.0
    return ShortfallReport(name, hours, float(v[i]), min(pct, 1.0), float(v.sum() / 1000.0), str(timestamps[i]))


def shortfall(demand, grid: GridSeries, window=None, scenario: str = "scenario") -> ShortfallReport:
    sel = window_mask(grid.timestamps, window)
    if not sel.any():
        raise StructuralError("empty window")
    demand = np.asarray(demand, dtype=float)
    return _report(scenario, hourly_shortfall(demand, grid), demand, grid.timestamps, sel)


def requested_shed_report(grid: GridSeries, window=None) -> ShortfallReport:
    """The operator's own shed as a reference row (percent of estimated demand)."""
    sel = window_mask(grid.timestamps, window)
    est = ercot_estimated_demand(grid)
    return _report("ERCOT-requested Load Shed", grid.requested_shed_mw, est, grid.timestamps, sel)


@dataclass
class DailyPeaks:
    days: np.ndarray  # datetime64[D]
    peaks_mw: np.ndarray
    seasons: dict
    dropped_days: list


def daily_peaks(demand, timestamps) -> DailyPeaks:
    demand = np.asarray(demand, dtype=float)
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    if len(demand) != len(ts):
        raise StructuralError("demand and timestamps are not aligned")
    days = ts.astype("datetime64[D]")
    uniq, start, counts = np.unique(days, return_index=True, return_counts=True)
    full = counts == 24
    dropped = [str(d) for d in uniq[~full]]
    if dropped:
        log.warning("dropping partial days: %s", ", ".join(dropped))
    peaks = np.maximum.reduceat(demand, start)
    days_f, peaks_f = uniq[full], peaks[full]
    months = days_f.astype("datetime64[M]").astype(int) % 12 + 1
    seasons = {}
    for name, ms in (("summer", SUMMER), ("winter", WINTER)):
        sel = np.isin(months, ms)
        if sel.any():
            p = peaks_f[sel]
            seasons[name] = {"min_mw": float(p.min()), "max_mw": float(p.max()), "range_mw": float(p.max() - p.min())}
    sel = np.isin(months, SHOULDER)
    if sel.any():
        seasons["shoulder"] = {"mean_mw": float(peaks_f[sel].mean())}
    return DailyPeaks(days_f, peaks_f, seasons, dropped)


def savings_scatter(scenario, baseline, mean_temp) -> np.ndarray:
    """Rows of (mean temperature C, fractional savings). Zero-baseline hours are skipped."""
    s, b, t = (np.asarray(x, dtype=float) for x in (scenario, baseline, mean_temp))
    if not (s.shape == b.shape == t.shape):
        raise StructuralError("scatter inputs are not aligned")
    ok = b != 0
    if not ok.all():
        log.warning("skipping %d hours with zero baseline demand", int((~ok).sum()))
    return np.column_stack([t[ok], (b[ok] - s[ok]) / b[ok]])


def crossover_temperature(scenario, baseline, mean_temp, valid=None, bin_width: float = 1.0):
    """Mean temperature below which the scenario's demand exceeds the baseline.

    Hours are binned by temperature; scanning from warm to cold, the first
    bin whose mean (scenario - baseline) is positive marks the crossover, and
    the zero crossing is interpolated between that bin's centre and the next
    warmer bin. Returns None if the scenario never exceeds the baseline.
    """
    s, b, t = (np.asarray(x, dtype=float) for x in (scenario, baseline, mean_temp))
    sel = np.ones(len(t), dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    diff, temp = (s - b)[sel], t[sel]
    if len(temp) == 0:
        return None
    edges = np.arange(np.floor(temp.min() / bin_width) * bin_width, temp.max() + bin_width, bin_width)
    which = np.digitize(temp, edges) - 1
    centres, means = [], []
    for k in range(len(edges) - 1, -1, -1):
        m = which == k
        if m.any():
            centres.append(float(temp[m].mean()))
            means.append(float(diff[m].mean()))
    for j, d in enumerate(means):
        if d > 0:
            if j == 0:
                return centres[0]
            t_warm, d_warm = centres[j - 1], means[j - 1]
            t_cold = centres[j]
            return t_warm + (t_cold - t_warm) * (0.0 - d_warm) / (d - d_warm)
    return None


def annual_consumption_twh(demand_mw) -> float:
    return float(np.sum(demand_mw) / 1e6)


def monthly_totals(profile, timestamps) -> np.ndarray:
    months = months_of(timestamps)
    return np.array([np.sum(np.asarray(profile)[months == m]) for m in range(1, 13)])
