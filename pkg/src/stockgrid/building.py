"""Single-zone, steady-state hourly building model.

This stands in for a full simulation engine. Each hour is an independent
balance (no thermal mass, no solar gains, no latent load):

    heating_load = max(0, UA_total * (T_heat - T_out) - gains) / eta_dist
    cooling_load = max(0, UA_total * (T_out - T_cool) + gains) / eta_dist

``UA_total`` is envelope conduction plus infiltration, ``gains`` are internal
gains from occupants/plug loads and lighting, and ``eta_dist`` is the duct
distribution efficiency. Equipment then converts thermal load to electricity
(and gas). Load that the equipment cannot deliver is booked as unmet rather
than fed back into an indoor temperature.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError, StructuralError, ValidationError
from .sampler import GAS_KINDS, HEAT_PUMP_KINDS, BuildingSample

AIR_RHO_CP = 1.2 * 1005.0 / 3600.0  # W.h/(m3.K)


@dataclass(frozen=True)
class SimParams:
    """Engine constants that are not sampled per building."""

    ach_divisor: float = 20.0
    sizing_factor: float = 1.25
    min_capacity_kw: float = 1.0
    hp_rating_temp: float = 8.3
    hp_low_temp: float = -8.3
    ashp_cutoff: float = -17.8
    capacity_fraction_at_cutoff: float = 0.55
    capacity_fraction_bounds: tuple = (0.55, 1.15)
    cop_floor: float = 1.0
    seer_to_cop: float = 0.293
    air_handler_fraction: float = 0.03
    supplemental_afue: float = 0.8
    slab_f_factor: float = 0.9  # W/(m.K) of perimeter
    story_height: dict = field(default_factory=lambda: {"residential": 2.6, "commercial": 3.7})
    duct_conduction_coeff: float = 0.05  # loss fraction = coeff / duct_r_si
    duct_conduction_cap: float = 0.3
    # (COP at 8.3 C, COP at -8.3 C, reference rating) per heat pump kind.
    # Anchors scale with rating / reference when a rating is given.
    hp_curves: dict = field(
        default_factory=lambda: {
            "ashp": (3.8, 2.2, 9.3),
            "commercial_hp_rtu": (3.8, 2.3, 18.0),
            "hp_boiler": (3.0, 1.9, None),
        }
    )

    @classmethod
    def from_dict(cls, d: dict | None) -> "SimParams":
        if not d:
            return cls()
        d = dict(d)
        if "hp_curves" in d:
            base = cls().hp_curves
            base.update({k: tuple(v) for k, v in d["hp_curves"].items()})
            d["hp_curves"] = base
        if "capacity_fraction_bounds" in d:
            d["capacity_fraction_bounds"] = tuple(d["capacity_fraction_bounds"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad simulation parameters: {exc}") from None


DEFAULT_PARAMS = SimParams()


# --------------------------------------------------------------------------
# schedules: fraction of peak internal gains by hour, (weekday, weekend)

_RES_WD = [0.45, 0.40, 0.38, 0.38, 0.40, 0.50, 0.75, 0.85, 0.70, 0.60, 0.55, 0.55,
           0.55, 0.55, 0.60, 0.70, 0.85, 1.00, 1.00, 0.95, 0.90, 0.80, 0.65, 0.50]
_RES_WE = [0.50, 0.45, 0.40, 0.40, 0.40, 0.45, 0.55, 0.70, 0.80, 0.80, 0.75, 0.75,
           0.75, 0.70, 0.70, 0.75, 0.85, 1.00, 1.00, 0.95, 0.90, 0.80, 0.65, 0.55]
_OFFICE_WD = [0.30] * 6 + [0.50, 0.80] + [1.00] * 10 + [0.70, 0.50] + [0.30] * 4
_OFFICE_WE = [0.30] * 8 + [0.40] * 10 + [0.30] * 6
_RETAIL_WD = [0.25] * 7 + [0.50, 0.80] + [1.00] * 12 + [0.60, 0.35, 0.25]
_RETAIL_WE = [0.25] * 8 + [0.60] + [1.00] * 12 + [0.50, 0.30, 0.25]
_SCHOOL_WD = [0.25] * 6 + [0.50, 0.90] + [1.00] * 8 + [0.60, 0.40] + [0.25] * 6
_SCHOOL_WE = [0.25] * 24
_HOSPITAL_WD = [0.70] * 6 + [0.85] + [1.00] * 12 + [0.90] * 3 + [0.75] * 2
_HOSPITAL_WE = [0.70] * 7 + [0.90] * 12 + [0.80] * 5
_WAREHOUSE_WD = [0.20] * 6 + [0.60] + [1.00] * 10 + [0.50] + [0.20] * 6
_WAREHOUSE_WE = [0.20] * 24

SCHEDULES = {
    "single_family": (_RES_WD, _RES_WE),
    "multifamily": (_RES_WD, _RES_WE),
    "office": (_OFFICE_WD, _OFFICE_WE),
    "retail": (_RETAIL_WD, _RETAIL_WE),
    "school": (_SCHOOL_WD, _SCHOOL_WE),
    "hospital": (_HOSPITAL_WD, _HOSPITAL_WE),
    "warehouse": (_WAREHOUSE_WD, _WAREHOUSE_WE),
}


@lru_cache(maxsize=32)
def _calendar(start: np.datetime64, n: int):
    ts = start + np.arange(n)
    hour = (ts - ts.astype("datetime64[D]")).astype(int)
    # 1970-01-01 was a Thursday; Monday = 0
    dow = (ts.astype("datetime64[D]").astype(int) + 3) % 7
    return hour, dow >= 5


def hour_and_weekend(timestamps) -> tuple:
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    return _calendar(ts[0], len(ts))


@lru_cache(maxsize=64)
def _schedule_array(building_type: str, start: np.datetime64, n: int) -> np.ndarray:
    if building_type not in SCHEDULES:
        raise ValidationError(f"no schedule for building type {building_type!r}")
    wd, we = (np.array(x) for x in SCHEDULES[building_type])
    hour, weekend = _calendar(start, n)
    out = np.where(weekend, we[hour], wd[hour])
    out.setflags(write=False)
    return out


def schedule(building_type: str, timestamps) -> np.ndarray:
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    return _schedule_array(building_type, ts[0], len(ts))


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class EnvelopeSpec:
    ua_envelope: float
    infiltration_ua: float
    duct_distribution_efficiency: float
    floor_area: float

    def __post_init__(self):
        if self.ua_envelope < 0 or self.infiltration_ua < 0:
            raise ValidationError("conductances must be nonnegative")
        if not 0 < self.duct_distribution_efficiency <= 1:
            raise ValidationError("duct distribution efficiency outside (0, 1]")

    @property
    def ua_total(self) -> float:
        return self.ua_envelope + self.infiltration_ua


@dataclass(frozen=True)
class HvacSystem:
    kind: str
    heating_capacity: float  # kW_th; rated at hp_rating_temp for heat pumps
    cooling_capacity: float  # kW_th
    cooling_seer: float
    heating_rating: float | None = None
    ashp_cutoff: float = -17.8
    supplemental: str = "none"
    cop_47: float | None = None
    cop_17: float | None = None

    def __post_init__(self):
        if not (self.heating_capacity > 0 and self.cooling_capacity > 0):
            raise ValidationError("capacities must be positive after sizing")
        if not self.cooling_seer > 0:
            raise ValidationError("SEER must be positive")


@dataclass
class HourlyEndUseDemand:
    """Hourly end-use energy; kWh per hour for one building, MW once aggregated."""

    heating_kwh_e: np.ndarray
    cooling_kwh_e: np.ndarray
    other_kwh_e: np.ndarray
    gas_kwh_th: np.ndarray
    unmet_kwh_th: np.ndarray
    delivered_kwh_th: np.ndarray | None = None
    units: str = "kWh"

    END_USES = ("heating_kwh_e", "cooling_kwh_e", "other_kwh_e", "gas_kwh_th", "unmet_kwh_th")

    def __post_init__(self):
        n = len(self.heating_kwh_e)
        for name in self.END_USES:
            if len(getattr(self, name)) != n:
                raise StructuralError(f"end use {name} length mismatch")

    def __len__(self):
        return len(self.heating_kwh_e)

    @property
    def electricity(self) -> np.ndarray:
        return self.heating_kwh_e + self.cooling_kwh_e + self.other_kwh_e

    def scaled(self, factor) -> "HourlyEndUseDemand":
        return HourlyEndUseDemand(*(getattr(self, k) * factor for k in self.END_USES), units=self.units)


# --------------------------------------------------------------------------
# envelope and loads


def envelope(building: BuildingSample, params: SimParams = DEFAULT_PARAMS) -> EnvelopeSpec:
    stories = max(1, int(building.stories))
    height = params.story_height.get(building.sector, 3.0)
    footprint = building.floor_area / stories
    perimeter = 4.0 * np.sqrt(footprint)
    wall_gross = perimeter * height * stories
    window = building.window_wall_ratio * wall_gross
    opaque = wall_gross - window
    ua_env = (
        footprint / building.ceiling_r
        + opaque / building.wall_r
        + window * building.window_u
        + perimeter * params.slab_f_factor
    )
    volume = building.floor_area * height
    infiltration = AIR_RHO_CP * building.ach50 / params.ach_divisor * volume
    conduction_loss = min(params.duct_conduction_cap, params.duct_conduction_coeff / building.duct_r)
    eta = (1.0 - building.duct_leakage_fraction) * (1.0 - conduction_loss)
    return EnvelopeSpec(float(ua_env), float(infiltration), float(eta), building.floor_area)


def internal_gains_w(building: BuildingSample, timestamps) -> np.ndarray:
    density = building.internal_gains_w_per_m2 + building.lighting_power_density
    return density * building.floor_area * schedule(building.building_type, timestamps)


def _loads(env: EnvelopeSpec, heat_sp, cool_sp, t_out, gains_w):
    ua = env.ua_total
    eta = env.duct_distribution_efficiency
    heating = np.maximum(0.0, ua * (heat_sp - t_out) - gains_w) / 1000.0 / eta
    cooling = np.maximum(0.0, ua * (t_out - cool_sp) + gains_w) / 1000.0 / eta
    return heating, cooling


def thermal_load(building: BuildingSample, weather, params: SimParams = DEFAULT_PARAMS):
    """Hourly (heating, cooling) thermal load in kWh_th for one building."""
    if building.zone_id != weather.zone_id:
        raise StructuralError(f"building {building.building_id} is in zone {building.zone_id}, weather is {weather.zone_id}")
    env = envelope(building, params)
    gains = internal_gains_w(building, weather.timestamps)
    return _loads(env, building.heat_setpoint, building.cool_setpoint, weather.dry_bulb, gains)


def autosize(building: BuildingSample, design_temperatures: dict, params: SimParams = DEFAULT_PARAMS) -> HvacSystem:
    """Size heating and cooling at ``sizing_factor`` times the design-hour load.

    Design loads ignore internal gains. Heat pump capacity is the rated
    capacity at ``hp_rating_temp``; derating happens at run time.
    """
    try:
        design = design_temperatures[building.zone_id]
    except KeyError:
        raise ConfigError(f"no design temperatures for zone {building.zone_id}") from None
    env = envelope(building, params)
    ua, eta = env.ua_total, env.duct_distribution_efficiency
    heat_design = ua * max(0.0, building.heat_setpoint - design["heating"]) / 1000.0 / eta
    cool_design = ua * max(0.0, design["cooling"] - building.cool_setpoint) / 1000.0 / eta
    eq = building.heating_system
    return HvacSystem(
        kind=eq.kind,
        heating_capacity=max(params.min_capacity_kw, params.sizing_factor * heat_design),
        cooling_capacity=max(params.min_capacity_kw, params.sizing_factor * cool_design),
        cooling_seer=building.cooling_seer,
        heating_rating=eq.rating,
        ashp_cutoff=params.ashp_cutoff,
        supplemental=eq.supplemental,
        cop_47=eq.cop_47,
        cop_17=eq.cop_17,
    )


def cop_anchors(system: HvacSystem, params: SimParams = DEFAULT_PARAMS) -> tuple:
    c47, c17, ref = params.hp_curves[system.kind]
    if ref is not None and system.heating_rating is not None:
        scale = system.heating_rating / ref
        c47, c17 = c47 * scale, c17 * scale
    if system.cop_47 is not None:
        c47 = system.cop_47
    if system.cop_17 is not None:
        c17 = system.cop_17
    return c47, c17


def heat_pump_cop(system: HvacSystem, t_out, params: SimParams = DEFAULT_PARAMS):
    """COP and available-capacity fraction at outdoor temperature ``t_out``.

    Both are linear in temperature; COP runs through the two rating anchors
    and is floored at ``cop_floor``. Below the cutoff the unit is off: COP and
    capacity fraction are both zero.
    """
    if system.kind not in HEAT_PUMP_KINDS:
        raise ValueError(f"{system.kind} is not a heat pump")
    t = np.asarray(t_out, dtype=float)
    c47, c17 = cop_anchors(system, params)
    t_hi, t_lo = params.hp_rating_temp, params.hp_low_temp
    cop = c17 + (c47 - c17) * (t - t_lo) / (t_hi - t_lo)
    cop = np.maximum(cop, params.cop_floor)
    slope = (1.0 - params.capacity_fraction_at_cutoff) / (t_hi - system.ashp_cutoff)
    frac = np.clip(1.0 + slope * (t - t_hi), *params.capacity_fraction_bounds)
    off = t < system.ashp_cutoff
    cop = np.where(off, 0.0, cop)
    frac = np.where(off, 0.0, frac)
    if cop.ndim == 0:
        return float(cop), float(frac)
    return cop, frac


def hvac_electricity(loads, system: HvacSystem, weather, params: SimParams = DEFAULT_PARAMS) -> HourlyEndUseDemand:
    """Convert hourly thermal loads to equipment energy use.

    ``loads`` is ``(heating_kwh_th, cooling_kwh_th)``. ``weather`` may be a
    ZoneWeatherSeries or a bare temperature array.
    """
    heating, cooling = (np.asarray(x, dtype=float) for x in loads)
    t_out = np.asarray(getattr(weather, "dry_bulb", weather), dtype=float)
    if not (len(heating) == len(cooling) == len(t_out)):
        raise StructuralError("loads and weather are not aligned")
    zeros = np.zeros_like(heating)
    gas = zeros.copy()
    cap = system.heating_capacity

    if system.kind in HEAT_PUMP_KINDS:
        cop, frac = heat_pump_cop(system, t_out, params)
        hp_served = np.minimum(heating, cap * frac)
        safe_cop = np.where(cop > 0, cop, 1.0)
        heat_e = np.where(hp_served > 0, hp_served / safe_cop, 0.0)
        remainder = heating - hp_served
        if system.supplemental == "none":
            supp = zeros
        else:
            supp = np.minimum(remainder, cap)
        if system.supplemental == "electric_resistance":
            heat_e = heat_e + supp
        elif system.supplemental == "gas":
            gas = supp / params.supplemental_afue
        delivered_heat = hp_served + supp
    elif system.kind in GAS_KINDS:
        delivered_heat = np.minimum(heating, cap)
        gas = delivered_heat / system.heating_rating
        heat_e = params.air_handler_fraction * delivered_heat
    elif system.kind == "electric_resistance":
        delivered_heat = np.minimum(heating, cap)
        heat_e = delivered_heat.copy()
    else:
        raise ValidationError(f"unsupported heating kind {system.kind}")

    delivered_cool = np.minimum(cooling, system.cooling_capacity)
    cool_e = delivered_cool / (system.cooling_seer * params.seer_to_cop)
    unmet = (heating - delivered_heat) + (cooling - delivered_cool)
    return HourlyEndUseDemand(
        heating_kwh_e=heat_e,
        cooling_kwh_e=cool_e,
        other_kwh_e=zeros.copy(),
        gas_kwh_th=gas,
        unmet_kwh_th=unmet,
        delivered_kwh_th=delivered_heat + delivered_cool,
    )


def simulate_building(building: BuildingSample, weather, design_temperatures: dict,
                      params: SimParams = DEFAULT_PARAMS) -> HourlyEndUseDemand:
    heating, cooling = thermal_load(building, weather, params)
    system = autosize(building, design_temperatures, params)
    out = hvac_electricity((heating, cooling), system, weather, params)
    # every watt of internal gain is electrical
    out.other_kwh_e = internal_gains_w(building, weather.timestamps) / 1000.0
    return out


def aggregate_sector(pairs) -> HourlyEndUseDemand:
    """Weighted sum of per-building demand, in MW.

    Buildings are reduced in ``building_id`` order, so the floating-point
    result does not depend on input order or scheduling.
    """
    pairs = sorted(pairs, key=lambda p: p[0].building_id)
    if not pairs:
        raise StructuralError("nothing to aggregate")
    acc = SectorAccumulator(len(pairs[0][1]))
    for sample, demand in pairs:
        acc.add(sample, demand)
    return acc.result()


class SectorAccumulator:
    """Running weighted sum; callers must feed buildings in a fixed order."""

    def __init__(self, n_hours: int):
        self.n = n_hours
        self.sums = {k: np.zeros(n_hours) for k in HourlyEndUseDemand.END_USES}

    def add(self, sample: BuildingSample, demand: HourlyEndUseDemand):
        if len(demand) != self.n:
            raise StructuralError(f"{sample.building_id}: demand length {len(demand)} != {self.n}")
        w = sample.weight / 1000.0  # kWh/h -> MW
        for k, arr in self.sums.items():
            arr += w * getattr(demand, k)

    def result(self) -> HourlyEndUseDemand:
        return HourlyEndUseDemand(**{k: v.copy() for k, v in self.sums.items()}, units="MW")


BUILDING_CSV_COLUMNS = ("hour",) + HourlyEndUseDemand.END_USES


def write_building_csv(demand: HourlyEndUseDemand, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BUILDING_CSV_COLUMNS)
        cols = [getattr(demand, k) for k in HourlyEndUseDemand.END_USES]
        for h in range(len(demand)):
            w.writerow([h] + [repr(float(c[h])) for c in cols])
