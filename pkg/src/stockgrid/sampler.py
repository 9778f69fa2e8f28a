"""Weighted synthetic building stock.

Each parameter is drawn from its own discrete marginal, independently of the
others, using a dedicated PCG64 stream keyed by ``(seed, sector, parameter)``.
Two consequences follow and are relied upon elsewhere:

* declaration order of the marginals is irrelevant;
* the first ``k`` buildings of a sample of size ``n >= k`` are exactly the
  sample of size ``k`` (nested samples), which keeps convergence scans cheap
  to reason about.

Joint structure between parameters (conditional probability tables) is not
modeled.
"""

from __future__ import annotations

import csv
import json
import zlib
from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, ValidationError

SECTORS = ("residential", "commercial")
R_IP_TO_SI = 0.1761  # ft2.F.h/Btu -> m2.K/W

HEATING_KINDS = (
    "electric_resistance",
    "gas_furnace",
    "ashp",
    "commercial_hp_rtu",
    "hp_boiler",
    "gas_boiler",
)
HEAT_PUMP_KINDS = ("ashp", "commercial_hp_rtu", "hp_boiler")
GAS_KINDS = ("gas_furnace", "gas_boiler")
SUPPLEMENTAL_KINDS = ("electric_resistance", "gas", "none")

R_VALUE_PARAMETERS = ("ceiling_r", "wall_r", "duct_r")

REQUIRED_PARAMETERS = (
    "zone_id",
    "floor_area",
    "ceiling_r",
    "wall_r",
    "ach50",
    "duct_leakage_fraction",
    "duct_r",
    "heating_system",
    "cooling_seer",
    "heat_setpoint",
    "cool_setpoint",
    "internal_gains_w_per_m2",
    "lighting_power_density",
)

# Parameters a config may omit; they fall back to a point mass.
OPTIONAL_DEFAULTS = {
    "residential": {
        "building_type": "single_family",
        "stories": 1,
        "window_u": 3.5,
        "window_wall_ratio": 0.15,
        "led_lighting": False,
    },
    "commercial": {
        "building_type": "office",
        "stories": 2,
        "window_u": 3.2,
        "window_wall_ratio": 0.30,
        "led_lighting": False,
    },
}


def r_ip_to_si(r_ip: float) -> float:
    return r_ip * R_IP_TO_SI


@dataclass(frozen=True)
class HeatingEquipment:
    """Installed heating equipment as sampled, before sizing.

    ``rating`` is HSPF for ``ashp``, IEER for ``commercial_hp_rtu``, AFUE for
    gas equipment and unused otherwise. ``cop_47``/``cop_17`` override the
    default heat pump curve anchors.
    """

    kind: str
    rating: float | None = None
    supplemental: str = "none"
    cop_47: float | None = None
    cop_17: float | None = None

    def __post_init__(self):
        if self.kind not in HEATING_KINDS:
            raise ValidationError(f"unknown heating kind {self.kind!r}")
        if self.supplemental not in SUPPLEMENTAL_KINDS:
            raise ValidationError(f"unknown supplemental kind {self.supplemental!r}")
        if self.kind in GAS_KINDS:
            afue = 0.8 if self.rating is None else self.rating
            if not 0 < afue <= 1:
                raise ValidationError(f"AFUE {afue} outside (0, 1]")
            object.__setattr__(self, "rating", float(afue))
        elif self.rating is not None and self.rating <= 0:
            raise ValidationError(f"rating must be positive, got {self.rating}")

    @property
    def is_heat_pump(self) -> bool:
        return self.kind in HEAT_PUMP_KINDS

    @property
    def uses_fossil(self) -> bool:
        return self.kind in GAS_KINDS or self.supplemental == "gas"

    @classmethod
    def from_dict(cls, d: dict) -> "HeatingEquipment":
        d = dict(d)
        kind = d.pop("kind")
        rating = None
        for key in ("hspf", "ieer", "afue", "rating"):
            if key in d:
                rating = float(d.pop(key))
        return cls(kind=kind, rating=rating, **d)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.rating is not None:
            key = {"ashp": "hspf", "commercial_hp_rtu": "ieer"}.get(self.kind, "afue" if self.kind in GAS_KINDS else "rating")
            out[key] = self.rating
        if self.supplemental != "none":
            out["supplemental"] = self.supplemental
        if self.cop_47 is not None:
            out["cop_47"] = self.cop_47
        if self.cop_17 is not None:
            out["cop_17"] = self.cop_17
        return out

    def label(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class BuildingSample:
    building_id: str
    sector: str
    zone_id: str
    floor_area: float
    ceiling_r: float
    wall_r: float
    ach50: float
    duct_leakage_fraction: float
    duct_r: float
    heating_system: HeatingEquipment
    cooling_seer: float
    heat_setpoint: float
    cool_setpoint: float
    internal_gains_w_per_m2: float
    lighting_power_density: float
    building_type: str = "single_family"
    stories: int = 1
    window_u: float = 3.5
    window_wall_ratio: float = 0.15
    led_lighting: bool = False
    weight: float = 1.0

    def __post_init__(self):
        for name in ("floor_area", "ceiling_r", "wall_r", "ach50", "duct_r", "cooling_seer", "window_u"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{self.building_id}: {name} must be positive")
        if not 0 <= self.duct_leakage_fraction < 1:
            raise ValidationError(f"{self.building_id}: duct leakage fraction outside [0, 1)")
        if not self.heat_setpoint < self.cool_setpoint:
            raise ValidationError(f"{self.building_id}: heat setpoint must be below cool setpoint")
        if self.internal_gains_w_per_m2 < 0 or self.lighting_power_density < 0:
            raise ValidationError(f"{self.building_id}: negative internal gains")
        if not self.weight > 0:
            raise ValidationError(f"{self.building_id}: weight must be positive")

    def parameters(self) -> dict:
        """Physical parameters only (no id, sector or weight)."""
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("building_id", "sector", "weight")}


SAMPLED_PARAMETERS = tuple(f.name for f in fields(BuildingSample) if f.name not in ("building_id", "sector", "weight"))


@dataclass(frozen=True)
class Marginal:
    values: tuple
    probabilities: np.ndarray

    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probabilities)
        c[-1] = 1.0
        return c


def _coerce_value(name, value, units):
    if name == "heating_system":
        return value if isinstance(value, HeatingEquipment) else HeatingEquipment.from_dict(value)
    if units == "ip" and name in R_VALUE_PARAMETERS:
        return r_ip_to_si(float(value))
    if name in ("zone_id", "building_type"):
        return str(value)
    if name == "stories":
        return int(value)
    if name == "led_lighting":
        return bool(value)
    return float(value)


@dataclass
class ArchetypeDistribution:
    sector: str
    marginals: dict
    totals: float = 1.0
    coverage_fraction: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.sector not in SECTORS:
            raise ConfigError(f"unknown sector {self.sector!r}")
        missing = [p for p in REQUIRED_PARAMETERS if p not in self.marginals]
        if missing:
            raise ConfigError(f"{self.sector} distribution missing marginals: {missing}")
        unknown = set(self.marginals) - set(SAMPLED_PARAMETERS)
        if unknown:
            raise ConfigError(f"unknown parameters in distribution: {sorted(unknown)}")
        for k, m in self.marginals.items():
            if not isinstance(m, Marginal):
                raise ConfigError(f"marginal {k} not normalized; use from_dict")
            if len(m.values) == 0:
                raise ConfigError(f"marginal {k} is empty")
            p = m.probabilities
            if len(p) != len(m.values) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                raise ConfigError(f"marginal {k}: invalid probability vector")
        if not self.totals > 0:
            raise ConfigError("sector total must be positive")
        if not 0 < self.coverage_fraction <= 1:
            raise ConfigError("coverage_fraction must be in (0, 1]")

    @classmethod
    def from_dict(cls, doc: dict) -> "ArchetypeDistribution":
        sector = doc.get("sector")
        marginals = {}
        for name, spec in doc.get("marginals", {}).items():
            values = spec.get("values", [])
            probs = spec.get("probabilities", [])
            units = spec.get("units", "si")
            try:
                coerced = tuple(_coerce_value(name, v, units) for v in values)
            except (TypeError, ValueError, KeyError) as exc:
                raise ConfigError(f"marginal {name}: {exc}") from None
            marginals[name] = Marginal(coerced, np.asarray(probs, dtype=float))
        for name, default in OPTIONAL_DEFAULTS.get(sector, {}).items():
            marginals.setdefault(name, Marginal((default,), np.array([1.0])))
        totals = doc.get("totals", 1.0)
        if isinstance(totals, dict):
            if len(totals) != 1:
                raise ConfigError("totals must hold exactly one entry")
            totals = next(iter(totals.values()))
        return cls(
            sector=sector,
            marginals=marginals,
            totals=float(totals),
            coverage_fraction=float(doc.get("coverage_fraction", 1.0)),
            name=doc.get("name", ""),
        )


def load_distribution(path) -> ArchetypeDistribution:
    """Load a distribution JSON; ``@name`` resolves to a shipped data file."""
    return ArchetypeDistribution.from_dict(json.loads(read_text(path)))


def read_text(path) -> str:
    s = str(path)
    if s.startswith("@"):
        return resources.files("stockgrid").joinpath("data").joinpath(s[1:] + ".json").read_text()
    return Path(path).read_text()


def _stream(seed: int, sector: str, parameter: str) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed), zlib.crc32(sector.encode()), zlib.crc32(parameter.encode())])
    return np.random.Generator(np.random.PCG64(ss))


def sample_stock(dist: ArchetypeDistribution, n: int, seed: int) -> list:
    if n < 1:
        raise ValueError("sample size must be at least 1")
    prefix = dist.sector[:3]
    drawn = {}
    for name in sorted(dist.marginals):
        m = dist.marginals[name]
        u = _stream(seed, dist.sector, name).random(n)
        idx = np.minimum(np.searchsorted(m.cdf(), u, side="right"), len(m.values) - 1)
        drawn[name] = [m.values[i] for i in idx]
    out = []
    for i in range(n):
        params = {name: drawn[name][i] for name in drawn}
        out.append(BuildingSample(building_id=f"{prefix}-{i:06d}", sector=dist.sector, **params))
    return out


def assign_weights(samples, sector_total: float, coverage_fraction: float = 1.0) -> list:
    """Scale a sample to its sector.

    Residential: every building represents ``total / (n * coverage)`` real
    buildings. Commercial: ``sector_total`` is the floorspace of the modeled
    building types; each sample's weight is a building multiplicity chosen so
    weighted floorspace equals ``sector_total / coverage``.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("cannot weight an empty sample")
    if not sector_total > 0:
        raise ValueError("sector total must be positive")
    if not 0 < coverage_fraction <= 1:
        raise ValueError("coverage fraction must be in (0, 1]")
    sector = samples[0].sector
    if sector == "commercial":
        area = sum(s.floor_area for s in samples)
        w = sector_total / (area * coverage_fraction)
    else:
        w = sector_total / (len(samples) * coverage_fraction)
    return [replace(s, weight=w) for s in samples]


def sample_sector(dist: ArchetypeDistribution, n: int, seed: int) -> list:
    return assign_weights(sample_stock(dist, n, seed), dist.totals, dist.coverage_fraction)


CSV_COLUMNS = ("building_id", "sector") + SAMPLED_PARAMETERS + ("weight",)


def write_samples_csv(samples, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for s in samples:
            row = []
            for col in CSV_COLUMNS:
                v = getattr(s, col)
                row.append(v.label() if isinstance(v, HeatingEquipment) else v)
            w.writerow(row)


def read_samples_csv(path) -> list:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for col in CSV_COLUMNS:
                v = row[col]
                if col in ("building_id", "sector"):
                    kw[col] = v
                elif col == "heating_system":
                    kw[col] = HeatingEquipment.from_dict(json.loads(v))
                elif col == "led_lighting":
                    kw[col] = v == "True"
                elif col == "weight":
                    kw[col] = float(v)
                else:
                    kw[col] = _coerce_value(col, v, "si")
            out.append(BuildingSample(**kw))
    return out
