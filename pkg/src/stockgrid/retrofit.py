"""Upgrade packages with only-if-worse semantics.

A measure never makes a building worse: an R-value is raised only if below
target, leakage lowered only if above, and so on. Heating-system measures
replace equipment that burns gas or that is electric but less efficient than
the target heat pump. Everything is idempotent: applying a package to its own
output is a no-op.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .sampler import R_VALUE_PARAMETERS, SAMPLED_PARAMETERS, BuildingSample, HeatingEquipment, r_ip_to_si, read_text

PACKAGE_NAMES = ("efficiency", "electrification", "efficiency_electrification")
SCENARIOS = ("baseline",) + PACKAGE_NAMES
DIRECTIONS = ("at_least", "at_most", "electrify", "replace", "led")

# Resistance heat expressed as HSPF (COP 1 = 3.412 Btu/Wh).
RESISTANCE_HSPF = 3.412


@dataclass(frozen=True)
class Measure:
    parameter: str
    direction: str
    target: object = None
    target_by_zone: dict | None = None
    multiplier: float | None = None
    cooling_seer: float | None = None
    replace_kinds: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ConfigError(f"unknown measure direction {self.direction!r}")
        if self.parameter not in SAMPLED_PARAMETERS:
            raise ConfigError(f"measure references unknown parameter {self.parameter!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "Measure":
        d = dict(d)
        units = d.pop("units", "si")
        param = d.get("parameter")

        def conv(v):
            if isinstance(v, dict):
                return HeatingEquipment.from_dict(v)
            if units == "ip" and param in R_VALUE_PARAMETERS:
                return r_ip_to_si(float(v))
            return v

        if "target" in d:
            d["target"] = conv(d["target"])
        if "target_by_zone" in d:
            d["target_by_zone"] = {z: conv(v) for z, v in d["target_by_zone"].items()}
        if "replace_kinds" in d:
            d["replace_kinds"] = tuple(d["replace_kinds"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad measure {d}: {exc}") from None

    def key(self) -> str:
        """Canonical form used to compare measure sets."""
        t = self.target.label() if isinstance(self.target, HeatingEquipment) else self.target
        tz = None
        if self.target_by_zone:
            tz = sorted((z, v.label() if isinstance(v, HeatingEquipment) else v) for z, v in self.target_by_zone.items())
        return json.dumps(
            [self.parameter, self.direction, t, tz, self.multiplier, self.cooling_seer, list(self.replace_kinds)],
            sort_keys=True,
            default=str,
        )

    def target_for(self, zone_id: str):
        if self.target_by_zone is not None:
            if zone_id in self.target_by_zone:
                return self.target_by_zone[zone_id]
            if "default" in self.target_by_zone:
                return self.target_by_zone["default"]
            raise ConfigError(f"measure {self.parameter}: no target for zone {zone_id}")
        return self.target


@dataclass(frozen=True)
class RetrofitPackage:
    name: str
    measures: dict = field(default_factory=dict)  # sector -> tuple[Measure]

    def __post_init__(self):
        if self.name not in PACKAGE_NAMES:
            raise ConfigError(f"unknown package {self.name!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "RetrofitPackage":
        measures = {}
        for sector in ("residential", "commercial"):
            measures[sector] = tuple(Measure.from_dict(m) for m in doc.get(sector, []))
        return cls(name=doc["name"], measures=measures)

    def keys(self, sector: str) -> set:
        return {m.key() for m in self.measures.get(sector, ())}


def load_package(path) -> RetrofitPackage:
    return RetrofitPackage.from_dict(json.loads(read_text(path)))


def default_packages() -> dict:
    return {name: load_package(f"@packages/{name}") for name in PACKAGE_NAMES}


def _hspf_equivalent(eq: HeatingEquipment) -> float:
    if eq.kind == "electric_resistance":
        return RESISTANCE_HSPF
    if eq.kind == "ashp":
        return eq.rating if eq.rating is not None else 0.0
    return 0.0


def _apply_measure(b: BuildingSample, m: Measure) -> BuildingSample:
    if m.direction == "at_least":
        target = float(m.target_for(b.zone_id))
        value = getattr(b, m.parameter)
        return replace(b, **{m.parameter: target}) if value < target else b
    if m.direction == "at_most":
        target = float(m.target_for(b.zone_id))
        value = getattr(b, m.parameter)
        return replace(b, **{m.parameter: target}) if value > target else b
    if m.direction == "led":
        if b.led_lighting:
            return b
        return replace(b, lighting_power_density=b.lighting_power_density * m.multiplier, led_lighting=True)
    target = m.target_for(b.zone_id)
    eq = b.heating_system
    if m.direction == "electrify":
        worse = eq.uses_fossil or _hspf_equivalent(eq) < _hspf_equivalent(target)
    else:  # replace
        worse = eq.kind in m.replace_kinds or (eq.kind == target.kind and eq.uses_fossil)
    if not worse:
        return b
    changes = {"heating_system": target}
    if m.cooling_seer is not None:
        changes["cooling_seer"] = max(b.cooling_seer, m.cooling_seer)
    return replace(b, **changes)


def apply_package(sample: BuildingSample, package: RetrofitPackage) -> BuildingSample:
    out = sample
    for m in package.measures.get(sample.sector, ()):
        out = _apply_measure(out, m)
    return out


def scenario_stock(samples, scenario: str, packages: dict | None = None) -> list:
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    if scenario == "baseline":
        return list(samples)
    packages = packages or default_packages()
    pkg = packages[scenario]
    return [apply_package(s, pkg) for s in samples]


def combine_packages(name: str, *packages: RetrofitPackage) -> RetrofitPackage:
    measures = {}
    for sector in ("residential", "commercial"):
        seen = {}
        for p in packages:
            for m in p.measures.get(sector, ()):
                seen.setdefault(m.key(), m)
        measures[sector] = tuple(seen.values())
    return RetrofitPackage(name=name, measures=measures)
