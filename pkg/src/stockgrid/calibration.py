"""Monthly multiplicative bias correction against served load.

``factor[m] = served[m] / modeled[m]`` for every month except February,
which borrows January's factor because February's served load was
depressed by load shed. Scenario profiles reuse the baseline factors, so
scenario/baseline ratios survive calibration unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, StructuralError

SCHEMA_VERSION = 1
BORROWED_MONTHS = {2: 1}


def months_of(timestamps) -> np.ndarray:
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    return ts.astype("datetime64[M]").astype(int) % 12 + 1


@dataclass(frozen=True)
class MonthlyBiasFactors:
    sector: str
    factors: dict  # month -> factor
    provenance: dict  # month -> source month

    def __post_init__(self):
        if set(self.factors) != set(range(1, 13)):
            raise StructuralError("bias factors must cover months 1..12")
        if any(not f > 0 for f in self.factors.values()):
            raise DataError("bias factors must be positive")
        for m in range(1, 13):
            if self.provenance.get(m) != BORROWED_MONTHS.get(m, m):
                raise StructuralError(f"unexpected provenance for month {m}")

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "sector": self.sector,
            "factors": {str(m): self.factors[m] for m in range(1, 13)},
            "provenance": {str(m): self.provenance[m] for m in range(1, 13)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MonthlyBiasFactors":
        return cls(
            sector=d["sector"],
            factors={int(k): float(v) for k, v in d["factors"].items()},
            provenance={int(k): int(v) for k, v in d["provenance"].items()},
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def compute_factors(modeled_baseline, served_load, timestamps, sector: str = "residential") -> MonthlyBiasFactors:
    modeled = np.asarray(modeled_baseline, dtype=float)
    served = np.asarray(served_load, dtype=float)
    months = months_of(timestamps)
    if not (len(modeled) == len(served) == len(months)):
        raise StructuralError("modeled, served and calendar must be aligned")
    present = set(np.unique(months).tolist())
    if present != set(range(1, 13)):
        raise StructuralError(f"missing months: {sorted(set(range(1, 13)) - present)}")
    factors, provenance = {}, {}
    for m in range(1, 13):
        src = BORROWED_MONTHS.get(m, m)
        sel = months == src
        total = modeled[sel].sum()
        if total == 0:
            raise DataError(f"modeled consumption for month {src} is zero; factor undefined")
        factors[m] = float(served[sel].sum() / total)
        provenance[m] = src
    return MonthlyBiasFactors(sector, factors, provenance)


def apply_factors(profile, factors: MonthlyBiasFactors, timestamps) -> np.ndarray:
    profile = np.asarray(profile, dtype=float)
    months = months_of(timestamps)
    if len(profile) != len(months):
        raise StructuralError("profile and calendar must be aligned")
    lookup = np.zeros(13)
    for m in np.unique(months):
        if int(m) not in factors.factors:
            raise StructuralError(f"no factor for month {m}")
        lookup[m] = factors.factors[int(m)]
    return profile * lookup[months]
