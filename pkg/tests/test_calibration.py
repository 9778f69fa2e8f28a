import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stockgrid.calibration import MonthlyBiasFactors, apply_factors, compute_factors, months_of
from stockgrid.errors import DataError, StructuralError
from stockgrid.weather import year_timestamps

TS = year_timestamps(2021)
N = len(TS)
MONTHS = months_of(TS)


def profile(seed, lo=1.0, hi=100.0):
    return np.random.default_rng(seed).uniform(lo, hi, N)


def test_months_of():
    assert MONTHS[0] == 1 and MONTHS[-1] == 12
    assert np.count_nonzero(MONTHS == 2) == 28 * 24


def test_identity_when_modeled_equals_served():
    p = profile(0)
    f = compute_factors(p, p, TS)
    assert all(v == pytest.approx(1.0, abs=1e-12) for v in f.factors.values())
    np.testing.assert_allclose(apply_factors(p, f, TS), p, rtol=1e-12)


def test_january_ratio_carries_into_february():
    modeled = np.ones(N)
    served = np.ones(N)
    jan = MONTHS == 1
    modeled[jan] = 110e3 / jan.sum()  # 110 GWh in MWh
    served[jan] = 100e3 / jan.sum()
    f = compute_factors(modeled, served, TS)
    assert f.factors[1] == pytest.approx(10 / 11, rel=1e-12)
    assert f.factors[2] == f.factors[1]
    assert f.provenance[2] == 1 and f.provenance[3] == 3


def test_locality():
    modeled, served = profile(1), profile(2)
    base = compute_factors(modeled, served, TS)
    served2 = served.copy()
    served2[MONTHS == 3] *= 2
    changed = compute_factors(modeled, served2, TS)
    for m in range(1, 13):
        if m == 3:
            assert changed.factors[m] == pytest.approx(2 * base.factors[m])
        else:
            assert changed.factors[m] == base.factors[m]


def test_february_served_does_not_matter():
    modeled, served = profile(3), profile(4)
    served2 = served.copy()
    served2[MONTHS == 2] *= 0.3
    assert compute_factors(modeled, served, TS) == compute_factors(modeled, served2, TS)


@given(seed=st.integers(0, 2**32 - 1))
def test_conservation_except_february(seed):
    modeled, served = profile(seed), profile(seed + 1, 10, 50)
    adjusted = apply_factors(modeled, compute_factors(modeled, served, TS), TS)
    for m in range(1, 13):
        if m == 2:
            continue
        sel = MONTHS == m
        assert adjusted[sel].sum() == pytest.approx(served[sel].sum(), rel=1e-9)


def test_february_generally_differs():
    modeled, served = profile(5), profile(6)
    served[MONTHS == 2] *= 0.8
    adjusted = apply_factors(modeled, compute_factors(modeled, served, TS), TS)
    feb = MONTHS == 2
    assert abs(adjusted[feb].sum() - served[feb].sum()) > 1.0


@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.1, 3.0))
def test_scenario_ratio_invariant(seed, scale):
    base, served = profile(seed), profile(seed + 7)
    scenario = base * np.random.default_rng(seed).uniform(0.5, 1.5, N) * scale
    f = compute_factors(base, served, TS)
    adj_b, adj_s = apply_factors(base, f, TS), apply_factors(scenario, f, TS)
    np.testing.assert_allclose(adj_s / adj_b, scenario / base, rtol=1e-12)


def test_errors():
    p = profile(8)
    with pytest.raises(StructuralError):
        compute_factors(p[:-1], p, TS)
    with pytest.raises(StructuralError):
        compute_factors(p[: 24 * 31], p[: 24 * 31], TS[: 24 * 31])
    zero_march = p.copy()
    zero_march[MONTHS == 3] = 0
    with pytest.raises(DataError):
        compute_factors(zero_march, p, TS)
    with pytest.raises(StructuralError):
        MonthlyBiasFactors("residential", {m: 1.0 for m in range(1, 12)}, {m: m for m in range(1, 12)})
    bad_prov = {m: m for m in range(1, 13)}
    with pytest.raises(StructuralError):
        MonthlyBiasFactors("residential", {m: 1.0 for m in range(1, 13)}, bad_prov)


def test_json_round_trip(tmp_path):
    f = compute_factors(profile(9), profile(10), TS, sector="commercial")
    f.save(tmp_path / "f.json")
    back = MonthlyBiasFactors.from_dict(json.loads((tmp_path / "f.json").read_text()))
    assert back == f
