import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stockgrid.building import HourlyEndUseDemand
from stockgrid.errors import StructuralError
from stockgrid.transfer import (
    BUCKETS,
    HourOfWeekRegressionSet,
    apply_transfer,
    bucket_key,
    day_classes,
    fit_quadratic,
    fit_transfer,
)
from stockgrid.weather import DegreeDaySeries, year_timestamps

TS = year_timestamps(2018)
N = len(TS)


def demand(heat, cool, other):
    z = np.zeros(N)
    return HourlyEndUseDemand(np.asarray(heat, float), np.asarray(cool, float), np.asarray(other, float), z, z.copy())


def random_dd(seed, scale=1.0):
    rng = np.random.default_rng(seed)
    t = 18.5 + 12 * np.sin(np.arange(N) * 2 * np.pi / N - np.pi / 2) * scale + rng.normal(0, 4, N)
    return DegreeDaySeries(18.5, np.maximum(0, 18.5 - t) / 24, np.maximum(0, t - 18.5) / 24, TS)


def normal_equations(x, y):
    """Independent oracle: solve (X^T X) c = X^T y by explicit sums."""
    s = [np.sum(x ** k) for k in range(5)]
    a = np.array([[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]])
    b = np.array([np.sum(y), np.sum(x * y), np.sum(x * x * y)])
    return np.linalg.solve(a, b)


def test_exact_quadratic_recovered_in_every_bucket():
    dd = random_dd(1)
    heat = 2 + 3 * dd.hdd + 0.5 * dd.hdd ** 2
    cool = 2 + 3 * dd.cdd + 0.5 * dd.cdd ** 2
    reg = fit_transfer(demand(heat, cool, np.ones(N)), dd)
    assert len(reg.heating) == len(reg.cooling) == len(reg.other) == 48
    for name in ("heating", "cooling"):
        for key, coef in getattr(reg, name).items():
            np.testing.assert_allclose(coef, (2, 3, 0.5), atol=1e-6, err_msg=f"{name} {key}")
    assert reg.warnings == []


def test_constant_demand_gives_intercept_only():
    dd = random_dd(2)
    reg = fit_transfer(demand(np.full(N, 7.0), np.full(N, 3.0), np.full(N, 1.5)), dd)
    for coef in reg.heating.values():
        np.testing.assert_allclose(coef, (7.0, 0, 0), atol=1e-6)
    for coef in reg.cooling.values():
        np.testing.assert_allclose(coef, (3.0, 0, 0), atol=1e-6)
    assert set(reg.other.values()) == {1.5}


def test_random_fixture_matches_normal_equations_and_beats_constant():
    dd = random_dd(3)
    rng = np.random.default_rng(3)
    heat = 50 + 900 * dd.hdd + 40 * dd.hdd ** 2 + rng.normal(0, 20, N)
    cool = 30 + 600 * dd.cdd + rng.normal(0, 20, N)
    reg = fit_transfer(demand(heat, cool, rng.uniform(0, 10, N)), dd)
    idx = day_classes(TS)
    for b, (dc, h) in enumerate(BUCKETS):
        sel = idx == b
        key = bucket_key(dc, h)
        for name, x, y in (("heating", dd.hdd[sel], heat[sel]), ("cooling", dd.cdd[sel], cool[sel])):
            coef = np.array(getattr(reg, name)[key])
            oracle = normal_equations(x, y)
            np.testing.assert_allclose(coef, oracle, rtol=1e-6, atol=1e-6 * np.abs(oracle).max())
            rss = np.sum((y - (coef[0] + coef[1] * x + coef[2] * x * x)) ** 2)
            assert rss <= np.sum((y - y.mean()) ** 2) + 1e-9


@given(coef=st.tuples(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50)),
       x=st.lists(st.floats(0, 2), min_size=6, max_size=40, unique=True),
       noise=st.lists(st.floats(-1, 1), min_size=40, max_size=40))
def test_fit_quadratic_matches_oracle(coef, x, noise):
    x = np.array(x)
    y = coef[0] + coef[1] * x + coef[2] * x * x + np.array(noise[: len(x)])
    # keep the design reasonably conditioned
    if np.ptp(x) < 0.1:
        return
    got, note = fit_quadratic(x, y)
    assert note is None
    oracle = normal_equations(x, y)
    fit_got = got[0] + got[1] * x + got[2] * x * x
    fit_oracle = oracle[0] + oracle[1] * x + oracle[2] * x * x
    np.testing.assert_allclose(fit_got, fit_oracle, atol=1e-6 * (1 + np.abs(y).max()))


def test_degraded_fits():
    coef, note = fit_quadratic([1.0, 1.0, 2.0, 2.0], [1.0, 1.0, 3.0, 3.0])
    np.testing.assert_allclose(coef, (-1.0, 2.0, 0.0), atol=1e-12)
    assert "degree 1" in note
    coef, note = fit_quadratic([0.0, 0.0, 0.0], [1.0, 2.0, 3.0])
    np.testing.assert_allclose(coef, (2.0, 0.0, 0.0))
    assert "degree 0" in note
    with pytest.raises(StructuralError):
        fit_quadratic([], [])


def test_summer_buckets_degrade_with_warnings():
    # all-zero HDD in the warm half leaves some buckets with a single regressor value
    dd = random_dd(4)
    hdd = np.where(np.arange(N) % 24 < 12, 0.0, dd.hdd)
    dd0 = DegreeDaySeries(18.5, hdd, dd.cdd, TS)
    reg = fit_transfer(demand(hdd * 10, dd.cdd, np.ones(N)), dd0)
    assert any("heating" in w and "degree 0" in w for w in reg.warnings)


def test_zero_hdd_year_gives_clamped_intercept():
    reg = fit_transfer(demand(5 + 100 * random_dd(5).hdd, np.zeros(N), np.ones(N)), random_dd(5))
    reg.heating["weekday-03"] = (-4.0, 1.0, 1.0)
    zero = DegreeDaySeries(18.5, np.zeros(N), np.zeros(N), TS)
    out = apply_transfer(reg, zero)
    idx = day_classes(TS)
    for b, (dc, h) in enumerate(BUCKETS):
        c0 = reg.heating[bucket_key(dc, h)][0]
        np.testing.assert_allclose(out.demand.heating_kwh_e[idx == b], max(0.0, c0))


def test_same_year_residuals_match_fit_residuals():
    dd = random_dd(6)
    rng = np.random.default_rng(6)
    heat = 100 + 500 * dd.hdd + rng.uniform(0, 5, N)
    reg = fit_transfer(demand(heat, np.zeros(N), np.ones(N)), dd)
    out = apply_transfer(reg, dd)
    idx = day_classes(TS)
    expected = np.empty(N)
    for b, (dc, h) in enumerate(BUCKETS):
        sel = idx == b
        c = normal_equations(dd.hdd[sel], heat[sel])
        expected[sel] = heat[sel] - (c[0] + c[1] * dd.hdd[sel] + c[2] * dd.hdd[sel] ** 2)
    np.testing.assert_allclose(heat - out.demand.heating_kwh_e, expected, atol=1e-9)
    assert not out.extrapolated.any()


def test_extreme_cold_flagged_and_nonnegative():
    dd = random_dd(7)
    reg = fit_transfer(demand(10 + 200 * dd.hdd - 300 * dd.hdd ** 2 + 1, dd.cdd, np.ones(N)), dd)
    cold = DegreeDaySeries(18.5, dd.hdd * 3.0, dd.cdd, TS)
    out = apply_transfer(reg, cold)
    assert out.extrapolated.any()
    for k in ("heating_kwh_e", "cooling_kwh_e", "other_kwh_e"):
        assert (getattr(out.demand, k) >= 0).all()
    again = apply_transfer(reg, cold)
    assert np.array_equal(again.demand.heating_kwh_e, out.demand.heating_kwh_e)
    assert np.array_equal(again.extrapolated, out.extrapolated)


def test_json_round_trip(tmp_path):
    dd = random_dd(8)
    reg = fit_transfer(demand(1 + dd.hdd, 1 + dd.cdd, np.ones(N)), dd)
    reg.save(tmp_path / "reg.json")
    doc = json.loads((tmp_path / "reg.json").read_text())
    assert "weekday-00" in doc["heating"] and "weekend-23" in doc["cooling"]
    back = HourOfWeekRegressionSet.load(tmp_path / "reg.json")
    assert np.array_equal(apply_transfer(back, dd).demand.heating_kwh_e, apply_transfer(reg, dd).demand.heating_kwh_e)


def test_missing_bucket_and_alignment_errors():
    dd = random_dd(9)
    reg = fit_transfer(demand(1 + dd.hdd, 1 + dd.cdd, np.ones(N)), dd)
    d = reg.to_dict()
    del d["heating"]["weekend-05"]
    with pytest.raises(StructuralError):
        HourOfWeekRegressionSet.from_dict(d)
    short = DegreeDaySeries(18.5, dd.hdd[:100], dd.cdd[:100], TS[:100])
    with pytest.raises(StructuralError):
        fit_transfer(demand(1 + dd.hdd, 1 + dd.cdd, np.ones(N)), short)


def test_day_classes():
    # 2018-01-01 was a Monday; 2018-01-06 a Saturday
    idx = day_classes(TS)
    assert idx[0] == 0 and idx[5] == 5
    assert idx[5 * 24] == 24 and idx[6 * 24 + 23] == 47
