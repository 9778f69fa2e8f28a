import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stockgrid.errors import ParseError, StructuralError, ValidationError
from stockgrid.weather import (
    DegreeDaySeries,
    PopulationWeightSet,
    ZoneWeatherSeries,
    hourly_degree_days,
    load_population_csv,
    mean_temperature,
    parse_weather_file,
    population_weighted_dd,
    system_metrics,
    write_epw,
    write_simple_csv,
    year_timestamps,
)

from conftest import constant_weather


def straight_loop_dd(temps, base):
    hdd, cdd = [], []
    for t in temps:
        h = base - t
        c = t - base
        hdd.append((h if h > 0 else 0.0) / 24.0)
        cdd.append((c if c > 0 else 0.0) / 24.0)
    return hdd, cdd


def series_from(temps, zone="Z", year=2021):
    return ZoneWeatherSeries(zone, zone, year, year_timestamps(year), np.asarray(temps, dtype=float))


# --- degree days -----------------------------------------------------------


@pytest.mark.parametrize("t, hdd, cdd", [(18.5, 0.0, 0.0), (-5.5, 1.0, 0.0), (30.5, 0.0, 0.5)])
def test_hourly_degree_days_examples(t, hdd, cdd):
    dd = hourly_degree_days(constant_weather(temp=t), base=18.5)
    assert dd.hdd[0] == hdd
    assert dd.cdd[0] == cdd


def test_two_zone_average():
    a = DegreeDaySeries(18.5, [1.0], [0.0])
    b = DegreeDaySeries(18.5, [0.0], [0.0])
    out = population_weighted_dd({"A": a, "B": b}, PopulationWeightSet({"A": 0.5, "B": 0.5}))
    assert out.hdd[0] == 0.5


def test_single_zone_identity():
    dd = hourly_degree_days(constant_weather(temp=3.0))
    out = population_weighted_dd({"COAST": dd}, PopulationWeightSet({"COAST": 1.0}))
    assert np.array_equal(out.hdd, dd.hdd) and np.array_equal(out.cdd, dd.cdd)


def test_key_mismatch_is_structural():
    dd = hourly_degree_days(constant_weather())
    with pytest.raises(StructuralError):
        population_weighted_dd({"COAST": dd}, PopulationWeightSet({"EAST": 1.0}))


def test_base_mismatch_is_structural():
    a = hourly_degree_days(constant_weather("A"), base=18.5)
    b = hourly_degree_days(constant_weather("B"), base=18.0)
    with pytest.raises(StructuralError):
        population_weighted_dd({"A": a, "B": b}, PopulationWeightSet({"A": 0.5, "B": 0.5}))


@given(
    temps=st.lists(st.floats(-40, 45), min_size=72, max_size=72),
    w=st.lists(st.floats(0.01, 10), min_size=3, max_size=3),
    base=st.floats(10, 25),
)
def test_brute_force_oracle_three_zones(temps, w, base):
    zones = {f"Z{i}": np.array(temps[24 * i:24 * (i + 1)]) for i in range(3)}
    weights = PopulationWeightSet.from_populations({z: w[i] for i, z in enumerate(zones)})
    per_zone = {}
    for z, t in zones.items():
        h = np.maximum(0.0, base - t) / 24.0
        per_zone[z] = DegreeDaySeries(base, h, np.maximum(0.0, t - base) / 24.0)
    out = population_weighted_dd(per_zone, weights)
    for h in range(24):
        exp_h = exp_c = 0.0
        for z, t in zones.items():
            hh, cc = straight_loop_dd([t[h]], base)
            exp_h += weights.weights[z] * hh[0]
            exp_c += weights.weights[z] * cc[0]
        assert abs(out.hdd[h] - exp_h) <= 1e-9
        assert abs(out.cdd[h] - exp_c) <= 1e-9


@given(t=st.floats(-40, 45), base=st.floats(10, 25))
def test_hourly_dd_matches_straight_loop(t, base):
    dd = hourly_degree_days(constant_weather(temp=t), base=base)
    hh, cc = straight_loop_dd([t], base)
    assert abs(dd.hdd[0] - hh[0]) <= 1e-12 and abs(dd.cdd[0] - cc[0]) <= 1e-12


@given(temps=st.lists(st.floats(-30, 40), min_size=8, max_size=8), w=st.lists(st.floats(0.01, 5), min_size=8, max_size=8))
def test_round_trip_uniform_system(temps, w):
    per_zone = {f"Z{i}": DegreeDaySeries(18.5, [max(0, 18.5 - t) / 24], [max(0, t - 18.5) / 24]) for i, t in enumerate(temps)}
    weights = PopulationWeightSet.from_populations({f"Z{i}": v for i, v in enumerate(w)})
    system = population_weighted_dd(per_zone, weights)
    mt = mean_temperature(system)
    if system.hdd[0] > 0:
        uniform = {z: DegreeDaySeries(18.5, [max(0, 18.5 - mt.values[0]) / 24], [0.0]) for z in per_zone}
        again = population_weighted_dd(uniform, weights)
        assert abs(again.hdd[0] - system.hdd[0]) <= 1e-12


@given(t=st.floats(-30, 40), w=st.floats(0.01, 0.99))
def test_identical_zones_equal_single(t, w):
    dd = DegreeDaySeries(18.5, [max(0, 18.5 - t) / 24], [max(0, t - 18.5) / 24])
    out = population_weighted_dd({"A": dd, "B": dd}, PopulationWeightSet.from_populations({"A": w, "B": 1 - w}))
    assert abs(out.hdd[0] - dd.hdd[0]) <= 1e-15


@given(temps=st.lists(st.floats(-30, 40), min_size=4, max_size=4), drop=st.floats(0, 20), k=st.integers(0, 3))
def test_lowering_a_zone_never_decreases_hdd(temps, drop, k):
    w = PopulationWeightSet({f"Z{i}": 0.25 for i in range(4)})

    def sys_hdd(ts):
        per = {f"Z{i}": DegreeDaySeries(18.5, [max(0, 18.5 - t) / 24], [0.0]) for i, t in enumerate(ts)}
        return population_weighted_dd(per, w).hdd[0]

    colder = list(temps)
    colder[k] -= drop
    assert sys_hdd(colder) >= sys_hdd(temps)


def test_mean_temperature_examples():
    mt = mean_temperature(DegreeDaySeries(18.5, [1.0, 0.0], [0.0, 0.3]))
    assert mt.values[0] == -5.5
    assert mt.values[1] == 18.5 and mt.cooling_not_captured[1] and not mt.cooling_not_captured[0]


def test_fixture_coldest_hour_and_winter_average(weather_2021, weights):
    system, mt = system_metrics(weather_2021, weights)
    assert abs(mt.values.min() - (-14.2)) < 1e-9
    months = system.timestamps.astype("datetime64[M]").astype(int) % 12 + 1
    winter = np.isin(months, (1, 2, 12))
    per_zone = [hourly_degree_days(s).hdd[winter].mean() for s in weather_2021.values()]
    avg = system.hdd[winter].mean()
    assert min(per_zone) <= avg <= max(per_zone)
    assert 0.19 <= avg <= 0.49


def test_weights_must_sum_to_one():
    with pytest.raises(ValidationError):
        PopulationWeightSet({"A": 0.5, "B": 0.6})


# --- parsing ---------------------------------------------------------------


def test_epw_round_trip_and_first_value(tmp_path):
    temps = np.full(8760, 7.0)
    temps[0] = 4.4
    s = ZoneWeatherSeries("NORTH_C", "KDFW", 2021, year_timestamps(2021), temps)
    p = tmp_path / "x.epw"
    write_epw(s, p)
    # independent read of the raw text: 9th line, 7th field
    line = p.read_text().splitlines()[8].split(",")
    assert line[:4] == ["2021", "1", "1", "1"] and float(line[6]) == 4.4
    back = parse_weather_file(p, zone_id="NORTH_C")
    assert len(back) == 8760 and back.dry_bulb[0] == 4.4
    assert back.station_id == "KDFW"
    assert back.timestamps[0] == np.datetime64("2021-01-01T00")


def test_simple_csv_round_trip(tmp_path):
    s = series_from(np.linspace(-5, 30, 8760), zone="COAST")
    p = tmp_path / "c.csv"
    write_simple_csv(s, p)
    back = parse_weather_file(p, format="simple_csv", zone_id="COAST")
    assert np.array_equal(back.dry_bulb, s.dry_bulb)


def test_short_csv_is_structural(tmp_path):
    s = series_from(np.zeros(8760))
    p = tmp_path / "c.csv"
    write_simple_csv(s, p)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(StructuralError):
        parse_weather_file(p, format="simple_csv")


def test_bad_value_reports_line(tmp_path):
    s = series_from(np.zeros(8760))
    p = tmp_path / "c.csv"
    write_simple_csv(s, p)
    lines = p.read_text().splitlines()
    lines[5] = lines[5].split(",")[0] + ",warm"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as err:
        parse_weather_file(p, format="simple_csv")
    assert err.value.line == 6


def test_out_of_range_temperature():
    t = np.zeros(8760)
    t[10] = 75.0
    with pytest.raises(ValidationError):
        series_from(t)


def test_gap_in_timestamps():
    ts = year_timestamps(2021).copy()
    ts[100:] += 1
    with pytest.raises(StructuralError):
        ZoneWeatherSeries("Z", "Z", 2021, ts, np.zeros(8760))


def test_leap_year_length():
    assert len(series_from(np.zeros(8784), year=2020)) == 8784


def test_population_csv(tmp_path):
    p = tmp_path / "pop.csv"
    p.write_text("zone_id,population\nA,3\nB,1\n")
    w = load_population_csv(p)
    assert w.weights == {"A": 0.75, "B": 0.25}


def test_population_csv_bad_header(tmp_path):
    p = tmp_path / "pop.csv"
    p.write_text("zone,pop\nA,3\n")
    with pytest.raises(ParseError):
        load_population_csv(p)


def test_degree_days_fast_on_year(weather_2021, weights):
    t0 = time.perf_counter()
    system_metrics(weather_2021, weights)
    assert time.perf_counter() - t0 < 1.0
