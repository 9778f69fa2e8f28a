import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from stockgrid import fixtures
from stockgrid.sampler import BuildingSample, HeatingEquipment
from stockgrid.weather import ZoneWeatherSeries, year_timestamps

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def weights():
    return fixtures.default_weights()


@pytest.fixture(scope="session")
def weather_2021(weights):
    return fixtures.synthetic_year(2021, weights=weights)


@pytest.fixture(scope="session")
def design():
    return fixtures.design_temperatures()


@pytest.fixture(scope="session")
def grid_fixture(weather_2021, weights):
    return fixtures.synthetic_grid(weather_2021, weights)


@pytest.fixture(scope="session")
def small_bundle(tmp_path_factory):
    d = tmp_path_factory.mktemp("bundle")
    return fixtures.write_bundle(d, sample_sizes=(60, 30))


def constant_weather(zone="COAST", temp=10.0, year=2021):
    ts = year_timestamps(year)
    return ZoneWeatherSeries(zone, "TEST", year, ts, np.full(len(ts), float(temp)))


def make_building(**kw):
    base = dict(
        building_id="res-000000",
        sector="residential",
        zone_id="COAST",
        floor_area=150.0,
        ceiling_r=3.35,
        wall_r=2.3,
        ach50=10.0,
        duct_leakage_fraction=0.15,
        duct_r=1.06,
        heating_system=HeatingEquipment("electric_resistance"),
        cooling_seer=13.0,
        heat_setpoint=20.0,
        cool_setpoint=24.0,
        internal_gains_w_per_m2=4.0,
        lighting_power_density=2.0,
        weight=1.0,
    )
    base.update(kw)
    return BuildingSample(**base)


ACCEPTANCE = {}


def record(criterion: int, name: str, ok: bool, detail: str) -> None:
    """Log one acceptance line; the terminal summary repeats them in order."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion:2d} {name}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
