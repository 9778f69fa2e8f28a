import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from stockgrid.errors import ConfigError
from stockgrid.sampler import (
    ArchetypeDistribution,
    HeatingEquipment,
    assign_weights,
    load_distribution,
    read_samples_csv,
    sample_sector,
    sample_stock,
    write_samples_csv,
)

POINT = {
    "zone_id": "COAST", "floor_area": 150, "ceiling_r": 3.0, "wall_r": 2.0, "ach50": 8, "duct_leakage_fraction": 0.1,
    "duct_r": 1.0, "heating_system": {"kind": "electric_resistance"}, "cooling_seer": 13, "heat_setpoint": 20,
    "cool_setpoint": 24, "internal_gains_w_per_m2": 4, "lighting_power_density": 2,
}


def point_doc(**marginals):
    m = {k: {"values": [v], "probabilities": [1.0]} for k, v in POINT.items()}
    m.update(marginals)
    return {"sector": "residential", "marginals": m, "totals": 9.3e6}


@pytest.fixture(scope="module")
def residential():
    return load_distribution("@texas_like_residential")


@pytest.fixture(scope="module")
def res_5000(residential):
    return sample_sector(residential, 5000, 2021)


def test_point_mass_buildings_identical():
    out = sample_stock(ArchetypeDistribution.from_dict(point_doc()), 3, seed=1)
    assert [b.building_id for b in out] == ["res-000000", "res-000001", "res-000002"]
    assert out[0].parameters() == out[1].parameters() == out[2].parameters()


def test_same_seed_same_sample(residential):
    assert sample_stock(residential, 50, 7) == sample_stock(residential, 50, 7)
    assert sample_stock(residential, 50, 7) != sample_stock(residential, 50, 8)


@given(n=st.integers(1, 60), k=st.integers(1, 60), seed=st.integers(0, 2**32 - 1))
def test_samples_are_nested(n, k, seed):
    dist = load_distribution("@texas_like_residential")
    small, large = sorted((n, k))
    assert sample_stock(dist, large, seed)[:small] == sample_stock(dist, small, seed)


def test_declaration_order_irrelevant():
    doc = point_doc(ceiling_r={"values": [1, 2, 3], "probabilities": [0.2, 0.3, 0.5]},
                    ach50={"values": [5, 10], "probabilities": [0.5, 0.5]})
    rev = dict(doc, marginals=dict(reversed(list(doc["marginals"].items()))))
    a = sample_stock(ArchetypeDistribution.from_dict(doc), 200, 3)
    b = sample_stock(ArchetypeDistribution.from_dict(rev), 200, 3)
    assert a == b


def test_two_value_heat_share():
    doc = point_doc(heating_system={"values": [{"kind": "electric_resistance"}, {"kind": "gas_furnace"}],
                                    "probabilities": [0.6, 0.4]})
    out = sample_stock(ArchetypeDistribution.from_dict(doc), 5000, 2021)
    share = np.mean([b.heating_system.kind == "electric_resistance" for b in out])
    assert abs(share - 0.6) <= 0.02


def test_shipped_headline_shares(residential, res_5000):
    electric = np.mean([not b.heating_system.uses_fossil for b in res_5000])
    assert abs(electric - 0.60) <= 0.02
    r38 = 38 * 0.1761
    m = residential.marginals["ceiling_r"]
    declared = sum(p for v, p in zip(m.values, m.probabilities) if v >= r38 - 1e-9)
    assert abs(declared - 0.14) < 1e-12


def test_residential_weights(res_5000):
    assert res_5000[0].weight == 1860.0
    assert math.fsum(b.weight for b in res_5000) == 9.3e6


def test_weight_identity():
    (b,) = assign_weights(sample_stock(ArchetypeDistribution.from_dict(point_doc()), 1, 0), 1.0, 1.0)
    assert b.weight == 1.0


def test_commercial_coverage_scaling():
    dist = load_distribution("@texas_like_commercial")
    stock = sample_sector(dist, 400, 5)
    floor = sum(b.weight * b.floor_area for b in stock)
    assert floor == pytest.approx(dist.totals / 0.64, rel=1e-12)
    full = assign_weights(stock, dist.totals, 1.0)
    assert stock[0].weight / full[0].weight == pytest.approx(1 / 0.64, rel=1e-12)


def test_chi_square_marginals(residential, res_5000):
    for name, m in residential.marginals.items():
        if len(m.values) < 2:
            continue
        drawn = [getattr(b, name) for b in res_5000]
        observed = np.array([sum(1 for d in drawn if d == v) for v in m.values])
        expected = m.probabilities * len(drawn)
        assert chisquare(observed, expected).pvalue > 0.001, name


def test_bad_probability_vector():
    with pytest.raises(ConfigError):
        ArchetypeDistribution.from_dict(point_doc(ach50={"values": [5, 10], "probabilities": [0.5, 0.6]}))


def test_missing_marginal():
    doc = point_doc()
    del doc["marginals"]["wall_r"]
    with pytest.raises(ConfigError):
        ArchetypeDistribution.from_dict(doc)


def test_ip_units_converted():
    doc = point_doc(ceiling_r={"values": [38], "probabilities": [1.0], "units": "ip"})
    (b,) = sample_stock(ArchetypeDistribution.from_dict(doc), 1, 0)
    assert b.ceiling_r == pytest.approx(38 * 0.1761)


def test_samples_csv_round_trip(tmp_path, res_5000):
    p = tmp_path / "s.csv"
    write_samples_csv(res_5000[:25], p)
    assert read_samples_csv(p) == res_5000[:25]


def test_equipment_dict_round_trip():
    for d in ({"kind": "ashp", "hspf": 9.3, "supplemental": "electric_resistance"}, {"kind": "gas_furnace", "afue": 0.92}):
        assert HeatingEquipment.from_dict(d).to_dict() == d
