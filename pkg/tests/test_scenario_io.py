import math

import pytest
import yaml

from citydist.scenario import (
    Scenario,
    ScenarioError,
    ScenarioInvariantError,
    ScenarioParseError,
    ScenarioReferenceError,
    emit_scenario,
    load_scenario,
    parse_scenario,
)
from citydist.schemes import evaluate_scheme

from conftest import BORDEAUX, SINGLE_SUPPLIER


MINIMAL = """
name: minimal
external_factors: {accident: 3.4, air_pollution: 20.5, climate_change: 6.3, noise: 27.4, congestion: 4.0}
network_defaults: {daganzo_k: 0.57, shift_duration_h: 8.0, lead_time_h: 24.0}
vehicles:
  - {id: truck, capacity_kg: 17000, speed_kmh: 20, cost_per_km: 8.0, cost_per_hour: 30, temperature_class: A, max_units_footprint: 30}
unit_classes:
  - {id: pallet, avg_weight_kg: 450}
suppliers:
  - name: s1
    temperature_classes: [A]
    fleet: [{vehicle: truck, share: 1.0}]
    demand:
      - {unit: pallet, stops: 6}
schemes:
  - name: original
    type: original
    params: {radius_km: 30, area_km2: 186, stop_time_h: 0.25}
"""


def _variant(**edits):
    doc = yaml.safe_load(MINIMAL)
    for path, value in edits.items():
        node = doc
        *parents, leaf = path.split(".")
        for key in parents:
            node = node[int(key)] if key.isdigit() else node[key]
        if value is ...:
            del node[leaf]
        else:
            node[int(leaf) if leaf.isdigit() else leaf] = value
    return doc


def test_minimal_scenario_parses():
    scenario = parse_scenario(yaml.safe_load(MINIMAL))
    assert scenario.scheme_names() == ["original"]
    evaluate_scheme(scenario.scheme("original"))


def test_bordeaux_scenario_loads_with_transcribed_values():
    scenario = load_scenario(str(BORDEAUX))
    capacities = sorted({v.capacity_kg for v in scenario.vehicles.values()})
    assert capacities == [2300, 8100, 9450, 10000, 12150, 14850, 17000, 25000]
    assert scenario.unit_classes["parcel"] == 10
    assert scenario.unit_classes["pallet"] == 450
    assert scenario.unit_classes["roll"] == 180
    assert {v.cost_per_km for v in scenario.vehicles.values()} >= {5.0, 7.0, 8.0}
    assert math.fsum(rec.supplier.demand.total_stops
                     for rec in scenario.suppliers) == 84.0
    assert len(scenario.suppliers) == 6
    assert scenario.scheme_names() == ["original", "ucc", "pi", "pi_small"]
    assert scenario.external_factors.total == 61.6


def test_single_supplier_scenario_loads():
    scenario = load_scenario(str(SINGLE_SUPPLIER))
    rec = scenario.suppliers[0]
    assert [share for _, share in rec.supplier.fleet_shares] == [0.1, 0.9]


def test_round_trip_is_fixpoint(tmp_path):
    first = load_scenario(str(BORDEAUX))
    out = tmp_path / "echo.scenario"
    emit_scenario(first, str(out))
    second = load_scenario(str(out))
    assert first.to_dict() == second.to_dict()
    # emitting again is byte-identical
    out2 = tmp_path / "echo2.scenario"
    emit_scenario(second, str(out2))
    assert out.read_bytes() == out2.read_bytes()


def test_round_tripped_scenario_evaluates_identically(tmp_path):
    first = load_scenario(str(BORDEAUX))
    out = tmp_path / "echo.scenario"
    emit_scenario(first, str(out))
    second = load_scenario(str(out))
    for name in first.scheme_names():
        assert evaluate_scheme(first.scheme(name)) == evaluate_scheme(second.scheme(name))


INVALID_CASES = [
    # (description, mutation, expected error class)
    ("missing cost_per_hour names the vehicle",
     {"vehicles.0.cost_per_hour": ...}, ScenarioParseError),
    ("unknown top-level field",
     {"surprise": 1}, ScenarioParseError),
    ("unknown vehicle field",
     {"vehicles.0.wheels": 6}, ScenarioParseError),
    ("fleet shares must sum to 1",
     {"suppliers.0.fleet": [{"vehicle": "truck", "share": 0.9}]},
     ScenarioInvariantError),
    ("negative capacity",
     {"vehicles.0.capacity_kg": -5}, ScenarioInvariantError),
    ("dangling vehicle reference",
     {"suppliers.0.fleet": [{"vehicle": "ghost", "share": 1.0}]},
     ScenarioReferenceError),
    ("congestion factor below 1",
     {"network_defaults.congestion_factor": 0.5}, ScenarioInvariantError),
    ("lead time beyond 24 h",
     {"network_defaults.lead_time_h": 30}, ScenarioInvariantError),
    ("zero speed",
     {"vehicles.0.speed_kmh": 0}, ScenarioInvariantError),
    ("negative external factor",
     {"external_factors.noise": -1}, ScenarioInvariantError),
    ("negative stops",
     {"suppliers.0.demand": [{"unit": "pallet", "stops": -2}]},
     ScenarioInvariantError),
    ("uncovered temperature class",
     {"suppliers.0.temperature_classes": ["S"]}, ScenarioInvariantError),
]


@pytest.mark.parametrize("description,edits,err", INVALID_CASES,
                         ids=[c[0] for c in INVALID_CASES])
def test_invalid_scenarios_rejected_with_correct_class(description, edits, err):
    doc = _variant(**edits)
    with pytest.raises(err):
        parse_scenario(doc)


def test_missing_cost_per_hour_error_names_vehicle():
    doc = _variant(**{"vehicles.0.cost_per_hour": ...})
    with pytest.raises(ScenarioParseError) as e:
        parse_scenario(doc)
    assert "cost_per_hour" in str(e.value)


def test_share_sum_error_cites_row_sum_rule():
    doc = _variant(**{"suppliers.0.fleet": [{"vehicle": "truck", "share": 0.9}]})
    with pytest.raises(ScenarioInvariantError) as e:
        parse_scenario(doc)
    assert "0.9" in str(e.value) and "sum" in str(e.value)


def test_unreadable_path_is_parse_error(tmp_path):
    with pytest.raises(ScenarioParseError):
        load_scenario(str(tmp_path / "nope.scenario"))


def test_yaml_syntax_error_is_parse_error(tmp_path):
    bad = tmp_path / "bad.scenario"
    bad.write_text("vehicles: [unclosed\n")
    with pytest.raises(ScenarioParseError):
        load_scenario(str(bad))


def test_unknown_scheme_is_reference_error():
    scenario = parse_scenario(yaml.safe_load(MINIMAL))
    with pytest.raises(ScenarioReferenceError):
        scenario.scheme("mystery")
