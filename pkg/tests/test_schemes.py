import math

import pytest

from citydist.model import (
    DEFAULT_EXTERNAL_FACTORS,
    DeliveryUnitType,
    DemandProfile,
    DomainError,
    KpiReport,
    NetworkParams,
    TemperatureClass,
    VehicleType,
)
from citydist.schemes import (
    FleetAssignment,
    LayerMode,
    LayerSpec,
    SchemeInfeasibleError,
    SchemeSpec,
    Supplier,
    build_original,
    build_pi,
    build_ucc,
    compare_schemes,
    evaluate_layer,
    evaluate_layers,
    evaluate_scheme,
    merge_demands,
)


SHUTTLE = VehicleType("shuttle_25t", 25000, 30, 8.5, 30.0, TemperatureClass.T, 56)
CITY = VehicleType("city_17t", 17000, 20, 8.0, 30.0, TemperatureClass.T, 30)
VAN = VehicleType("van_2p3t", 2300, 20, 7.5, 30.0, TemperatureClass.T, 5)

UCC_SHUTTLE = NetworkParams(radius_km=20, area_km2=186, stop_time_h=0.5,
                            shift_duration_h=16)
UCC_CITY = NetworkParams(radius_km=10, area_km2=186, stop_time_h=0.25,
                         shift_duration_h=16)
PI_SHUTTLE = NetworkParams(radius_km=30, area_km2=186, stop_time_h=0.5,
                           shift_duration_h=16)
PI_CITY = NetworkParams(radius_km=5, area_km2=93, stop_time_h=0.25,
                        shift_duration_h=16)


def make_supplier(name, stops, per_stop, vehicle, classes=(TemperatureClass.A,)):
    units = (DeliveryUnitType(f"{name}:mix", per_stop, stops),)
    return Supplier(name, DemandProfile.from_units(units), ((vehicle, 1.0),), classes)


@pytest.fixture
def suppliers():
    v1 = VehicleType("direct_17t", 17000, 20, 7.0, 30.0, TemperatureClass.F, 30)
    v2 = VehicleType("direct_25t", 25000, 20, 8.0, 30.0, TemperatureClass.S, 56)
    return [
        make_supplier("s1", 6, 1210.0, v1, (TemperatureClass.F,)),
        make_supplier("s2", 36, 560.0, v2,
                      (TemperatureClass.A, TemperatureClass.F, TemperatureClass.S)),
        make_supplier("s3", 7, 239.0, CITY,
                      (TemperatureClass.A, TemperatureClass.S)),
    ]


# ---------------------------------------------------------------- layers

def test_zero_demand_layer_is_zero():
    layer = LayerSpec("empty", LayerMode.ANALYTICAL, UCC_CITY,
                      (FleetAssignment(CITY, DemandProfile.zero()),))
    report = evaluate_layer(layer)
    assert report.total_distance_km == 0.0
    assert report.total_cost == 0.0
    assert report.fill_rate == 0.0
    assert report.tours_by_vehicle == {}


def test_fixed_shuttle_hand_values():
    layer = LayerSpec("shuttle", LayerMode.FIXED_SHUTTLE,
                      NetworkParams(radius_km=20, area_km2=186, stop_time_h=0.5),
                      (FleetAssignment(SHUTTLE, DemandProfile(total_weight_kg=30000,
                                                              total_stops=10),
                                       shuttle_tours=2),))
    report = evaluate_layer(layer)
    assert report.total_distance_km == 80.0
    assert report.total_time_h == pytest.approx(80 / 30 + 0.5 * 2, rel=1e-9)
    assert report.tours_by_vehicle == {"shuttle_25t": 2}


def test_fixed_shuttle_derives_tours_from_weight():
    layer = LayerSpec("shuttle", LayerMode.FIXED_SHUTTLE, UCC_SHUTTLE,
                      (FleetAssignment(SHUTTLE, DemandProfile(total_weight_kg=30000,
                                                              total_stops=10)),))
    assert evaluate_layer(layer).tours_by_vehicle == {"shuttle_25t": 2}


def test_subregion_multiplication_is_exact():
    base = LayerSpec("city", LayerMode.ANALYTICAL, PI_CITY,
                     (FleetAssignment(CITY, DemandProfile(total_weight_kg=19946.5,
                                                          total_stops=42)),))
    doubled = LayerSpec("city", LayerMode.ANALYTICAL, PI_CITY, base.fleet,
                        subregion_count=2)
    one = evaluate_layer(base, DEFAULT_EXTERNAL_FACTORS)
    two = evaluate_layer(doubled, DEFAULT_EXTERNAL_FACTORS)
    assert two.total_distance_km == 2 * one.total_distance_km
    assert two.transport_cost == 2 * one.transport_cost
    assert two.external_cost_total == 2 * one.external_cost_total
    assert two.fill_rate == one.fill_rate
    assert two.tours_by_vehicle["city_17t"] == 2 * one.tours_by_vehicle["city_17t"]


def test_handling_charged_per_delivery():
    layer = LayerSpec("inbound", LayerMode.FIXED_SHUTTLE, UCC_SHUTTLE,
                      (FleetAssignment(SHUTTLE, DemandProfile(total_weight_kg=1000,
                                                              total_stops=84)),),
                      handling_cost_per_delivery=10.0)
    assert evaluate_layer(layer).handling_cost == 840.0


def test_layer_infeasibility_carries_layer_name():
    tight = NetworkParams(radius_km=30, area_km2=186, stop_time_h=0.25,
                          lead_time_h=2)
    layer = LayerSpec("city_leg", LayerMode.ANALYTICAL, tight,
                      (FleetAssignment(CITY, DemandProfile(total_weight_kg=5000,
                                                           total_stops=10)),))
    scheme = SchemeSpec("tight", (layer,), DEFAULT_EXTERNAL_FACTORS)
    with pytest.raises(SchemeInfeasibleError) as err:
        evaluate_scheme(scheme)
    assert "city_leg" in str(err.value)


# ---------------------------------------------------------------- builders

def test_build_original_rejects_empty():
    with pytest.raises(DomainError):
        build_original([])


def test_build_original_zero_demand_supplier():
    vehicle = VehicleType("v", 17000, 20, 7.0, 30.0)
    supplier = Supplier("idle", DemandProfile.zero(), ((vehicle, 1.0),))
    report = evaluate_scheme(build_original([supplier]))
    assert report.total_cost == 0.0 and report.total_distance_km == 0.0


def test_build_original_one_layer_per_supplier(suppliers):
    scheme = build_original(suppliers)
    assert len(scheme.layers) == len(suppliers)
    assert all(layer.mode is LayerMode.ANALYTICAL for layer in scheme.layers)


def test_build_ucc_shuttle_tours_and_handling(suppliers):
    scheme = build_ucc(suppliers, SHUTTLE, CITY,
                       shuttle_params=UCC_SHUTTLE, city_params=UCC_CITY)
    inbound, outbound = scheme.layers
    report = evaluate_layer(inbound)
    # ceil(7260/25000)=1, ceil(20160/25000)=1, ceil(1673/25000)=1 -> 3 round trips
    assert report.tours_by_vehicle == {"shuttle_25t": 3}
    assert report.total_distance_km == 3 * 40.0
    assert report.handling_cost == 10.0 * (6 + 36 + 7)
    assert outbound.fleet[0].demand.total_weight_kg == pytest.approx(
        sum(s.demand.total_weight_kg for s in suppliers))


def test_build_pi_pinned_two_tours_per_hub(suppliers):
    scheme = build_pi(suppliers, SHUTTLE, CITY, hub_count=2,
                      shuttle_tours_per_hub=2, consolidate_inbound=True,
                      shuttle_params=PI_SHUTTLE, city_params=PI_CITY)
    inbound = evaluate_layer(scheme.layers[0])
    assert inbound.total_distance_km == 2 * 2 * 2 * 30.0  # 2 hubs x 2 tours x 60 km
    assert inbound.tours_by_vehicle == {"shuttle_25t": 4}


def test_build_pi_rejects_bad_hub_split(suppliers):
    with pytest.raises(DomainError):
        build_pi(suppliers, SHUTTLE, CITY, hub_count=2, hub_weights=(0.6, 0.3),
                 shuttle_params=PI_SHUTTLE, city_params=PI_CITY)


def test_build_pi_one_hub_with_ucc_geometry_degenerates_to_ucc(suppliers):
    ucc = build_ucc(suppliers, SHUTTLE, CITY,
                    shuttle_params=UCC_SHUTTLE, city_params=UCC_CITY)
    pi = build_pi(suppliers, SHUTTLE, CITY, hub_count=1,
                  consolidate_inbound=False,
                  shuttle_params=UCC_SHUTTLE, city_params=UCC_CITY)
    left, right = evaluate_scheme(ucc), evaluate_scheme(pi)
    assert left.total_distance_km == right.total_distance_km
    assert left.transport_cost == right.transport_cost
    assert left.handling_cost == right.handling_cost
    assert left.fill_rate == right.fill_rate
    assert left.tours_by_vehicle == right.tours_by_vehicle
    assert left.external_by_category == right.external_by_category


def test_weight_conservation_across_consolidation(suppliers):
    total = math.fsum(s.demand.total_weight_kg for s in suppliers)
    for scheme in (build_ucc(suppliers, SHUTTLE, CITY, shuttle_params=UCC_SHUTTLE,
                             city_params=UCC_CITY),
                   build_pi(suppliers, SHUTTLE, CITY, hub_count=2,
                            consolidate_inbound=True,
                            shuttle_params=PI_SHUTTLE, city_params=PI_CITY)):
        inbound = scheme.layers[0]
        outbound_weight = math.fsum(l.total_weight_kg for l in scheme.layers[1:])
        assert inbound.total_weight_kg == total
        assert outbound_weight == total


def test_scheme_additivity_is_exact(suppliers):
    scheme = build_pi(suppliers, SHUTTLE, CITY, hub_count=2,
                      consolidate_inbound=True,
                      shuttle_params=PI_SHUTTLE, city_params=PI_CITY)
    whole = evaluate_scheme(scheme)
    parts = evaluate_layers(scheme)
    assert whole.total_distance_km == math.fsum(p.total_distance_km for p in parts)
    assert whole.distance_cost == math.fsum(p.distance_cost for p in parts)
    assert whole.time_cost == math.fsum(p.time_cost for p in parts)
    assert whole.handling_cost == math.fsum(p.handling_cost for p in parts)
    for cat in whole.external_by_category:
        assert whole.external_by_category[cat] == \
            math.fsum(p.external_by_category[cat] for p in parts)
    loaded = math.fsum(p.loaded_weight_kg for p in parts)
    assert whole.fill_rate == \
        math.fsum(p.fill_rate * p.loaded_weight_kg for p in parts) / loaded


def test_single_layer_scheme_equals_layer(suppliers):
    scheme = build_original(suppliers[:1])
    assert evaluate_scheme(scheme) == evaluate_layer(scheme.layers[0],
                                                     scheme.external_factors)


# ---------------------------------------------------------------- comparison

def test_compare_requires_two(suppliers):
    with pytest.raises(DomainError):
        compare_schemes([build_original(suppliers)])


def test_compare_identical_schemes_zero_deltas(suppliers):
    a = build_original(suppliers, name="a")
    b = build_original(suppliers, name="b")
    table = compare_schemes([a, b])
    deltas = table.deltas_vs_baseline(table.rows[1])
    assert all(v == 0.0 for v in deltas.values() if v is not None)


def test_compare_percentage_arithmetic():
    base = KpiReport(distance_cost=100.0, loaded_weight_kg=1.0)
    alt = KpiReport(distance_cost=72.0, loaded_weight_kg=1.0)
    from citydist.schemes import ComparisonRow, ComparisonTable
    table = ComparisonTable("base", (ComparisonRow("base", base),
                                     ComparisonRow("alt", alt)))
    assert table.deltas_vs_baseline(table.rows[1])["total_cost"] == pytest.approx(-28.0)


def test_compare_flags_infeasible_member(suppliers):
    good = build_original(suppliers, name="good")
    tight = NetworkParams(radius_km=30, area_km2=186, stop_time_h=0.25, lead_time_h=1.5)
    bad = build_original(suppliers, params=tight, name="bad")
    table = compare_schemes([good, bad])
    row = next(r for r in table.rows if r.scheme == "bad")
    assert row.report is None and row.error
    assert all(v is None for v in table.deltas_vs_baseline(row).values())


def test_merge_demands_mixes_units():
    a = DemandProfile.from_units((DeliveryUnitType("a", 10, 3),))
    b = DemandProfile.from_units((DeliveryUnitType("b", 450, 2),))
    merged = merge_demands([a, b])
    assert merged.total_weight_kg == 930.0
    assert merged.total_stops == 5.0
