"""Multi-echelon distribution schemes built from delivery layers.

A scheme is an ordered list of layers.  Analytical layers solve the tour
fixed point per (vehicle, demand) pair; fixed-shuttle layers run a known
number of round trips to consolidation nodes.  Three builders cover the
classic topologies: direct supplier delivery, a single consolidation
center, and transshipment hubs with subregions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .model import (
    DEFAULT_EXTERNAL_FACTORS,
    EXTERNAL_CATEGORIES,
    DeliveryUnitType,
    DemandProfile,
    DomainError,
    ExternalCostFactors,
    InfeasibleError,
    KpiReport,
    NetworkParams,
    TemperatureClass,
    VehicleType,
    _capacity_limit,
    external_cost,
    fill_rate,
    solve_tour_plan,
    travel_and_stop_time,
)


class LayerMode(str, Enum):
    ANALYTICAL = "analytical"
    FIXED_SHUTTLE = "fixed_shuttle"


class LayerInfeasibleError(InfeasibleError):
    """A layer cannot be served; identifies the layer and the constraint."""

    def __init__(self, layer_name: str, cause: InfeasibleError):
        self.layer_name = layer_name
        super().__init__(cause.vehicle_id, cause.constraint, f"layer '{layer_name}'")


class SchemeInfeasibleError(LayerInfeasibleError):
    """A scheme cannot be served; identifies the failing layer."""

    def __init__(self, scheme_name: str, cause: LayerInfeasibleError):
        self.scheme_name = scheme_name
        super().__init__(cause.layer_name, cause)


@dataclass(frozen=True)
class FleetAssignment:
    """One vehicle type serving one slice of a layer's demand.

    shuttle_tours pins the round-trip count in fixed-shuttle mode; None
    derives it from weight over effective capacity (at least one tour).
    capacity_unit overrides the unit type governing effective capacity.
    """

    vehicle: VehicleType
    demand: DemandProfile
    shuttle_tours: int | None = None
    capacity_unit: DeliveryUnitType | None = None


@dataclass(frozen=True)
class LayerSpec:
    """One echelon of a scheme.

    params.area_km2 is the area of a single subregion; results of the one
    evaluated subregion are multiplied by subregion_count.  The handling
    rate applies per delivery (stop) passing this layer's destination node.
    """

    name: str
    mode: LayerMode
    params: NetworkParams
    fleet: tuple[FleetAssignment, ...]
    handling_cost_per_delivery: float = 0.0
    subregion_count: int = 1

    def __post_init__(self):
        if self.subregion_count < 1:
            raise DomainError(f"layer '{self.name}': subregion_count must be >= 1")
        if self.handling_cost_per_delivery < 0:
            raise DomainError(f"layer '{self.name}': handling cost must be >= 0")

    @property
    def total_weight_kg(self) -> float:
        return self.subregion_count * math.fsum(a.demand.total_weight_kg for a in self.fleet)

    @property
    def total_stops(self) -> float:
        return self.subregion_count * math.fsum(a.demand.total_stops for a in self.fleet)


@dataclass(frozen=True)
class SchemeSpec:
    name: str
    layers: tuple[LayerSpec, ...]
    external_factors: ExternalCostFactors

    def __post_init__(self):
        if not self.layers:
            raise DomainError(f"scheme '{self.name}': needs at least one layer")


@dataclass(frozen=True)
class Supplier:
    """A shipper with its daily demand and the vehicle shares it uses."""

    name: str
    demand: DemandProfile
    fleet_shares: tuple[tuple[VehicleType, float], ...]
    temperature_classes: tuple[TemperatureClass, ...] = (TemperatureClass.A,)

    def __post_init__(self):
        if not self.fleet_shares:
            raise DomainError(f"supplier '{self.name}': needs at least one vehicle")
        total = math.fsum(share for _, share in self.fleet_shares)
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            raise DomainError(
                f"supplier '{self.name}': vehicle shares sum to {total}, expected 1")

    def assignments(self) -> tuple[FleetAssignment, ...]:
        if len(self.fleet_shares) == 1:
            vehicle, _ = self.fleet_shares[0]
            return (FleetAssignment(vehicle, self.demand),)
        return tuple(FleetAssignment(vehicle, self.demand.scale(share))
                     for vehicle, share in self.fleet_shares)


# Layer parameter sets of the case-study network (overridable per scenario).
DIRECT_DELIVERY_PARAMS = NetworkParams(radius_km=30.0, area_km2=186.0, stop_time_h=0.25)
UCC_SHUTTLE_PARAMS = NetworkParams(radius_km=20.0, area_km2=186.0, stop_time_h=0.5)
UCC_CITY_PARAMS = NetworkParams(radius_km=10.0, area_km2=186.0, stop_time_h=0.25)
HUB_SHUTTLE_PARAMS = NetworkParams(radius_km=30.0, area_km2=186.0, stop_time_h=0.5)
HUB_CITY_PARAMS = NetworkParams(radius_km=5.0, area_km2=93.0, stop_time_h=0.25)
DEFAULT_HANDLING_COST_PER_DELIVERY = 10.0


def merge_demands(demands) -> DemandProfile:
    units: list[DeliveryUnitType] = []
    direct_w = 0.0
    direct_s = 0.0
    for d in demands:
        if d.units:
            units.extend(d.units)
        else:
            direct_w += d.total_weight_kg
            direct_s += d.total_stops
    if units and (direct_w or direct_s):
        raise DomainError("cannot merge unit-based and total-only demands")
    if units:
        return DemandProfile.from_units(units)
    return DemandProfile(total_weight_kg=direct_w, total_stops=direct_s)


def _evaluate_assignment(a: FleetAssignment, layer: LayerSpec,
                         factors: ExternalCostFactors | None) -> KpiReport:
    params = layer.params
    vehicle = a.vehicle
    demand = a.demand
    dominant = a.capacity_unit if a.capacity_unit is not None else demand.dominant_unit()
    cap_limit = _capacity_limit(vehicle, dominant)

    if layer.mode is LayerMode.ANALYTICAL:
        try:
            plan = solve_tour_plan(vehicle, demand, params, dominant_unit=dominant)
        except InfeasibleError as exc:
            raise LayerInfeasibleError(layer.name, exc) from exc
        tours, dist = plan.tours, plan.distance_km
        time_h = travel_and_stop_time(dist, demand.total_stops, vehicle, params)
    else:
        if a.shuttle_tours is not None:
            tours = a.shuttle_tours
        elif demand.total_weight_kg > 0:
            tours = max(1, math.ceil(demand.total_weight_kg / cap_limit))
        else:
            tours = 0
        dist = tours * 2.0 * params.radius_km
        # one stop at the destination node per round trip
        time_h = travel_and_stop_time(dist, tours, vehicle, params)

    fill = fill_rate(demand.total_weight_kg, vehicle, dominant, tours) if tours else 0.0
    ext_by_cat = (external_cost(dist, factors)[1] if factors is not None
                  else {name: 0.0 for name in EXTERNAL_CATEGORIES})
    return KpiReport(
        total_distance_km=dist,
        total_time_h=time_h,
        distance_cost=dist * vehicle.cost_per_km,
        time_cost=time_h * vehicle.cost_per_hour,
        handling_cost=0.0,
        external_by_category=ext_by_cat,
        fill_rate=fill,
        loaded_weight_kg=demand.total_weight_kg,
        tours_by_vehicle={vehicle.id: tours} if tours else {},
        tours_fractional_by_vehicle=(
            {vehicle.id: demand.total_weight_kg / cap_limit}
            if demand.total_weight_kg > 0 else {}),
    )


def evaluate_layer(layer: LayerSpec,
                   factors: ExternalCostFactors | None = None) -> KpiReport:
    """KPIs of one layer: per-assignment evaluation, handling, subregion scaling."""
    parts = [_evaluate_assignment(a, layer, factors) for a in layer.fleet]
    report = KpiReport.aggregate(parts)
    handling = layer.handling_cost_per_delivery * math.fsum(
        a.demand.total_stops for a in layer.fleet)
    report = replace(report, handling_cost=handling)
    if layer.subregion_count > 1:
        report = report.scaled(layer.subregion_count)
    return report


def evaluate_scheme(scheme: SchemeSpec) -> KpiReport:
    """Field-wise sum over layers; fill rate weighted by each layer's load."""
    reports = []
    for layer in scheme.layers:
        try:
            reports.append(evaluate_layer(layer, scheme.external_factors))
        except LayerInfeasibleError as exc:
            raise SchemeInfeasibleError(scheme.name, exc) from exc
    return KpiReport.aggregate(reports)


def evaluate_layers(scheme: SchemeSpec) -> list[KpiReport]:
    """Per-layer reports with the scheme's external factors applied."""
    return [evaluate_layer(layer, scheme.external_factors) for layer in scheme.layers]


@dataclass(frozen=True)
class ComparisonRow:
    scheme: str
    report: KpiReport | None
    error: str | None = None


@dataclass(frozen=True)
class ComparisonTable:
    baseline: str
    rows: tuple[ComparisonRow, ...]

    def deltas_vs_baseline(self, row: ComparisonRow) -> dict[str, float | None]:
        base = next(r for r in self.rows if r.scheme == self.baseline)
        out: dict[str, float | None] = {}
        for kpi in ("total_distance_km", "total_time_h", "transport_cost",
                    "handling_cost", "total_cost", "external_cost_total", "fill_rate"):
            if base.report is None or row.report is None:
                out[kpi] = None
                continue
            b = getattr(base.report, kpi)
            v = getattr(row.report, kpi)
            out[kpi] = (v - b) / b * 100.0 if b != 0 else None
        return out


def compare_schemes(schemes, baseline_name: str | None = None) -> ComparisonTable:
    """Evaluate schemes side by side; infeasible ones are flagged, not fatal."""
    schemes = list(schemes)
    if len(schemes) < 2:
        raise DomainError("compare_schemes: need at least 2 schemes")
    baseline = baseline_name or schemes[0].name
    if baseline not in {s.name for s in schemes}:
        raise DomainError(f"compare_schemes: baseline '{baseline}' not among schemes")
    rows = []
    for s in schemes:
        try:
            rows.append(ComparisonRow(s.name, evaluate_scheme(s)))
        except SchemeInfeasibleError as exc:
            rows.append(ComparisonRow(s.name, None, error=str(exc)))
    return ComparisonTable(baseline=baseline, rows=tuple(rows))


def build_original(suppliers, params: NetworkParams = DIRECT_DELIVERY_PARAMS,
                   external_factors: ExternalCostFactors | None = None,
                   name: str = "original") -> SchemeSpec:
    """Every supplier delivers independently: one analytical layer per supplier."""
    suppliers = list(suppliers)
    if not suppliers:
        raise DomainError("build_original: empty supplier list")
    factors = external_factors or DEFAULT_EXTERNAL_FACTORS
    layers = tuple(
        LayerSpec(name=f"{s.name}_direct", mode=LayerMode.ANALYTICAL,
                  params=params, fleet=s.assignments())
        for s in suppliers)
    return SchemeSpec(name=name, layers=layers, external_factors=factors)


def build_ucc(suppliers, shuttle_vehicle: VehicleType, city_vehicle: VehicleType,
              shuttle_params: NetworkParams = UCC_SHUTTLE_PARAMS,
              city_params: NetworkParams = UCC_CITY_PARAMS,
              handling_cost_per_delivery: float = DEFAULT_HANDLING_COST_PER_DELIVERY,
              external_factors: ExternalCostFactors | None = None,
              name: str = "ucc") -> SchemeSpec:
    """All demand consolidated at one center, then delivered city-wide.

    Layer 1 shuttles each supplier's goods to the center (tours from weight
    over shuttle capacity); layer 2 serves all stops analytically with the
    city vehicle.  Handling is charged per delivery at the center.
    """
    suppliers = list(suppliers)
    if not suppliers:
        raise DomainError("build_ucc: empty supplier list")
    factors = external_factors or DEFAULT_EXTERNAL_FACTORS
    inbound = LayerSpec(
        name="suppliers_to_center", mode=LayerMode.FIXED_SHUTTLE, params=shuttle_params,
        fleet=tuple(FleetAssignment(shuttle_vehicle, s.demand) for s in suppliers),
        handling_cost_per_delivery=handling_cost_per_delivery)
    consolidated = merge_demands(s.demand for s in suppliers)
    outbound = LayerSpec(
        name="center_to_stops", mode=LayerMode.ANALYTICAL, params=city_params,
        fleet=(FleetAssignment(city_vehicle, consolidated),))
    return SchemeSpec(name=name, layers=(inbound, outbound), external_factors=factors)


def build_pi(suppliers, shuttle_vehicle: VehicleType, city_vehicle: VehicleType,
             hub_count: int = 2,
             shuttle_tours_per_hub: int | None = None,
             consolidate_inbound: bool = False,
             hub_weights: tuple[float, ...] | None = None,
             shuttle_params: NetworkParams = HUB_SHUTTLE_PARAMS,
             city_params: NetworkParams = HUB_CITY_PARAMS,
             handling_cost_per_delivery: float = DEFAULT_HANDLING_COST_PER_DELIVERY,
             external_factors: ExternalCostFactors | None = None,
             name: str = "pi") -> SchemeSpec:
    """Open-network transshipment hubs, one per subregion.

    Demand splits across hubs (equally unless hub_weights is given).  With
    consolidate_inbound the inbound layer carries one pooled flow per hub,
    reflecting shared inbound transport; otherwise each supplier shuttles to
    each hub separately.  city_params.area_km2 is the area of one subregion.
    Equal hub weights evaluate a single subregion scaled by hub_count;
    unequal weights get one city layer per hub.
    """
    suppliers = list(suppliers)
    if not suppliers:
        raise DomainError("build_pi: empty supplier list")
    if hub_count < 1:
        raise DomainError("build_pi: hub_count must be >= 1")
    if hub_weights is None:
        hub_weights = tuple(1.0 / hub_count for _ in range(hub_count))
    if len(hub_weights) != hub_count:
        raise DomainError("build_pi: one weight per hub required")
    if not math.isclose(math.fsum(hub_weights), 1.0, rel_tol=0, abs_tol=1e-9):
        raise DomainError(
            f"build_pi: hub demand split sums to {math.fsum(hub_weights)}, expected 1")
    factors = external_factors or DEFAULT_EXTERNAL_FACTORS
    consolidated = merge_demands(s.demand for s in suppliers)

    if consolidate_inbound:
        inbound_fleet = tuple(
            FleetAssignment(shuttle_vehicle, consolidated.scale(w), shuttle_tours_per_hub)
            for w in hub_weights)
    else:
        inbound_fleet = tuple(
            FleetAssignment(shuttle_vehicle, s.demand.scale(w), shuttle_tours_per_hub)
            for s in suppliers for w in hub_weights)
    inbound = LayerSpec(
        name="suppliers_to_hubs", mode=LayerMode.FIXED_SHUTTLE, params=shuttle_params,
        fleet=inbound_fleet, handling_cost_per_delivery=handling_cost_per_delivery)

    symmetric = all(math.isclose(w, hub_weights[0], rel_tol=0, abs_tol=1e-12)
                    for w in hub_weights)
    if symmetric:
        city_layers = (LayerSpec(
            name="hubs_to_stops", mode=LayerMode.ANALYTICAL, params=city_params,
            fleet=(FleetAssignment(city_vehicle, consolidated.scale(hub_weights[0])),),
            subregion_count=hub_count),)
    else:
        city_layers = tuple(LayerSpec(
            name=f"hub{i + 1}_to_stops", mode=LayerMode.ANALYTICAL, params=city_params,
            fleet=(FleetAssignment(city_vehicle, consolidated.scale(w)),))
            for i, w in enumerate(hub_weights))
    return SchemeSpec(name=name, layers=(inbound, *city_layers), external_factors=factors)
