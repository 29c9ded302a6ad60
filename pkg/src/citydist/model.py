"""Continuous-approximation cost model for urban freight delivery.

Tour counts per vehicle type come from a fixed point of three ceilings
(vehicle capacity, driver shift, customer lead time) evaluated on the
estimated route length 2*r*m + k*sqrt(A*N).  Costs split into a distance
part, a time part and monetized external impacts per vehicle-kilometre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum


class ModelError(Exception):
    """Base class for model-level failures."""


class DomainError(ModelError, ValueError):
    """An argument or field value is outside its valid domain."""


class ConsistencyError(ModelError):
    """Inputs that should have been mutually consistent are not."""


class InfeasibleError(ModelError):
    """The tour fixed point diverges: no tour count satisfies a constraint."""

    def __init__(self, vehicle_id: str, constraint: "BindingConstraint", detail: str = ""):
        self.vehicle_id = vehicle_id
        self.constraint = constraint
        msg = f"no feasible tour count for vehicle '{vehicle_id}': {constraint.value} constraint diverges"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class TemperatureClass(str, Enum):
    A = "A"  # ambient
    F = "F"  # fresh
    S = "S"  # frozen
    T = "T"  # three-temperature
    U = "U"  # special temperature


class BindingConstraint(str, Enum):
    CAPACITY = "capacity"
    SHIFT = "shift"
    LEAD_TIME = "lead_time"


EXTERNAL_CATEGORIES = ("accident", "air_pollution", "climate_change", "noise", "congestion")

# Dispersion term quantum (km).  Snapping k*sqrt(A*N) to a dyadic grid keeps
# 2*r*m + spread additions exact in IEEE754 for radii on a 0.25 km grid, so
# the route length is exactly affine in the tour count.
_SPREAD_QUANTUM = 2.0 ** -30

_REL_TOL = 1e-9


@dataclass(frozen=True, slots=True)
class VehicleType:
    """One vehicle class: payload, speed, unit costs and loading footprint."""

    id: str
    capacity_kg: float
    speed_kmh: float
    cost_per_km: float
    cost_per_hour: float
    temperature_class: TemperatureClass = TemperatureClass.A
    max_units_footprint: int = 33

    def __post_init__(self):
        if self.capacity_kg <= 0:
            raise DomainError(f"vehicle '{self.id}': capacity_kg must be > 0")
        if self.speed_kmh <= 0:
            raise DomainError(f"vehicle '{self.id}': speed_kmh must be > 0")
        if self.cost_per_km < 0 or self.cost_per_hour < 0:
            raise DomainError(f"vehicle '{self.id}': unit costs must be >= 0")
        if self.max_units_footprint < 1:
            raise DomainError(f"vehicle '{self.id}': max_units_footprint must be >= 1")


@dataclass(frozen=True, slots=True)
class DeliveryUnitType:
    """A shipment-unit class; avg_weight_kg is the mean weight dropped per stop.

    Stop counts are daily averages and may be fractional (e.g. after splitting
    a demand between subregions or vehicles).
    """

    id: str
    avg_weight_kg: float
    stops: float

    def __post_init__(self):
        if self.avg_weight_kg <= 0:
            raise DomainError(f"unit '{self.id}': avg_weight_kg must be > 0")
        if self.stops < 0:
            raise DomainError(f"unit '{self.id}': stops must be >= 0")

    @property
    def weight_kg(self) -> float:
        return self.avg_weight_kg * self.stops


@dataclass(frozen=True)
class DemandProfile:
    """Daily demand: total weight and stop count, optionally broken into units."""

    units: tuple[DeliveryUnitType, ...] = ()
    total_weight_kg: float = 0.0
    total_stops: float = 0.0

    def __post_init__(self):
        if self.total_weight_kg < 0 or self.total_stops < 0:
            raise DomainError("demand totals must be >= 0")
        if self.units:
            w = math.fsum(u.weight_kg for u in self.units)
            s = math.fsum(u.stops for u in self.units)
            if not (math.isclose(w, self.total_weight_kg, rel_tol=_REL_TOL, abs_tol=1e-9)
                    and math.isclose(s, self.total_stops, rel_tol=_REL_TOL, abs_tol=1e-9)):
                raise DomainError(
                    f"demand totals ({self.total_weight_kg} kg, {self.total_stops} stops) "
                    f"do not match unit breakdown ({w} kg, {s} stops)")

    @classmethod
    def from_units(cls, units) -> "DemandProfile":
        units = tuple(units)
        return cls(units=units,
                   total_weight_kg=math.fsum(u.weight_kg for u in units),
                   total_stops=math.fsum(u.stops for u in units))

    @classmethod
    def zero(cls) -> "DemandProfile":
        return cls()

    @property
    def is_zero(self) -> bool:
        return self.total_weight_kg == 0 and self.total_stops == 0

    def dominant_unit(self) -> DeliveryUnitType | None:
        """Heaviest-per-stop unit present; governs footprint-limited capacity."""
        present = [u for u in self.units if u.stops > 0]
        if not present:
            return None
        return max(present, key=lambda u: u.avg_weight_kg)

    def scale(self, factor: float) -> "DemandProfile":
        """Scale stop counts (and hence weight) by a factor, keeping unit mix."""
        if factor < 0:
            raise DomainError("scale factor must be >= 0")
        units = tuple(replace(u, stops=u.stops * factor) for u in self.units)
        if units:
            return DemandProfile.from_units(units)
        return DemandProfile(total_weight_kg=self.total_weight_kg * factor,
                             total_stops=self.total_stops * factor)


@dataclass(frozen=True, slots=True)
class NetworkParams:
    """Geometry and timing of one delivery layer."""

    radius_km: float          # average line-haul distance depot -> served area
    area_km2: float           # served area (per subregion where subdivided)
    stop_time_h: float
    daganzo_k: float = 0.57   # dispersion coefficient of the sqrt(A*N) term
    congestion_factor: float = 1.0
    shift_duration_h: float = 8.0
    lead_time_h: float = 24.0

    def __post_init__(self):
        for name in ("radius_km", "area_km2", "stop_time_h", "daganzo_k",
                     "shift_duration_h", "lead_time_h"):
            if getattr(self, name) <= 0:
                raise DomainError(f"params.{name} must be > 0")
        if self.congestion_factor < 1:
            raise DomainError("params.congestion_factor must be >= 1")
        if self.lead_time_h > 24:
            raise DomainError("params.lead_time_h must be <= 24")


@dataclass(frozen=True, slots=True)
class ExternalCostFactors:
    """Monetized external impacts per vehicle-kilometre."""

    accident: float
    air_pollution: float
    climate_change: float
    noise: float
    congestion: float

    def __post_init__(self):
        for name in EXTERNAL_CATEGORIES:
            if getattr(self, name) < 0:
                raise DomainError(f"external factor '{name}' must be >= 0")

    @property
    def total(self) -> float:
        return math.fsum(getattr(self, name) for name in EXTERNAL_CATEGORIES)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in EXTERNAL_CATEGORIES}


# European road-freight externality rates (INFRAS/IWW per v.km; congestion
# rate from the TU Delft study), summing to 61.6 per v.km.
DEFAULT_EXTERNAL_FACTORS = ExternalCostFactors(
    accident=3.4, air_pollution=20.5, climate_change=6.3, noise=27.4, congestion=4.0)


@dataclass(frozen=True, slots=True)
class TourPlan:
    """Fixed-point solution for one (vehicle, demand) pair."""

    vehicle: VehicleType
    tours: int
    distance_km: float
    binding_constraint: BindingConstraint


@dataclass(frozen=True)
class KpiReport:
    """Daily performance of a layer or scheme.

    transport_cost, external_cost_total and total_cost are derived, so the
    identities transport = distance + time cost and external total = sum of
    categories hold exactly by construction.
    """

    total_distance_km: float = 0.0
    total_time_h: float = 0.0
    distance_cost: float = 0.0
    time_cost: float = 0.0
    handling_cost: float = 0.0
    external_by_category: dict[str, float] = field(
        default_factory=lambda: {name: 0.0 for name in EXTERNAL_CATEGORIES})
    fill_rate: float = 0.0
    loaded_weight_kg: float = 0.0
    tours_by_vehicle: dict[str, int] = field(default_factory=dict)
    tours_fractional_by_vehicle: dict[str, float] = field(default_factory=dict)

    @property
    def transport_cost(self) -> float:
        return self.distance_cost + self.time_cost

    @property
    def external_cost_total(self) -> float:
        return math.fsum(self.external_by_category.values())

    @property
    def total_cost(self) -> float:
        return self.transport_cost + self.handling_cost

    @property
    def total_tours(self) -> int:
        return sum(self.tours_by_vehicle.values())

    @classmethod
    def zero(cls) -> "KpiReport":
        return cls()

    def scaled(self, n: int) -> "KpiReport":
        """Report for n identical subregions; per-tour fill is unchanged."""
        return KpiReport(
            total_distance_km=self.total_distance_km * n,
            total_time_h=self.total_time_h * n,
            distance_cost=self.distance_cost * n,
            time_cost=self.time_cost * n,
            handling_cost=self.handling_cost * n,
            external_by_category={k: v * n for k, v in self.external_by_category.items()},
            fill_rate=self.fill_rate,
            loaded_weight_kg=self.loaded_weight_kg * n,
            tours_by_vehicle={k: v * n for k, v in self.tours_by_vehicle.items()},
            tours_fractional_by_vehicle={k: v * n for k, v in self.tours_fractional_by_vehicle.items()},
        )

    @classmethod
    def aggregate(cls, reports) -> "KpiReport":
        """Field-wise sum; fill rate is weighted by each report's loaded weight."""
        reports = list(reports)
        if not reports:
            return cls.zero()
        tours: dict[str, int] = {}
        frac: dict[str, float] = {}
        for r in reports:
            for k, v in r.tours_by_vehicle.items():
                tours[k] = tours.get(k, 0) + v
            for k, v in r.tours_fractional_by_vehicle.items():
                frac[k] = frac.get(k, 0.0) + v
        loaded = math.fsum(r.loaded_weight_kg for r in reports)
        if loaded > 0:
            fill = math.fsum(r.fill_rate * r.loaded_weight_kg for r in reports) / loaded
        else:
            fill = 0.0
        return cls(
            total_distance_km=math.fsum(r.total_distance_km for r in reports),
            total_time_h=math.fsum(r.total_time_h for r in reports),
            distance_cost=math.fsum(r.distance_cost for r in reports),
            time_cost=math.fsum(r.time_cost for r in reports),
            handling_cost=math.fsum(r.handling_cost for r in reports),
            external_by_category={
                name: math.fsum(r.external_by_category.get(name, 0.0) for r in reports)
                for name in EXTERNAL_CATEGORIES},
            fill_rate=fill,
            loaded_weight_kg=loaded,
            tours_by_vehicle=tours,
            tours_fractional_by_vehicle=frac,
        )


def route_distance(tours: float, stops: float, params: NetworkParams) -> float:
    """Estimated daily route length: 2*r*m line haul plus k*sqrt(A*N) dispersion."""
    if tours < 0 or stops < 0:
        raise DomainError("route_distance: tours and stops must be >= 0")
    spread = params.daganzo_k * math.sqrt(params.area_km2 * stops)
    spread = round(spread / _SPREAD_QUANTUM) * _SPREAD_QUANTUM
    return 2.0 * params.radius_km * tours + spread


def effective_capacity(vehicle: VehicleType, unit: DeliveryUnitType) -> float:
    """Payload usable for a unit type: weight limit capped by footprint positions."""
    return min(vehicle.capacity_kg, vehicle.max_units_footprint * unit.avg_weight_kg)


def _capacity_limit(vehicle: VehicleType, dominant: DeliveryUnitType | None) -> float:
    if dominant is None:
        return vehicle.capacity_kg
    return effective_capacity(vehicle, dominant)


def _ceilings(weight: float, stops: float, distance: float, cap_limit: float,
              v_eff: float, params: NetworkParams) -> tuple[int, int, int]:
    cap = math.ceil(weight / cap_limit)
    shift = math.ceil((distance / v_eff + params.stop_time_h * stops) / params.shift_duration_h)
    lead = math.ceil(((distance - params.radius_km) / v_eff
                      + params.stop_time_h * (stops - 1)) / params.lead_time_h)
    return cap, shift, lead


def _binding(ceilings: tuple[int, int, int], m: int) -> BindingConstraint:
    order = (BindingConstraint.CAPACITY, BindingConstraint.SHIFT, BindingConstraint.LEAD_TIME)
    for c, name in zip(ceilings, order):
        if c == m:
            return name
    return BindingConstraint.CAPACITY


def _solve_fixed_point(weight: float, stops: float, cap_limit: float, v_eff: float,
                       params: NetworkParams, vehicle_id: str,
                       max_iterations: int) -> tuple[int, float, BindingConstraint]:
    spread = params.daganzo_k * math.sqrt(params.area_km2 * stops)
    spread = round(spread / _SPREAD_QUANTUM) * _SPREAD_QUANTUM
    two_r = 2.0 * params.radius_km

    # Per-tour line haul measured against each time budget; a ceiling whose
    # requirement grows at least as fast as m can never be caught once ahead.
    slope_shift = two_r / (v_eff * params.shift_duration_h)
    slope_lead = two_r / (v_eff * params.lead_time_h)

    m = max(0, math.ceil(weight / cap_limit))
    for _ in range(max_iterations):
        d = two_r * m + spread
        ceilings = _ceilings(weight, stops, d, cap_limit, v_eff, params)
        m_next = max(0, *ceilings)
        if m_next <= m:
            return m, d, _binding(ceilings, m)
        if slope_shift >= 1.0 and ceilings[1] > m:
            raise InfeasibleError(vehicle_id, BindingConstraint.SHIFT,
                                  f"round trip exceeds the shift budget at any tour count (m >= {m})")
        if slope_lead >= 1.0 and ceilings[2] > m:
            raise InfeasibleError(vehicle_id, BindingConstraint.LEAD_TIME,
                                  f"round trip exceeds the lead-time budget at any tour count (m >= {m})")
        m = m_next
    d = two_r * m + spread
    ceilings = _ceilings(weight, stops, d, cap_limit, v_eff, params)
    raise InfeasibleError(vehicle_id, _binding(ceilings, max(ceilings)),
                          f"no fixed point within {max_iterations} iterations")


def solve_tour_plan(vehicle: VehicleType, demand: DemandProfile, params: NetworkParams,
                    dominant_unit: DeliveryUnitType | None = None,
                    max_iterations: int = 10_000) -> TourPlan:
    """Smallest tour count satisfying capacity, shift and lead-time ceilings.

    The ceilings depend on the route length, which grows with the tour count,
    so the solution is the least fixed point of m -> max(ceilings(d(m))).
    Iteration starts from the capacity ceiling (a lower bound independent of
    distance) and is monotone nondecreasing, so non-convergence means a
    constraint genuinely diverges and an InfeasibleError is raised naming it.
    """
    weight = demand.total_weight_kg
    stops = demand.total_stops
    if weight == 0 and stops == 0:
        return TourPlan(vehicle, 0, 0.0, BindingConstraint.CAPACITY)
    if dominant_unit is None:
        dominant_unit = demand.dominant_unit()
    cap_limit = _capacity_limit(vehicle, dominant_unit)
    v_eff = vehicle.speed_kmh / params.congestion_factor
    m, d, binding = _solve_fixed_point(weight, stops, cap_limit, v_eff, params,
                                       vehicle.id, max_iterations)
    return TourPlan(vehicle, m, d, binding)


def travel_and_stop_time(distance_km: float, stops: float, vehicle: VehicleType,
                         params: NetworkParams) -> float:
    """Hours on the road plus hours stopped, for one vehicle type's daily plan."""
    if vehicle.speed_kmh <= 0:
        raise DomainError("vehicle speed must be > 0")
    v_eff = vehicle.speed_kmh / params.congestion_factor
    return distance_km / v_eff + params.stop_time_h * stops


def distance_cost(plans) -> float:
    """Sum of route length times the per-km rate over all plans."""
    return math.fsum(p.distance_km * p.vehicle.cost_per_km for p in plans)


def total_time(plans, demand: DemandProfile, params: NetworkParams) -> float:
    """Travel plus stop time over all plans, each serving the given stop count."""
    return math.fsum(
        travel_and_stop_time(p.distance_km, demand.total_stops, p.vehicle, params)
        for p in plans)


def time_cost(plans, demand: DemandProfile, params: NetworkParams) -> float:
    """Wage cost: travel plus stop time, priced at each vehicle's hourly rate."""
    return math.fsum(
        travel_and_stop_time(p.distance_km, demand.total_stops, p.vehicle, params)
        * p.vehicle.cost_per_hour
        for p in plans)


def external_cost(total_distance_km: float,
                  factors: ExternalCostFactors) -> tuple[float, dict[str, float]]:
    """Monetized external impacts of the given vehicle-kilometres, by category."""
    if total_distance_km < 0:
        raise DomainError("external_cost: distance must be >= 0")
    by_category = {name: getattr(factors, name) * total_distance_km
                   for name in EXTERNAL_CATEGORIES}
    return math.fsum(by_category.values()), by_category


def fill_rate(loaded_weight_kg: float, vehicle: VehicleType,
              dominant_unit: DeliveryUnitType | None, tours: int) -> float:
    """Departure load per tour over the effective capacity, in [0, 1]."""
    if loaded_weight_kg < 0:
        raise DomainError("fill_rate: loaded weight must be >= 0")
    if loaded_weight_kg == 0:
        return 0.0
    if tours < 1:
        raise DomainError("fill_rate: tours must be >= 1 when there is load")
    cap = _capacity_limit(vehicle, dominant_unit)
    per_tour = loaded_weight_kg / tours
    if per_tour > cap * (1.0 + _REL_TOL):
        raise ConsistencyError(
            f"load per tour ({per_tour:.1f} kg) exceeds effective capacity "
            f"({cap:.1f} kg) of vehicle '{vehicle.id}'")
    return min(1.0, per_tour / cap)


def min_feasible_lead_time(vehicle: VehicleType, demand: DemandProfile,
                           params: NetworkParams, resolution: float = 0.05) -> float:
    """Smallest lead time (on a resolution grid, up to 24 h) with a feasible plan.

    Returns math.inf when even 24 h diverges.  Feasibility is monotone in the
    lead time, so a bisection over the grid equals a full scan.
    """
    if not (0 < resolution <= 24):
        raise DomainError("resolution must be in (0, 24]")

    def feasible(lt: float) -> bool:
        try:
            solve_tour_plan(vehicle, demand, replace(params, lead_time_h=lt))
            return True
        except InfeasibleError:
            return False

    n_max = math.floor(24.0 / resolution)
    if not feasible(n_max * resolution):
        return math.inf
    lo, hi = 1, n_max  # invariant: hi*resolution feasible, (lo-1)*resolution unknown/infeasible
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(mid * resolution):
            hi = mid
        else:
            lo = mid + 1
    return lo * resolution
