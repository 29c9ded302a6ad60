import pathlib

import pytest

from citydist.model import (
    DeliveryUnitType,
    DemandProfile,
    NetworkParams,
    TemperatureClass,
    VehicleType,
)

REPO = pathlib.Path(__file__).resolve().parent.parent
SCENARIOS = REPO / "scenarios"
BORDEAUX = SCENARIOS / "bordeaux.scenario"
SINGLE_SUPPLIER = SCENARIOS / "bordeaux_single_supplier.scenario"


@pytest.fixture
def truck_25t():
    return VehicleType("truck_25t", 25000, 30, 8.0, 30.0,
                       TemperatureClass.A, 56)


@pytest.fixture
def truck_17t():
    return VehicleType("truck_17t", 17000, 20, 8.0, 30.0,
                       TemperatureClass.S, 30)


@pytest.fixture
def base_params():
    return NetworkParams(radius_km=20.0, area_km2=186.0, stop_time_h=0.5,
                         shift_duration_h=8.0, lead_time_h=24.0)


def demand(weight, stops, unit_weight=None):
    if unit_weight is None:
        return DemandProfile(total_weight_kg=weight, total_stops=stops)
    units = (DeliveryUnitType("mix", unit_weight, stops),)
    return DemandProfile.from_units(units)
