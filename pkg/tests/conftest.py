import pytest

from src.control.controller import FlightController
from src.core.models import Setpoint6D, VehicleParams, VehicleState
from src.kinematics.svpn_kinematics import nozzle_geometry


@pytest.fixture
def params() -> VehicleParams:
    return VehicleParams()


@pytest.fixture
def geom(params):
    return nozzle_geometry(1, params)


@pytest.fixture
def hover_state() -> VehicleState:
    return VehicleState(position=(0.0, 0.0, -1.0))


@pytest.fixture
def hover_setpoint() -> Setpoint6D:
    return Setpoint6D(position=(0.0, 0.0, -1.0))


@pytest.fixture
def controller(params) -> FlightController:
    return FlightController(params, dt=1.0e-3)