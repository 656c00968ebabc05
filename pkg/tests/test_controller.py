import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.control.allocation import symmetric_locks
from src.control.controller import FlightController, loop_period
from src.core.errors import DomainError, SwitchRejectedError
from src.core.models import ControlMode, ModeKind, Setpoint6D, VehicleState
from src.dynamics.vehicle_dynamics import hover_omega, translational_rotation


def test_loop_periods():
    assert loop_period(100.0, 1.0e-3) == 10
    assert loop_period(500.0, 1.0e-3) == 2
    assert loop_period(1000.0, 1.0e-2) == 1


def test_hover_demands_weight(controller, params, hover_state, hover_setpoint):
    wrench = controller.outer_loops(hover_state, hover_setpoint)
    np.testing.assert_allclose(wrench.force, [0.0, 0.0, params.mass * params.gravity], atol=1e-12)
    np.testing.assert_allclose(wrench.moment, [0.0, 0.0, 0.0], atol=1e-12)


def test_hover_tick_commands_straight_nozzles(controller, params, hover_state, hover_setpoint):
    record = controller.tick(0.0, hover_state, hover_setpoint)
    assert record.mode == ModeKind.FULLY_ACTUATED
    assert record.clamp_flags == (0, 0, 0, 0)
    assert len(record.allocation) == 12
    for command in record.commands:
        assert command.alpha == pytest.approx(0.0, abs=1e-12)
        assert command.omega == pytest.approx(hover_omega(params))


def test_step_in_x_pushes_toward_target(controller, hover_state):
    wrench = controller.outer_loops(hover_state, Setpoint6D(position=(1.0, 0.0, -1.0)))
    inertial = translational_rotation(hover_state.attitude) @ np.array(wrench.force)
    assert inertial[0] > 0.0
    assert inertial[1] == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(wrench.moment, [0.0, 0.0, 0.0], atol=1e-12)


def test_attitude_setpoint_outside_limits(controller, hover_state):
    with pytest.raises(DomainError):
        controller.tick(0.0, hover_state, Setpoint6D(attitude=(math.radians(40.0), 0.0, 0.0)))


def test_outer_loops_run_at_their_rate(controller, hover_state, hover_setpoint):
    first = controller.tick(0.0, hover_state, hover_setpoint)
    moved = VehicleState(position=(0.1, 0.0, -1.0))
    for k in range(1, 10):
        record = controller.tick(k * 1.0e-3, moved, hover_setpoint)
        assert record.setpoint.velocity == first.setpoint.velocity
    record = controller.tick(0.01, moved, hover_setpoint)
    assert record.setpoint.velocity[0] == pytest.approx(-0.3)


def test_switch_to_grasp_perch_is_bumpless(controller, hover_state, hover_setpoint):
    controller.tick(0.0, hover_state, hover_setpoint)
    mode = controller.mode_switch(ControlMode.grasp_perch(symmetric_locks(math.radians(20.0))), hover_state, t=1.0)
    assert mode.kind == ModeKind.GRASP_PERCH
    transition = controller.transitions[-1]
    assert transition.from_mode == ModeKind.FULLY_ACTUATED
    assert transition.force_z_jump < 1.0e-9
    assert transition.jump_norm < 1.0e-9

    record = controller.tick(1.0, hover_state, hover_setpoint)
    assert record.mode == ModeKind.GRASP_PERCH
    assert record.allocation is None
    assert record.wrench.force[:2] == (0.0, 0.0)
    assert all(command.alpha == pytest.approx(math.radians(20.0)) for command in record.commands)


def test_capturing_straight_nozzles_is_rejected(controller, hover_state, hover_setpoint):
    controller.tick(0.0, hover_state, hover_setpoint)
    with pytest.raises(SwitchRejectedError) as error:
        controller.mode_switch(ControlMode.grasp_perch(), hover_state, t=2.5)
    assert error.value.timestamp == 2.5
    assert controller.mode.kind == ModeKind.FULLY_ACTUATED


def test_return_to_fully_actuated(controller, hover_state, hover_setpoint):
    controller.tick(0.0, hover_state, hover_setpoint)
    controller.mode_switch(ControlMode.grasp_perch(symmetric_locks(math.radians(20.0))), hover_state, t=1.0)
    controller.tick(1.0, hover_state, hover_setpoint)
    controller.mode_switch(ControlMode.fully_actuated(), hover_state, t=2.0)
    assert controller.mode.locks is None
    assert [t.to_mode for t in controller.transitions] == [ModeKind.GRASP_PERCH, ModeKind.FULLY_ACTUATED]
    assert controller.transitions[-1].force_z_jump < 1.0e-9


def test_grasp_perch_tilts_to_move_sideways(params, hover_state):
    controller = FlightController(params, dt=1.0e-3)
    controller.tick(0.0, hover_state, Setpoint6D(position=(0.0, 0.0, -1.0)))
    controller.mode_switch(ControlMode.grasp_perch(symmetric_locks(math.radians(20.0))), hover_state, t=0.0)
    # Наклон появляется со второго прохода внешних контуров
    for k in range(1, 21):
        record = controller.tick(k * 1.0e-3, hover_state, Setpoint6D(position=(0.5, 0.0, -1.0)))
    # Ускорение вдоль +x в NED при psi = 0 требует крена phi < 0
    assert record.setpoint.attitude[0] < 0.0
    assert abs(record.setpoint.attitude[0]) <= params.phi_max


def test_fully_actuated_mode_carries_no_locks():
    with pytest.raises(ValidationError):
        ControlMode(kind=ModeKind.FULLY_ACTUATED, locks=symmetric_locks(0.3))
