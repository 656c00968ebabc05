import asyncio
import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.errors import DivergenceError, DomainError, UnreachableError
from src.core.models import (
    CircleReference,
    DisturbanceSpec,
    GraspPerchReference,
    GraspTarget,
    HoverReference,
    ModeEvent,
    ModeKind,
    Scenario,
    SimulationSettings,
    StepReference,
    TargetKind,
    VehicleState,
    Waypoint,
    WaypointReference,
)
from src.sim.metrics import compute_metrics
from src.sim.references import reference_at
from src.sim.sim_engine import Simulation, default_scenarios, grasp_perch_script, run, run_batch


def _hover(name="hover", duration=1.0, **fields) -> Scenario:
    return Scenario(
        name=name,
        duration=duration,
        initial_state=VehicleState(position=(0.0, 0.0, -1.0)),
        reference=HoverReference(position=(0.0, 0.0, -1.0)),
        **fields,
    )


# === Уставки ===

def test_circle_reference_starts_on_the_east_side():
    setpoint = reference_at(CircleReference(), 0.0)
    assert setpoint.position == pytest.approx((3.3, 2.8, -1.0))
    assert setpoint.velocity == pytest.approx((0.0, 2.0 * math.pi / 12.0, 0.0))
    quarter = reference_at(CircleReference(), 3.0)
    assert quarter.position == pytest.approx((2.3, 3.8, -1.0))


def test_step_and_waypoint_references():
    step = StepReference(t_step=1.0, attitude_after_deg=(0.0, 10.0, 0.0))
    assert reference_at(step, 0.5).attitude == (0.0, 0.0, 0.0)
    assert reference_at(step, 1.0).attitude[1] == pytest.approx(math.radians(10.0))

    path = WaypointReference(waypoints=[
        Waypoint(t=0.0, position=(0.0, 0.0, -1.0)),
        Waypoint(t=2.0, position=(2.0, 0.0, -1.0)),
    ])
    middle = reference_at(path, 1.0)
    assert middle.position == pytest.approx((1.0, 0.0, -1.0))
    assert middle.velocity == pytest.approx((1.0, 0.0, 0.0))
    assert reference_at(path, 5.0).velocity == (0.0, 0.0, 0.0)

    with pytest.raises(ValidationError):
        WaypointReference(waypoints=[Waypoint(t=1.0, position=(0, 0, 0)), Waypoint(t=1.0, position=(1, 0, 0))])
    with pytest.raises(DomainError):
        reference_at(GraspPerchReference(), 0.0)


# === Показатели ===

def test_metrics_on_synthetic_log():
    t = np.arange(0.0, 4.0, 0.001)
    zeros = np.zeros_like(t)
    mode = np.where(t >= 2.0, 1.0, 0.0)
    z = np.where((t >= 2.0) & (t < 2.5), -0.9, -1.0)
    columns = {
        "t": t, "x": zeros + 0.1, "y": zeros, "z": z,
        "x_d": zeros, "y_d": zeros, "z_d": zeros - 1.0,
        "phi": zeros, "theta": zeros + 0.05, "psi": np.linspace(0.0, 0.2, t.size),
        "mode": mode,
        "clamp_1": np.where(t < 1.0, 1, 0), "clamp_2": zeros, "clamp_3": zeros, "clamp_4": zeros,
    }
    metrics = compute_metrics(columns)
    assert metrics.rmse_x == pytest.approx(0.1)
    assert metrics.rmse_y == 0.0
    assert metrics.max_abs_pitch == pytest.approx(0.05)
    assert metrics.yaw_drift == pytest.approx(0.2)
    assert metrics.mode_switch_altitude_deviation == pytest.approx(0.1)
    assert metrics.clamp_duty_fraction == pytest.approx(0.25, abs=1e-3)
    assert metrics.settling_time == pytest.approx(t[-1])


def test_metrics_of_empty_log():
    columns = {name: np.array([]) for name in (
        "t", "x", "y", "z", "x_d", "y_d", "z_d", "phi", "theta", "psi", "mode",
        "clamp_1", "clamp_2", "clamp_3", "clamp_4",
    )}
    metrics = compute_metrics(columns)
    assert metrics.rmse_x == 0.0 and metrics.clamp_duty_fraction == 0.0


# === Моделирование ===

def test_free_fall_without_controller():
    scenario = default_scenarios()["free_fall"]
    log, metrics = run(scenario)
    assert len(log) == 1000
    t_last = log.column("t")[-1]
    assert t_last == pytest.approx(0.999)
    assert log.column("z")[-1] == pytest.approx(-10.0 + 0.5 * 9.8 * t_last ** 2, rel=1e-9)
    assert log.column("vz")[-1] == pytest.approx(9.8 * t_last, rel=1e-9)
    assert metrics.max_abs_roll == 0.0


def test_hover_holds_position():
    log, metrics = run(default_scenarios()["hover"])
    assert log.column("t")[-1] == pytest.approx(9.999)
    assert metrics.max_position_error < 1.0e-9
    assert set(log.column("mode")) == {0.0}
    assert not log.column("clamp_1").any()


def test_pitch_hold_reaches_target_attitude():
    scenario = Scenario(
        name="pitch",
        duration=4.0,
        initial_state=VehicleState(position=(0.0, 0.0, -1.0)),
        reference=StepReference(t_step=1.0, attitude_after_deg=(0.0, 10.0, 0.0)),
    )
    log, metrics = run(scenario)
    assert math.degrees(log.column("theta")[-1]) == pytest.approx(10.0, abs=0.5)
    assert metrics.max_position_error < 0.05


def test_circle_tracking_keeps_attitude_level():
    scenario = default_scenarios()["circle"]
    _, metrics = Simulation(scenario).run()
    assert metrics.metrics_start == scenario.metrics_start
    assert max(metrics.rmse_x, metrics.rmse_y, metrics.rmse_z) < 0.05
    assert metrics.max_abs_roll < math.radians(2.0)
    assert metrics.max_abs_pitch < math.radians(2.0)


def test_scheduled_mode_switches_keep_altitude():
    scenario = _hover(
        name="switch",
        duration=4.0,
        mode_schedule=[
            ModeEvent(t=1.0, mode=ModeKind.GRASP_PERCH, symmetric_bend_deg=20.0),
            ModeEvent(t=2.5, mode=ModeKind.FULLY_ACTUATED),
        ],
    )
    log, metrics = run(scenario)
    assert [transition.to_mode for transition in log.transitions] == [
        ModeKind.GRASP_PERCH, ModeKind.FULLY_ACTUATED,
    ]
    assert all(transition.force_z_jump < 1.0e-6 for transition in log.transitions)
    assert metrics.mode_switch_altitude_deviation < 0.05
    assert metrics.max_abs_roll < math.radians(3.0)
    assert metrics.max_abs_pitch < math.radians(3.0)
    mode = log.column("mode")
    t = log.column("t")
    assert mode[(t >= 1.0) & (t < 2.5)].min() == 1.0
    assert mode[t >= 2.5].max() == 0.0


def test_divergence_is_reported_with_time():
    scenario = default_scenarios()["free_fall"]
    with pytest.raises(DivergenceError) as error:
        run(scenario, simulation=SimulationSettings(divergence_bound=5.0))
    assert error.value.timestamp == 0.0


def test_step_size_limit():
    with pytest.raises(ValidationError):
        _hover(dt=0.02)


def test_noise_is_reproducible_by_seed():
    scenario = _hover(duration=0.3, seed=4, force_noise_std=0.05)
    first, _ = run(scenario)
    second, _ = run(scenario)
    other, _ = run(scenario.model_copy(update={"seed": 5}))
    np.testing.assert_array_equal(first.column("x"), second.column("x"))
    assert not np.array_equal(first.column("x"), other.column("x"))


def test_impulse_disturbance_is_rejected():
    scenario = _hover(
        duration=3.0,
        disturbances=[DisturbanceSpec(kind="impulse", force=(0.0, 1.0, 0.0), t_start=0.5, t_end=0.6)],
    )
    log, metrics = run(scenario)
    assert metrics.max_position_error > 1.0e-4
    final_error = math.hypot(log.column("x")[-1], log.column("z")[-1] + 1.0)
    assert final_error < metrics.max_position_error


def test_batch_runs_scenarios_by_name():
    scenarios = [default_scenarios()["free_fall"], _hover(name="short", duration=0.2)]
    results = asyncio.run(run_batch(scenarios))
    assert set(results) == {"free_fall", "short"}
    log, _ = results["short"]
    assert len(log) == 200


# === Захват/посадка ===

def test_grasp_script_timeline():
    script = grasp_perch_script(default_scenarios()["grasp_perch"])
    assert [(event.t, event.action) for event in script.events] == [
        (2.0, "mode"), (7.0, "attach"), (7.0, "mode"), (9.0, "release"), (14.0, "mode"),
    ]
    assert [waypoint.t for waypoint in script.reference.waypoints] == [0.0, 3.0, 6.0, 10.0, 13.0]
    assert script.perch_position == pytest.approx((1.0, 1.0, -0.55))
    assert script.approach_position == pytest.approx((1.0, 1.0, -1.05))
    assert script.end_time == pytest.approx(16.0)
    assert script.events[-1].mode.kind == ModeKind.FULLY_ACTUATED


def test_grasp_script_without_takeoff():
    base = default_scenarios()["grasp_perch"]
    reference = base.reference.model_copy(update={"takeoff": False})
    script = grasp_perch_script(base.model_copy(update={"reference": reference}))
    assert [event.action for event in script.events] == ["mode", "attach", "mode"]
    assert script.end_time == pytest.approx(9.0)


def test_unreachable_target_fails_before_flight():
    scenario = Scenario(
        name="thin_pole",
        duration=1.0,
        reference=GraspPerchReference(target=GraspTarget(kind=TargetKind.POLE, characteristic_radius=0.03)),
    )
    with pytest.raises(UnreachableError):
        Simulation(scenario)


def test_grasp_perch_and_takeoff():
    simulation = Simulation(default_scenarios()["grasp_perch"])
    log, _ = simulation.run()
    t = log.column("t")
    perched = (t >= 7.5) & (t < 9.0)
    assert log.column("z")[perched] == pytest.approx(-0.55)
    assert np.all(log.column("vz")[perched] == 0.0)
    assert not simulation.attached
    assert log.column("mode")[-1] == 0.0
    assert len(log.transitions) == 4
    assert log.column("z")[-1] == pytest.approx(-1.05, abs=0.05)
