import math

import numpy as np
import pytest

from src.core.errors import DomainError, SingularityError
from src.core.models import BodyWrench, NozzleCommand, VehicleState
from src.dynamics.vehicle_dynamics import (
    aggregate_moment_exact,
    aggregate_moment_linearized,
    derivatives,
    equivalent_lever,
    hover_omega,
    lever_error_report,
    moment_model_report,
    nozzle_forces,
    plant_wrench,
    state_derivative,
    step,
    translational_rotation,
)


def test_level_rotation_maps_body_to_ned():
    expected = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]]
    np.testing.assert_allclose(translational_rotation((0.0, 0.0, 0.0)), expected, atol=1e-15)


def test_rotation_is_orthogonal():
    rng = np.random.default_rng(3)
    for attitude in rng.uniform(-1.2, 1.2, size=(5, 3)):
        matrix = translational_rotation(attitude)
        np.testing.assert_allclose(matrix @ matrix.T, np.eye(3), atol=1e-14)


def test_free_fall_matches_closed_form(params):
    state = VehicleState(position=(0.0, 0.0, -10.0))
    for _ in range(1000):
        state = step(state, BodyWrench(), 1.0e-3, params)
    assert state.position[2] == pytest.approx(-10.0 + 0.5 * params.gravity, rel=1e-9)
    assert state.velocity[2] == pytest.approx(params.gravity, rel=1e-9)
    assert state.position[0] == 0.0


def test_vertical_thrust_balances_gravity(params):
    wrench = BodyWrench(force=(0.0, 0.0, params.mass * params.gravity))
    rate = derivatives(VehicleState(position=(1.0, 2.0, -3.0)), wrench, params)
    np.testing.assert_allclose(rate.to_array(), np.zeros(12), atol=1e-12)


def test_pitch_singularity_is_reported(params):
    x = np.zeros(12)
    x[7] = 0.5 * math.pi
    with pytest.raises(SingularityError):
        state_derivative(x, np.zeros(6), params)


def test_small_angle_attitude_kinematics(params):
    x = np.zeros(12)
    x[6:9] = (0.3, 0.2, 0.1)
    x[9:12] = (0.5, -0.4, 0.7)
    full = state_derivative(x, np.zeros(6), params)
    simple = state_derivative(x, np.zeros(6), params, small_angle_attitude=True)
    np.testing.assert_allclose(simple[6:9], x[9:12])
    assert not np.allclose(full[6:9], x[9:12])


@pytest.mark.parametrize("dt", [0.0, -1.0e-3, 0.02])
def test_step_size_is_checked(params, dt):
    with pytest.raises(DomainError):
        step(VehicleState(), BodyWrench(), dt, params)


def test_equivalent_lever_limits(params):
    s = params.nozzle_length
    assert equivalent_lever(0.0, s) == pytest.approx(0.5 * s)
    assert equivalent_lever(1.0e-5, s) == pytest.approx(equivalent_lever(2.0e-4, s), rel=1e-8)
    assert equivalent_lever(math.radians(45.0), s) == pytest.approx(0.527393 * s, rel=1e-5)
    with pytest.raises(DomainError):
        equivalent_lever(-0.1, s)
    with pytest.raises(DomainError):
        equivalent_lever(math.pi, s)


def test_equivalent_lever_error_bound(params):
    report = lever_error_report(params)
    assert report["a_min_ratio"] == 0.5
    assert report["a_max_ratio"] == pytest.approx(0.527393, abs=1e-6)
    assert report["max_error_vs_exact"] < 0.027
    assert report["max_error_vs_equivalent"] <= 0.0271


def test_hover_speed(params):
    omega = hover_omega(params)
    assert omega == pytest.approx(math.sqrt(1.2 * 9.8 / 4.0e-6))
    assert params.omega_min <= omega <= params.omega_max


def test_straight_hover_commands_give_pure_lift(params):
    omega = hover_omega(params)
    commands = [NozzleCommand(omega=omega) for _ in range(4)]
    for model in ("exact", "linearized"):
        wrench = plant_wrench(commands, params, model)
        np.testing.assert_allclose(wrench.force, [0.0, 0.0, params.mass * params.gravity], rtol=1e-12)
        np.testing.assert_allclose(wrench.moment, [0.0, 0.0, 0.0], atol=1e-12)
    with pytest.raises(DomainError):
        plant_wrench(commands, params, "quadratic")


def test_exact_and_linearized_moments_differ_by_lever_error(params):
    rng = np.random.default_rng(11)
    alphas = rng.uniform(0.0, params.alpha_max, 4)
    betas = rng.uniform(0.0, 2.0 * math.pi, 4)
    commands = [
        NozzleCommand(alpha=a, beta=b, omega=w)
        for a, b, w in zip(alphas, betas, rng.uniform(1000.0, 2500.0, 4))
    ]
    forces = nozzle_forces(commands, params)
    exact = aggregate_moment_exact(forces, alphas, betas, params)
    linear = aggregate_moment_linearized(forces, params)

    expected = np.zeros(3)
    for alpha, (fx, fy, _) in zip(alphas, forces):
        error = equivalent_lever(alpha, params.nozzle_length) - params.equivalent_lever
        expected += error * np.array([-fy, fx, 0.0])
    np.testing.assert_allclose(exact - linear, expected, atol=1e-12)


def test_roll_moment_spins_up_about_x(params):
    x = np.zeros(12)
    x[2] = -1.0
    wrench = np.array([0.0, 0.0, params.mass * params.gravity, 0.01, 0.0, 0.0])
    rate = state_derivative(x, wrench, params)
    assert rate[9] == pytest.approx(0.01 / params.inertia[0])
    assert rate[10] == 0.0 and rate[11] == 0.0


def test_linearized_moment_error_is_lever_error_only(params):
    report = moment_model_report(params, samples=2000, seed=1)
    assert report["max_error_ratio"] < 0.0271
    assert report["geometric_residual"] < 1.0e-12


def test_step_converges_with_fourth_order(params):
    start = VehicleState(
        position=(0.0, 0.0, -1.0),
        velocity=(0.5, -0.3, 0.2),
        attitude=(0.1, -0.05, 0.2),
        body_rates=(0.8, -0.5, 0.6),
    )
    wrench = BodyWrench(force=(2.0, -1.5, 12.0), moment=(0.004, -0.003, 0.002))

    def integrate(dt: float) -> np.ndarray:
        state = start
        for _ in range(round(0.5 / dt)):
            state = step(state, wrench, dt, params)
        return state.to_array()

    coarse, middle, fine = (integrate(dt) for dt in (0.01, 0.005, 0.0025))
    order = math.log2(np.abs(coarse - middle).max() / np.abs(middle - fine).max())
    assert order == pytest.approx(4.0, abs=0.3)
