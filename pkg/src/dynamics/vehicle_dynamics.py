import math
from typing import Dict, Sequence

import numpy as np

from ..core.errors import DomainError, SingularityError
from ..core.logging_setup import get_logger
from ..core.models import BodyWrench, NozzleCommand, VehicleParams, VehicleState
from ..kinematics.svpn_kinematics import MOUNT_SIGNS, thrust_directions, tip_translations

logger = get_logger("Dynamics", "dynamics.log")

# NED: z вниз, сопла вытянуты вдоль +z связанной СК
MAX_STEP = 0.01
PITCH_LIMIT = 0.5 * math.pi


# === Матрица смешивания сил ===

def translational_rotation(attitude: Sequence[float]) -> np.ndarray:
    """
    Description:
    ---------------
        Матрица G, переводящая силу связанной СК в инерциальные ускорения
        (первые три строки уравнений движения). G - собственное вращение,
        обратное преобразование - G.T.

    Args:
    ---------------
        attitude: Углы (phi, theta, psi), рад

    Returns:
    ---------------
        np.ndarray: Матрица 3x3
    """
    phi, theta, psi = attitude
    sf, cf = math.sin(phi), math.cos(phi)
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(psi), math.cos(psi)
    return np.array([
        [ct * sp, sp * st * sf + cf * cp, sp * st * cf - sf * cp],
        [ct * cp, cp * st * sf - cf * sp, cp * st * cf + sf * sp],
        [st, -sf * ct, -cf * ct],
    ])


# === Силы и моменты ===

def aggregate_force(forces: np.ndarray) -> np.ndarray:
    """Суммарная сила четырех сопел"""
    return np.asarray(forces, dtype=float).reshape(4, 3).sum(axis=0)


def aggregate_moment_linearized(forces: np.ndarray, params: VehicleParams) -> np.ndarray:
    """
    Description:
    ---------------
        Момент по линеаризованной модели: тяга приложена в эквивалентной
        точке a = 0.5135·s на оси сопла, плечо в плоскости c = (√2/2)·l.

    Args:
    ---------------
        forces: Силы сопел (4x3 или 12), Н
        params: Параметры аппарата

    Returns:
    ---------------
        np.ndarray: Момент (Mx, My, Mz), Н·м
    """
    f = np.asarray(forces, dtype=float).reshape(4, 3)
    a = params.equivalent_lever
    c = params.planar_arm
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    moment_x = -a * fy.sum() - c * (fz[0] + fz[1] - fz[2] - fz[3])
    moment_y = a * fx.sum() + c * (fz[0] - fz[1] - fz[2] + fz[3])
    moment_z = c * (
        (fx[0] - fy[0]) + (fx[1] + fy[1]) - (fx[2] - fy[2]) - (fx[3] + fy[3])
    )
    return np.array([moment_x, moment_y, moment_z])


def mount_points(params: VehicleParams) -> np.ndarray:
    """Точки крепления сопел в плоскости рамы, (4, 3)"""
    c = params.planar_arm
    return np.array([[sx * c, sy * c, 0.0] for sx, sy in MOUNT_SIGNS])


def aggregate_moment_exact(
    forces: np.ndarray,
    alphas: np.ndarray,
    betas: np.ndarray,
    params: VehicleParams,
) -> np.ndarray:
    """Момент от реальных точек приложения тяги (центры торцов сопел)"""
    f = np.asarray(forces, dtype=float).reshape(4, 3)
    arms = mount_points(params) + tip_translations(alphas, betas, params.nozzle_length)
    return np.cross(arms, f).sum(axis=0)


def equivalent_lever(alpha: float, nozzle_length: float) -> float:
    """
    Description:
    ---------------
        Точное плечо a(alpha) = s·tan(alpha/2)/alpha: глубина, на которой линия
        действия тяги пересекает ось сопла. При alpha -> 0 предел s/2.

    Raises:
    ---------------
        DomainError: alpha < 0 или alpha >= π
    """
    if alpha < 0.0 or alpha >= math.pi:
        raise DomainError(f"угол изгиба вне [0, π): {alpha}")
    if alpha < 1.0e-4:
        # tan(x/2)/x = 1/2 + x²/24 + ...
        return nozzle_length * (0.5 + alpha * alpha / 24.0)
    return nozzle_length * math.tan(0.5 * alpha) / alpha


def lever_error_report(params: VehicleParams, samples: int = 10_000) -> Dict[str, float]:
    """
    Description:
    ---------------
        Плотная выборка alpha на (0, alpha_max]: отклонение эквивалентного
        плеча 0.5135·s от точного a(alpha).

    Returns:
    ---------------
        Dict[str, float]: a_min, a_max (в долях s), максимальные относительные
        ошибки к эквивалентному и к точному плечу
    """
    s = params.nozzle_length
    a_eq = params.equivalent_lever
    alphas = np.linspace(params.alpha_max / samples, params.alpha_max, samples)
    exact = s * np.tan(0.5 * alphas) / alphas
    deviation = np.abs(exact - a_eq)
    report = {
        "a_min_ratio": 0.5,
        "a_max_ratio": float(exact.max() / s),
        "max_error_vs_equivalent": float((deviation / a_eq).max()),
        "max_error_vs_exact": float((deviation / exact).max()),
    }
    logger.debug(f"Отчет по эквивалентному плечу: {report}")
    return report


def moment_model_report(params: VehicleParams, samples: int = 10_000, seed: int = 0) -> Dict[str, float]:
    """
    Description:
    ---------------
        Сравнивает линеаризованный момент с точным на случайных конфигурациях
        (alpha в [0, alpha_max], тяга 0.5..5 Н на сопло). После вычета ошибки
        плеча остается геометрический остаток, он должен быть на уровне округления.

    Returns:
    ---------------
        Dict[str, float]: max_error_ratio - max |M_lin - M_exact| / Σ|a(alpha_i)·(-F_y, F_x)|,
            geometric_residual - max остаток, Н·м
    """
    rng = np.random.default_rng(seed)
    s = params.nozzle_length
    a_eq = params.equivalent_lever
    alphas = rng.uniform(0.0, params.alpha_max, (samples, 4))
    betas = rng.uniform(0.0, 2.0 * math.pi, (samples, 4))
    thrusts = rng.uniform(0.5, 5.0, (samples, 4))
    forces = thrusts[..., None] * thrust_directions(alphas, betas)

    mounts = mount_points(params)
    exact = np.cross(mounts + tip_translations(alphas, betas, s), forces).sum(axis=1)
    linear = np.cross(mounts + np.array([0.0, 0.0, a_eq]), forces).sum(axis=1)

    small = alphas < 1.0e-4
    levers = np.where(
        small,
        s * (0.5 + alphas ** 2 / 24.0),
        s * np.tan(0.5 * alphas) / np.where(small, 1.0, alphas),
    )
    lateral = np.stack([-forces[..., 1], forces[..., 0], np.zeros_like(alphas)], axis=-1)
    lever_term = ((levers - a_eq)[..., None] * lateral).sum(axis=1)
    through_lever = np.linalg.norm(levers[..., None] * lateral, axis=-1).sum(axis=1)

    error = np.linalg.norm(linear - exact, axis=1)
    report = {
        "max_error_ratio": float((error / through_lever).max()),
        "geometric_residual": float(np.abs(exact - linear - lever_term).max()),
    }
    logger.debug(f"Сравнение моделей момента: {report}")
    return report


def hover_omega(params: VehicleParams) -> float:
    """omega, при которой четыре прямых сопла держат вес: c_t·omega² = m·g/4"""
    return math.sqrt(params.mass * params.gravity / (4.0 * params.thrust_coefficient))


def nozzle_forces(commands: Sequence[NozzleCommand], params: VehicleParams) -> np.ndarray:
    """Силы сопел (4, 3) по командам"""
    alphas = np.array([cmd.alpha for cmd in commands])
    betas = np.array([cmd.beta for cmd in commands])
    thrusts = params.thrust_coefficient * np.array([cmd.omega for cmd in commands]) ** 2
    return thrusts[:, None] * thrust_directions(alphas, betas)


def plant_wrench(
    commands: Sequence[NozzleCommand],
    params: VehicleParams,
    moment_model: str = "exact",
) -> BodyWrench:
    """
    Description:
    ---------------
        Воздействие на аппарат от команд сопел. moment_model: "exact" -
        плечо до торцов сопел, "linearized" - эквивалентная точка.
    """
    forces = nozzle_forces(commands, params)
    if moment_model == "exact":
        alphas = np.array([cmd.alpha for cmd in commands])
        betas = np.array([cmd.beta for cmd in commands])
        moment = aggregate_moment_exact(forces, alphas, betas, params)
    elif moment_model == "linearized":
        moment = aggregate_moment_linearized(forces, params)
    else:
        raise DomainError(f"неизвестная модель момента: {moment_model}")
    return BodyWrench.from_array(np.concatenate([aggregate_force(forces), moment]))


# === Уравнения движения ===

def state_derivative(
    x: np.ndarray,
    wrench: np.ndarray,
    params: VehicleParams,
    small_angle_attitude: bool = False,
) -> np.ndarray:
    """
    Description:
    ---------------
        Производная вектора состояния [r, v, (phi, theta, psi), (p, q, r)].
        Поступательная часть в инерциальной СК, вращательная в связанной.

    Args:
    ---------------
        x: Состояние (12)
        wrench: Воздействие (Fx, Fy, Fz, Mx, My, Mz) в связанной СК
        params: Параметры аппарата
        small_angle_attitude: phi' = p, theta' = q, psi' = r вместо
            полной кинематики углов Эйлера

    Returns:
    ---------------
        np.ndarray: Производная (12)

    Raises:
    ---------------
        SingularityError: |theta| >= 90°
    """
    _, _, _, vx, vy, vz, phi, theta, psi, p, q, r = np.asarray(x, dtype=float).tolist()
    if abs(theta) >= PITCH_LIMIT:
        raise SingularityError(f"вырождение углов Эйлера: theta={math.degrees(theta):.3f}°")

    fx, fy, fz, mx, my, mz = np.asarray(wrench, dtype=float).tolist()
    m = params.mass
    ixx, iyy, izz = params.inertia

    sf, cf = math.sin(phi), math.cos(phi)
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(psi), math.cos(psi)

    ax = (ct * sp * fx + (sp * st * sf + cf * cp) * fy + (sp * st * cf - sf * cp) * fz) / m
    ay = (ct * cp * fx + (cp * st * sf - cf * sp) * fy + (cp * st * cf + sf * sp) * fz) / m
    az = (m * params.gravity + st * fx - sf * ct * fy - cf * ct * fz) / m

    if small_angle_attitude:
        phi_dot, theta_dot, psi_dot = p, q, r
    else:
        tt = st / ct
        phi_dot = p + (q * sf + r * cf) * tt
        theta_dot = q * cf - r * sf
        psi_dot = (q * sf + r * cf) / ct

    p_dot = (mx + q * r * (iyy - izz)) / ixx
    q_dot = (my + p * r * (izz - ixx)) / iyy
    r_dot = (mz + p * q * (ixx - iyy)) / izz

    return np.array([
        vx, vy, vz,
        ax, ay, az,
        phi_dot, theta_dot, psi_dot,
        p_dot, q_dot, r_dot,
    ])


def derivatives(
    state: VehicleState,
    wrench: BodyWrench,
    params: VehicleParams,
    small_angle_attitude: bool = False,
) -> VehicleState:
    """Производная состояния в виде VehicleState (поля хранят производные)"""
    rate = state_derivative(state.to_array(), wrench.as_array(), params, small_angle_attitude)
    return VehicleState.from_array(rate)


def rk4_step(
    x: np.ndarray,
    wrench: np.ndarray,
    dt: float,
    params: VehicleParams,
    small_angle_attitude: bool = False,
) -> np.ndarray:
    """Шаг Рунге-Кутты 4-го порядка, воздействие постоянно на шаге"""
    k1 = state_derivative(x, wrench, params, small_angle_attitude)
    k2 = state_derivative(x + 0.5 * dt * k1, wrench, params, small_angle_attitude)
    k3 = state_derivative(x + 0.5 * dt * k2, wrench, params, small_angle_attitude)
    k4 = state_derivative(x + dt * k3, wrench, params, small_angle_attitude)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def check_step(dt: float) -> None:
    if not (0.0 < dt <= MAX_STEP):
        raise DomainError(f"шаг интегрирования должен быть в (0, {MAX_STEP}], получено {dt}")


def step(
    state: VehicleState,
    wrench: BodyWrench,
    dt: float,
    params: VehicleParams,
    small_angle_attitude: bool = False,
) -> VehicleState:
    """
    Description:
    ---------------
        Продвигает состояние на dt методом Рунге-Кутты 4-го порядка.

    Raises:
    ---------------
        DomainError: dt вне (0, 0.01]
        SingularityError: |theta| >= 90° на одном из этапов
    """
    check_step(dt)
    x_next = rk4_step(state.to_array(), wrench.as_array(), dt, params, small_angle_attitude)
    return VehicleState.from_array(x_next)
