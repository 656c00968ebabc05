import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import ConditioningError, DomainError, InfeasibleError, SingularConfigError
from ..core.logging_setup import get_logger
from ..core.models import (
    AllocationMatrix,
    BodyWrench,
    LockedAngles,
    Locks,
    NozzleCommand,
    VehicleParams,
    normalize_angle,
)
from ..kinematics.svpn_kinematics import MOUNT_SIGNS, thrust_directions

logger = get_logger("Allocation", "allocation.log")

RECONSTRUCTION_TOLERANCE = 1.0e-10
# Боковая сила, ниже которой азимут сопла не меняется, Н
LATERAL_DEADBAND = 1.0e-9


def skew(vector: Sequence[float]) -> np.ndarray:
    """Матрица векторного произведения: skew(d) @ f = d × f"""
    x, y, z = vector
    return np.array([
        [0.0, -z, y],
        [z, 0.0, -x],
        [-y, x, 0.0],
    ])


def equivalent_arms(lever: float, planar_arm: float) -> np.ndarray:
    """Плечи сопел до эквивалентных точек приложения тяги, (4, 3)"""
    return np.array([[sx * planar_arm, sy * planar_arm, lever] for sx, sy in MOUNT_SIGNS])


##########
## МАТРИЦА РАСПРЕДЕЛЕНИЯ ##
##########

def assemble_allocation(lever: float, planar_arm: float) -> np.ndarray:
    """
    Description:
    ---------------
        Матрица A (6x12): [F; M] = A·[F_1; F_2; F_3; F_4]. Строки сил
        суммируют компоненты, строки моментов - d_i × F_i c d_i = (±c, ±c, a).
    """
    matrix = np.zeros((6, 12))
    for i, arm in enumerate(equivalent_arms(lever, planar_arm)):
        columns = slice(3 * i, 3 * i + 3)
        matrix[0:3, columns] = np.eye(3)
        matrix[3:6, columns] = skew(arm)
    return matrix


def check_allocation(
    matrix: np.ndarray,
    lever: float,
    planar_arm: float,
    condition_limit: float = 1.0e8,
) -> AllocationMatrix:
    """
    Description:
    ---------------
        Проверяет ранг и обусловленность A и считает A⁺ = Aᵀ(AAᵀ)⁻¹.

    Raises:
    ---------------
        ConditioningError: rank(A) < 6, AAᵀ плохо обусловлена или
            A·A⁺ отличается от I₆
    """
    rank = int(np.linalg.matrix_rank(matrix))
    gram = matrix @ matrix.T
    condition_number = float(np.linalg.cond(gram))
    if rank < 6 or not math.isfinite(condition_number) or condition_number > condition_limit:
        raise ConditioningError(
            f"матрица распределения вырождена: rank={rank}, cond(AAᵀ)={condition_number:.3e}"
        )

    # (AAᵀ)⁻¹A симметрична по построению, A⁺ - ее транспонирование
    pseudo_inverse = np.linalg.solve(gram, matrix).T
    residual = float(np.abs(matrix @ pseudo_inverse - np.eye(6)).max())
    if residual > RECONSTRUCTION_TOLERANCE:
        raise ConditioningError(f"A·A⁺ отличается от I₆ на {residual:.3e}")

    return AllocationMatrix(
        matrix=matrix,
        pseudo_inverse=pseudo_inverse,
        lever=lever,
        planar_arm=planar_arm,
        condition_number=condition_number,
    )


def build_allocation(params: VehicleParams, condition_limit: float = 1.0e8) -> AllocationMatrix:
    """
    Description:
    ---------------
        Строит матрицу распределения по параметрам аппарата:
        a = 0.5135·s, c = (√2/2)·l.

    Args:
    ---------------
        params: Параметры аппарата
        condition_limit: Допустимое число обусловленности AAᵀ

    Returns:
    ---------------
        AllocationMatrix: A и A⁺

    Raises:
    ---------------
        ConditioningError: Вырожденная геометрия
    """
    lever = params.equivalent_lever
    planar_arm = params.planar_arm
    allocation = check_allocation(
        assemble_allocation(lever, planar_arm), lever, planar_arm, condition_limit
    )
    logger.info(
        f"Матрица распределения построена: rank=6, "
        f"cond(AAᵀ)={allocation.condition_number:.3f}, a={lever:.5f} м, c={planar_arm:.5f} м"
    )
    return allocation


def allocate(wrench: BodyWrench, allocation: AllocationMatrix) -> np.ndarray:
    """Силы сопел наименьшей нормы: x = A⁺·w (12)"""
    return allocation.pseudo_inverse @ wrench.as_array()


##########
## МИКШЕРЫ ##
##########

def soft_mixer(
    force: Sequence[float],
    params: VehicleParams,
    previous_beta: float = 0.0,
) -> NozzleCommand:
    """
    Description:
    ---------------
        Обращает вектор тяги сопла в (alpha, beta, omega). При нулевой боковой
        силе азимут не меняется. alpha и omega ограничиваются, факт
        ограничения записывается в флаги команды.

    Args:
    ---------------
        force: Сила сопла в связанной СК, Н
        params: Параметры аппарата
        previous_beta: Предыдущий азимут, рад

    Returns:
    ---------------
        NozzleCommand: Команда сопла

    Raises:
    ---------------
        DomainError: Нечисловая сила
        InfeasibleError: F_z <= 0 (сопло не может тянуть)
    """
    fx, fy, fz = (float(v) for v in force)
    if not all(math.isfinite(v) for v in (fx, fy, fz)):
        raise DomainError(f"нечисловая сила сопла: {(fx, fy, fz)}")
    if fz <= 0.0:
        raise InfeasibleError(f"сопло не создает тягу F_z={fz:.6g} Н")

    lateral = math.hypot(fx, fy)
    alpha = math.atan2(lateral, fz)
    if lateral <= LATERAL_DEADBAND:
        beta = normalize_angle(previous_beta)
    else:
        beta = normalize_angle(math.atan2(fy, fx))
    omega = math.sqrt(math.sqrt(fx * fx + fy * fy + fz * fz) / params.thrust_coefficient)

    alpha_clamped = alpha > params.alpha_max
    if alpha_clamped:
        alpha = params.alpha_max
    omega_clamped = omega < params.omega_min or omega > params.omega_max
    omega = min(max(omega, params.omega_min), params.omega_max)

    return NozzleCommand(
        alpha=alpha,
        beta=beta,
        omega=omega,
        alpha_clamped=alpha_clamped,
        omega_clamped=omega_clamped,
    )


def symmetric_locks(bend_angle: float) -> Locks:
    """
    Description:
    ---------------
        Зеркально-симметричная фиксация: сопла со стороны -y изогнуты к +y,
        со стороны +y - к -y (как при захвате трубы вдоль оси X).
    """
    half_pi = 0.5 * math.pi
    betas = (half_pi, half_pi, 3.0 * half_pi, 3.0 * half_pi)
    return tuple(LockedAngles(alpha=bend_angle, beta=beta) for beta in betas)


def effectiveness_matrix(locks: Locks, params: VehicleParams) -> np.ndarray:
    """
    Description:
    ---------------
        Матрица E (4x4) от тяг T_i к (F_z, M_x, M_y, M_z) при фиксированных
        направлениях сопел и линеаризованной модели моментов.
    """
    alphas = np.array([lock.alpha for lock in locks])
    betas = np.array([lock.beta for lock in locks])
    directions = thrust_directions(alphas, betas)
    arms = equivalent_arms(params.equivalent_lever, params.planar_arm)
    moments = np.cross(arms, directions)
    return np.vstack([directions[:, 2], moments.T])


def effectiveness_determinant(locks: Locks, params: VehicleParams) -> float:
    return float(np.linalg.det(effectiveness_matrix(locks, params)))


def underactuated_mixer(
    force_z: float,
    moment: Sequence[float],
    locks: Locks,
    params: VehicleParams,
    strict: bool = True,
    det_threshold: float = 1.0e-9,
) -> Tuple[NozzleCommand, ...]:
    """
    Description:
    ---------------
        Микшер режима захвата: при зафиксированных углах решает E·T = (F_z, M)
        относительно тяг и переводит их в скорости вращения ω = √(T/c_t).

    Args:
    ---------------
        force_z: Требуемая вертикальная сила в связанной СК, Н
        moment: Требуемый момент, Н·м
        locks: Зафиксированные углы четырех сопел
        params: Параметры аппарата
        strict: Отрицательная тяга - ошибка; иначе обнуляется с флагом
        det_threshold: Порог |det E|

    Returns:
    ---------------
        Tuple[NozzleCommand, ...]: Команды сопел

    Raises:
    ---------------
        SingularConfigError: |det E| ниже порога
        InfeasibleError: Требуется отрицательная тяга (strict)
    """
    matrix = effectiveness_matrix(locks, params)
    determinant = float(np.linalg.det(matrix))
    if abs(determinant) < det_threshold:
        raise SingularConfigError(
            f"зафиксированная конфигурация неуправляема: |det E|={abs(determinant):.3e}"
        )

    demand = np.array([force_z, *moment], dtype=float)
    thrusts = np.linalg.solve(matrix, demand)

    commands: List[NozzleCommand] = []
    for lock, thrust in zip(locks, thrusts):
        infeasible = thrust < 0.0
        if infeasible and strict:
            raise InfeasibleError(f"требуется отрицательная тяга {thrust:.6g} Н")
        omega = math.sqrt(max(float(thrust), 0.0) / params.thrust_coefficient)
        omega_clamped = omega < params.omega_min or omega > params.omega_max
        commands.append(NozzleCommand(
            alpha=lock.alpha,
            beta=lock.beta,
            omega=min(max(omega, params.omega_min), params.omega_max),
            omega_clamped=omega_clamped,
            infeasible=bool(infeasible),
        ))
    return tuple(commands)


def realized_wrench(
    commands: Sequence[NozzleCommand],
    params: VehicleParams,
    allocation: Optional[AllocationMatrix] = None,
) -> np.ndarray:
    """Воздействие, которое команды создают по линеаризованной модели (6)"""
    alphas = np.array([cmd.alpha for cmd in commands])
    betas = np.array([cmd.beta for cmd in commands])
    thrusts = params.thrust_coefficient * np.array([cmd.omega for cmd in commands]) ** 2
    forces = (thrusts[:, None] * thrust_directions(alphas, betas)).reshape(12)
    if allocation is None:
        matrix = assemble_allocation(params.equivalent_lever, params.planar_arm)
    else:
        matrix = allocation.matrix
    return matrix @ forces
