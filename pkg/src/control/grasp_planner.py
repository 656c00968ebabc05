import math
from typing import Callable, List, Tuple

import numpy as np
from scipy.optimize import bisect

from ..core.errors import UnreachableError
from ..core.logging_setup import get_logger
from ..core.models import (
    CurvatureConfig,
    GraspPhase,
    GraspPlan,
    GraspSettings,
    GraspTarget,
    LockedAngles,
    NozzleCommand,
    TargetKind,
    Vec3,
    VehicleParams,
    normalize_angle,
)
from ..kinematics.svpn_kinematics import config_to_pose, nozzle_geometries

logger = get_logger("GraspPlanner", "grasp_planner.log")

BISECTION_XTOL = 1.0e-13


def _distance_function(target: GraspTarget) -> Callable[[np.ndarray], float]:
    """Расстояние от точки (связанная СК, начало в центре рамы) до оси/центра объекта"""
    depth = target.depth
    if target.kind == TargetKind.TUBE:
        return lambda p: math.hypot(p[1], p[2] - depth)
    if target.kind == TargetKind.PLATE:
        return lambda p: abs(p[1])
    if target.kind == TargetKind.POLE:
        return lambda p: math.hypot(p[0], p[1])
    return lambda p: math.sqrt(p[0] ** 2 + p[1] ** 2 + (p[2] - depth) ** 2)


def contact_azimuths(target: GraspTarget, params: VehicleParams, yaw_twist: float) -> Tuple[float, ...]:
    """
    Description:
    ---------------
        Азимуты изгиба сопел к объекту. Для трубы и пластины сопла гнутся
        поперек оси X к плоскости y = 0. Для шеста и сферы - радиально
        внутрь с поворотом ±yaw_twist (знак чередуется по соплам), иначе
        строка рыскания матрицы E обнуляется.
    """
    azimuths = []
    for geom in nozzle_geometries(params):
        mount_x, mount_y = geom.mount_offset_xy
        if target.kind in (TargetKind.TUBE, TargetKind.PLATE):
            beta = 0.5 * math.pi if mount_y < 0.0 else 1.5 * math.pi
        else:
            twist = yaw_twist if geom.index % 2 == 1 else -yaw_twist
            beta = math.atan2(-mount_y, -mount_x) + twist
        azimuths.append(normalize_angle(beta))
    return tuple(azimuths)


def tip_position(alpha: float, beta: float, mount_xy: Tuple[float, float], arc_length: float) -> np.ndarray:
    """Центр торца сопла в связанной СК"""
    pose = config_to_pose(CurvatureConfig(bend_angle=alpha, bend_azimuth=beta, arc_length=arc_length))
    return np.array([mount_xy[0], mount_xy[1], 0.0]) + pose.translation


def grasp_plan(
    target: GraspTarget,
    params: VehicleParams,
    settings: GraspSettings = GraspSettings(),
) -> GraspPlan:
    """
    Description:
    ---------------
        Планирует захват: предварительный изгиб наружу, подход к точке
        посадки и сведение сопел. Угол сведения каждого сопла находится
        бисекцией так, чтобы центр торца лег на оболочку объекта
        (поверхность, раздутая на радиус торца contact_offset).

    Args:
    ---------------
        target: Объект захвата
        params: Параметры аппарата
        settings: Параметры планировщика

    Returns:
    ---------------
        GraspPlan: Фазы захвата, положения торцов и невязки контакта

    Raises:
    ---------------
        UnreachableError: Объект вне досягаемости сопел
    """
    if target.characteristic_radius > params.s_max:
        raise UnreachableError(
            f"радиус объекта {target.characteristic_radius} м больше s_max={params.s_max} м"
        )

    envelope = target.characteristic_radius + settings.contact_offset
    distance = _distance_function(target)
    arc_length = params.nozzle_length
    azimuths = contact_azimuths(target, params, math.radians(settings.yaw_twist_deg))

    contact_alphas: List[float] = []
    tips: List[Vec3] = []
    residuals: List[float] = []
    for geom, beta in zip(nozzle_geometries(params), azimuths):
        def gap(alpha: float) -> float:
            return distance(tip_position(alpha, beta, geom.mount_offset_xy, arc_length)) - envelope

        gap_straight = gap(0.0)
        gap_bent = gap(params.alpha_max)
        if abs(gap_straight) <= settings.contact_tolerance:
            alpha = 0.0
        elif gap_straight * gap_bent > 0.0:
            raise UnreachableError(
                f"сопло {geom.index} не касается объекта при alpha в [0, "
                f"{params.alpha_max_deg}°]: зазор {gap_straight:.4f}..{gap_bent:.4f} м"
            )
        else:
            alpha = float(bisect(gap, 0.0, params.alpha_max, xtol=BISECTION_XTOL, maxiter=200))

        tip = tip_position(alpha, beta, geom.mount_offset_xy, arc_length)
        contact_alphas.append(alpha)
        tips.append(tuple(float(v) for v in tip))
        residuals.append(abs(distance(tip) - envelope))

    prebend_alpha = min(math.radians(settings.prebend_alpha_deg), params.alpha_max)
    prebend_locks = tuple(
        LockedAngles(alpha=prebend_alpha, beta=beta + math.pi) for beta in azimuths
    )
    contact_locks = tuple(
        LockedAngles(alpha=alpha, beta=beta) for alpha, beta in zip(contact_alphas, azimuths)
    )
    # Фиксация сводится к длинам тросов
    contact_cables = tuple(
        NozzleCommand(alpha=lock.alpha, beta=lock.beta).cable_lengths(geom)
        for lock, geom in zip(contact_locks, nozzle_geometries(params))
    )

    perch = np.array(target.position) - np.array([0.0, 0.0, target.depth])
    approach = perch - np.array([0.0, 0.0, settings.approach_height])
    phases = (
        GraspPhase(name="prebend", locks=prebend_locks),
        GraspPhase(
            name="approach",
            waypoints=[tuple(float(v) for v in approach), tuple(float(v) for v in perch)],
        ),
        GraspPhase(name="converge", locks=contact_locks, dwell=settings.perch_dwell),
    )

    logger.info(
        f"План захвата {target.kind.value} R={target.characteristic_radius} м: "
        f"alpha={[round(math.degrees(a), 3) for a in contact_alphas]}°, "
        f"невязка {max(residuals):.2e} м"
    )
    return GraspPlan(
        target=target,
        phases=phases,
        tip_positions=tuple(tips),
        contact_residuals=tuple(residuals),
        contact_cables=contact_cables,
    )
