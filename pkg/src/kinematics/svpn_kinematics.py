import math
from typing import Optional, Tuple

import numpy as np

from ..core.errors import DomainError, RealizabilityError
from ..core.logging_setup import get_logger
from ..core.models import (
    CableLengths,
    CurvatureConfig,
    NozzleForceMoment,
    NozzleGeometry,
    TipPose,
    VehicleParams,
    normalize_angle,
)

logger = get_logger("Kinematics", "kinematics.log")

SQRT3 = math.sqrt(3.0)

# Фазы тросов 1..3 относительно азимута изгиба
CABLE_PHASES = (0.0, -2.0 * math.pi / 3.0, 2.0 * math.pi / 3.0)

# Ниже порога сопло считается прямым и поза считается рядом
STRAIGHT_THRESHOLD = 1.0e-6

DEFAULT_ALPHA_MAX = math.radians(45.0)
ALPHA_TOLERANCE = 1.0e-12

# Знаки смещений сопел 1..4 в плоскости рамы: (-c,-c), (c,-c), (c,c), (-c,c)
MOUNT_SIGNS = ((-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0))


##########
## ГЕОМЕТРИЯ ##
##########

def nozzle_geometry(index: int, params: VehicleParams) -> NozzleGeometry:
    """
    Description:
    ---------------
        Геометрия сопла с номером index (1..4) для параметров аппарата.

    Args:
    ---------------
        index: Номер сопла
        params: Параметры аппарата

    Returns:
    ---------------
        NozzleGeometry: Геометрия сопла

    Raises:
    ---------------
        DomainError: Номер сопла вне 1..4
    """
    if index not in (1, 2, 3, 4):
        raise DomainError(f"номер сопла должен быть 1..4, получено {index}")
    sign_x, sign_y = MOUNT_SIGNS[index - 1]
    c = params.planar_arm
    return NozzleGeometry(
        index=index,
        cable_offset_radius=params.cable_offset,
        nominal_axial_length=params.nozzle_length,
        max_axial_length=params.s_max,
        mount_offset_xy=(sign_x * c, sign_y * c),
        azimuth_offset=(index - 1) * math.pi / 2.0,
    )


def nozzle_geometries(params: VehicleParams) -> Tuple[NozzleGeometry, ...]:
    """Геометрия всех четырех сопел"""
    return tuple(nozzle_geometry(i, params) for i in (1, 2, 3, 4))


##########
## ПРОСТРАНСТВО ПРИВОДОВ <-> ПРОСТРАНСТВО КОНФИГУРАЦИЙ ##
##########

def drive_to_config(
    cables: CableLengths,
    geom: NozzleGeometry,
    alpha_max: float = DEFAULT_ALPHA_MAX,
) -> CurvatureConfig:
    """
    Description:
    ---------------
        Переводит длины тросов в параметры дуги (alpha, beta, L).
        Дискриминант считается через попарные разности длин, что не
        теряет точность при малых изгибах.

    Args:
    ---------------
        cables: Длины тросов
        geom: Геометрия сопла
        alpha_max: Предельный угол изгиба, рад

    Returns:
    ---------------
        CurvatureConfig: Конфигурация сопла

    Raises:
    ---------------
        DomainError: Длина троса <= 0 или больше s_max
        RealizabilityError: Изгиб больше alpha_max
    """
    m1, m2, m3 = cables.m1, cables.m2, cables.m3
    lengths = (m1, m2, m3)
    if not all(math.isfinite(m) for m in lengths) or min(lengths) <= 0.0:
        raise DomainError(f"длины тросов должны быть положительными: {lengths}")
    if max(lengths) > geom.max_axial_length:
        raise DomainError(
            f"длина троса превышает s_max={geom.max_axial_length}: {lengths}"
        )

    discriminant = 0.5 * ((m1 - m2) ** 2 + (m1 - m3) ** 2 + (m2 - m3) ** 2)
    arc_length = (m1 + m2 + m3) / 3.0
    bend_angle = 2.0 * math.sqrt(discriminant) / (3.0 * geom.cable_offset_radius)

    if bend_angle > alpha_max + ALPHA_TOLERANCE:
        raise RealizabilityError(
            f"изгиб {math.degrees(bend_angle):.3f}° больше alpha_max "
            f"{math.degrees(alpha_max):.3f}° для сопла {geom.index}"
        )

    if discriminant == 0.0:
        return CurvatureConfig(bend_angle=0.0, bend_azimuth=0.0, arc_length=arc_length)

    local_azimuth = math.atan2(m2 + m3 - 2.0 * m1, SQRT3 * (m2 - m3))
    return CurvatureConfig(
        bend_angle=bend_angle,
        bend_azimuth=normalize_angle(local_azimuth + geom.azimuth_offset),
        arc_length=arc_length,
    )


def config_to_drive(config: CurvatureConfig, geom: NozzleGeometry) -> CableLengths:
    """
    Description:
    ---------------
        Длины тросов для заданной конфигурации: m_k = L - alpha*h*sin(beta' + phase_k),
        beta' = beta - azimuth_offset. Прямое сопло дает (L, L, L).

    Raises:
    ---------------
        DomainError: Длина троса <= 0 или больше s_max
    """
    local_azimuth = config.bend_azimuth - geom.azimuth_offset
    shortening = config.bend_angle * geom.cable_offset_radius
    lengths = [
        config.arc_length - shortening * math.sin(local_azimuth + phase)
        for phase in CABLE_PHASES
    ]
    if min(lengths) <= 0.0 or max(lengths) > geom.max_axial_length:
        raise DomainError(
            f"конфигурация (alpha={config.bend_angle:.6f}, L={config.arc_length:.6f}) "
            f"не реализуется тросами сопла {geom.index}: {lengths}"
        )
    return CableLengths(m1=lengths[0], m2=lengths[1], m3=lengths[2])


##########
## ПРОСТРАНСТВО КОНФИГУРАЦИЙ -> ПРОСТРАНСТВО ЗАДАЧ ##
##########

def tip_rotation(bend_angle: float, bend_azimuth: float) -> np.ndarray:
    """Q = Rz(beta)·Ry(alpha)·Rz(-beta)"""
    cb, sb = math.cos(bend_azimuth), math.sin(bend_azimuth)
    sa = math.sin(bend_angle)
    ca = math.cos(bend_angle)
    versine = 2.0 * math.sin(0.5 * bend_angle) ** 2
    return np.array([
        [1.0 - cb * cb * versine, -cb * sb * versine, cb * sa],
        [-cb * sb * versine, 1.0 - sb * sb * versine, sb * sa],
        [-cb * sa, -sb * sa, ca],
    ])


def tip_translation(bend_angle: float, bend_azimuth: float, arc_length: float) -> np.ndarray:
    """Положение центра торца в базовой СК сопла"""
    cb, sb = math.cos(bend_azimuth), math.sin(bend_azimuth)
    if bend_angle < STRAIGHT_THRESHOLD:
        half_chord = 0.5 * arc_length * bend_angle
        return np.array([
            half_chord * cb,
            half_chord * sb,
            arc_length * (1.0 - bend_angle * bend_angle / 6.0),
        ])
    radius = arc_length / bend_angle
    versine = 2.0 * math.sin(0.5 * bend_angle) ** 2
    return np.array([
        radius * cb * versine,
        radius * sb * versine,
        radius * math.sin(bend_angle),
    ])


def config_to_pose(config: CurvatureConfig) -> TipPose:
    """
    Description:
    ---------------
        Поза торца сопла: поворот Q и смещение P. Около alpha = 0
        смещение считается рядом, так что 0/0 не возникает.

    Args:
    ---------------
        config: Конфигурация сопла

    Returns:
    ---------------
        TipPose: Поза торца
    """
    rotation = tip_rotation(config.bend_angle, config.bend_azimuth)
    translation = tip_translation(config.bend_angle, config.bend_azimuth, config.arc_length)
    return TipPose(
        rotation=rotation,
        translation=translation,
        x_end=float(translation[0]),
        y_end=float(translation[1]),
    )


def tip_translations(alphas: np.ndarray, betas: np.ndarray, arc_length: float) -> np.ndarray:
    """Положения торцов для массива конфигураций, (n, 3)"""
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    cb, sb = np.cos(betas), np.sin(betas)
    small = alphas < STRAIGHT_THRESHOLD
    radius = arc_length / np.where(small, 1.0, alphas)
    versine = 2.0 * np.sin(0.5 * alphas) ** 2
    half_chord = 0.5 * arc_length * alphas
    px = np.where(small, half_chord * cb, radius * cb * versine)
    py = np.where(small, half_chord * sb, radius * sb * versine)
    pz = np.where(small, arc_length * (1.0 - alphas * alphas / 6.0), radius * np.sin(alphas))
    return np.stack([px, py, pz], axis=-1)


##########
## ТЯГА И МОМЕНТ ##
##########

def thrust_direction(bend_angle: float, bend_azimuth: float) -> np.ndarray:
    """Единичный вектор тяги: третий столбец Q"""
    sa = math.sin(bend_angle)
    return np.array([
        math.cos(bend_azimuth) * sa,
        math.sin(bend_azimuth) * sa,
        math.cos(bend_angle),
    ])


def thrust_directions(alphas: np.ndarray, betas: np.ndarray) -> np.ndarray:
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    sa = np.sin(alphas)
    return np.stack([np.cos(betas) * sa, np.sin(betas) * sa, np.cos(alphas)], axis=-1)


def nozzle_thrust(config: CurvatureConfig, omega: float, thrust_coefficient: float) -> np.ndarray:
    """
    Description:
    ---------------
        Вектор тяги сопла в связанной СК: T·(cosβ·sinα, sinβ·sinα, cosα),
        T = c_t·omega².

    Raises:
    ---------------
        DomainError: omega < 0
    """
    if omega < 0.0:
        raise DomainError(f"скорость вращения не может быть отрицательной: {omega}")
    thrust = thrust_coefficient * omega * omega
    return thrust * thrust_direction(config.bend_angle, config.bend_azimuth)


def application_point(geom: NozzleGeometry, config: CurvatureConfig) -> np.ndarray:
    """Точная точка приложения тяги: смещение сопла плюс P"""
    translation = tip_translation(config.bend_angle, config.bend_azimuth, config.arc_length)
    return np.array([
        geom.mount_offset_xy[0] + translation[0],
        geom.mount_offset_xy[1] + translation[1],
        translation[2],
    ])


def nozzle_moment_exact(force: np.ndarray, geom: NozzleGeometry, config: CurvatureConfig) -> np.ndarray:
    """
    Description:
    ---------------
        Точный момент сопла M = d × F относительно центра масс,
        d - центр торца сопла в связанной СК (z вниз).

    Args:
    ---------------
        force: Сила сопла в связанной СК, Н
        geom: Геометрия сопла
        config: Конфигурация сопла

    Returns:
    ---------------
        np.ndarray: Момент, Н·м
    """
    return np.cross(application_point(geom, config), np.asarray(force, dtype=float))


def nozzle_force_moment(
    config: CurvatureConfig,
    omega: float,
    geom: NozzleGeometry,
    thrust_coefficient: float,
    lever: Optional[float] = None,
) -> NozzleForceMoment:
    """
    Description:
    ---------------
        Сила и момент одного сопла. Без lever момент считается от торца,
        с lever - от эквивалентной точки D на оси сопла.
    """
    force = nozzle_thrust(config, omega, thrust_coefficient)
    if lever is None:
        moment = nozzle_moment_exact(force, geom, config)
        point = "tip"
    else:
        arm = np.array([geom.mount_offset_xy[0], geom.mount_offset_xy[1], lever])
        moment = np.cross(arm, force)
        point = "equivalent"
    return NozzleForceMoment(
        force=tuple(float(v) for v in force),
        moment=tuple(float(v) for v in moment),
        application_point=point,
    )
