import math
from typing import Sequence

import numpy as np

from ..core.errors import DomainError
from ..core.models import (
    CircleReference,
    GraspPerchReference,
    HoverReference,
    Setpoint6D,
    StepReference,
    Vec3,
    WaypointReference,
)


def _radians(attitude_deg: Sequence[float]) -> Vec3:
    return tuple(math.radians(v) for v in attitude_deg)


def reference_circle(t: float, reference: CircleReference) -> Setpoint6D:
    """
    Description:
    ---------------
        Точка горизонтальной окружности: фаза 0 в center + (radius, 0),
        движение против часовой стрелки в плоскости XY, высота altitude
        над землей (z = -altitude в NED).

    Args:
    ---------------
        t: Время, с
        reference: Параметры окружности

    Returns:
    ---------------
        Setpoint6D: Положение, касательная скорость и ориентация
    """
    if reference.period <= 0.0:
        raise DomainError(f"период окружности должен быть положительным: {reference.period}")
    angular_rate = 2.0 * math.pi / reference.period
    phase = angular_rate * t
    cos_phase, sin_phase = math.cos(phase), math.sin(phase)
    cx, cy = reference.center
    radius = reference.radius
    return Setpoint6D(
        position=(cx + radius * cos_phase, cy + radius * sin_phase, -reference.altitude),
        velocity=(-radius * angular_rate * sin_phase, radius * angular_rate * cos_phase, 0.0),
        attitude=_radians(reference.attitude_deg),
    )


def reference_hover(t: float, reference: HoverReference) -> Setpoint6D:
    return Setpoint6D(position=reference.position, attitude=_radians(reference.attitude_deg))


def reference_step(t: float, reference: StepReference) -> Setpoint6D:
    """Ступенька: до t_step - первые значения, с t_step - вторые"""
    if t < reference.t_step:
        return Setpoint6D(
            position=reference.position_before,
            attitude=_radians(reference.attitude_before_deg),
        )
    return Setpoint6D(
        position=reference.position_after,
        attitude=_radians(reference.attitude_after_deg),
    )


def reference_waypoints(t: float, reference: WaypointReference) -> Setpoint6D:
    """
    Description:
    ---------------
        Линейная интерполяция между путевыми точками с прямой связью по
        скорости на отрезке. До первой и после последней точки - зависание.
    """
    waypoints = reference.waypoints
    if t <= waypoints[0].t:
        first = waypoints[0]
        return Setpoint6D(position=first.position, attitude=_radians(first.attitude_deg))
    if t >= waypoints[-1].t:
        last = waypoints[-1]
        return Setpoint6D(position=last.position, attitude=_radians(last.attitude_deg))

    times = [w.t for w in waypoints]
    index = int(np.searchsorted(times, t, side="right")) - 1
    start, end = waypoints[index], waypoints[index + 1]
    span = end.t - start.t
    fraction = (t - start.t) / span
    p0, p1 = np.array(start.position), np.array(end.position)
    a0, a1 = np.array(start.attitude_deg), np.array(end.attitude_deg)
    return Setpoint6D(
        position=tuple(float(v) for v in p0 + fraction * (p1 - p0)),
        velocity=tuple(float(v) for v in (p1 - p0) / span),
        attitude=_radians(a0 + fraction * (a1 - a0)),
    )


def reference_at(reference, t: float) -> Setpoint6D:
    """Уставка для любого генератора, кроме сценария захвата"""
    if isinstance(reference, CircleReference):
        return reference_circle(t, reference)
    if isinstance(reference, HoverReference):
        return reference_hover(t, reference)
    if isinstance(reference, StepReference):
        return reference_step(t, reference)
    if isinstance(reference, WaypointReference):
        return reference_waypoints(t, reference)
    if isinstance(reference, GraspPerchReference):
        raise DomainError("уставки сценария захвата строит grasp_perch_script")
    raise DomainError(f"неизвестный генератор уставок: {type(reference).__name__}")
