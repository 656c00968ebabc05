from typing import Mapping

import numpy as np

from ..core.models import Metrics, wrap_angle

# Окно оценки высоты после переключения режима, с
SWITCH_WINDOW = 2.0


def settling_time(t: np.ndarray, error: np.ndarray, band: float) -> float:
    """Время, после которого ошибка не выходит из полосы band"""
    outside = np.flatnonzero(error > band)
    if outside.size == 0:
        return 0.0
    last = outside[-1]
    if last + 1 >= t.size:
        return float(t[-1] - t[0])
    return float(t[last + 1] - t[0])


def compute_metrics(
    columns: Mapping[str, np.ndarray],
    metrics_start: float = 0.0,
    settling_band: float = 0.05,
) -> Metrics:
    """
    Description:
    ---------------
        Показатели качества по столбцам журнала (в памяти или из CSV).
        RMSE и максимальная ошибка положения считаются с metrics_start,
        остальные показатели - по всему журналу.

    Args:
    ---------------
        columns: Столбцы t, x, y, z, x_d, y_d, z_d, phi, theta, psi, mode, clamp_1..4
        metrics_start: Начало окна установившегося режима, с
        settling_band: Полоса установления, м

    Returns:
    ---------------
        Metrics: Показатели качества
    """
    t = np.asarray(columns["t"], dtype=float)
    if t.size == 0:
        return Metrics(
            rmse_x=0.0, rmse_y=0.0, rmse_z=0.0, max_position_error=0.0,
            max_abs_roll=0.0, max_abs_pitch=0.0, yaw_drift=0.0, settling_time=0.0,
            mode_switch_altitude_deviation=0.0, clamp_duty_fraction=0.0,
            metrics_start=metrics_start, settling_band=settling_band,
        )

    errors = np.stack([
        np.asarray(columns[axis], dtype=float) - np.asarray(columns[f"{axis}_d"], dtype=float)
        for axis in ("x", "y", "z")
    ], axis=1)
    error_norm = np.linalg.norm(errors, axis=1)

    window = t >= metrics_start
    if not window.any():
        window = np.ones_like(t, dtype=bool)
    rmse = np.sqrt(np.mean(errors[window] ** 2, axis=0))

    psi = np.asarray(columns["psi"], dtype=float)
    mode = np.asarray(columns["mode"])
    switches = np.flatnonzero(mode[1:] != mode[:-1]) + 1
    altitude_error = np.abs(errors[:, 2])
    switch_deviation = 0.0
    for index in switches:
        in_window = (t >= t[index]) & (t <= t[index] + SWITCH_WINDOW)
        switch_deviation = max(switch_deviation, float(altitude_error[in_window].max()))

    clamps = np.stack([np.asarray(columns[f"clamp_{i}"]) for i in (1, 2, 3, 4)], axis=1)
    clamped = np.any(clamps != 0, axis=1)

    return Metrics(
        rmse_x=float(rmse[0]),
        rmse_y=float(rmse[1]),
        rmse_z=float(rmse[2]),
        max_position_error=float(error_norm[window].max()),
        max_abs_roll=float(np.abs(np.asarray(columns["phi"], dtype=float)).max()),
        max_abs_pitch=float(np.abs(np.asarray(columns["theta"], dtype=float)).max()),
        yaw_drift=abs(wrap_angle(float(psi[-1] - psi[0]))),
        settling_time=settling_time(t, error_norm, settling_band),
        mode_switch_altitude_deviation=switch_deviation,
        clamp_duty_fraction=float(np.mean(clamped)),
        metrics_start=metrics_start,
        settling_band=settling_band,
    )
