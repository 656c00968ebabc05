from typing import Optional, Sequence

import numpy as np

from ..core.errors import DomainError
from ..core.models import LoopGains


class PIDLoop:
    """
    Description:
    ---------------
        Трехосный ПИД-контур с ограничением интегратора и насыщением выхода.
        Интегратор обновляется до вычисления выхода, затем ограничивается.
        При back_calculation > 0 интеграл дополнительно стягивается на
        величину срезанного насыщением выхода.

    Args:
    ---------------
        name: Имя контура (для телеметрии и логов)
        gains: Коэффициенты и ограничения

    Examples:
    ---------------
        >>> loop = PIDLoop("velocity", LoopGains(kp=(2.0, 2.0, 2.0)))
        >>> loop.step([0.5, 0.0, 0.0], dt=0.01)
        array([1., 0., 0.])
    """

    def __init__(self, name: str, gains: LoopGains):
        self.name = name
        self.gains = gains
        self._kp = np.array(gains.kp, dtype=float)
        self._ki = np.array(gains.ki, dtype=float)
        self._kd = np.array(gains.kd, dtype=float)
        self._integrator_limit = np.array(gains.integrator_limit, dtype=float)
        self._output_limit = np.array(gains.output_limit, dtype=float)
        self.reset()

    def reset(self) -> None:
        """Сбрасывает интеграл, память производной и последний выход"""
        self.integral = np.zeros(3)
        self.previous_error: Optional[np.ndarray] = None
        self.last_error = np.zeros(3)
        self.last_output = np.zeros(3)
        self.saturated = np.zeros(3, dtype=bool)

    def _derivative(self, error: np.ndarray, error_rate, dt: float) -> np.ndarray:
        if error_rate is not None:
            return np.asarray(error_rate, dtype=float)
        if self.previous_error is None:
            return np.zeros(3)
        return (error - self.previous_error) / dt

    def step(
        self,
        error: Sequence[float],
        dt: float,
        error_rate: Optional[Sequence[float]] = None,
    ) -> np.ndarray:
        """
        Description:
        ---------------
            Один шаг контура: u = Kp·e + Ki·∫e + Kd·ė.

        Args:
        ---------------
            error: Ошибка по трем осям
            dt: Шаг контура, с
            error_rate: Производная ошибки; None - конечная разность

        Returns:
        ---------------
            np.ndarray: Выход контура после насыщения

        Raises:
        ---------------
            DomainError: dt <= 0
        """
        if dt <= 0.0:
            raise DomainError(f"шаг контура {self.name} должен быть положительным: {dt}")
        error = np.asarray(error, dtype=float)
        rate = self._derivative(error, error_rate, dt)

        limit = self._integrator_limit
        self.integral = np.clip(self.integral + error * dt, -limit, limit)

        raw = self._kp * error + self._ki * self.integral + self._kd * rate
        output = np.clip(raw, -self._output_limit, self._output_limit)

        if self.gains.back_calculation > 0.0:
            unwind = self.gains.back_calculation * (output - raw) * dt
            self.integral = np.clip(self.integral + unwind, -limit, limit)

        self.saturated = output != raw
        self.previous_error = error
        self.last_error = error
        self.last_output = output
        return output

    def reseed(
        self,
        output: Sequence[float],
        error: Sequence[float],
        error_rate: Optional[Sequence[float]] = None,
    ) -> np.ndarray:
        """
        Description:
        ---------------
            Безударный переход: подбирает интеграл так, чтобы при ошибке error
            контур выдавал output. По осям с Ki = 0 интеграл обнуляется.

        Returns:
        ---------------
            np.ndarray: Выход, который контур выдаст при этой ошибке
        """
        output = np.asarray(output, dtype=float)
        error = np.asarray(error, dtype=float)
        rate = np.zeros(3) if error_rate is None else np.asarray(error_rate, dtype=float)

        residual = output - self._kp * error - self._kd * rate
        has_integral = self._ki > 0.0
        integral = np.divide(residual, self._ki, out=np.zeros(3), where=has_integral)
        self.integral = np.clip(integral, -self._integrator_limit, self._integrator_limit)

        self.previous_error = error
        self.last_error = error
        raw = self._kp * error + self._ki * self.integral + self._kd * rate
        self.last_output = np.clip(raw, -self._output_limit, self._output_limit)
        return self.last_output


def pid_step(
    loop: PIDLoop,
    error: Sequence[float],
    error_rate: Optional[Sequence[float]],
    dt: float,
) -> np.ndarray:
    """Шаг контура loop (функциональная форма)"""
    return loop.step(error, dt, error_rate)
