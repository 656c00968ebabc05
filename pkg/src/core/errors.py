from typing import Optional


class FlexbeeError(Exception):
    """Базовая ошибка симулятора"""
    category = "internal"

    def __init__(self, message: str, timestamp: Optional[float] = None):
        super().__init__(message)
        self.message = message
        self.timestamp = timestamp

    def __str__(self) -> str:
        if self.timestamp is None:
            return self.message
        return f"[t={self.timestamp:.4f} c] {self.message}"


class DomainError(FlexbeeError, ValueError):
    """Аргумент вне области определения"""
    category = "domain"


class RealizabilityError(FlexbeeError):
    """Длины тросов задают изгиб больше alpha_max"""
    category = "realizability"


class SingularityError(FlexbeeError):
    """Вырождение кинематики углов Эйлера (|theta| >= 90°)"""
    category = "singularity"


class ConditioningError(FlexbeeError):
    """Плохо обусловленная матрица распределения"""
    category = "conditioning"


class InfeasibleError(FlexbeeError):
    """Требование не реализуется соплом (тяга не может тянуть)"""
    category = "infeasible"


class SingularConfigError(FlexbeeError):
    """Зафиксированные углы не дают управляемости по всем осям"""
    category = "singular_config"


class UnreachableError(FlexbeeError):
    """Цель захвата вне досягаемости сопел"""
    category = "unreachable"


class SwitchRejectedError(FlexbeeError):
    """Переключение режима отклонено"""
    category = "switch_rejected"


class DivergenceError(FlexbeeError):
    """Расходимость состояния (авария)"""
    category = "divergence"


class ConfigError(FlexbeeError):
    """Ошибка конфигурации"""
    category = "config"
