import json
import os
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..core.errors import ConfigError
from ..core.logging_setup import get_logger
from ..core.models import (
    ControlSettings,
    ModeGains,
    Scenario,
    SimulationSettings,
    VehicleParams,
)
from ..sim.sim_engine import default_scenarios

logger = get_logger("CLI", "cli.log")


class OutputSettings(BaseModel):
    """Параметры вывода"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    directory: str = "output"
    format: Literal["csv"] = "csv"
    decimation: int = Field(1, ge=1)


class ConfigDocument(BaseModel):
    """
    Description:
    ---------------
        Документ конфигурации (JSON). Единицы: м, кг, с, рад/с; углы в
        полях *_deg - в градусах. Неизвестные ключи отклоняются.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    vehicle: VehicleParams = VehicleParams()
    gains: ModeGains = ModeGains()
    control: ControlSettings = ControlSettings()
    simulation: SimulationSettings = SimulationSettings()
    scenarios: Dict[str, Scenario] = Field(default_factory=default_scenarios)
    output: OutputSettings = OutputSettings()


def defaulted_fields(model: BaseModel, prefix: str = "") -> List[str]:
    """Пути полей, значения которых взяты по умолчанию"""
    paths = []
    for name in type(model).model_fields:
        path = f"{prefix}{name}"
        value = getattr(model, name)
        if name not in model.model_fields_set:
            paths.append(path)
        elif isinstance(value, BaseModel):
            paths.extend(defaulted_fields(value, f"{path}."))
        elif isinstance(value, dict):
            for key, item in value.items():
                if isinstance(item, BaseModel):
                    paths.extend(defaulted_fields(item, f"{path}.{key}."))
    return paths


def _format_validation_error(path: str, error: ValidationError) -> str:
    problems = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"])
        problems.append(f"{location}: {item['msg']}")
    return f"{path}: " + "; ".join(problems)


def parse_config(text: str, source: str = "<config>") -> ConfigDocument:
    """
    Description:
    ---------------
        Разбирает JSON-документ конфигурации и сообщает о полях по умолчанию.

    Raises:
    ---------------
        ConfigError: Синтаксическая ошибка (с файлом, строкой и столбцом)
            или ошибка проверки (с путями полей)
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise ConfigError(f"{source}:{error.lineno}:{error.colno}: {error.msg}") from error
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: ожидается объект JSON на верхнем уровне")

    try:
        document = ConfigDocument.model_validate(data)
    except ValidationError as error:
        raise ConfigError(_format_validation_error(source, error)) from error

    for path in defaulted_fields(document):
        logger.info(f"Конфигурация {source}: поле {path} не задано, используется значение по умолчанию")
    return document


def load_config(path: Optional[str] = None) -> ConfigDocument:
    """
    Description:
    ---------------
        Загружает конфигурацию из файла. Без пути - профиль по умолчанию.

    Args:
    ---------------
        path: Путь к JSON-файлу

    Returns:
    ---------------
        ConfigDocument: Проверенная конфигурация

    Raises:
    ---------------
        ConfigError: Файл не читается или содержит ошибки
    """
    if not path:
        logger.info("Файл конфигурации не задан, используется профиль по умолчанию")
        return ConfigDocument()
    if not os.path.isfile(path):
        raise ConfigError(f"{path}: файл конфигурации не найден")
    with open(path, "r", encoding="utf-8") as file:
        text = file.read()
    return parse_config(text, path)


def dump_config(document: ConfigDocument) -> str:
    """Сериализует конфигурацию в JSON"""
    return json.dumps(document.model_dump(mode="json"), indent=2, ensure_ascii=False)
