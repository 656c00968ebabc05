import json
import os
from typing import Dict

import numpy as np
import pandas as pd

from ..core.errors import DomainError
from ..core.models import Metrics
from ..sim.trajectory import CLAMP_COLUMNS, CSV_COLUMNS, MODE_CODES, TrajectoryLog

# Версия схемы CSV, первая строка файла
CSV_SCHEMA = "# schema: flexbee-trajectory-log/1"
FLOAT_FORMAT = "%.9g"


def export_log(log: TrajectoryLog, path: str, format: str = "csv", decimation: int = 1) -> None:
    """
    Description:
    ---------------
        Записывает журнал в CSV: строка версии схемы, фиксированная шапка,
        числа с 9 значащими цифрами. Ошибки ввода-вывода не перехватываются.

    Args:
    ---------------
        log: Журнал траектории
        path: Путь к файлу
        format: Формат (только csv)
        decimation: Записывать каждый N-й такт
    """
    if format != "csv":
        raise DomainError(f"неподдерживаемый формат журнала: {format}")
    if decimation < 1:
        raise DomainError(f"прореживание должно быть >= 1: {decimation}")
    frame = log.to_frame(decimation)
    with open(path, "w", encoding="utf-8", newline="") as file:
        file.write(CSV_SCHEMA + "\n")
        frame.to_csv(file, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def read_log_csv(path: str) -> Dict[str, np.ndarray]:
    """
    Description:
    ---------------
        Читает CSV журнала обратно в столбцы (режим - числовой код),
        пригодные для compute_metrics.
    """
    frame = pd.read_csv(path, comment="#")
    if list(frame.columns) != CSV_COLUMNS:
        raise DomainError(f"{path}: шапка CSV не совпадает со схемой")
    codes = {kind.value: code for kind, code in MODE_CODES.items()}
    columns = {name: frame[name].to_numpy(dtype=float) for name in CSV_COLUMNS if name != "mode"}
    columns["mode"] = frame["mode"].map(codes).to_numpy(dtype=float)
    for name in CLAMP_COLUMNS:
        columns[name] = frame[name].to_numpy(dtype=int)
    return columns


def export_metrics(metrics: Metrics, path: str) -> None:
    """Записывает показатели в JSON"""
    with open(path, "w", encoding="utf-8") as file:
        json.dump(metrics.model_dump(mode="json"), file, indent=2, sort_keys=True)
        file.write("\n")


def output_paths(directory: str, name: str) -> Dict[str, str]:
    """Пути файлов результата сценария"""
    os.makedirs(directory, exist_ok=True)
    return {
        "log": os.path.join(directory, f"{name}.csv"),
        "metrics": os.path.join(directory, f"{name}_metrics.json"),
    }
