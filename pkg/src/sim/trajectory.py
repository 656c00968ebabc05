from typing import Dict, List

import numpy as np
import pandas as pd

from ..core.models import ModeKind, ModeTransition, TelemetryRecord

# Коды режимов в числовом журнале
MODE_CODES = {ModeKind.FULLY_ACTUATED: 0, ModeKind.GRASP_PERCH: 1}
MODE_NAMES = {code: kind.value for kind, code in MODE_CODES.items()}

STATE_COLUMNS = ["x", "y", "z", "vx", "vy", "vz", "phi", "theta", "psi", "p", "q", "r"]
SETPOINT_COLUMNS = ["x_d", "y_d", "z_d", "vx_d", "vy_d", "vz_d", "phi_d", "theta_d", "psi_d"]
WRENCH_COLUMNS = ["Fx_d", "Fy_d", "Fz_d", "Mx_d", "My_d", "Mz_d"]
NOZZLE_COLUMNS = [
    f"{quantity}_{index}"
    for index in (1, 2, 3, 4)
    for quantity in ("alpha", "beta", "omega")
]
CLAMP_COLUMNS = [f"clamp_{index}" for index in (1, 2, 3, 4)]

LOG_COLUMNS = [
    "t", *STATE_COLUMNS, *SETPOINT_COLUMNS, *WRENCH_COLUMNS, "mode", *NOZZLE_COLUMNS, *CLAMP_COLUMNS
]
# Фиксированная шапка CSV
CSV_COLUMNS = [
    "t", "x", "y", "z", "x_d", "y_d", "z_d", "phi", "theta", "psi", "p", "q", "r",
    "mode", *NOZZLE_COLUMNS, *CLAMP_COLUMNS,
]

_INDEX = {name: i for i, name in enumerate(LOG_COLUMNS)}
_STATE_SLICE = slice(_INDEX["x"], _INDEX["r"] + 1)
_SETPOINT_SLICE = slice(_INDEX["x_d"], _INDEX["psi_d"] + 1)
_WRENCH_SLICE = slice(_INDEX["Fx_d"], _INDEX["Mz_d"] + 1)
_NOZZLE_SLICE = slice(_INDEX["alpha_1"], _INDEX["omega_4"] + 1)
_CLAMP_SLICE = slice(_INDEX["clamp_1"], _INDEX["clamp_4"] + 1)


class TrajectoryLog:
    """
    Description:
    ---------------
        Журнал траектории: одна строка на такт симуляции (время, состояние,
        уставка, требуемое воздействие, режим, команды сопел, флаги
        ограничений). Хранится в заранее выделенном массиве.

    Args:
    ---------------
        name: Имя сценария
        dt: Такт, с
        capacity: Число тактов
    """

    def __init__(self, name: str, dt: float, capacity: int):
        self.name = name
        self.dt = dt
        self._data = np.zeros((capacity, len(LOG_COLUMNS)))
        self._size = 0
        self.transitions: List[ModeTransition] = []

    def __len__(self) -> int:
        return self._size

    def append(self, t: float, state: np.ndarray, record: TelemetryRecord) -> None:
        """Добавляет строку такта"""
        row = self._data[self._size]
        row[0] = t
        row[_STATE_SLICE] = state
        setpoint = record.setpoint
        row[_SETPOINT_SLICE] = (*setpoint.position, *setpoint.velocity, *setpoint.attitude)
        row[_WRENCH_SLICE] = (*record.wrench.force, *record.wrench.moment)
        row[_INDEX["mode"]] = MODE_CODES[record.mode]
        row[_NOZZLE_SLICE] = [
            value
            for command in record.commands
            for value in (command.alpha, command.beta, command.omega)
        ]
        row[_CLAMP_SLICE] = record.clamp_flags
        self._size += 1

    def column(self, name: str) -> np.ndarray:
        return self._data[:self._size, _INDEX[name]]

    def arrays(self) -> Dict[str, np.ndarray]:
        """Столбцы журнала по именам"""
        return {name: self.column(name) for name in LOG_COLUMNS}

    def to_frame(self, decimation: int = 1) -> pd.DataFrame:
        """Таблица со столбцами CSV (каждый decimation-й такт)"""
        rows = slice(0, self._size, decimation)
        frame = pd.DataFrame({name: self._data[rows, _INDEX[name]] for name in CSV_COLUMNS})
        frame["mode"] = frame["mode"].astype(int).map(MODE_NAMES)
        for name in CLAMP_COLUMNS:
            frame[name] = frame[name].astype(int)
        return frame
