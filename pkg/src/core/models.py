import math
from enum import Enum
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Vec2 = Tuple[float, float]
Vec3 = Tuple[float, float, float]

TWO_PI = 2.0 * math.pi


def normalize_angle(angle: float) -> float:
    """Приводит угол к [0, 2π)"""
    result = math.fmod(angle, TWO_PI)
    if result < 0.0:
        result += TWO_PI
    # fmod(-tiny) + 2π округляется ровно в 2π
    if result >= TWO_PI:
        result = 0.0
    return result


def wrap_angle(angle: float) -> float:
    """Приводит угол к [-π, π)"""
    return normalize_angle(angle + math.pi) - math.pi


def _all_finite(values) -> bool:
    return all(math.isfinite(v) for v in values)


# === Kinematics ===

class NozzleGeometry(BaseModel):
    """Геометрия сопла SVPN и его положение на раме"""
    model_config = ConfigDict(frozen=True)

    index: int = Field(ge=1, le=4)
    cable_offset_radius: float = Field(gt=0)      # h, м
    nominal_axial_length: float = Field(gt=0)     # s, м
    max_axial_length: float = Field(gt=0)         # s_max, м
    mount_offset_xy: Vec2                         # d_i, м, связанная СК
    azimuth_offset: float                         # поворот тросов, рад

    @model_validator(mode="after")
    def _check_lengths(self):
        if self.nominal_axial_length > self.max_axial_length:
            raise ValueError("s не может превышать s_max")
        return self


class CurvatureConfig(BaseModel):
    """
    Description:
    ---------------
        Состояние сопла в пространстве конфигураций: (alpha, beta, L).
        Радиус кривизны не хранится, поэтому прямое сопло (alpha = 0)
        остается регулярной точкой.
    """
    model_config = ConfigDict(frozen=True)

    bend_angle: float = Field(ge=0.0, le=math.pi)   # alpha, рад
    bend_azimuth: float = 0.0                       # beta, рад, [0, 2π)
    arc_length: float = Field(gt=0.0)               # L, м

    @field_validator("bend_azimuth")
    @classmethod
    def _normalize_azimuth(cls, value: float) -> float:
        return normalize_angle(value)

    @property
    def curvature(self) -> float:
        return self.bend_angle / self.arc_length

    @property
    def radius(self) -> float:
        if self.bend_angle == 0.0:
            return math.inf
        return self.arc_length / self.bend_angle


class CableLengths(BaseModel):
    """Длины трех тросов одного сопла (пространство приводов)"""
    model_config = ConfigDict(frozen=True)

    m1: float
    m2: float
    m3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.m1, self.m2, self.m3])


class TipPose(BaseModel):
    """Поза торца сопла в базовой СК сопла"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rotation: np.ndarray        # Q, 3x3
    translation: np.ndarray     # P, м
    x_end: float
    y_end: float


class NozzleForceMoment(BaseModel):
    """Сила и момент одного сопла в связанной СК"""
    model_config = ConfigDict(frozen=True)

    force: Vec3
    moment: Vec3
    application_point: Literal["tip", "equivalent"] = "tip"


# === Dynamics ===

class VehicleParams(BaseModel):
    """
    Description:
    ---------------
        Параметры аппарата. Значения по умолчанию соответствуют прототипу:
        m = 1.2 кг, I = (0.00913, 0.00918, 0.01245) кг·м², h = 2.5 см,
        s = 12 см, l = 10 см, theta_max = phi_max = 30°, alpha_max = 45°,
        s_max = 15 см.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    mass: float = Field(1.2, gt=0)                          # кг
    gravity: float = Field(9.8, gt=0)                       # м/с²
    inertia: Vec3 = (0.00913, 0.00918, 0.01245)             # кг·м²
    arm_length: float = Field(0.10, gt=0)                   # l, м
    nozzle_length: float = Field(0.12, gt=0)                # s, м
    cable_offset: float = Field(0.025, gt=0)                # h, м
    thrust_coefficient: float = Field(1.0e-6, gt=0)         # c_t, Н·с²
    theta_max_deg: float = Field(30.0, gt=0, lt=90)
    phi_max_deg: float = Field(30.0, gt=0, lt=90)
    alpha_max_deg: float = Field(45.0, gt=0, lt=90)
    s_max: float = Field(0.15, gt=0)                        # м
    omega_min: float = Field(100.0, ge=0)                   # рад/с
    omega_max: float = Field(3500.0, gt=0)                  # рад/с
    equivalent_lever_ratio: float = Field(0.5135, gt=0)     # a / s

    @field_validator("inertia")
    @classmethod
    def _positive_inertia(cls, value: Vec3) -> Vec3:
        if any(v <= 0 for v in value):
            raise ValueError("моменты инерции должны быть положительными")
        return value

    @model_validator(mode="after")
    def _check_limits(self):
        if self.nozzle_length > self.s_max:
            raise ValueError("nozzle_length не может превышать s_max")
        if self.omega_min >= self.omega_max:
            raise ValueError("omega_min должен быть меньше omega_max")
        return self

    @property
    def theta_max(self) -> float:
        return math.radians(self.theta_max_deg)

    @property
    def phi_max(self) -> float:
        return math.radians(self.phi_max_deg)

    @property
    def alpha_max(self) -> float:
        return math.radians(self.alpha_max_deg)

    @property
    def planar_arm(self) -> float:
        """c = (√2/2)·l"""
        return math.sqrt(2.0) / 2.0 * self.arm_length

    @property
    def equivalent_lever(self) -> float:
        """a = 0.5135·s"""
        return self.equivalent_lever_ratio * self.nozzle_length


class VehicleState(BaseModel):
    """Состояние аппарата: NED, углы Эйлера (phi, theta, psi), угловые скорости (p, q, r)"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    position: Vec3 = (0.0, 0.0, 0.0)
    velocity: Vec3 = (0.0, 0.0, 0.0)
    attitude: Vec3 = (0.0, 0.0, 0.0)
    body_rates: Vec3 = (0.0, 0.0, 0.0)

    @model_validator(mode="after")
    def _check_finite(self):
        if not _all_finite(self.position + self.velocity + self.attitude + self.body_rates):
            raise ValueError("состояние содержит нечисловые значения")
        return self

    def to_array(self) -> np.ndarray:
        return np.array(self.position + self.velocity + self.attitude + self.body_rates, dtype=float)

    @classmethod
    def from_array(cls, x: np.ndarray) -> "VehicleState":
        values = [float(v) for v in x]
        return cls(
            position=tuple(values[0:3]),
            velocity=tuple(values[3:6]),
            attitude=tuple(values[6:9]),
            body_rates=tuple(values[9:12]),
        )


class BodyWrench(BaseModel):
    """Сила и момент в связанной СК"""
    model_config = ConfigDict(frozen=True)

    force: Vec3 = (0.0, 0.0, 0.0)
    moment: Vec3 = (0.0, 0.0, 0.0)

    @model_validator(mode="after")
    def _check_finite(self):
        if not _all_finite(self.force + self.moment):
            raise ValueError("воздействие содержит нечисловые значения")
        return self

    def as_array(self) -> np.ndarray:
        return np.array(self.force + self.moment, dtype=float)

    @classmethod
    def from_array(cls, w: np.ndarray) -> "BodyWrench":
        values = [float(v) for v in w]
        return cls(force=tuple(values[0:3]), moment=tuple(values[3:6]))


# === Control ===

class LoopGains(BaseModel):
    """Коэффициенты одного контура ПИД (по трем осям)"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kp: Vec3 = (0.0, 0.0, 0.0)
    ki: Vec3 = (0.0, 0.0, 0.0)
    kd: Vec3 = (0.0, 0.0, 0.0)
    integrator_limit: Vec3 = (1.0, 1.0, 1.0)
    output_limit: Vec3 = (1.0e3, 1.0e3, 1.0e3)
    back_calculation: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _check_gains(self):
        if any(v < 0 for v in self.kp + self.ki + self.kd):
            raise ValueError("коэффициенты ПИД должны быть неотрицательными")
        if any(v <= 0 for v in self.integrator_limit + self.output_limit):
            raise ValueError("ограничения контура должны быть положительными")
        return self


class GainSet(BaseModel):
    """Коэффициенты каскада: положение, скорость, ориентация, угловая скорость"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    position: LoopGains = LoopGains(
        kp=(3.0, 3.0, 3.0), integrator_limit=(1.0, 1.0, 1.0), output_limit=(2.0, 2.0, 1.5)
    )
    velocity: LoopGains = LoopGains(
        kp=(10.0, 10.0, 10.0), ki=(1.0, 1.0, 1.0),
        integrator_limit=(2.0, 2.0, 2.0), output_limit=(4.0, 4.0, 4.0)
    )
    attitude: LoopGains = LoopGains(
        kp=(8.0, 8.0, 6.0), integrator_limit=(1.0, 1.0, 1.0), output_limit=(3.0, 3.0, 2.0)
    )
    rate: LoopGains = LoopGains(
        kp=(40.0, 40.0, 25.0), ki=(5.0, 5.0, 3.0),
        integrator_limit=(1.0, 1.0, 1.0), output_limit=(60.0, 60.0, 30.0)
    )


def _grasp_perch_gains() -> GainSet:
    return GainSet(
        position=LoopGains(
            kp=(1.0, 1.0, 3.0), integrator_limit=(1.0, 1.0, 1.0), output_limit=(1.0, 1.0, 1.5)
        ),
        velocity=LoopGains(
            kp=(2.0, 2.0, 10.0), ki=(0.3, 0.3, 1.0),
            integrator_limit=(2.0, 2.0, 2.0), output_limit=(3.0, 3.0, 4.0)
        ),
    )


class ModeGains(BaseModel):
    """Наборы коэффициентов для двух режимов"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    fully_actuated: GainSet = GainSet()
    grasp_perch: GainSet = Field(default_factory=_grasp_perch_gains)


class Setpoint6D(BaseModel):
    """Уставка: положение, скорость, ориентация (рад)"""
    model_config = ConfigDict(frozen=True)

    position: Vec3 = (0.0, 0.0, 0.0)
    velocity: Vec3 = (0.0, 0.0, 0.0)
    attitude: Vec3 = (0.0, 0.0, 0.0)


class NozzleCommand(BaseModel):
    """Команда сопла: углы alpha, beta и скорость вращения omega"""
    model_config = ConfigDict(frozen=True)

    alpha: float = 0.0
    beta: float = 0.0
    omega: float = 0.0
    alpha_clamped: bool = False
    omega_clamped: bool = False
    infeasible: bool = False

    @property
    def clamp_code(self) -> int:
        """Битовая маска: 1 - alpha, 2 - omega, 4 - недостижимое требование"""
        return int(self.alpha_clamped) | (int(self.omega_clamped) << 1) | (int(self.infeasible) << 2)

    def cable_lengths(self, geom: NozzleGeometry) -> CableLengths:
        """Длины тросов, реализующие команду"""
        from ..kinematics.svpn_kinematics import config_to_drive

        config = CurvatureConfig(
            bend_angle=self.alpha, bend_azimuth=self.beta, arc_length=geom.nominal_axial_length
        )
        return config_to_drive(config, geom)


class ModeKind(str, Enum):
    """Режимы полета"""
    FULLY_ACTUATED = "fully_actuated"
    GRASP_PERCH = "grasp_perch"


class LockedAngles(BaseModel):
    """Зафиксированные углы сопла"""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(ge=0.0, le=math.pi / 2)
    beta: float = 0.0

    @field_validator("beta")
    @classmethod
    def _normalize_beta(cls, value: float) -> float:
        return normalize_angle(value)


Locks = Tuple[LockedAngles, LockedAngles, LockedAngles, LockedAngles]


class ControlMode(BaseModel):
    """
    Description:
    ---------------
        Режим управления. Полноприводный режим не несет углов; в режиме
        захвата/посадки активный режим всегда содержит четыре пары углов.
        Запрос режима захвата без углов означает "зафиксировать текущие".
    """
    model_config = ConfigDict(frozen=True)

    kind: ModeKind = ModeKind.FULLY_ACTUATED
    locks: Optional[Locks] = None

    @model_validator(mode="after")
    def _check_locks(self):
        if self.kind == ModeKind.FULLY_ACTUATED and self.locks is not None:
            raise ValueError("полноприводный режим не фиксирует углы")
        return self

    @classmethod
    def fully_actuated(cls) -> "ControlMode":
        return cls(kind=ModeKind.FULLY_ACTUATED)

    @classmethod
    def grasp_perch(cls, locks: Optional[Locks] = None) -> "ControlMode":
        return cls(kind=ModeKind.GRASP_PERCH, locks=locks)


class AllocationMatrix(BaseModel):
    """Матрица распределения A (6x12) и ее псевдообратная A⁺"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray
    pseudo_inverse: np.ndarray
    lever: float           # a, м
    planar_arm: float      # c, м
    condition_number: float


class ModeTransition(BaseModel):
    """Запись о переключении режима"""
    model_config = ConfigDict(frozen=True)

    t: float
    from_mode: ModeKind
    to_mode: ModeKind
    wrench_jump: Tuple[float, float, float, float, float, float]
    force_z_jump: float
    jump_norm: float


class TelemetryRecord(BaseModel):
    """Телеметрия одного такта регулятора"""
    model_config = ConfigDict(frozen=True)

    t: float
    mode: ModeKind
    setpoint: Setpoint6D
    wrench: BodyWrench
    allocation: Optional[Tuple[float, ...]] = None
    commands: Tuple[NozzleCommand, NozzleCommand, NozzleCommand, NozzleCommand]

    @property
    def clamp_flags(self) -> Tuple[int, int, int, int]:
        return tuple(command.clamp_code for command in self.commands)


# === Grasping ===

class TargetKind(str, Enum):
    """Типы объектов захвата"""
    TUBE = "tube"       # горизонтальная труба вдоль оси X
    PLATE = "plate"     # вертикальная пластина вдоль оси X
    POLE = "pole"       # вертикальный шест
    SPHERE = "sphere"


class GraspTarget(BaseModel):
    """Объект захвата/посадки"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: TargetKind = TargetKind.TUBE
    characteristic_radius: float = Field(0.05, gt=0)     # м
    position: Vec3 = (0.0, 0.0, 0.0)                     # центр в инерциальной СК (NED)
    center_depth: Optional[float] = None                 # глубина центра под рамой при посадке

    @property
    def depth(self) -> float:
        if self.center_depth is None:
            return self.characteristic_radius
        return self.center_depth


class GraspSettings(BaseModel):
    """Параметры планировщика захвата"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    prebend_alpha_deg: float = Field(30.0, ge=0, le=90)
    contact_offset: float = Field(0.025, ge=0)           # радиус торца сопла, м
    yaw_twist_deg: float = Field(15.0, ge=0, lt=90)
    contact_tolerance: float = Field(1.0e-6, gt=0)       # м
    approach_height: float = Field(0.5, gt=0)            # м
    settle_time: float = Field(2.0, gt=0)                # с
    descend_time: float = Field(3.0, gt=0)
    perch_dwell: float = Field(2.0, gt=0)
    climb_time: float = Field(3.0, gt=0)
    capture_radius: float = Field(0.05, gt=0)            # допуск посадки, м


class GraspPhase(BaseModel):
    """Фаза захвата"""
    model_config = ConfigDict(frozen=True)

    name: Literal["prebend", "approach", "converge"]
    locks: Optional[Locks] = None
    waypoints: List[Vec3] = []
    dwell: float = 0.0


class GraspPlan(BaseModel):
    """План захвата: фазы, точки контакта и невязки"""
    model_config = ConfigDict(frozen=True)

    target: GraspTarget
    phases: Tuple[GraspPhase, GraspPhase, GraspPhase]
    tip_positions: Tuple[Vec3, Vec3, Vec3, Vec3]
    contact_residuals: Tuple[float, float, float, float]
    contact_cables: Tuple[CableLengths, CableLengths, CableLengths, CableLengths]

    @property
    def contact_locks(self) -> Locks:
        return self.phases[2].locks

    @property
    def prebend_locks(self) -> Locks:
        return self.phases[0].locks


# === Scenarios ===

class HoverReference(BaseModel):
    """Зависание в точке"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["hover"] = "hover"
    position: Vec3 = (0.0, 0.0, -1.0)
    attitude_deg: Vec3 = (0.0, 0.0, 0.0)


class CircleReference(BaseModel):
    """Горизонтальная окружность"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["circle"] = "circle"
    center: Vec2 = (2.3, 2.8)          # м
    radius: float = Field(1.0, gt=0)   # м
    period: float = Field(12.0, gt=0)  # с
    altitude: float = 1.0              # м над землей (z = -altitude)
    attitude_deg: Vec3 = (0.0, 0.0, 0.0)


class StepReference(BaseModel):
    """Ступенька по положению и/или ориентации"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["step"] = "step"
    t_step: float = Field(1.0, ge=0)
    position_before: Vec3 = (0.0, 0.0, -1.0)
    position_after: Vec3 = (0.0, 0.0, -1.0)
    attitude_before_deg: Vec3 = (0.0, 0.0, 0.0)
    attitude_after_deg: Vec3 = (0.0, 0.0, 0.0)


class Waypoint(BaseModel):
    """Путевая точка"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    t: float = Field(ge=0)
    position: Vec3
    attitude_deg: Vec3 = (0.0, 0.0, 0.0)


class WaypointReference(BaseModel):
    """Кусочно-линейная траектория по путевым точкам"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["waypoints"] = "waypoints"
    waypoints: List[Waypoint] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_order(self):
        times = [w.t for w in self.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("время путевых точек должно строго возрастать")
        return self


class GraspPerchReference(BaseModel):
    """Сценарий захвата/посадки на объект"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["grasp_perch"] = "grasp_perch"
    target: GraspTarget = GraspTarget()
    takeoff: bool = True


Reference = Annotated[
    Union[HoverReference, CircleReference, StepReference, WaypointReference, GraspPerchReference],
    Field(discriminator="kind"),
]


class DisturbanceSpec(BaseModel):
    """Внешнее воздействие в связанной СК на интервале времени"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["impulse", "constant"] = "impulse"
    force: Vec3 = (0.0, 0.0, 0.0)
    moment: Vec3 = (0.0, 0.0, 0.0)
    t_start: float = Field(0.0, ge=0)
    t_end: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _check_window(self):
        if self.t_end < self.t_start:
            raise ValueError("t_end должно быть не меньше t_start")
        return self

    def active(self, t: float) -> bool:
        return self.t_start <= t < self.t_end


class ModeEvent(BaseModel):
    """Запланированное переключение режима"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    t: float = Field(ge=0)
    mode: ModeKind
    locks_deg: Optional[Tuple[Vec2, Vec2, Vec2, Vec2]] = None    # (alpha, beta) в градусах
    symmetric_bend_deg: Optional[float] = None

    @model_validator(mode="after")
    def _check_locks(self):
        if self.locks_deg is not None and self.symmetric_bend_deg is not None:
            raise ValueError("укажите либо locks_deg, либо symmetric_bend_deg")
        if self.mode == ModeKind.FULLY_ACTUATED and (
            self.locks_deg is not None or self.symmetric_bend_deg is not None
        ):
            raise ValueError("полноприводный режим не фиксирует углы")
        return self


class Scenario(BaseModel):
    """Описание сценария моделирования"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    duration: float = Field(gt=0)                  # с
    dt: float = Field(1.0e-3, gt=0, le=0.01)       # с
    initial_state: VehicleState = VehicleState(position=(0.0, 0.0, -1.0))
    reference: Reference = HoverReference()
    disturbances: List[DisturbanceSpec] = []
    mode_schedule: List[ModeEvent] = []
    seed: int = Field(0, ge=0)
    force_noise_std: float = Field(0.0, ge=0)      # Н
    controller_enabled: bool = True
    metrics_start: float = Field(0.0, ge=0)        # с


class Metrics(BaseModel):
    """Показатели качества слежения"""
    model_config = ConfigDict(frozen=True)

    rmse_x: float = Field(ge=0)
    rmse_y: float = Field(ge=0)
    rmse_z: float = Field(ge=0)
    max_position_error: float = Field(ge=0)
    max_abs_roll: float = Field(ge=0)
    max_abs_pitch: float = Field(ge=0)
    yaw_drift: float = Field(ge=0)
    settling_time: float = Field(ge=0)
    mode_switch_altitude_deviation: float = Field(ge=0)
    clamp_duty_fraction: float = Field(ge=0, le=1)
    metrics_start: float = Field(0.0, ge=0)
    settling_band: float = Field(0.05, gt=0)


# === Settings ===

class ControlSettings(BaseModel):
    """Частоты контуров и допуски микшеров"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    outer_rate_hz: float = Field(100.0, gt=0)      # положение, ориентация
    inner_rate_hz: float = Field(500.0, gt=0)      # скорость, угловая скорость
    gyro_feedforward: bool = True
    det_threshold: float = Field(1.0e-9, gt=0)     # |det E| для режима захвата
    condition_limit: float = Field(1.0e8, gt=1)    # cond(A·Aᵀ)
    grasp: GraspSettings = GraspSettings()


class SimulationSettings(BaseModel):
    """Параметры модели объекта"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    moment_model: Literal["exact", "linearized"] = "exact"
    small_angle_attitude: bool = False
    divergence_bound: float = Field(1.0e3, gt=0)


# === Grasp script ===

class ScriptEvent(BaseModel):
    """Событие сценария захвата"""
    model_config = ConfigDict(frozen=True)

    t: float = Field(ge=0)
    action: Literal["mode", "attach", "release"]
    mode: Optional[ControlMode] = None


class GraspScript(BaseModel):
    """Временная последовательность захвата/посадки и взлета"""
    model_config = ConfigDict(frozen=True)

    plan: GraspPlan
    reference: WaypointReference
    events: List[ScriptEvent]
    approach_position: Vec3
    perch_position: Vec3
    end_time: float
