import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core.errors import DomainError, InfeasibleError, SingularConfigError, SwitchRejectedError
from ..core.logging_setup import get_logger
from ..core.models import (
    BodyWrench,
    ControlMode,
    ControlSettings,
    GainSet,
    LockedAngles,
    Locks,
    ModeGains,
    ModeKind,
    ModeTransition,
    NozzleCommand,
    Setpoint6D,
    TelemetryRecord,
    VehicleParams,
    VehicleState,
    wrap_angle,
)
from ..dynamics.vehicle_dynamics import translational_rotation
from .allocation import (
    allocate,
    build_allocation,
    effectiveness_determinant,
    realized_wrench,
    soft_mixer,
    underactuated_mixer,
)
from .pid import PIDLoop

logger = get_logger("FlightController", "flight_controller.log")

LOOP_NAMES = ("position", "velocity", "attitude", "rate")


def loop_period(rate_hz: float, dt: float) -> int:
    """Период контура в тактах симуляции"""
    return max(1, int(round(1.0 / (rate_hz * dt))))


class FlightController:
    """
    Description:
    ---------------
        Каскадный регулятор Flexbee: положение -> скорость -> требуемая сила,
        ориентация -> угловая скорость -> требуемый момент. В полноприводном
        режиме воздействие распределяется через A⁺ и мягкий микшер, в режиме
        захвата/посадки углы сопел зафиксированы и управляются только
        скорости вращения (как у квадрокоптера).

        Такт регулятора совпадает с тактом симуляции; внешние контуры
        (положение, ориентация) и внутренние (скорость, угловая скорость)
        срабатывают каждые outer_period / inner_period тактов, начиная с нулевого.

    Args:
    ---------------
        params: Параметры аппарата
        gains: Коэффициенты обоих режимов
        settings: Частоты контуров и допуски
        dt: Такт симуляции, с
    """

    def __init__(
        self,
        params: VehicleParams,
        gains: ModeGains = ModeGains(),
        settings: ControlSettings = ControlSettings(),
        dt: float = 1.0e-3,
    ):
        if dt <= 0.0:
            raise DomainError(f"такт регулятора должен быть положительным: {dt}")
        self.params = params
        self.settings = settings
        self.dt = dt
        self.allocation = build_allocation(params, settings.condition_limit)

        self.outer_period = loop_period(settings.outer_rate_hz, dt)
        self.inner_period = loop_period(settings.inner_rate_hz, dt)
        self.outer_dt = self.outer_period * dt
        self.inner_dt = self.inner_period * dt

        self._loops: Dict[ModeKind, Dict[str, PIDLoop]] = {
            ModeKind.FULLY_ACTUATED: self._make_loops(gains.fully_actuated),
            ModeKind.GRASP_PERCH: self._make_loops(gains.grasp_perch),
        }
        self.mode = ControlMode.fully_actuated()
        self.transitions: List[ModeTransition] = []
        self.reset()

    @staticmethod
    def _make_loops(gain_set: GainSet) -> Dict[str, PIDLoop]:
        return {name: PIDLoop(name, getattr(gain_set, name)) for name in LOOP_NAMES}

    def reset(self) -> None:
        """Сбрасывает контуры и память регулятора, режим не меняется"""
        for loops in self._loops.values():
            for loop in loops.values():
                loop.reset()
        self._tick_count = 0
        self._force_inner = False
        self._velocity_setpoint = np.zeros(3)
        self._acceleration_command = np.zeros(3)
        self._attitude_setpoint = np.zeros(3)
        self._rate_setpoint = np.zeros(3)
        self._angular_acceleration_command = np.zeros(3)
        self._wrench = BodyWrench()
        self._allocation_vector: Optional[np.ndarray] = None
        self._commands: Tuple[NozzleCommand, ...] = tuple(NozzleCommand() for _ in range(4))
        self._clamp_active = False

    @property
    def loops(self) -> Dict[str, PIDLoop]:
        """Контуры активного режима"""
        return self._loops[self.mode.kind]

    @property
    def commands(self) -> Tuple[NozzleCommand, ...]:
        return self._commands

    @property
    def wrench(self) -> BodyWrench:
        return self._wrench

    # === Контуры ===

    def _check_setpoint(self, setpoint: Setpoint6D) -> None:
        phi_d, theta_d, _ = setpoint.attitude
        if abs(phi_d) > self.params.phi_max + 1e-12 or abs(theta_d) > self.params.theta_max + 1e-12:
            raise DomainError(
                f"уставка ориентации вне ограничений: phi={math.degrees(phi_d):.2f}°, "
                f"theta={math.degrees(theta_d):.2f}°"
            )

    def _tilt_setpoint(self, setpoint: Setpoint6D) -> np.ndarray:
        """Крен и тангаж из требуемого бокового ускорения (режим захвата)"""
        psi_d = setpoint.attitude[2]
        ax, ay = self._acceleration_command[:2] / self.params.gravity
        sp, cp = math.sin(psi_d), math.cos(psi_d)
        phi_d = float(np.clip(-cp * ax + sp * ay, -self.params.phi_max, self.params.phi_max))
        theta_d = float(np.clip(sp * ax + cp * ay, -self.params.theta_max, self.params.theta_max))
        return np.array([phi_d, theta_d, psi_d])

    def _run_outer(self, state: VehicleState, setpoint: Setpoint6D) -> None:
        loops = self.loops
        position_error = np.subtract(setpoint.position, state.position)
        self._velocity_setpoint = (
            np.asarray(setpoint.velocity) + loops["position"].step(position_error, self.outer_dt)
        )

        if self.mode.kind == ModeKind.GRASP_PERCH:
            self._attitude_setpoint = self._tilt_setpoint(setpoint)
        else:
            self._attitude_setpoint = np.asarray(setpoint.attitude, dtype=float)
        attitude_error = self._attitude_setpoint - np.asarray(state.attitude)
        attitude_error[2] = wrap_angle(attitude_error[2])
        self._rate_setpoint = loops["attitude"].step(attitude_error, self.outer_dt)

    def _run_inner(self, state: VehicleState) -> None:
        loops = self.loops
        velocity_error = self._velocity_setpoint - np.asarray(state.velocity)
        self._acceleration_command = loops["velocity"].step(velocity_error, self.inner_dt)

        rate_error = self._rate_setpoint - np.asarray(state.body_rates)
        self._angular_acceleration_command = loops["rate"].step(rate_error, self.inner_dt)

        self._wrench = self._compose_wrench(state)

    def _compose_wrench(self, state: VehicleState) -> BodyWrench:
        """Требуемое воздействие в связанной СК из команд ускорений"""
        params = self.params
        inertia = np.array(params.inertia)
        moment = inertia * self._angular_acceleration_command
        if self.settings.gyro_feedforward:
            p, q, r = state.body_rates
            ixx, iyy, izz = params.inertia
            moment = moment - np.array([
                q * r * (iyy - izz),
                p * r * (izz - ixx),
                p * q * (ixx - iyy),
            ])

        # Ускорение в инерциальной СК (NED) минус тяжесть
        inertial_force = params.mass * (self._acceleration_command - np.array([0.0, 0.0, params.gravity]))
        if self.mode.kind == ModeKind.GRASP_PERCH:
            phi, theta, _ = state.attitude
            force = np.array([0.0, 0.0, -inertial_force[2] / (math.cos(phi) * math.cos(theta))])
        else:
            force = translational_rotation(state.attitude).T @ inertial_force
        return BodyWrench.from_array(np.concatenate([force, moment]))

    # === Распределение ===

    def _mix_fully_actuated(self, wrench: BodyWrench) -> Tuple[NozzleCommand, ...]:
        forces = allocate(wrench, self.allocation)
        self._allocation_vector = forces
        commands = []
        for i in range(4):
            previous_beta = self._commands[i].beta
            try:
                command = soft_mixer(forces[3 * i:3 * i + 3], self.params, previous_beta)
            except InfeasibleError:
                command = NozzleCommand(
                    alpha=0.0, beta=previous_beta, omega=self.params.omega_min, infeasible=True
                )
            commands.append(command)
        return tuple(commands)

    def _mix_grasp_perch(self, wrench: BodyWrench) -> Tuple[NozzleCommand, ...]:
        self._allocation_vector = None
        return underactuated_mixer(
            wrench.force[2],
            wrench.moment,
            self.mode.locks,
            self.params,
            strict=False,
            det_threshold=self.settings.det_threshold,
        )

    def _mix(self, wrench: BodyWrench) -> Tuple[NozzleCommand, ...]:
        if self.mode.kind == ModeKind.GRASP_PERCH:
            return self._mix_grasp_perch(wrench)
        return self._mix_fully_actuated(wrench)

    def _track_clamping(self, t: float) -> None:
        active = any(command.clamp_code for command in self._commands)
        if active and not self._clamp_active:
            flags = [command.clamp_code for command in self._commands]
            logger.warning(f"t={t:.3f} c: ограничение команд сопел, флаги {flags}")
        self._clamp_active = active

    # === Такт ===

    def outer_loops(self, state: VehicleState, setpoint: Setpoint6D) -> BodyWrench:
        """
        Description:
        ---------------
            Проход всех четырех контуров без распределения по соплам.

        Args:
        ---------------
            state: Состояние аппарата
            setpoint: Уставка

        Returns:
        ---------------
            BodyWrench: Требуемое воздействие (F_d, M_d) в связанной СК
        """
        self._check_setpoint(setpoint)
        self._run_outer(state, setpoint)
        self._run_inner(state)
        return self._wrench

    def tick(self, t: float, state: VehicleState, setpoint: Setpoint6D) -> TelemetryRecord:
        """
        Description:
        ---------------
            Такт регулятора: срабатывают контуры, чей период наступил, затем
            микшер активного режима.

        Args:
        ---------------
            t: Время, с
            state: Состояние аппарата
            setpoint: Уставка

        Returns:
        ---------------
            TelemetryRecord: Телеметрия такта
        """
        self._check_setpoint(setpoint)
        k = self._tick_count
        if k % self.outer_period == 0:
            self._run_outer(state, setpoint)
        if k % self.inner_period == 0 or self._force_inner:
            self._run_inner(state)
            self._commands = self._mix(self._wrench)
            self._force_inner = False
            self._track_clamping(t)
        self._tick_count += 1

        allocation = None
        if self._allocation_vector is not None:
            allocation = tuple(float(v) for v in self._allocation_vector)
        return TelemetryRecord(
            t=t,
            mode=self.mode.kind,
            setpoint=Setpoint6D(
                position=setpoint.position,
                velocity=tuple(float(v) for v in self._velocity_setpoint),
                attitude=tuple(float(v) for v in self._attitude_setpoint),
            ),
            wrench=self._wrench,
            allocation=allocation,
            commands=self._commands,
        )

    # === Переключение режимов ===

    def _capture_locks(self) -> Locks:
        return tuple(LockedAngles(alpha=cmd.alpha, beta=cmd.beta) for cmd in self._commands)

    def _realize(self, mode: ControlMode, wrench: BodyWrench) -> np.ndarray:
        """Воздействие, которое новый режим реализует для удерживаемого требования"""
        if mode.kind == ModeKind.GRASP_PERCH:
            commands = underactuated_mixer(
                wrench.force[2], wrench.moment, mode.locks, self.params,
                strict=False, det_threshold=self.settings.det_threshold,
            )
        else:
            forces = allocate(wrench, self.allocation)
            commands = []
            for i in range(4):
                try:
                    commands.append(soft_mixer(forces[3 * i:3 * i + 3], self.params, self._commands[i].beta))
                except InfeasibleError:
                    commands.append(NozzleCommand(beta=self._commands[i].beta, omega=self.params.omega_min))
        return realized_wrench(commands, self.params, self.allocation)

    def mode_switch(self, requested: ControlMode, state: VehicleState, t: float = 0.0) -> ControlMode:
        """
        Description:
        ---------------
            Переключает режим. При переходе в режим захвата без заданных углов
            фиксируются текущие углы сопел. Контуры целевого режима
            пересеиваются последними выходами активного (безударный переход),
            внутренние контуры пересчитываются на следующем такте.

        Args:
        ---------------
            requested: Запрошенный режим
            state: Состояние аппарата
            t: Время переключения, с

        Returns:
        ---------------
            ControlMode: Новый активный режим

        Raises:
        ---------------
            SwitchRejectedError: Фиксированная конфигурация неуправляема по рысканию
        """
        previous = self.mode
        if requested.kind == ModeKind.GRASP_PERCH:
            locks = requested.locks if requested.locks is not None else self._capture_locks()
            determinant = effectiveness_determinant(locks, self.params)
            if abs(determinant) < self.settings.det_threshold:
                raise SwitchRejectedError(
                    f"переключение отклонено: фиксированные углы вырождены (|det E|={abs(determinant):.3e})",
                    timestamp=t,
                )
            target = ControlMode.grasp_perch(locks)
        else:
            target = ControlMode.fully_actuated()

        if target.kind != previous.kind:
            source_loops = self._loops[previous.kind]
            target_loops = self._loops[target.kind]
            for name in LOOP_NAMES:
                source = source_loops[name]
                target_loops[name].reseed(source.last_output, source.last_error)

        held = self._wrench
        try:
            realized = self._realize(target, held)
        except SingularConfigError as error:
            raise SwitchRejectedError(str(error), timestamp=t) from error
        jump = realized - held.as_array()

        self.mode = target
        self._force_inner = True
        transition = ModeTransition(
            t=t,
            from_mode=previous.kind,
            to_mode=target.kind,
            wrench_jump=tuple(float(v) for v in jump),
            force_z_jump=float(abs(jump[2])),
            jump_norm=float(np.linalg.norm(jump)),
        )
        self.transitions.append(transition)
        logger.info(
            f"t={t:.3f} c: режим {previous.kind.value} -> {target.kind.value}, "
            f"скачок воздействия {transition.jump_norm:.3e}, по F_z {transition.force_z_jump:.3e} Н"
        )
        return target
