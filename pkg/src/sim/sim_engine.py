import asyncio
import math
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..control.allocation import symmetric_locks
from ..control.controller import FlightController
from ..control.grasp_planner import grasp_plan
from ..core.errors import DivergenceError, FlexbeeError
from ..core.logging_setup import get_logger
from ..core.models import (
    BodyWrench,
    CircleReference,
    ControlMode,
    ControlSettings,
    GraspPerchReference,
    GraspScript,
    GraspSettings,
    GraspTarget,
    HoverReference,
    LockedAngles,
    Metrics,
    ModeEvent,
    ModeGains,
    ModeKind,
    NozzleCommand,
    Scenario,
    ScriptEvent,
    SimulationSettings,
    StepReference,
    TargetKind,
    TelemetryRecord,
    VehicleParams,
    VehicleState,
    Waypoint,
    WaypointReference,
)
from ..dynamics.vehicle_dynamics import check_step, plant_wrench, rk4_step
from .metrics import compute_metrics
from .references import reference_at
from .trajectory import TrajectoryLog

logger = get_logger("SimEngine", "sim_engine.log")

IDLE_COMMANDS = tuple(NozzleCommand() for _ in range(4))


def mode_from_event(event: ModeEvent) -> ControlMode:
    """Режим, запрошенный событием расписания"""
    if event.mode == ModeKind.FULLY_ACTUATED:
        return ControlMode.fully_actuated()
    if event.symmetric_bend_deg is not None:
        return ControlMode.grasp_perch(symmetric_locks(math.radians(event.symmetric_bend_deg)))
    if event.locks_deg is not None:
        return ControlMode.grasp_perch(tuple(
            LockedAngles(alpha=math.radians(alpha), beta=math.radians(beta))
            for alpha, beta in event.locks_deg
        ))
    return ControlMode.grasp_perch()


##########
## СЦЕНАРИЙ ЗАХВАТА ##
##########

def grasp_perch_script(
    scenario: Scenario,
    params: VehicleParams = VehicleParams(),
    settings: GraspSettings = GraspSettings(),
) -> GraspScript:
    """
    Description:
    ---------------
        Строит временную последовательность захвата/посадки:
        зависание над точкой подхода, переход в режим захвата с изгибом
        наружу, снижение до точки посадки, фиксация (кинематическое
        прикрепление), сведение сопел, выдержка. При takeoff: отпускание
        с изгибом наружу, подъем к точке подхода, возврат в полноприводный
        режим.

    Args:
    ---------------
        scenario: Сценарий с генератором grasp_perch
        params: Параметры аппарата
        settings: Параметры планировщика

    Returns:
    ---------------
        GraspScript: Уставки и события

    Raises:
    ---------------
        UnreachableError: Объект вне досягаемости (до начала движения)
    """
    reference = scenario.reference
    if not isinstance(reference, GraspPerchReference):
        raise FlexbeeError(f"сценарий {scenario.name} не является сценарием захвата")

    plan = grasp_plan(reference.target, params, settings)
    approach, perch = plan.phases[1].waypoints
    prebend = ControlMode.grasp_perch(plan.prebend_locks)
    converge = ControlMode.grasp_perch(plan.contact_locks)

    pause = 0.5 * settings.settle_time
    t_grasp_mode = settings.settle_time
    t_descend = t_grasp_mode + pause
    t_landed = t_descend + settings.descend_time
    t_attach = t_landed + pause
    t_release = t_attach + plan.phases[2].dwell

    waypoints = [
        Waypoint(t=0.0, position=approach),
        Waypoint(t=t_descend, position=approach),
        Waypoint(t=t_landed, position=perch),
    ]
    events = [
        ScriptEvent(t=t_grasp_mode, action="mode", mode=prebend),
        ScriptEvent(t=t_attach, action="attach"),
        ScriptEvent(t=t_attach, action="mode", mode=converge),
    ]
    end_time = t_release
    if reference.takeoff:
        t_climb = t_release + pause
        t_climbed = t_climb + settings.climb_time
        t_flight_mode = t_climbed + pause
        waypoints += [
            Waypoint(t=t_climb, position=perch),
            Waypoint(t=t_climbed, position=approach),
        ]
        events += [
            ScriptEvent(t=t_release, action="release", mode=prebend),
            ScriptEvent(t=t_flight_mode, action="mode", mode=ControlMode.fully_actuated()),
        ]
        end_time = t_flight_mode + settings.settle_time

    return GraspScript(
        plan=plan,
        reference=WaypointReference(waypoints=waypoints),
        events=events,
        approach_position=approach,
        perch_position=perch,
        end_time=end_time,
    )


##########
## МОДЕЛИРОВАНИЕ ##
##########

class Simulation:
    """
    Description:
    ---------------
        Совместное моделирование регулятора и динамики с постоянным шагом.
        Объект принадлежит одному потоку; независимые симуляции можно
        выполнять параллельно.

    Args:
    ---------------
        scenario: Сценарий
        params: Параметры аппарата
        gains: Коэффициенты регулятора
        control: Частоты контуров и допуски
        simulation: Параметры модели объекта

    Raises:
    ---------------
        DomainError: Недопустимый шаг
        UnreachableError: Объект захвата вне досягаемости
    """

    def __init__(
        self,
        scenario: Scenario,
        params: VehicleParams = VehicleParams(),
        gains: ModeGains = ModeGains(),
        control: ControlSettings = ControlSettings(),
        simulation: SimulationSettings = SimulationSettings(),
    ):
        check_step(scenario.dt)
        self.scenario = scenario
        self.params = params
        self.control = control
        self.settings = simulation
        self.controller: Optional[FlightController] = None
        if scenario.controller_enabled:
            self.controller = FlightController(params, gains, control, scenario.dt)
        self.rng = np.random.default_rng(scenario.seed)

        events = [
            ScriptEvent(t=event.t, action="mode", mode=mode_from_event(event))
            for event in scenario.mode_schedule
        ]
        self.script: Optional[GraspScript] = None
        self.reference = scenario.reference
        if isinstance(scenario.reference, GraspPerchReference):
            self.script = grasp_perch_script(scenario, params, control.grasp)
            self.reference = self.script.reference
            events += self.script.events
        self.events: List[ScriptEvent] = sorted(events, key=lambda event: event.t)
        self.attached = False

    def _disturbance(self, t: float) -> np.ndarray:
        offset = np.zeros(6)
        for disturbance in self.scenario.disturbances:
            if disturbance.active(t):
                offset += np.array(disturbance.force + disturbance.moment)
        if self.scenario.force_noise_std > 0.0:
            offset[:3] += self.rng.normal(0.0, self.scenario.force_noise_std, 3)
        return offset

    def _attach(self, x: np.ndarray, t: float) -> np.ndarray:
        """Кинематическое прикрепление: состояние замораживается в точке посадки"""
        perch = np.array(self.script.perch_position)
        offset = float(np.linalg.norm(x[0:3] - perch))
        if offset > self.control.grasp.capture_radius:
            logger.warning(f"t={t:.3f} c: посадка не выполнена, отклонение {offset:.4f} м")
            return x
        self.attached = True
        frozen = np.zeros(12)
        frozen[0:3] = perch
        frozen[8] = x[8]
        logger.info(f"t={t:.3f} c: посадка на объект, отклонение {offset:.2e} м")
        return frozen

    def _apply_event(self, event: ScriptEvent, x: np.ndarray, t: float) -> np.ndarray:
        if event.action == "attach":
            return self._attach(x, t)
        if event.action == "release":
            if self.attached:
                logger.info(f"t={t:.3f} c: взлет с объекта")
            self.attached = False
        if self.controller is None:
            logger.warning(f"t={t:.3f} c: регулятор отключен, событие {event.action} пропущено")
            return x
        self.controller.mode_switch(event.mode, VehicleState.from_array(x), t)
        return x

    def _idle_record(self, t: float, setpoint) -> TelemetryRecord:
        return TelemetryRecord(
            t=t, mode=ModeKind.FULLY_ACTUATED, setpoint=setpoint,
            wrench=BodyWrench(), commands=IDLE_COMMANDS,
        )

    def run(self) -> Tuple[TrajectoryLog, Metrics]:
        """
        Description:
        ---------------
            Выполняет сценарий. На каждом такте: события, уставка, такт
            регулятора, воздействие объекта (с возмущениями), запись журнала,
            шаг РК4 (если аппарат не прикреплен), проверка расходимости.

        Returns:
        ---------------
            Tuple[TrajectoryLog, Metrics]: Журнал и показатели

        Raises:
        ---------------
            DivergenceError: Норма состояния вышла за divergence_bound
            FlexbeeError: Ошибки регулятора и динамики с временем отказа
        """
        scenario = self.scenario
        dt = scenario.dt
        steps = int(round(scenario.duration / dt))
        log = TrajectoryLog(scenario.name, dt, steps)
        x = scenario.initial_state.to_array()
        event_index = 0
        logger.info(f"Сценарий {scenario.name}: {steps} тактов по {dt} с")

        for k in range(steps):
            t = k * dt
            try:
                while event_index < len(self.events) and self.events[event_index].t <= t + 0.5 * dt:
                    x = self._apply_event(self.events[event_index], x, t)
                    event_index += 1

                setpoint = reference_at(self.reference, t)
                if self.controller is None:
                    record = self._idle_record(t, setpoint)
                else:
                    record = self.controller.tick(t, VehicleState.from_array(x), setpoint)

                wrench = plant_wrench(record.commands, self.params, self.settings.moment_model).as_array()
                wrench = wrench + self._disturbance(t)
                log.append(t, x, record)

                if not self.attached:
                    x = rk4_step(x, wrench, dt, self.params, self.settings.small_angle_attitude)
                norm = float(np.linalg.norm(x))
                if not math.isfinite(norm) or norm > self.settings.divergence_bound:
                    raise DivergenceError(f"расходимость: |x|={norm:.3e}")
            except FlexbeeError as error:
                if error.timestamp is None:
                    error.timestamp = t
                logger.error(f"Сценарий {scenario.name} прерван: {error}")
                raise

        if self.controller is not None:
            log.transitions = list(self.controller.transitions)
        metrics = compute_metrics(log.arrays(), scenario.metrics_start)
        logger.info(
            f"Сценарий {scenario.name} завершен: RMSE=({metrics.rmse_x:.4f}, {metrics.rmse_y:.4f}, "
            f"{metrics.rmse_z:.4f}) м, max|e|={metrics.max_position_error:.4f} м"
        )
        return log, metrics


def run(
    scenario: Scenario,
    params: VehicleParams = VehicleParams(),
    gains: ModeGains = ModeGains(),
    control: ControlSettings = ControlSettings(),
    simulation: SimulationSettings = SimulationSettings(),
) -> Tuple[TrajectoryLog, Metrics]:
    """Выполняет сценарий и возвращает журнал и показатели"""
    return Simulation(scenario, params, gains, control, simulation).run()


async def run_batch(
    scenarios: Iterable[Scenario],
    params: VehicleParams = VehicleParams(),
    gains: ModeGains = ModeGains(),
    control: ControlSettings = ControlSettings(),
    simulation: SimulationSettings = SimulationSettings(),
) -> Dict[str, Tuple[TrajectoryLog, Metrics]]:
    """
    Description:
    ---------------
        Параллельно выполняет независимые сценарии в потоках.

    Returns:
    ---------------
        Dict[str, Tuple[TrajectoryLog, Metrics]]: Результаты по именам сценариев
    """
    scenarios = list(scenarios)
    results = await asyncio.gather(*(
        asyncio.to_thread(run, scenario, params, gains, control, simulation)
        for scenario in scenarios
    ))
    return {scenario.name: result for scenario, result in zip(scenarios, results)}


##########
## СЦЕНАРИИ ПО УМОЛЧАНИЮ ##
##########

def default_scenarios() -> Dict[str, Scenario]:
    """Сценарии профиля по умолчанию"""
    hover_start = VehicleState(position=(0.0, 0.0, -1.0))
    target = GraspTarget(kind=TargetKind.TUBE, characteristic_radius=0.05, position=(1.0, 1.0, -0.5))
    approach = (1.0, 1.0, -0.5 - target.depth - GraspSettings().approach_height)
    scenarios = [
        Scenario(
            name="hover",
            duration=10.0,
            initial_state=hover_start,
            reference=HoverReference(position=(0.0, 0.0, -1.0)),
        ),
        Scenario(
            name="free_fall",
            duration=1.0,
            initial_state=VehicleState(position=(0.0, 0.0, -10.0)),
            reference=HoverReference(position=(0.0, 0.0, -10.0)),
            controller_enabled=False,
        ),
        Scenario(
            name="circle",
            duration=30.0,
            initial_state=VehicleState(position=(3.3, 2.8, -1.0)),
            reference=CircleReference(),
            metrics_start=6.0,
        ),
        Scenario(
            name="pitch_hold",
            duration=10.0,
            initial_state=hover_start,
            reference=StepReference(t_step=1.0, attitude_after_deg=(0.0, 10.0, 0.0)),
        ),
        Scenario(
            name="mode_switch",
            duration=12.0,
            initial_state=hover_start,
            reference=HoverReference(position=(0.0, 0.0, -1.0)),
            mode_schedule=[
                ModeEvent(t=3.0, mode=ModeKind.GRASP_PERCH, symmetric_bend_deg=20.0),
                ModeEvent(t=8.0, mode=ModeKind.FULLY_ACTUATED),
            ],
        ),
        Scenario(
            name="grasp_perch",
            duration=16.0,
            initial_state=VehicleState(position=approach),
            reference=GraspPerchReference(target=target),
        ),
    ]
    return {scenario.name: scenario for scenario in scenarios}
