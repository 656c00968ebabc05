import argparse
import asyncio
import json
import logging
import math
import sys
from typing import Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from ..control.allocation import build_allocation, effectiveness_determinant, symmetric_locks
from ..core import config as env_config
from ..core.errors import ConfigError, DivergenceError, DomainError, FlexbeeError
from ..core.logging_setup import get_logger, set_console_level
from ..core.models import CableLengths, CurvatureConfig, Scenario
from ..dynamics.vehicle_dynamics import hover_omega, lever_error_report, moment_model_report
from ..kinematics.svpn_kinematics import (
    config_to_drive,
    config_to_pose,
    drive_to_config,
    nozzle_force_moment,
    nozzle_geometry,
)
from ..sim.sim_engine import run, run_batch
from .export import export_log, export_metrics, output_paths
from .settings import ConfigDocument, load_config

logger = get_logger("CLI", "cli.log")

# Допуск эквивалентного плеча относительно точного
LEVER_BOUND = 0.027

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_MODEL = 3
EXIT_DIVERGENCE = 4


def exit_code(error: BaseException) -> int:
    """Код завершения по типу ошибки"""
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, DivergenceError):
        return EXIT_DIVERGENCE
    if isinstance(error, FlexbeeError):
        return EXIT_MODEL
    return EXIT_INTERNAL


def report_error(error: BaseException) -> None:
    """Печатает ошибку в stderr одной строкой JSON"""
    if isinstance(error, FlexbeeError):
        payload = {"error": error.category, "message": error.message, "t": error.timestamp}
    else:
        payload = {"error": "internal", "message": f"{type(error).__name__}: {error}", "t": None}
    print(json.dumps(payload, ensure_ascii=False), file=sys.stderr)


def print_json(payload) -> None:
    print(json.dumps(payload, indent=2, ensure_ascii=False))


def build_parser() -> argparse.ArgumentParser:
    """Разбор аргументов командной строки"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="Путь к JSON-конфигурации")
    common.add_argument("--out", default=None, help="Каталог результатов")
    common.add_argument("--seed", type=int, default=None, help="Зерно генератора шума")
    common.add_argument("--dt", type=float, default=None, help="Шаг симуляции, с")
    common.add_argument("--format", choices=["csv"], default=None, help="Формат журнала")
    common.add_argument("--debug", action="store_true", help="Включить подробное логирование")

    parser = argparse.ArgumentParser(prog="flexbee", description="Симулятор и регулятор Flexbee")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", parents=[common], help="Выполнить сценарий")
    run_parser.add_argument("scenario", help="Имя сценария из конфигурации")

    commands.add_parser("validate", parents=[common], help="Проверить модель и распределение")

    sweep_parser = commands.add_parser("sweep", parents=[common], help="Выполнить набор сценариев")
    sweep_parser.add_argument("scenarios", nargs="*", help="Имена сценариев (по умолчанию все)")

    kin_parser = commands.add_parser("kin", parents=[common], help="Кинематика одного сопла")
    query = kin_parser.add_mutually_exclusive_group(required=True)
    query.add_argument("--cables", nargs=3, type=float, metavar=("M1", "M2", "M3"),
                       help="Длины тросов, м")
    query.add_argument("--curvature", nargs=3, type=float, metavar=("ALPHA_DEG", "BETA_DEG", "L"),
                       help="Угол изгиба, азимут (градусы) и длина дуги, м")
    kin_parser.add_argument("--nozzle", type=int, default=1, choices=[1, 2, 3, 4], help="Номер сопла")
    kin_parser.add_argument("--omega", type=float, default=None, help="Скорость вращения, рад/с")
    return parser


# === Команды ===

def _override(scenario: Scenario, seed: Optional[int], dt: Optional[float]) -> Scenario:
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if dt is not None:
        updates["dt"] = dt
    if not updates:
        return scenario
    try:
        return Scenario.model_validate({**scenario.model_dump(), **updates})
    except ValidationError as error:
        raise ConfigError(f"недопустимые параметры запуска {updates}: {error.errors()[0]['msg']}") from error


def _output_directory(args, document: ConfigDocument) -> str:
    return args.out or env_config.FLEXBEE_OUTPUT_DIR or document.output.directory


def _select(document: ConfigDocument, names: List[str]) -> List[Scenario]:
    unknown = [name for name in names if name not in document.scenarios]
    if unknown:
        raise ConfigError(f"неизвестные сценарии: {unknown}; доступны {sorted(document.scenarios)}")
    return [document.scenarios[name] for name in names]


def _write_outputs(name: str, log, metrics, directory: str, document: ConfigDocument, fmt: str) -> Dict[str, str]:
    paths = output_paths(directory, name)
    export_log(log, paths["log"], fmt, document.output.decimation)
    export_metrics(metrics, paths["metrics"])
    return paths


def command_run(args, document: ConfigDocument) -> int:
    scenario = _override(_select(document, [args.scenario])[0], args.seed, args.dt)
    log, metrics = run(
        scenario, document.vehicle, document.gains, document.control, document.simulation
    )
    fmt = args.format or document.output.format
    paths = _write_outputs(scenario.name, log, metrics, _output_directory(args, document), document, fmt)
    print_json({"scenario": scenario.name, **paths, "metrics": metrics.model_dump(mode="json")})
    return EXIT_OK


def command_sweep(args, document: ConfigDocument) -> int:
    names = args.scenarios or list(document.scenarios)
    scenarios = [_override(s, args.seed, args.dt) for s in _select(document, names)]
    results = asyncio.run(run_batch(
        scenarios, document.vehicle, document.gains, document.control, document.simulation
    ))
    fmt = args.format or document.output.format
    directory = _output_directory(args, document)
    summary = {}
    for name, (log, metrics) in results.items():
        _write_outputs(name, log, metrics, directory, document, fmt)
        summary[name] = metrics.model_dump(mode="json")
    print_json(summary)
    return EXIT_OK


def validation_report(document: ConfigDocument) -> Dict:
    """Отчет об инвариантах модели: ранг A, обусловленность, omega зависания, плечо"""
    params = document.vehicle
    allocation = build_allocation(params, document.control.condition_limit)
    matrix = allocation.matrix
    identity_error = float(np.abs(matrix @ allocation.pseudo_inverse - np.eye(6)).max())
    lever = lever_error_report(params)
    omega = hover_omega(params)
    return {
        "rank": int(np.linalg.matrix_rank(matrix)),
        "condition_number": allocation.condition_number,
        "identity_error": identity_error,
        "hover_omega": omega,
        "hover_omega_in_bounds": params.omega_min <= omega <= params.omega_max,
        "lever": lever,
        "equivalence_bound_ok": lever["max_error_vs_exact"] < LEVER_BOUND,
        "moment_model": moment_model_report(params),
        "grasp_determinant_straight": effectiveness_determinant(symmetric_locks(0.0), params),
        "grasp_determinant_symmetric_20deg": effectiveness_determinant(
            symmetric_locks(math.radians(20.0)), params
        ),
    }


def command_validate(args, document: ConfigDocument) -> int:
    report = validation_report(document)
    logger.info(
        f"rank(A)={report['rank']}, cond(AAᵀ)={report['condition_number']:.3f}, "
        f"omega зависания {report['hover_omega']:.1f} рад/с, "
        f"ошибка плеча {100.0 * report['lever']['max_error_vs_exact']:.3f}%"
    )
    print_json(report)
    return EXIT_OK


def command_kin(args, document: ConfigDocument) -> int:
    params = document.vehicle
    geom = nozzle_geometry(args.nozzle, params)
    try:
        if args.cables is not None:
            cables = CableLengths(m1=args.cables[0], m2=args.cables[1], m3=args.cables[2])
            curvature = drive_to_config(cables, geom, params.alpha_max)
        else:
            alpha_deg, beta_deg, length = args.curvature
            curvature = CurvatureConfig(
                bend_angle=math.radians(alpha_deg), bend_azimuth=math.radians(beta_deg), arc_length=length
            )
            cables = config_to_drive(curvature, geom)
    except ValidationError as error:
        raise DomainError(f"недопустимые параметры сопла: {error.errors()[0]['msg']}") from error

    pose = config_to_pose(curvature)
    result = {
        "nozzle": args.nozzle,
        "alpha_deg": math.degrees(curvature.bend_angle),
        "beta_deg": math.degrees(curvature.bend_azimuth),
        "arc_length": curvature.arc_length,
        "cables": [cables.m1, cables.m2, cables.m3],
        "tip": [float(v) for v in pose.translation],
        "rotation": pose.rotation.tolist(),
    }
    if args.omega is not None:
        exact = nozzle_force_moment(curvature, args.omega, geom, params.thrust_coefficient)
        linear = nozzle_force_moment(
            curvature, args.omega, geom, params.thrust_coefficient, lever=params.equivalent_lever
        )
        result.update({
            "force": list(exact.force),
            "moment_exact": list(exact.moment),
            "moment_equivalent": list(linear.moment),
        })
    print_json(result)
    return EXIT_OK


COMMANDS = {
    "run": command_run,
    "sweep": command_sweep,
    "validate": command_validate,
    "kin": command_kin,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Description:
    ---------------
        Точка входа командной строки.

    Args:
    ---------------
        argv: Аргументы (без имени программы); None - sys.argv

    Returns:
    ---------------
        int: 0 - успех, 2 - конфигурация, 3 - ошибка модели,
            4 - расходимость, 1 - прочие ошибки
    """
    args = build_parser().parse_args(argv)
    if args.debug:
        set_console_level(logging.DEBUG)

    try:
        document = load_config(args.config)
        return COMMANDS[args.command](args, document)
    except Exception as error:
        if isinstance(error, FlexbeeError):
            logger.error(f"Команда {args.command} завершилась ошибкой: {error}")
        else:
            logger.exception(f"Критическая ошибка: {error}")
        report_error(error)
        return exit_code(error)
