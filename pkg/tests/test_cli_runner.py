import filecmp
import json
import math
import os

import pytest

from src.cli import cli_runner
from src.cli.cli_runner import main
from src.cli.settings import ConfigDocument, defaulted_fields, dump_config, load_config, parse_config
from src.core.errors import ConfigError

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_CONFIG = os.path.join(ROOT, "config", "default_config.json")


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    monkeypatch.setattr(cli_runner.env_config, "FLEXBEE_OUTPUT_DIR", "")


def _error(stderr: str) -> dict:
    lines = [line for line in stderr.splitlines() if line.startswith('{"error"')]
    assert lines, stderr
    return json.loads(lines[-1])


# === Конфигурация ===

def test_empty_document_uses_defaults():
    document = parse_config("{}")
    assert document == ConfigDocument()
    assert {"hover", "circle", "mode_switch", "grasp_perch"} <= set(document.scenarios)
    assert "vehicle" in defaulted_fields(document)


def test_config_syntax_error_has_position():
    with pytest.raises(ConfigError) as error:
        parse_config('{"vehicle": {"mass": }}', "bad.json")
    assert error.value.message.startswith("bad.json:1:")


def test_config_rejects_unknown_and_invalid_fields():
    with pytest.raises(ConfigError) as error:
        parse_config('{"vehicle": {"mas": 1.0}}')
    assert "vehicle.mas" in error.value.message
    with pytest.raises(ConfigError) as error:
        parse_config('{"vehicle": {"mass": -1.0}}')
    assert "vehicle.mass" in error.value.message


def test_shipped_config_loads():
    document = load_config(DEFAULT_CONFIG)
    assert document.vehicle == ConfigDocument().vehicle
    assert document.scenarios["grasp_pole"].reference.target.kind.value == "pole"
    assert "gains" in defaulted_fields(document)
    with pytest.raises(ConfigError):
        load_config(os.path.join(ROOT, "config", "missing.json"))


def test_dumped_config_parses_back():
    document = load_config(DEFAULT_CONFIG)
    assert parse_config(dump_config(document)) == document


# === Команды ===

def test_kin_from_cables(capsys):
    assert main(["kin", "--cables", "0.11", "0.12", "0.12"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["alpha_deg"] == pytest.approx(math.degrees(0.266667), abs=1e-4)
    assert result["beta_deg"] == pytest.approx(90.0)
    assert result["arc_length"] == pytest.approx(0.35 / 3.0)


def test_kin_from_curvature_with_speed(capsys):
    assert main(["kin", "--curvature", "0", "0", "0.12", "--nozzle", "2", "--omega", "1000"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["cables"] == pytest.approx([0.12, 0.12, 0.12])
    assert result["tip"] == pytest.approx([0.0, 0.0, 0.12])
    assert result["force"] == pytest.approx([0.0, 0.0, 1.0])
    assert result["moment_exact"] == pytest.approx(result["moment_equivalent"])


def test_kin_unrealizable_bend(capsys):
    assert main(["kin", "--cables", "0.08", "0.12", "0.12"]) == 3
    assert _error(capsys.readouterr().err)["error"] == "realizability"


def test_validate_report(capsys):
    assert main(["validate"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["rank"] == 6
    assert report["identity_error"] < 1.0e-10
    assert report["hover_omega_in_bounds"] is True
    assert report["equivalence_bound_ok"] is True
    assert report["grasp_determinant_straight"] == 0.0


def test_run_writes_outputs(tmp_path, capsys):
    assert main(["run", "free_fall", "--out", str(tmp_path)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["scenario"] == "free_fall"
    assert os.path.isfile(tmp_path / "free_fall.csv")
    assert os.path.isfile(tmp_path / "free_fall_metrics.json")


def test_output_directory_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(cli_runner.env_config, "FLEXBEE_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", "free_fall"]) == 0
    assert os.path.isfile(tmp_path / "env" / "free_fall.csv")


def test_unknown_scenario(capsys):
    assert main(["run", "barrel_roll"]) == 2
    assert _error(capsys.readouterr().err)["error"] == "config"


def test_invalid_step_override(tmp_path, capsys):
    assert main(["run", "free_fall", "--dt", "0.02", "--out", str(tmp_path)]) == 2


def test_broken_config_file(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"vehicle": [', encoding="utf-8")
    assert main(["validate", "--config", str(path)]) == 2
    assert _error(capsys.readouterr().err)["message"].startswith(str(path))


def test_divergence_exit_code(tmp_path, capsys):
    path = tmp_path / "tight.json"
    path.write_text('{"simulation": {"divergence_bound": 5.0}}', encoding="utf-8")
    assert main(["run", "free_fall", "--config", str(path), "--out", str(tmp_path)]) == 4
    payload = _error(capsys.readouterr().err)
    assert payload["error"] == "divergence"
    assert payload["t"] == 0.0


def test_sweep_runs_selected_scenarios(tmp_path, capsys):
    path = tmp_path / "short.json"
    path.write_text(json.dumps({"scenarios": {
        "a": {"name": "a", "duration": 0.2, "initial_state": {"position": [0, 0, -1]}},
        "b": {"name": "b", "duration": 0.1, "initial_state": {"position": [0, 0, -1]}, "seed": 3,
              "force_noise_std": 0.01},
    }}), encoding="utf-8")
    assert main(["sweep", "--config", str(path), "--out", str(tmp_path / "out")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert set(summary) == {"a", "b"}
    assert os.path.isfile(tmp_path / "out" / "b_metrics.json")


def test_repeated_run_is_byte_identical(tmp_path, capsys):
    for folder in ("first", "second"):
        assert main(["run", "circle", "--seed", "3", "--out", str(tmp_path / folder)]) == 0
    capsys.readouterr()
    assert filecmp.cmp(tmp_path / "first" / "circle.csv", tmp_path / "second" / "circle.csv", shallow=False)
    assert filecmp.cmp(
        tmp_path / "first" / "circle_metrics.json", tmp_path / "second" / "circle_metrics.json", shallow=False
    )


def test_config_path_is_not_taken_from_environment(tmp_path, monkeypatch, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"vehicle": [', encoding="utf-8")
    monkeypatch.setenv("FLEXBEE_CONFIG_PATH", str(path))
    assert not hasattr(cli_runner.env_config, "FLEXBEE_CONFIG_PATH")
    assert main(["validate"]) == 0
    assert json.loads(capsys.readouterr().out)["rank"] == 6
