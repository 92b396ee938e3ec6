"""
End-to-end tests for the command-line interface.

Tests that:
- Every subcommand writes a report matching the published JSON schema
- Identical seeds give byte-identical reports
- Configuration problems exit with code 2 and runtime failures with code 1,
  in both cases without writing a report
"""

import json
from pathlib import Path

import jsonschema
import pytest
from click.testing import CliRunner

from src.core.config import reset_config
from src.core.exceptions import ProtocolError
from src.main import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, cli, run_command
from src.reports.writer import REPORT_FILENAME, SHOTS_FILENAME

SCHEMA_PATH = Path(__file__).parent.parent / "schemas" / "run_report.schema.json"
FIXTURES = Path(__file__).parent / "fixtures"

MODE_ARGS = {
    "phase-loop": ["--k", "2", "--component", "2", "--phi", "1.0", "--refinement", "2"],
    "compose": ["--phases", "0.3,1.1,2.5", "--refinement", "2"],
    "isometry-check": ["--k", "2", "--theta", "0.5236"],
    "rus-run": ["--phi", "0.7", "--shots", "200", "--seed", "3", "--write-shots"],
    "rus-analyze": ["--graph-family", "general", "--phases", "0.4,1.3"],
    "zeno-sweep": ["--phi", "1.0", "--refinement", "8"],
}


@pytest.fixture(autouse=True)
def isolated_cli(monkeypatch, tmp_path):
    """Run every CLI test from an empty directory with no HOLONOMY_* settings."""
    for name in ["HOLONOMY_SEED", "HOLONOMY_LOG_LEVEL", "HOLONOMY_LOG_FILE", "HOLONOMY_SETTINGS"]:
        monkeypatch.setenv(name, "placeholder")
        monkeypatch.delenv(name)
    monkeypatch.chdir(tmp_path)
    reset_config()
    yield tmp_path
    reset_config()


@pytest.fixture(scope="module")
def schema():
    return json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))


def load_report(directory: Path) -> dict:
    return json.loads((directory / REPORT_FILENAME).read_text(encoding="utf-8"))


class TestSubcommands:
    """Test each subcommand end to end."""

    @pytest.mark.parametrize("mode", sorted(MODE_ARGS))
    def test_report_matches_schema(self, mode, schema, tmp_path):
        out = tmp_path / mode
        code = run_command([mode, *MODE_ARGS[mode], "--output-path", str(out)])
        assert code == EXIT_OK

        report = load_report(out)
        jsonschema.Draft202012Validator(schema).validate(report)
        assert report["mode"] == mode
        assert "output_path" not in report["config"]

    def test_phase_loop_quarter_amplitude(self, tmp_path):
        assert run_command(["phase-loop", "--phi", "0", "--output-path", str(tmp_path)]) == EXIT_OK
        summary = load_report(tmp_path)["summary"]
        assert summary["scale_squared"] == 0.0625
        assert summary["projections"] == 5

    def test_compose_recovers_phases(self, tmp_path):
        assert run_command(["compose", "--phases", "0,3.141592653589793", "--output-path", str(tmp_path)]) == EXIT_OK
        report = load_report(tmp_path)
        assert report["summary"]["scale"] == pytest.approx(0.25, abs=1e-12)
        assert report["summary"]["target_error"] < 1e-9

    def test_isometry_below_twice_the_dimension(self, tmp_path):
        args = ["isometry-check", "--k", "2", "--ambient", "3", "--shots", "100", "--output-path", str(tmp_path)]
        assert run_command(args) == EXIT_OK
        summary = load_report(tmp_path)["summary"]
        assert summary["verdict"] is False
        assert summary["reason"] == "ambient < 2k"
        assert summary["isometries_found"] == 0
        assert summary["min_shared_dim"] >= summary["expected_min_shared_dim"] == 1

    def test_rus_analyze_statistics(self, tmp_path):
        assert run_command(["rus-analyze", "--phi", "0.7", "--output-path", str(tmp_path)]) == EXIT_OK
        report = load_report(tmp_path)
        assert report["summary"]["expected_steps"] == pytest.approx(8.0, abs=1e-12)
        assert report["summary"]["minimal_path_probability"] == pytest.approx(0.0625, abs=1e-12)
        assert report["holonomy"]["phase_class"] == "+1"
        assert len(report["table"]) == 12

    def test_rus_run_writes_shots(self, tmp_path):
        args = ["rus-run", "--phi", "0.7", "--shots", "50", "--write-shots", "--output-path", str(tmp_path)]
        assert run_command(args) == EXIT_OK
        assert load_report(tmp_path)["shots_file"] == SHOTS_FILENAME
        lines = (tmp_path / SHOTS_FILENAME).read_text(encoding="utf-8").splitlines()
        assert lines[0] == "shot,steps,completed,phase_class"
        assert len(lines) == 51

    def test_config_file(self, tmp_path):
        out = tmp_path / "from-file"
        args = ["rus-run", "--config", str(FIXTURES / "rus_run.yaml"), "--output-path", str(out)]
        assert run_command(args) == EXIT_OK
        config = load_report(out)["config"]
        assert config["seed"] == 7
        assert config["shots"] == 200

    def test_seed_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HOLONOMY_SEED", "9")
        assert run_command(["phase-loop", "--output-path", str(tmp_path)]) == EXIT_OK
        assert load_report(tmp_path)["config"]["seed"] == 9


class TestDeterminism:
    """Test reproducibility of reports."""

    def test_identical_seeds_identical_bytes(self, tmp_path):
        outputs = []
        for name in ("first", "second"):
            out = tmp_path / name
            args = ["rus-run", "--phi", "1.5707963", "--shots", "500", "--seed", "42", "--output-path", str(out)]
            assert run_command(args) == EXIT_OK
            outputs.append((out / REPORT_FILENAME).read_bytes())
        assert outputs[0] == outputs[1]

    def test_different_seeds_differ(self, tmp_path):
        for seed in ("1", "2"):
            args = ["rus-run", "--phi", "0.5", "--shots", "200", "--seed", seed, "--output-path", str(tmp_path / seed)]
            assert run_command(args) == EXIT_OK
        assert load_report(tmp_path / "1")["summary"] != load_report(tmp_path / "2")["summary"]


class TestExitCodes:
    """Test error handling at the command-line boundary."""

    def test_malformed_config_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"phases": [0.1,', encoding="utf-8")
        out = tmp_path / "out"
        assert run_command(["rus-run", "--config", str(bad), "--output-path", str(out)]) == EXIT_CONFIG
        assert not (out / REPORT_FILENAME).exists()

    def test_unknown_option(self, tmp_path):
        assert run_command(["phase-loop", "--no-such-flag", "--output-path", str(tmp_path)]) == EXIT_CONFIG
        assert not (tmp_path / REPORT_FILENAME).exists()

    def test_phi_and_phases_conflict(self, tmp_path):
        args = ["rus-run", "--phi", "0.1", "--phases", "0.2", "--output-path", str(tmp_path)]
        assert run_command(args) == EXIT_CONFIG

    def test_invalid_value(self, tmp_path):
        assert run_command(["rus-run", "--phases", "0.1,0.2", "--output-path", str(tmp_path)]) == EXIT_CONFIG
        assert not (tmp_path / REPORT_FILENAME).exists()

    def test_bad_environment_seed(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HOLONOMY_SEED", "not-a-number")
        assert run_command(["phase-loop", "--output-path", str(tmp_path)]) == EXIT_CONFIG

    def test_runtime_failure(self, tmp_path, mocker):
        mocker.patch("src.main.run_experiment", side_effect=ProtocolError("boom"))
        out = tmp_path / "out"
        assert run_command(["rus-run", "--phi", "0.1", "--output-path", str(out)]) == EXIT_FAILURE
        assert not (out / REPORT_FILENAME).exists()


class TestClickInvocation:
    """Test the click group through CliRunner."""

    def test_help_lists_every_mode(self):
        result = CliRunner().invoke(cli, ["--help"], obj={})
        assert result.exit_code == 0
        for mode in MODE_ARGS:
            assert mode in result.output

    def test_success_message(self, tmp_path):
        result = CliRunner().invoke(cli, ["phase-loop", "--phi", "0.5", "--output-path", str(tmp_path)], obj={})
        assert result.exit_code == 0
        assert "Report written" in result.output
        assert (tmp_path / REPORT_FILENAME).exists()
