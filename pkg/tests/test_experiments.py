"""
Unit tests for the experiment registry and the per-mode experiments.
"""

import pytest

from src.core.config import ConfigManager
from src.core.exceptions import ExperimentError
from src.experiments.base import get_experiment_registry, run_experiment
from src.experiments.config import ExperimentConfig
from src.experiments.rus import shot_statistics
from src.protocols.runner import PhaseClass
from src.protocols.worker import ShotRecord

ALL_MODES = {"phase-loop", "compose", "isometry-check", "rus-run", "rus-analyze", "zeno-sweep"}


@pytest.fixture
def settings(tmp_path):
    """Settings with built-in defaults and small shot batches."""
    config_file = tmp_path / "settings.yaml"
    config_file.write_text("runtime:\n  shot_batch_size: 16\n", encoding="utf-8")
    return ConfigManager(env_file=str(tmp_path / ".env"), config_file=str(config_file))


class TestRegistry:
    """Test experiment registration."""

    def test_every_mode_registered(self):
        assert set(get_experiment_registry().list_registered_modes()) == ALL_MODES

    def test_rejects_non_experiment(self):
        with pytest.raises(ValueError):
            get_experiment_registry().register("bogus", dict)

    @pytest.mark.asyncio
    async def test_unregistered_mode(self, settings, mocker):
        mocker.patch.object(get_experiment_registry(), "get_experiment", return_value=None)
        with pytest.raises(ExperimentError, match="No experiment registered"):
            await run_experiment(ExperimentConfig(mode="phase-loop"), settings)


class TestExperiments:
    """Test each experiment's report contents."""

    @pytest.mark.asyncio
    async def test_zeno_sweep_rows(self, settings):
        result = await run_experiment(ExperimentConfig(mode="zeno-sweep", phases=[1.0]), settings)
        report = result.report
        assert [row["refinement"] for row in report.table] == [1, 2, 4, 8, 16, 32, 64]
        assert report.summary["strictly_increasing"] is True
        assert report.summary["max_abs_error"] < 1e-12

    @pytest.mark.asyncio
    async def test_phase_loop_geometry(self, settings):
        result = await run_experiment(ExperimentConfig(mode="phase-loop", phases=[0.8]), settings)
        summary = result.report.summary
        assert summary["phase"] == pytest.approx(0.8, abs=1e-9)
        assert summary["solid_angle"] == pytest.approx(1.6, abs=1e-9)
        assert summary["half_solid_angle"] == pytest.approx(summary["phase"], abs=1e-9)

    @pytest.mark.asyncio
    async def test_compose_with_filter(self, settings):
        config = ExperimentConfig(mode="compose", phases=[0.3, 1.0], refinements=[1, 4])
        summary = (await run_experiment(config, settings)).report.summary
        assert summary["scale"] == pytest.approx(0.25, abs=1e-12)
        assert summary["is_unitary"] is True
        assert summary["target_error"] < 1e-9
        assert len(summary["filter"]) == 2

    @pytest.mark.asyncio
    async def test_rus_run_without_shot_file(self, settings):
        config = ExperimentConfig(mode="rus-run", phases=[0.7], shots=40, seed=5)
        result = await run_experiment(config, settings)
        assert result.shots is None
        assert result.report.summary["completed"] == 40
        assert result.report.holonomy.phase_class == "+1"

    @pytest.mark.asyncio
    async def test_rus_run_keeps_records(self, settings):
        config = ExperimentConfig(mode="rus-run", phases=[0.7], shots=40, seed=5, write_shots=True)
        result = await run_experiment(config, settings)
        assert [r.shot for r in result.shots] == list(range(40))


class TestShotStatistics:
    """Test aggregation of shot records."""

    def test_mixed_records(self):
        records = [
            ShotRecord(shot=0, steps=4, completed=True, phase_class=PhaseClass.PLUS, fidelity=1.0),
            ShotRecord(shot=1, steps=8, completed=True, phase_class=PhaseClass.MINUS, fidelity=0.99),
            ShotRecord(shot=2, steps=10, completed=False, phase_class=PhaseClass.UNKNOWN),
        ]
        stats = shot_statistics(records)
        assert stats["completed"] == 2
        assert stats["success_rate"] == pytest.approx(2 / 3)
        assert stats["mean_steps"] == pytest.approx(6.0)
        assert stats["min_steps"] == 4
        assert stats["max_steps_seen"] == 8
        assert stats["phase_plus"] == 1
        assert stats["phase_minus"] == 1

    def test_no_completed_shots(self):
        stats = shot_statistics([ShotRecord(shot=0, steps=3, completed=False, phase_class=PhaseClass.UNKNOWN)])
        assert stats["completed"] == 0
        assert stats["mean_steps"] == 0.0
        assert stats["standard_error"] == 0.0
