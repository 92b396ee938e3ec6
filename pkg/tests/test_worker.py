"""
Unit tests for the asynchronous shot worker.

Tests that:
- Shot results do not depend on batch size or concurrency
- Batch timeouts surface as ExperimentError and stop the timed-out batch
- The Monte Carlo mean matches the exact expected transit
"""

import asyncio
import math
from threading import Event

import numpy as np
import pytest

from src.core.exceptions import ExperimentError
from src.protocols.analysis import expected_steps
from src.protocols.graph import build_qubit_rus_graph
from src.protocols.runner import PhaseClass
from src.protocols.worker import ShotWorker, run_shot


@pytest.fixture
def qubit_graph():
    """Qubit repeat-until-success graph with phi = pi / 2."""
    return build_qubit_rus_graph(np.pi / 2)


class TestRunShot:
    """Test single seeded shots."""

    def test_reproducible(self, qubit_graph):
        assert run_shot(qubit_graph, 42, 7, 1000) == run_shot(qubit_graph, 42, 7, 1000)

    def test_completed_shot_fields(self, qubit_graph):
        record = run_shot(qubit_graph, 1, 0, 10_000)
        assert record.completed
        assert record.steps >= 4
        assert record.steps % 2 == 0
        assert record.phase_class in (PhaseClass.PLUS, PhaseClass.MINUS)
        assert record.fidelity == pytest.approx(1.0, abs=1e-9)

    def test_incomplete_shot(self, qubit_graph):
        record = run_shot(qubit_graph, 1, 0, 3)
        assert not record.completed
        assert record.steps == 3
        assert record.phase_class == PhaseClass.UNKNOWN
        assert record.fidelity is None


class TestShotWorker:
    """Test batching, ordering and timeouts."""

    @pytest.mark.asyncio
    async def test_results_sorted(self, qubit_graph):
        worker = ShotWorker(qubit_graph, master_seed=3, max_steps=1000, shot_batch_size=7)
        records = await worker.run_shots(50)
        assert [r.shot for r in records] == list(range(50))

    @pytest.mark.asyncio
    async def test_independent_of_batching(self, qubit_graph):
        serial = ShotWorker(qubit_graph, master_seed=3, max_steps=1000, max_concurrent_batches=1, shot_batch_size=200)
        parallel = ShotWorker(qubit_graph, master_seed=3, max_steps=1000, max_concurrent_batches=8, shot_batch_size=9)
        assert await serial.run_shots(200) == await parallel.run_shots(200)

    @pytest.mark.asyncio
    async def test_zero_shots_rejected(self, qubit_graph):
        worker = ShotWorker(qubit_graph, master_seed=0, max_steps=100)
        with pytest.raises(ExperimentError):
            await worker.run_shots(0)

    def test_invalid_limits(self, qubit_graph):
        with pytest.raises(ExperimentError):
            ShotWorker(qubit_graph, master_seed=0, max_steps=100, shot_batch_size=0)

    @pytest.mark.asyncio
    async def test_batch_timeout(self, qubit_graph, mocker):
        worker = ShotWorker(qubit_graph, master_seed=0, max_steps=100, batch_timeout=1)
        mocker.patch("src.protocols.worker.asyncio.wait_for", side_effect=asyncio.TimeoutError)
        with pytest.raises(ExperimentError, match="timed out"):
            await worker.run_shots(10)

    @pytest.mark.asyncio
    async def test_timeout_cancels_running_batch(self, qubit_graph, mocker):
        event = mocker.patch("src.protocols.worker.Event").return_value
        mocker.patch("src.protocols.worker.asyncio.wait_for", side_effect=asyncio.TimeoutError)
        worker = ShotWorker(qubit_graph, master_seed=0, max_steps=100, batch_timeout=1)
        with pytest.raises(ExperimentError):
            await worker.run_shots(10)
        event.set.assert_called()

    def test_cancelled_batch_stops_between_shots(self, qubit_graph, mocker):
        cancelled = Event()

        def shot_then_cancel(*args):
            cancelled.set()
            return run_shot(*args)

        mocker.patch("src.protocols.worker.run_shot", side_effect=shot_then_cancel)
        worker = ShotWorker(qubit_graph, master_seed=0, max_steps=100)
        records = worker._run_batch(0, 10, cancelled)
        assert [r.shot for r in records] == [0]

    def test_sync_run(self, qubit_graph):
        worker = ShotWorker(qubit_graph, master_seed=5, max_steps=1000)
        assert len(worker.run(20)) == 20


class TestMonteCarloTransit:
    """Test the sampled step count against the exact expectation."""

    def test_mean_within_three_standard_errors(self, qubit_graph):
        worker = ShotWorker(qubit_graph, master_seed=42, max_steps=10_000, shot_batch_size=25_000)
        records = worker.run(100_000)

        steps = np.array([r.steps for r in records if r.completed], dtype=float)
        assert steps.size == 100_000
        standard_error = steps.std(ddof=1) / math.sqrt(steps.size)
        assert abs(steps.mean() - expected_steps(qubit_graph)) < 3 * standard_error
