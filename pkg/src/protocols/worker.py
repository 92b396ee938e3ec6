"""
Shot Worker

Asynchronous Monte Carlo worker that runs independent protocol shots in
concurrent batches. Each shot derives its own random stream from
(master seed, shot index), so results do not depend on batch size, batch
scheduling or concurrency.
"""

import asyncio
import logging
from dataclasses import dataclass
from threading import Event
from typing import List, Optional

import numpy as np

from src.core.exceptions import ExperimentError
from src.projections.numerics import DEFAULT_POLICY, StateVector, TolerancePolicy
from src.protocols.graph import MeasurementGraph
from src.protocols.runner import PhaseClass, classify_phase, mix_seed, run_protocol, target_overlap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShotRecord:
    """Outcome of one seeded run."""

    shot: int
    steps: int
    completed: bool
    phase_class: PhaseClass
    fidelity: Optional[float] = None  # |<U psi_0|psi_final>| for completed shots


def random_logical_state(graph: MeasurementGraph, rng: np.random.Generator) -> StateVector:
    """Haar-random normalized state in the graph's start subspace."""
    k = graph.logical_dim
    coords = rng.normal(size=k) + 1j * rng.normal(size=k)
    coords /= np.linalg.norm(coords)
    return StateVector(graph.start_subspace.basis @ coords)


def run_shot(
    graph: MeasurementGraph,
    master_seed: int,
    index: int,
    max_steps: int,
    policy: TolerancePolicy = DEFAULT_POLICY,
) -> ShotRecord:
    """
    Run shot ``index``: draw a random logical state and run the protocol once.

    The initial state and the outcome stream come from two seeds derived from
    mix_seed(master_seed, index).
    """
    stream = mix_seed(master_seed, index)
    state = random_logical_state(graph, np.random.default_rng(stream))
    trace = run_protocol(graph, state, seed=mix_seed(stream, 0), max_steps=max_steps, record_states=False, policy=policy)

    fidelity = None
    phase_class = PhaseClass.UNKNOWN
    if trace.completed:
        fidelity = min(abs(target_overlap(graph, state, trace.final_state)), 1.0)
        phase_class = classify_phase(graph, state, trace.final_state)

    return ShotRecord(
        shot=index,
        steps=trace.step_count,
        completed=trace.completed,
        phase_class=phase_class,
        fidelity=fidelity,
    )


class ShotWorker:
    """
    Asynchronous shot runner using asyncio for concurrent batches.

    Features:
    - Shots split into fixed-size batches
    - Up to max_concurrent_batches batches in flight (worker threads)
    - Per-batch timeout enforcement
    - Results returned in shot order whatever the completion order

    Usage:
        worker = ShotWorker(graph, master_seed=42, max_steps=10_000)
        records = await worker.run_shots(100_000)

        # Or from synchronous code:
        records = worker.run(100_000)
    """

    def __init__(
        self,
        graph: MeasurementGraph,
        master_seed: int,
        max_steps: int,
        max_concurrent_batches: int = 4,
        shot_batch_size: int = 2000,
        batch_timeout: int = 600,
        policy: TolerancePolicy = DEFAULT_POLICY,
    ):
        """
        Initialize shot worker.

        Args:
            graph: Measurement graph every shot runs on
            master_seed: Seed all shot streams derive from
            max_steps: Step budget per shot
            max_concurrent_batches: Maximum batches running at once (default 4)
            shot_batch_size: Shots per batch (default 2000)
            batch_timeout: Batch timeout in seconds (default 600)
            policy: Tolerance policy
        """
        if max_concurrent_batches < 1 or shot_batch_size < 1 or batch_timeout < 1:
            raise ExperimentError("Worker limits must all be >= 1")

        self.graph = graph
        self.master_seed = master_seed
        self.max_steps = max_steps
        self.max_concurrent_batches = max_concurrent_batches
        self.shot_batch_size = shot_batch_size
        self.batch_timeout = batch_timeout
        self.policy = policy

        logger.info(
            f"ShotWorker initialized (graph: {graph.name}, "
            f"max_concurrent_batches: {max_concurrent_batches}, "
            f"batch_size: {shot_batch_size}, timeout: {batch_timeout}s)"
        )

    async def run_shots(self, shots: int) -> List[ShotRecord]:
        """
        Run ``shots`` shots concurrently in batches.

        Returns:
            ShotRecords sorted by shot index

        Raises:
            ExperimentError: A batch timed out or failed
        """
        if shots < 1:
            raise ExperimentError(f"shots must be >= 1, got {shots}")

        semaphore = asyncio.Semaphore(self.max_concurrent_batches)
        bounds = [(start, min(start + self.shot_batch_size, shots)) for start in range(0, shots, self.shot_batch_size)]

        async def limited(start: int, stop: int) -> List[ShotRecord]:
            async with semaphore:
                return await self._run_batch_with_timeout(start, stop)

        batches = await asyncio.gather(*(limited(start, stop) for start, stop in bounds))

        records = sorted((r for batch in batches for r in batch), key=lambda r: r.shot)
        completed = sum(r.completed for r in records)
        logger.info(f"✓ {len(records)} shots finished ({completed} completed)")
        return records

    async def _run_batch_with_timeout(self, start: int, stop: int) -> List[ShotRecord]:
        """
        Run one batch in a worker thread with timeout enforcement.

        wait_for cannot stop the thread itself, so a timed-out batch is told
        to stop through ``cancelled`` and exits before its next shot.

        Args:
            start: First shot index
            stop: One past the last shot index
        """
        logger.debug(f"Processing shots {start}..{stop - 1}")
        cancelled = Event()
        try:
            return await asyncio.wait_for(
                asyncio.to_thread(self._run_batch, start, stop, cancelled),
                timeout=self.batch_timeout,
            )
        except asyncio.TimeoutError:
            cancelled.set()
            logger.error(f"✗ Shots {start}..{stop - 1} timed out after {self.batch_timeout}s")
            raise ExperimentError(f"Shot batch {start}..{stop - 1} timed out after {self.batch_timeout} seconds")

    def _run_batch(self, start: int, stop: int, cancelled: Optional[Event] = None) -> List[ShotRecord]:
        records = []
        for i in range(start, stop):
            if cancelled is not None and cancelled.is_set():
                logger.debug(f"Batch {start}..{stop - 1} cancelled after {len(records)} shots")
                break
            records.append(run_shot(self.graph, self.master_seed, i, self.max_steps, self.policy))
        return records

    def run(self, shots: int) -> List[ShotRecord]:
        """Run shots from synchronous code (blocks until done)."""
        return asyncio.run(self.run_shots(shots))
