"""
Stochastic execution of measurement graphs.

A run starts from a state in the start subspace, samples each two-outcome
measurement with its exact conditional probability and stops when a
completing branch is taken or the step budget runs out. Running out of steps
is a normal result, not an error.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.exceptions import ProtocolError, UnsupportedState
from src.projections.numerics import DEFAULT_POLICY, StateVector, TolerancePolicy
from src.projections.sequences import apply_projection
from src.protocols.graph import MeasurementGraph

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1

# Rounding accumulated over long runs stays far below this
PHASE_CLASS_TOLERANCE = 1e-6


def mix_seed(master: int, index: int) -> int:
    """
    SplitMix64 finalizer of master + (index + 1) * golden gamma.

    Shot i of a run seeded with ``master`` draws from
    ``np.random.default_rng(mix_seed(master, i))``, so every shot is
    reproducible on its own regardless of execution order.
    """
    z = (master + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class PhaseClass(str, Enum):
    PLUS = "+1"
    MINUS = "-1"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class TraceStep:
    node_id: str
    outcome: int
    probability: float
    successor: str


@dataclass(frozen=True, eq=False)
class TraversalTrace:
    """One realized path through a measurement graph."""

    steps: Tuple[TraceStep, ...]
    initial_state: StateVector
    final_state: StateVector
    final_node: str
    completed: bool
    holonomy_phase_class: PhaseClass
    states: Tuple[StateVector, ...] = ()  # state after each step, when recorded

    @property
    def step_count(self) -> int:
        return len(self.steps)


def target_overlap(graph: MeasurementGraph, initial: StateVector, final: StateVector) -> complex:
    """<U psi_0|psi_final> for the graph's target U acting on the start subspace."""
    basis = graph.start_subspace.basis
    expected = basis @ (graph.target_unitary @ (basis.conj().T @ initial.amplitudes))
    return complex(np.vdot(expected, final.amplitudes))


def classify_phase(graph: MeasurementGraph, initial: StateVector, final: StateVector) -> PhaseClass:
    """+1 or -1 when the final state is +-U|psi_0>, unknown otherwise."""
    overlap = target_overlap(graph, initial, final)
    if abs(overlap - 1.0) <= PHASE_CLASS_TOLERANCE:
        return PhaseClass.PLUS
    if abs(overlap + 1.0) <= PHASE_CLASS_TOLERANCE:
        return PhaseClass.MINUS
    return PhaseClass.UNKNOWN


def run_protocol(
    graph: MeasurementGraph,
    state: StateVector,
    seed: int,
    max_steps: int,
    forced_outcomes: Optional[Sequence[int]] = None,
    record_states: bool = True,
    policy: TolerancePolicy = DEFAULT_POLICY,
) -> TraversalTrace:
    """
    Run the graph from its start node until success or ``max_steps``.

    Args:
        graph: Measurement graph
        state: Normalized state supported on the start subspace
        seed: Stream seed for ``np.random.default_rng``
        max_steps: Step budget (a successful loop needs at least 4)
        forced_outcomes: Outcomes to take first instead of sampling
        record_states: Keep the state after every step
        policy: Tolerance policy

    Returns:
        TraversalTrace; identical seeds give identical traces

    Raises:
        UnsupportedState: State not normalized or has weight outside the start subspace
        OrthogonalOutcome: A forced outcome has zero probability
    """
    if max_steps < 1:
        raise ProtocolError(f"max_steps must be >= 1, got {max_steps}")
    if state.dim != graph.ambient_dim:
        raise UnsupportedState(f"State of dim {state.dim} for a graph in C^{graph.ambient_dim}")
    if not state.is_normalized(policy):
        raise UnsupportedState(f"Initial state must be normalized (norm {state.norm:.12g})")
    outside = 1.0 - graph.start_subspace.weight(state)
    if outside > policy.tol_norm:
        raise UnsupportedState(f"State has weight {outside:.3e} outside the start subspace")

    rng = np.random.default_rng(seed & _MASK64)
    script = list(forced_outcomes or [])
    projectors: Dict[str, Tuple[np.ndarray, np.ndarray]] = {
        node_id: (branches[0].subspace.projector, branches[1].subspace.projector)
        for node_id, branches in graph.measurements.items()
    }

    node = graph.start_node
    current = state
    steps: List[TraceStep] = []
    states: List[StateVector] = []
    completed = False

    while len(steps) < max_steps:
        if script:
            outcome = int(script.pop(0))
            if outcome not in (0, 1):
                raise ProtocolError(f"Forced outcome must be 0 or 1, got {outcome}")
        else:
            projected = projectors[node][0] @ current.amplitudes
            p0 = float(np.real(np.vdot(projected, projected)))
            outcome = 0 if rng.random() < p0 else 1

        branch = graph.measurements[node][outcome]
        current, probability = apply_projection(current, branch.subspace, policy)
        steps.append(TraceStep(node, outcome, probability, branch.successor))
        if record_states:
            states.append(current)
        node = branch.successor

        if branch.completes:
            completed = True
            break

    phase_class = classify_phase(graph, state, current) if completed else PhaseClass.UNKNOWN
    return TraversalTrace(
        steps=tuple(steps),
        initial_state=state,
        final_state=current,
        final_node=node,
        completed=completed,
        holonomy_phase_class=phase_class,
        states=tuple(states),
    )
