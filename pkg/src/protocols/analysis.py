"""
Analytics for measurement graphs: absorbing-chain transit statistics and
holonomy extraction from completed traces.

Because every edge is an isometry, each branch probability is the squared
scale of the edge and does not depend on the state, so the step count of a
run is governed by a Markov chain on the node graph alone. Completing
branches are the absorbing transitions.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from src.core.exceptions import (
    IncompleteTrace,
    InvalidGraph,
    NonAbsorbing,
    NonIsometricPath,
    ShapeMismatch,
)
from src.projections.numerics import (
    DEFAULT_POLICY,
    ComplexMatrix,
    TolerancePolicy,
    as_matrix,
    dagger,
    svd,
)
from src.protocols.graph import MeasurementGraph
from src.protocols.runner import TraversalTrace

logger = logging.getLogger(__name__)


# ============================================================================
# Absorbing Markov chain
# ============================================================================


def transition_structure(
    graph: MeasurementGraph, policy: TolerancePolicy = DEFAULT_POLICY
) -> Tuple[List[str], np.ndarray, np.ndarray]:
    """
    Node-level chain of a measurement graph.

    Returns:
        (node order with start first, Q[i, j] = P(i -> j without completing),
        r[i] = P(complete from i))

    Raises:
        InvalidGraph: Some edge is not an isometry, so its probability depends on the state
    """
    order = graph.node_order()
    index = {node_id: i for i, node_id in enumerate(order)}
    n = len(order)
    q = np.zeros((n, n))
    r = np.zeros(n)

    for node_id in order:
        for outcome, branch in enumerate(graph.measurements[node_id]):
            report = graph.branch_report(node_id, outcome, policy)
            if not report.is_isometry:
                raise InvalidGraph(
                    f"Edge {node_id!r} outcome {outcome} is not an isometry: {'; '.join(report.reasons)}"
                )
            p = report.transition_probability
            if branch.completes:
                r[index[node_id]] += p
            else:
                q[index[node_id], index[branch.successor]] += p

    return order, q, r


def _fundamental_matrix(q: np.ndarray) -> np.ndarray:
    n = q.shape[0]
    try:
        return scipy.linalg.solve(np.eye(n) - q, np.eye(n))
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise NonAbsorbing(f"Chain has no absorbing return: {e}")


def mean_steps_to_absorption(q: npt.ArrayLike, r: npt.ArrayLike, start: int = 0) -> float:
    """
    Expected number of steps to absorption, t = N . 1 with N = (I - Q)^-1.

    Args:
        q: Transient-to-transient transition matrix
        r: Per-state absorption probability
        start: Index of the starting state

    Raises:
        NonAbsorbing: I - Q singular, or absorption from ``start`` is not certain
    """
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    fundamental = _fundamental_matrix(q)
    absorbed = float((fundamental @ r)[start])
    if not np.isfinite(absorbed) or abs(absorbed - 1.0) > 1e-9:
        raise NonAbsorbing(f"Absorption probability from state {start} is {absorbed}")
    return float(fundamental.sum(axis=1)[start])


def expected_steps(graph: MeasurementGraph, policy: TolerancePolicy = DEFAULT_POLICY) -> float:
    """Exact mean number of measurements until a successful return to start."""
    _, q, r = transition_structure(graph, policy)
    value = mean_steps_to_absorption(q, r, 0)
    logger.debug(f"expected_steps({graph.name}) = {value}")
    return value


def step_variance(graph: MeasurementGraph, policy: TolerancePolicy = DEFAULT_POLICY) -> float:
    """Variance of the step count, ((2N - I) t - t^2) at the start node."""
    _, q, r = transition_structure(graph, policy)
    mean_steps_to_absorption(q, r, 0)
    fundamental = _fundamental_matrix(q)
    t = fundamental.sum(axis=1)
    second = (2.0 * fundamental - np.eye(q.shape[0])) @ t
    return float(second[0] - t[0] ** 2)


def completion_probability(
    graph: MeasurementGraph, max_steps: int, policy: TolerancePolicy = DEFAULT_POLICY
) -> float:
    """
    Probability that a run completes within ``max_steps`` measurements.

    Sums P(T = n) = e_start Q^(n-1) r for n = 1..max_steps; the shortfall
    from 1 decays exponentially in the budget.
    """
    _, q, r = transition_structure(graph, policy)
    distribution = np.zeros(q.shape[0])
    distribution[0] = 1.0
    total = 0.0
    for _ in range(max_steps):
        total += float(distribution @ r)
        distribution = distribution @ q
        if distribution.sum() < 1e-300:
            break
    return min(total, 1.0)


# ============================================================================
# Holonomy extraction
# ============================================================================


@dataclass(frozen=True, eq=False)
class HolonomyResult:
    """Unitary induced on the start subspace by a completed traversal."""

    unitary: ComplexMatrix
    fidelity_to_target: float
    global_phase: complex
    scale: float  # singular value of the renormalized path operator


def path_operator(graph: MeasurementGraph, trace: TraversalTrace) -> ComplexMatrix:
    """
    Product of the branch projectors along ``trace``, each step divided by
    sqrt(p) so the result stays O(1) for long runs.
    """
    gamma = np.eye(graph.ambient_dim, dtype=np.complex128)
    for step in trace.steps:
        branch = graph.measurements[step.node_id][step.outcome]
        gamma = (branch.subspace.projector @ gamma) / np.sqrt(step.probability)
    return gamma


def extract_holonomy(
    graph: MeasurementGraph, trace: TraversalTrace, policy: TolerancePolicy = DEFAULT_POLICY
) -> HolonomyResult:
    """
    Reconstruct the k x k map on the start subspace from the projections of a trace.

    The map does not depend on the initial state because every step is an
    isometry; a non-flat singular spectrum means the path was not.

    Raises:
        IncompleteTrace: The trace did not return to the start node
        NonIsometricPath: The path operator is not proportional to a unitary
    """
    if not trace.completed or trace.final_node != graph.start_node:
        raise IncompleteTrace(f"Trace of {trace.step_count} steps did not complete")

    basis = graph.start_subspace.basis
    block = dagger(basis) @ path_operator(graph, trace) @ basis

    _, values, _ = svd(block)
    if values.max() == 0.0 or values.max() - values.min() > policy.tol_flat * values.max():
        raise NonIsometricPath(f"Path operator singular values {values} are not flat")
    scale = float(values.mean())
    unitary = block / scale

    k = unitary.shape[0]
    overlap = complex(np.trace(dagger(graph.target_unitary) @ unitary)) / k
    fidelity = min(abs(overlap), 1.0)
    global_phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0 + 0j

    return HolonomyResult(unitary=unitary, fidelity_to_target=fidelity, global_phase=global_phase, scale=scale)


def equal_up_to_phase(
    u: npt.ArrayLike,
    v: npt.ArrayLike,
    allowed: Iterable[complex] = (1.0, -1.0),
    tol: Optional[float] = None,
) -> bool:
    """
    True iff some c in ``allowed`` has ||u - c v||_max < tol (default tol_phase).

    Raises:
        ShapeMismatch: u and v are not square matrices of one shape
    """
    a, b = as_matrix(u), as_matrix(v)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"Cannot compare shapes {a.shape} and {b.shape}")
    tol = DEFAULT_POLICY.tol_phase if tol is None else tol
    return any(float(np.max(np.abs(a - c * b))) < tol for c in allowed)
