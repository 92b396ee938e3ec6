"""
Repeat-until-success measurement graphs.

Each node is a subspace; the measurement at a node has two outcome branches,
each projecting onto the subspace of a successor node. The four-stage
protocol moves the logical subspace S out through A+/A- into the checkpoint
C, back through B+/B- and into S again, picking up diag(e^{i phi_j}):

    S --m1--> A+ | A-          (always proceeds)
    A --m2--> S (retry) | C
    C --m3--> B+ | B-          (always proceeds)
    B --m4--> C (retry) | S (success)

Every branch has probability 1/2 regardless of the state, because every edge
is a projective isometry.
"""

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from src.core.exceptions import DimensionMismatch, InvalidGraph
from src.projections.numerics import (
    DEFAULT_POLICY,
    ComplexMatrix,
    TolerancePolicy,
    as_matrix,
    dagger,
    is_unitary,
    max_abs_diff,
)
from src.projections.subspaces import IsometryReport, Subspace, isometry_report

logger = logging.getLogger(__name__)


class NodeRole(str, Enum):
    START = "start"
    INTERMEDIATE = "intermediate"
    CHECKPOINT = "checkpoint"


@dataclass(frozen=True)
class GraphNode:
    node_id: str
    subspace: Subspace
    role: NodeRole = NodeRole.INTERMEDIATE


@dataclass(frozen=True)
class Branch:
    """One measurement outcome: project onto ``subspace`` and move to ``successor``."""

    successor: str
    subspace: Subspace
    completes: bool = False  # a successful return to the start node


@dataclass(frozen=True, eq=False)
class MeasurementGraph:
    """
    Directed graph of subspaces with a two-outcome measurement at every node.

    ``target_unitary`` is the k x k holonomy a successful traversal induces on
    the start subspace, up to a +-1 global phase.
    """

    nodes: Dict[str, GraphNode]
    measurements: Dict[str, Tuple[Branch, Branch]]
    start_node: str
    target_unitary: ComplexMatrix
    name: str = "rus"
    frame: Optional[ComplexMatrix] = None

    @property
    def ambient_dim(self) -> int:
        return self.start_subspace.ambient_dim

    @property
    def start_subspace(self) -> Subspace:
        return self.nodes[self.start_node].subspace

    @property
    def logical_dim(self) -> int:
        return self.start_subspace.rank

    def node_order(self) -> List[str]:
        """Node ids with the start node first, then in insertion order."""
        return [self.start_node] + [n for n in self.nodes if n != self.start_node]

    def branch_report(
        self, node_id: str, outcome: int, policy: TolerancePolicy = DEFAULT_POLICY
    ) -> IsometryReport:
        """Isometry diagnostics of the edge node -> branch subspace."""
        branch = self.measurements[node_id][outcome]
        return isometry_report(self.nodes[node_id].subspace, branch.subspace, policy)

    def validate(self, policy: TolerancePolicy = DEFAULT_POLICY) -> List[str]:
        """
        Check the structural invariants of the graph.

        Returns:
            List of problems (empty if the graph is valid)
        """
        errors: List[str] = []

        if self.start_node not in self.nodes:
            return [f"start node {self.start_node!r} is not a node"]
        if self.nodes[self.start_node].role != NodeRole.START:
            errors.append(f"start node {self.start_node!r} does not have the start role")

        k = self.target_unitary.shape[0]
        if self.target_unitary.shape != (self.logical_dim, self.logical_dim):
            errors.append(f"target unitary is {self.target_unitary.shape}, start subspace has rank {self.logical_dim}")
        elif not is_unitary(self.target_unitary, policy.tol_flat):
            errors.append("target unitary is not unitary")

        for node_id, node in self.nodes.items():
            if node.subspace.ambient_dim != self.ambient_dim:
                errors.append(f"node {node_id!r} lives in C^{node.subspace.ambient_dim}")
                continue
            if node.subspace.rank != k:
                errors.append(f"node {node_id!r} has rank {node.subspace.rank}, expected {k}")
            if node_id not in self.measurements:
                errors.append(f"node {node_id!r} has no measurement")
                continue

            branches = self.measurements[node_id]
            for outcome, branch in enumerate(branches):
                where = f"{node_id!r} outcome {outcome}"
                if branch.successor not in self.nodes:
                    errors.append(f"{where}: unknown successor {branch.successor!r}")
                    continue
                if not branch.subspace.same_span(self.nodes[branch.successor].subspace, policy):
                    errors.append(f"{where}: branch subspace differs from node {branch.successor!r}")
                if branch.completes and branch.successor != self.start_node:
                    errors.append(f"{where}: completing branch must return to the start node")
                report = isometry_report(node.subspace, branch.subspace, policy)
                if not report.is_isometry:
                    errors.append(f"{where}: not an isometry ({'; '.join(report.reasons)})")

            # Outcome projectors must resolve the identity on the node's support
            total = branches[0].subspace.projector + branches[1].subspace.projector
            basis = node.subspace.basis
            if max_abs_diff(total @ basis, basis) > policy.tol_ortho * 100:
                errors.append(f"node {node_id!r}: outcome projectors do not sum to identity on the node")

        errors.extend(self._reachability_errors())
        return errors

    def _reachability_errors(self) -> List[str]:
        edges = {
            node_id: [b.successor for b in branches if not b.completes and b.successor in self.nodes]
            for node_id, branches in self.measurements.items()
        }

        seen = {self.start_node}
        queue = deque([self.start_node])
        while queue:
            for nxt in edges.get(queue.popleft(), []):
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)

        errors = [f"node {n!r} is unreachable from the start node" for n in self.nodes if n not in seen]

        # Backwards search from nodes owning a completing branch
        can_finish = {n for n, bs in self.measurements.items() if any(b.completes for b in bs)}
        if not can_finish:
            return errors + ["no branch completes a return to the start node"]
        changed = True
        while changed:
            changed = False
            for node_id, successors in edges.items():
                if node_id not in can_finish and any(s in can_finish for s in successors):
                    can_finish.add(node_id)
                    changed = True
        errors.extend(f"node {n!r} cannot reach a successful return" for n in seen if n not in can_finish)
        return errors


def _block_frame(frame: Optional[npt.ArrayLike], k: int) -> Optional[ComplexMatrix]:
    if frame is None:
        return None
    f = as_matrix(frame)
    if f.shape != (k, k):
        raise DimensionMismatch(f"Frame must be {k} x {k}, got {f.shape}")
    if not is_unitary(f, 1e-10):
        raise InvalidGraph("Frame is not unitary")
    block = np.zeros((2 * k, 2 * k), dtype=np.complex128)
    block[:k, :k] = f
    block[k:, k:] = f
    return block


def build_general_rus_graph(
    phases: Sequence[float], frame: Optional[npt.ArrayLike] = None
) -> MeasurementGraph:
    """
    k-dimensional repeat-until-success graph in C^(2k) inducing diag(e^{i phi_j}).

    Logical levels |j> = |0>..|k-1> are paired with partners |j+k>. The
    third-stage subspaces use e^{i phi_j}|j> +- |j+k>.

    Args:
        phases: One phase per logical level
        frame: Optional k x k unitary; every basis except S is rotated by
            blockdiag(frame, frame) and the target becomes
            frame . diag(e^{i phi}) . frame^dagger

    Raises:
        InvalidGraph: Empty phases or non-unitary frame
    """
    k = len(phases)
    if k < 1:
        raise InvalidGraph("Need at least one phase")
    dim = 2 * k
    root = 1.0 / np.sqrt(2.0)

    def span(columns: List[np.ndarray], label: str) -> Subspace:
        return Subspace(np.column_stack(columns), label=label)

    def e(i: int) -> np.ndarray:
        v = np.zeros(dim, dtype=np.complex128)
        v[i] = 1.0
        return v

    s = span([e(j) for j in range(k)], "S")
    a_plus = span([root * (e(j) + e(j + k)) for j in range(k)], "A+")
    a_minus = span([root * (e(j) - e(j + k)) for j in range(k)], "A-")
    c = span([e(j + k) for j in range(k)], "C")
    b_plus = span([root * (np.exp(1j * phases[j]) * e(j) + e(j + k)) for j in range(k)], "B+")
    b_minus = span([root * (np.exp(1j * phases[j]) * e(j) - e(j + k)) for j in range(k)], "B-")

    target = np.diag(np.exp(1j * np.asarray(phases, dtype=float))).astype(np.complex128)

    rotation = _block_frame(frame, k)
    if rotation is not None:
        # S is invariant under the block rotation; its basis stays canonical so
        # the target is expressed in computational coordinates
        a_plus, a_minus, c, b_plus, b_minus = (x.rotated(rotation) for x in (a_plus, a_minus, c, b_plus, b_minus))
        f = rotation[:k, :k]
        target = f @ target @ dagger(f)

    nodes = {
        "S": GraphNode("S", s, NodeRole.START),
        "A+": GraphNode("A+", a_plus),
        "A-": GraphNode("A-", a_minus),
        "C": GraphNode("C", c, NodeRole.CHECKPOINT),
        "B+": GraphNode("B+", b_plus),
        "B-": GraphNode("B-", b_minus),
    }
    to_s_retry = Branch("S", s)
    to_c = Branch("C", c)
    measurements = {
        "S": (Branch("A+", a_plus), Branch("A-", a_minus)),
        "A+": (to_s_retry, to_c),
        "A-": (to_s_retry, to_c),
        "C": (Branch("B+", b_plus), Branch("B-", b_minus)),
        "B+": (to_c, Branch("S", s, completes=True)),
        "B-": (to_c, Branch("S", s, completes=True)),
    }

    graph = MeasurementGraph(
        nodes=nodes,
        measurements=measurements,
        start_node="S",
        target_unitary=target,
        name=f"rus-k{k}",
        frame=None if rotation is None else rotation[:k, :k],
    )
    logger.debug(f"Built RUS graph k={k} in C^{dim}")
    return graph


def build_qubit_rus_graph(phi: float, frame: Optional[npt.ArrayLike] = None) -> MeasurementGraph:
    """
    Qubit graph in C^4 inducing diag(1, e^{i phi}) on span{|0>, |1>}.

    The B+- subspaces carry the phase on the |1> component:
    span{(|0> +- |2>)/sqrt2, (e^{i phi}|1> +- |3>)/sqrt2}.
    """
    graph = build_general_rus_graph([0.0, phi], frame=frame)
    return MeasurementGraph(
        nodes=graph.nodes,
        measurements=graph.measurements,
        start_node=graph.start_node,
        target_unitary=graph.target_unitary,
        name="rus-qubit",
        frame=graph.frame,
    )
