"""
Conditional projection dynamics and the single-ancilla phase construction.

A ``ProjectionSequence`` lists subspaces in the order they are applied, so
its cumulative operator is Gamma = P_n ... P_1 P_0. A phase loop drives one
logical component around a closed path in span{|psi_m>, |psi_a>} while
keeping every other component fixed; the loop amplitude t_m has
arg t_m = phi_m and |t_m| = cos(pi / 4n)^(4n) for n geodesic steps per
quarter arc, approaching 1 as n grows (Zeno limit).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from src.core.exceptions import (
    BadIndex,
    DegenerateLoop,
    DegeneratePolygon,
    DimensionMismatch,
    OrthogonalOutcome,
    SequenceError,
    ZeroAmplitude,
)
from src.projections.numerics import (
    DEFAULT_POLICY,
    ComplexMatrix,
    StateVector,
    TolerancePolicy,
    as_matrix,
)
from src.projections.subspaces import Subspace

logger = logging.getLogger(__name__)


# ============================================================================
# Conditional dynamics
# ============================================================================


@dataclass(frozen=True)
class ProjectionSequence:
    """Ordered subspaces, index 0 applied first."""

    steps: Tuple[Subspace, ...]

    def __post_init__(self):
        steps = tuple(self.steps)
        if not steps:
            raise SequenceError("Projection sequence is empty")
        dims = {s.ambient_dim for s in steps}
        if len(dims) != 1:
            raise DimensionMismatch(f"Sequence mixes ambient dimensions {sorted(dims)}")
        object.__setattr__(self, "steps", steps)

    @property
    def ambient_dim(self) -> int:
        return self.steps[0].ambient_dim

    @property
    def cyclic(self) -> bool:
        """First and last subspaces coincide."""
        return self.steps[0].same_span(self.steps[-1])

    def __len__(self) -> int:
        return len(self.steps)


def apply_projection(
    state: StateVector, s: Subspace, policy: TolerancePolicy = DEFAULT_POLICY
) -> Tuple[StateVector, float]:
    """
    Project a normalized state and renormalize.

    Returns:
        (P|psi> / sqrt(p), p) with p = <psi|P|psi>

    Raises:
        DimensionMismatch: State and subspace dimensions differ
        OrthogonalOutcome: p below tol_norm^2
    """
    if state.dim != s.ambient_dim:
        raise DimensionMismatch(f"State of dim {state.dim} vs subspace in C^{s.ambient_dim}")
    if not state.is_normalized(policy):
        raise SequenceError(f"State must be normalized (norm {state.norm:.12g})")

    projected = s.projector @ state.amplitudes
    probability = float(np.real(np.vdot(projected, projected)))
    if probability < policy.tol_norm**2:
        raise OrthogonalOutcome(f"State is orthogonal to {s!r} (p = {probability:.3e})")

    return StateVector(projected / math.sqrt(probability)), min(probability, 1.0)


def cumulative_operator(seq: ProjectionSequence) -> ComplexMatrix:
    """Gamma = P_n ... P_1 P_0 (temporal order, P_0 acts first)."""
    return reduce(lambda acc, s: s.projector @ acc, seq.steps[1:], np.array(seq.steps[0].projector))


def survival_probability(gamma: npt.ArrayLike, state: StateVector) -> float:
    """p_f = <psi|Gamma^dagger Gamma|psi>."""
    g = as_matrix(gamma)
    if g.shape[1] != state.dim:
        raise DimensionMismatch(f"Operator of shape {g.shape} on state of dim {state.dim}")
    out = g @ state.amplitudes
    return float(np.real(np.vdot(out, out)))


# ============================================================================
# Geometry of 2-level loops
# ============================================================================


def bloch_vector(state: StateVector | npt.ArrayLike) -> np.ndarray:
    """Unit Bloch vector (2 Re a*b, 2 Im a*b, |a|^2 - |b|^2) of a 2-level state."""
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=np.complex128)
    if amps.size != 2:
        raise DimensionMismatch(f"Bloch vector needs a 2-level state, got dim {amps.size}")
    a, b = amps / np.linalg.norm(amps)
    cross = np.conj(a) * b
    return np.array([2 * cross.real, 2 * cross.imag, abs(a) ** 2 - abs(b) ** 2])


def geodesic_arc(a: npt.ArrayLike, b: npt.ArrayLike, steps: int) -> List[np.ndarray]:
    """
    ``steps`` equal-angle geodesic steps from ray a to ray b.

    b is re-phased so <a|b> is real and positive; the returned list has
    steps + 1 unit vectors starting at a and ending on the ray of b.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    overlap = np.vdot(a, b)
    if abs(overlap) < 1e-12:
        raise DegenerateLoop("Geodesic between orthogonal rays is not unique")
    b = b * np.conj(overlap) / abs(overlap)
    delta = math.acos(min(1.0, abs(overlap)))
    if delta == 0.0:
        return [a.copy() for _ in range(steps + 1)]

    points = []
    for s in np.linspace(0.0, 1.0, steps + 1):
        p = (math.sin((1 - s) * delta) * a + math.sin(s * delta) * b) / math.sin(delta)
        points.append(p / np.linalg.norm(p))
    return points


def bargmann_invariant(loop: Sequence[StateVector], policy: TolerancePolicy = DEFAULT_POLICY) -> complex:
    """
    Cyclic overlap product <psi^0|psi^N><psi^N|psi^(N-1)>...<psi^1|psi^0>.

    Equals tr(P_N ... P_1 P_0) for the rank-1 projectors of the loop and is
    unchanged by re-phasing any state.

    Raises:
        SequenceError: Fewer than 3 states, unnormalized, or first != last ray
        DegenerateLoop: Consecutive states orthogonal
    """
    if len(loop) < 3:
        raise SequenceError(f"Loop needs at least 3 states, got {len(loop)}")
    for state in loop:
        if not state.is_normalized(policy):
            raise SequenceError(f"Loop states must be normalized (norm {state.norm:.12g})")

    closing = loop[0].overlap(loop[-1])
    if abs(abs(closing) - 1.0) > policy.tol_phase:
        raise SequenceError("Loop is not closed: first and last states differ")

    product = closing
    for prev, nxt in zip(loop[:-1], loop[1:]):
        overlap = nxt.overlap(prev)
        if abs(overlap) <= policy.tol_norm:
            raise DegenerateLoop("Consecutive loop states are orthogonal")
        product *= overlap
    return complex(product)


# Off-axis directions used as the fan apex for the spherical-excess sum
_APEX_CANDIDATES = [
    np.array(v, dtype=float) / np.linalg.norm(v)
    for v in ([1.0, 2.0, 3.0], [-3.0, 1.0, 2.0], [2.0, -3.0, 1.0], [1.0, 1.0, -3.0], [-2.0, -1.0, -1.0])
]


def solid_angle(bloch_loop: Sequence[npt.ArrayLike], policy: TolerancePolicy = DEFAULT_POLICY) -> float:
    """
    Signed solid angle enclosed by a closed geodesic polygon on the unit sphere.

    Omega is positive for loops that circulate clockwise seen from outside the
    sphere, which is the orientation where arg(bargmann_invariant) = Omega / 2
    under the ``bloch_vector`` map. This is the opposite of the usual
    counterclockwise-positive convention: vertices are listed in the order the
    states are visited, and the Bargmann product pairs each state with the one
    measured before it. Reverse the loop to get the counterclockwise sign.
    The result is reduced to (-2 pi, 2 pi].

    Raises:
        DegeneratePolygon: Open polygon, fewer than 2 distinct vertices, or
            antipodal consecutive vertices
    """
    points = [np.asarray(p, dtype=float) for p in bloch_loop]
    if len(points) < 3:
        raise DegeneratePolygon(f"Closed polygon needs at least 3 points, got {len(points)}")
    points = [p / np.linalg.norm(p) for p in points]
    if np.linalg.norm(points[0] - points[-1]) > 1e-9:
        raise DegeneratePolygon("Polygon is not closed: first and last vertices differ")

    vertices = points[:-1]
    edges = list(zip(vertices, vertices[1:] + vertices[:1]))
    for a, b in edges:
        if np.dot(a, b) <= -1.0 + policy.tol_flat:
            raise DegeneratePolygon("Consecutive vertices are antipodal")

    # Fan from an apex far from every antipode so each triangle term is defined
    apex = max(_APEX_CANDIDATES, key=lambda c: min(1.0 + np.dot(c, v) for v in vertices))

    total = 0.0
    for a, b in edges:
        triple = float(np.dot(apex, np.cross(b, a)))
        denom = 1.0 + float(np.dot(apex, a) + np.dot(a, b) + np.dot(b, apex))
        total += 2.0 * math.atan2(triple, denom)

    # Reduce to (-2 pi, 2 pi]
    omega = math.remainder(total, 4.0 * math.pi)
    return 2.0 * math.pi if omega == -2.0 * math.pi else omega


# ============================================================================
# Single-ancilla phase loops
# ============================================================================


@dataclass(frozen=True)
class PhaseLoopSpec:
    """
    Loop imprinting phase phi on logical component m of a k-dimensional subspace.

    The ambient space is C^(k+1): |psi_j> = |j-1> for j = 1..k and the
    auxiliary level |psi_a> = |k>. ``refinement`` geodesic steps per quarter arc.
    """

    k: int
    m: int
    phi: float
    refinement: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise SequenceError(f"k must be >= 1, got {self.k}")
        if not 1 <= self.m <= self.k:
            raise BadIndex(f"Component m={self.m} outside 1..{self.k}")
        if self.refinement < 1:
            raise SequenceError(f"refinement must be >= 1, got {self.refinement}")

    @property
    def ambient_dim(self) -> int:
        return self.k + 1

    @property
    def loop_length(self) -> int:
        """N_m, the number of projections after the starting one."""
        return 4 * self.refinement


def closed_form_scale(refinement: int) -> float:
    """|t_m| = cos(pi / 4n)^(4n) for n geodesic steps per quarter arc."""
    return math.cos(math.pi / (4 * refinement)) ** (4 * refinement)


def phase_loop_states(spec: PhaseLoopSpec) -> List[StateVector]:
    """
    Loop states in span{|psi_m>, |psi_a>} as 2-level vectors, temporal order.

    The corners are |psi_m>, (|psi_m> + e^{i phi}|psi_a>)/sqrt2, |psi_a>,
    (|psi_m> + |psi_a>)/sqrt2 and back to |psi_m>; each quarter arc is split
    into ``refinement`` equal geodesic steps. Visiting the corners in this
    order gives the cumulative amplitude the phase +phi.
    """
    root = 1.0 / math.sqrt(2.0)
    corners = [
        np.array([1.0, 0.0], dtype=np.complex128),
        np.array([root, root * np.exp(1j * spec.phi)]),
        np.array([0.0, 1.0], dtype=np.complex128),
        np.array([root, root], dtype=np.complex128),
    ]

    points: List[np.ndarray] = [corners[0]]
    for end in corners[1:] + corners[:1]:
        arc = geodesic_arc(points[-1], end, spec.refinement)
        points.extend(arc[1:])
    points[-1] = corners[0]
    return [StateVector(p) for p in points]


def _corner_projectors(phi: float) -> List[np.ndarray]:
    """Rank-1 projectors of the four corners in the form (I + r.sigma)/2."""
    half_phase = 0.5 * complex(math.cos(phi), math.sin(phi))
    return [
        np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.complex128),
        np.array([[0.5, np.conj(half_phase)], [half_phase, 0.5]], dtype=np.complex128),
        np.array([[0.0, 0.0], [0.0, 1.0]], dtype=np.complex128),
        np.array([[0.5, 0.5], [0.5, 0.5]], dtype=np.complex128),
    ]


def _embed_loop_state(spec: PhaseLoopSpec, local: StateVector, block: np.ndarray, label: str) -> Subspace:
    """(sum_{j != m} |psi_j><psi_j|) + |psi_m^l><psi_m^l| as a rank-k subspace."""
    m, a = spec.m - 1, spec.k
    basis = np.zeros((spec.ambient_dim, spec.k), dtype=np.complex128)
    projector = np.zeros((spec.ambient_dim, spec.ambient_dim), dtype=np.complex128)
    for j in range(spec.k):
        if j != m:
            basis[j, j] = 1.0
            projector[j, j] = 1.0
    basis[m, m] = local.amplitudes[0]
    basis[a, m] = local.amplitudes[1]
    projector[np.ix_([m, a], [m, a])] = block
    return Subspace.with_projector(basis, projector, label=label)


def build_phase_loop(spec: PhaseLoopSpec) -> ProjectionSequence:
    """
    Cyclic sequence of rank-k subspaces in C^(k+1) imprinting phi on component m.

    refinement = 1 gives the 5-step loop (4 projections after the start).
    Corner projectors have exact 0, 1/2 and 1 entries, so the unrefined loop
    amplitude has |t|^2 = 1/16 to the last bit.
    """
    n = spec.refinement
    corners = _corner_projectors(spec.phi)
    steps = []
    for index, local in enumerate(phase_loop_states(spec)):
        if index % n == 0:
            block = corners[(index // n) % 4]
        else:
            block = np.outer(local.amplitudes, np.conj(local.amplitudes))
        steps.append(_embed_loop_state(spec, local, block, f"loop{spec.m}[{index}]"))

    logger.debug(f"Built phase loop k={spec.k} m={spec.m} phi={spec.phi:.6g} n={spec.refinement}")
    return ProjectionSequence(tuple(steps))


def phase_loop_amplitude(spec: PhaseLoopSpec) -> complex:
    """t_m = <psi_m|Gamma_m|psi_m> for the loop described by ``spec``."""
    gamma = cumulative_operator(build_phase_loop(spec))
    return complex(gamma[spec.m - 1, spec.m - 1])


# ============================================================================
# Amplitude equalization
# ============================================================================


@dataclass(frozen=True)
class FilterOperator:
    """Kraus operator sum_m d_m |psi_m><psi_m| with 0 < |d_m| <= 1."""

    diagonal: Tuple[complex, ...]

    def __post_init__(self):
        diagonal = tuple(complex(d) for d in self.diagonal)
        for d in diagonal:
            if not 0.0 < abs(d) <= 1.0 + 1e-12:
                raise SequenceError(f"Filter entries must have magnitude in (0, 1], got {abs(d)}")
        object.__setattr__(self, "diagonal", diagonal)

    def matrix(self, ambient_dim: Optional[int] = None) -> ComplexMatrix:
        """Kraus matrix in C^N; components beyond the logical block are filtered out."""
        n = len(self.diagonal) if ambient_dim is None else ambient_dim
        if n < len(self.diagonal):
            raise DimensionMismatch(f"Filter of size {len(self.diagonal)} in dim {n}")
        full = np.zeros(n, dtype=np.complex128)
        full[: len(self.diagonal)] = self.diagonal
        return np.diag(full)

    def apply(self, gamma: npt.ArrayLike) -> ComplexMatrix:
        """Filtered operator F . Gamma."""
        g = as_matrix(gamma)
        return self.matrix(g.shape[0]) @ g


def equalization_filter(t_values: Sequence[complex]) -> FilterOperator:
    """
    Filter reducing every |t_m| to the smallest one, phases untouched.

    Raises:
        ZeroAmplitude: Some |t_m| is zero
    """
    magnitudes = np.abs(np.asarray(t_values, dtype=np.complex128))
    if magnitudes.size == 0 or np.any(magnitudes == 0.0):
        raise ZeroAmplitude("Cannot equalize a zero loop amplitude")
    smallest = magnitudes.min()
    return FilterOperator(tuple(complex(smallest / m) for m in magnitudes))


# ============================================================================
# Composite diagonal unitaries
# ============================================================================


def _compose_loops(phases: Sequence[float], refinements: Sequence[int]) -> ComplexMatrix:
    k = len(phases)
    if k < 1:
        raise SequenceError("Need at least one phase")
    gamma = np.eye(k + 1, dtype=np.complex128)
    for m, (phi, n) in enumerate(zip(phases, refinements), start=1):
        loop = build_phase_loop(PhaseLoopSpec(k=k, m=m, phi=float(phi), refinement=int(n)))
        gamma = cumulative_operator(loop) @ gamma
    return gamma


def compose_diag_unitary(phases: Sequence[float], refinement: int = 1) -> Tuple[ComplexMatrix, float]:
    """
    Run one phase loop per logical component, including phi_m = 0.

    All loops share one refinement, so every |t_m| equals cos(pi/4n)^(4n) and no
    filter is needed.

    Returns:
        (Gamma in C^(k+1), scale) with Gamma's logical block = scale . diag(e^{i phi_m})
    """
    k = len(phases)
    gamma = _compose_loops(phases, [refinement] * k)
    scale = float(np.mean(np.abs(np.diag(gamma)[:k])))
    logger.debug(f"Composed diagonal unitary k={k} n={refinement}: scale={scale:.15g}")
    return gamma, scale


def compose_filtered_unitary(
    phases: Sequence[float], refinements: Sequence[int]
) -> Tuple[ComplexMatrix, float, FilterOperator]:
    """
    Loops with per-component refinements followed by amplitude equalization.

    Returns:
        (filtered Gamma, scale = min |t_m|, filter used)
    """
    if len(refinements) != len(phases):
        raise SequenceError(f"{len(phases)} phases but {len(refinements)} refinements")
    k = len(phases)
    raw = _compose_loops(phases, refinements)
    filt = equalization_filter(np.diag(raw)[:k])
    gamma = filt.apply(raw)
    scale = float(np.min(np.abs(np.diag(raw)[:k])))
    return gamma, scale, filt
