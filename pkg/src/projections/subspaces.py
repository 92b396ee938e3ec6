"""
Subspace and projector algebra.

A degenerate projector is identified with its +1 eigenspace, stored as an
orthonormal basis. The isometry test decides whether projecting one subspace
onto another preserves inner products up to a common scale, which needs the
overlap spectrum to be flat, free of shared directions and non-orthogonal.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from src.core.exceptions import DimensionMismatch, FullSpace, NumericsError, SubspaceError
from src.projections.numerics import (
    DEFAULT_POLICY,
    ComplexMatrix,
    StateVector,
    TolerancePolicy,
    VectorLike,
    as_matrix,
    dagger,
    max_abs_diff,
    orthonormalize,
    svd,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Subspace:
    """
    k-dimensional subspace of C^N given by an N x k orthonormal basis.

    Use ``Subspace.from_vectors`` when the spanning vectors are not already
    orthonormal.
    """

    basis: ComplexMatrix
    label: str = ""

    def __post_init__(self):
        basis = np.array(as_matrix(self.basis))
        n, k = basis.shape
        if k > n:
            raise SubspaceError(f"Rank {k} exceeds ambient dimension {n}")
        gram_error = max_abs_diff(dagger(basis) @ basis, np.eye(k))
        if gram_error > DEFAULT_POLICY.tol_ortho * max(1, k) * 10:
            raise SubspaceError(f"Basis columns are not orthonormal (Gram error {gram_error:.3e})")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def from_vectors(
        cls,
        vectors: Sequence[VectorLike],
        policy: TolerancePolicy = DEFAULT_POLICY,
        label: str = "",
    ) -> "Subspace":
        """Span of linearly independent vectors (RankDeficient otherwise)."""
        return cls(orthonormalize(vectors, policy, exact_rank=True), label=label)

    @classmethod
    def with_projector(cls, basis: npt.ArrayLike, projector: npt.ArrayLike, label: str = "") -> "Subspace":
        """
        Subspace whose projector entries are given exactly instead of being
        recomputed as basis . basis^dagger.

        Raises:
            SubspaceError: projector does not match the basis
        """
        s = cls(basis, label=label)
        p = np.array(as_matrix(projector))
        if p.shape != (s.ambient_dim, s.ambient_dim):
            raise SubspaceError(f"Projector of shape {p.shape} for a subspace of C^{s.ambient_dim}")
        if max_abs_diff(p, s.basis @ dagger(s.basis)) > DEFAULT_POLICY.tol_ortho * 10:
            raise SubspaceError("Projector does not match the basis")
        p.setflags(write=False)
        s.__dict__["projector"] = p
        return s

    @classmethod
    def from_basis_states(cls, dim: int, indices: Sequence[int], label: str = "") -> "Subspace":
        """Span of computational basis states, e.g. span{|0>, |1>}."""
        basis = np.zeros((dim, len(indices)), dtype=np.complex128)
        for col, index in enumerate(indices):
            basis[index, col] = 1.0
        return cls(basis, label=label)

    @property
    def ambient_dim(self) -> int:
        return int(self.basis.shape[0])

    @property
    def rank(self) -> int:
        return int(self.basis.shape[1])

    @cached_property
    def projector(self) -> ComplexMatrix:
        p = self.basis @ dagger(self.basis)
        p.setflags(write=False)
        return p

    def weight(self, state: StateVector) -> float:
        """Probability <psi|P|psi> of projecting ``state`` onto this subspace."""
        if state.dim != self.ambient_dim:
            raise DimensionMismatch(f"State of dim {state.dim} vs subspace in dim {self.ambient_dim}")
        coords = dagger(self.basis) @ state.amplitudes
        return float(np.real(np.vdot(coords, coords)))

    def contains(self, state: StateVector, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
        """True when ``state`` has no weight outside this subspace."""
        return state.norm**2 - self.weight(state) <= policy.tol_norm

    def same_span(self, other: "Subspace", policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
        if other.ambient_dim != self.ambient_dim or other.rank != self.rank:
            return False
        return max_abs_diff(self.projector, other.projector) <= policy.tol_ortho * 100

    def rotated(self, unitary: npt.ArrayLike, label: Optional[str] = None) -> "Subspace":
        """Image of this subspace under an N x N unitary."""
        u = as_matrix(unitary)
        if u.shape != (self.ambient_dim, self.ambient_dim):
            raise DimensionMismatch(f"Rotation of shape {u.shape} in dim {self.ambient_dim}")
        return Subspace(u @ self.basis, label=self.label if label is None else label)

    def __repr__(self) -> str:
        name = f" {self.label!r}" if self.label else ""
        return f"<Subspace{name} rank {self.rank} in C^{self.ambient_dim}>"


@dataclass(frozen=True)
class IsometryReport:
    """Verdict and diagnostics for projecting ``source`` onto ``target``."""

    is_isometry: bool
    scale: float
    principal_angles: Tuple[float, ...]
    singular_values: Tuple[float, ...]
    shared_dim: int
    orthogonal_dim: int
    required_min_ambient: int
    ambient_dim: int
    trivial_identity: bool
    reasons: Tuple[str, ...] = ()
    # Diagnostics that do not enter the verdict
    notes: Tuple[str, ...] = ()

    @property
    def transition_probability(self) -> float:
        """t^2, the state-independent outcome probability when is_isometry."""
        return self.scale**2


def projector_matrix(s: Subspace) -> ComplexMatrix:
    """N x N orthogonal projector basis . basis^dagger."""
    return np.array(s.projector)


def complement(s: Subspace, policy: TolerancePolicy = DEFAULT_POLICY) -> Subspace:
    """
    Orthogonal complement, whose projector is identity - P.

    Singular values of basis^dagger below tol_ortho times the largest count
    as null directions.

    Raises:
        FullSpace: s is the whole space
    """
    if s.rank == s.ambient_dim:
        raise FullSpace(f"Subspace of rank {s.rank} fills C^{s.ambient_dim}")

    perp = scipy.linalg.null_space(dagger(s.basis), rcond=policy.tol_ortho)
    if perp.shape[1] != s.ambient_dim - s.rank:
        raise NumericsError(f"Complement has rank {perp.shape[1]}, expected {s.ambient_dim - s.rank}")

    label = f"~{s.label}" if s.label else ""
    return Subspace(perp, label=label)


def _overlap_values(s0: Subspace, s1: Subspace) -> np.ndarray:
    if s0.ambient_dim != s1.ambient_dim:
        raise DimensionMismatch(f"Subspaces live in C^{s0.ambient_dim} and C^{s1.ambient_dim}")
    _, values, _ = svd(dagger(s1.basis) @ s0.basis)
    return np.clip(values, 0.0, 1.0)


def principal_angles(s0: Subspace, s1: Subspace) -> np.ndarray:
    """
    Principal angles in ascending order, min(k0, k1) of them.

    theta_j = arccos(sigma_j) where sigma_j are the singular values of the
    basis overlap; zero angles count shared directions.
    """
    return np.arccos(_overlap_values(s0, s1))


def isometry_report(
    source: Subspace, target: Subspace, policy: TolerancePolicy = DEFAULT_POLICY
) -> IsometryReport:
    """
    Decide whether projecting onto ``target`` acts isometrically on ``source``.

    Overlap singular values are compared directly (not the angles) to avoid
    arccos precision loss near zero. Unequal ranks give a report, not an error.

    Raises:
        DimensionMismatch: Different ambient dimensions
    """
    values = _overlap_values(source, target)
    k = source.rank
    tol = policy.tol_flat

    shared_dim = int(np.count_nonzero(values >= 1.0 - tol))
    orthogonal_dim = int(np.count_nonzero(values <= tol))
    spread = float(values.max() - values.min())
    trivial_identity = source.rank == target.rank and shared_dim == values.size

    reasons = []
    notes = []
    if source.rank != target.rank:
        reasons.append(f"rank mismatch: source {source.rank}, target {target.rank}")
    if source.ambient_dim < 2 * k:
        # Two k-dim subspaces of C^N share at least 2k - N directions, so the
        # shared-subspace check below already rejects these pairs
        notes.append(f"ambient < 2k ({source.ambient_dim} < {2 * k})")
    if trivial_identity:
        reasons.append("trivial_identity: subspaces coincide")
    elif shared_dim:
        reasons.append(f"shared subspace of dimension {shared_dim}")
    if orthogonal_dim:
        reasons.append(f"{orthogonal_dim} orthogonal direction(s)")
    if spread > tol:
        reasons.append(f"overlap spectrum not flat (spread {spread:.3e})")

    report = IsometryReport(
        is_isometry=not reasons,
        scale=float(values.mean()),
        principal_angles=tuple(float(a) for a in np.arccos(values)),
        singular_values=tuple(float(v) for v in values),
        shared_dim=shared_dim,
        orthogonal_dim=orthogonal_dim,
        required_min_ambient=2 * k,
        ambient_dim=source.ambient_dim,
        trivial_identity=trivial_identity,
        reasons=tuple(reasons),
        notes=tuple(notes),
    )
    logger.debug(f"isometry_report {source!r} -> {target!r}: {report.is_isometry} {report.reasons}")
    return report


def canonical_isometry_pair(
    k: int,
    theta: float,
    ambient: Optional[int] = None,
    phases: Optional[Sequence[float]] = None,
) -> Tuple[Subspace, Subspace]:
    """
    Source span{|j>} and target span{cos(theta)|j> + e^{i phase_j} sin(theta)|k+j>}.

    Every pair member is at principal angle theta, so the target is an
    isometry of the source whenever 0 < theta < pi/2.

    Raises:
        SubspaceError: ambient < 2k
    """
    ambient = 2 * k if ambient is None else ambient
    if ambient < 2 * k:
        raise SubspaceError(f"Canonical pair needs ambient >= 2k, got {ambient} < {2 * k}")
    phases = [0.0] * k if phases is None else list(phases)
    if len(phases) != k:
        raise SubspaceError(f"Expected {k} phases, got {len(phases)}")

    source = Subspace.from_basis_states(ambient, range(k), label="source")
    basis = np.zeros((ambient, k), dtype=np.complex128)
    for j, phase in enumerate(phases):
        basis[j, j] = np.cos(theta)
        basis[k + j, j] = np.exp(1j * phase) * np.sin(theta)
    return source, Subspace(basis, label="target")


def canonical_complement(
    k: int,
    theta: float,
    ambient: Optional[int] = None,
    phases: Optional[Sequence[float]] = None,
) -> Subspace:
    """
    Other outcome of the canonical measurement: span{sin(theta)|j> - e^{i phase_j} cos(theta)|k+j>}.

    It is an isometry of the source with scale sin(theta) whenever the
    canonical target is one with scale cos(theta).
    """
    ambient = 2 * k if ambient is None else ambient
    if ambient < 2 * k:
        raise SubspaceError(f"Canonical pair needs ambient >= 2k, got {ambient} < {2 * k}")
    phases = [0.0] * k if phases is None else list(phases)
    if len(phases) != k:
        raise SubspaceError(f"Expected {k} phases, got {len(phases)}")

    basis = np.zeros((ambient, k), dtype=np.complex128)
    for j, phase in enumerate(phases):
        basis[j, j] = np.sin(theta)
        basis[k + j, j] = -np.exp(1j * phase) * np.cos(theta)
    return Subspace(basis, label="target~")


def qubit_measurement_pair(theta: float, phi: float = 0.0, varphi: float = 0.0) -> Tuple[Subspace, Subspace]:
    """
    Two-outcome measurement on a qubit embedded in span{|0>, |1>} of C^4.

    Returns:
        (P1, P1~) with P1 = {cos t|0> + e^{i phi} sin t|2>, cos t|1> + e^{i varphi} sin t|3>}
        and its complement {sin t|0> - e^{i phi} cos t|2>, sin t|1> - e^{i varphi} cos t|3>}.
        Outcome probabilities are cos^2 t and sin^2 t for any qubit state.
    """
    c, s = np.cos(theta), np.sin(theta)
    e_phi, e_varphi = np.exp(1j * phi), np.exp(1j * varphi)

    p1 = np.zeros((4, 2), dtype=np.complex128)
    p1[0, 0], p1[2, 0] = c, e_phi * s
    p1[1, 1], p1[3, 1] = c, e_varphi * s

    p1_tilde = np.zeros((4, 2), dtype=np.complex128)
    p1_tilde[0, 0], p1_tilde[2, 0] = s, -e_phi * c
    p1_tilde[1, 1], p1_tilde[3, 1] = s, -e_varphi * c

    return Subspace(p1, label="P1"), Subspace(p1_tilde, label="P1~")


def random_subspace(ambient_dim: int, rank: int, rng: np.random.Generator, label: str = "") -> Subspace:
    """Haar-random rank-k subspace of C^N (QR of a complex Gaussian matrix)."""
    if not 1 <= rank <= ambient_dim:
        raise SubspaceError(f"Need 1 <= rank <= ambient_dim, got rank {rank} in C^{ambient_dim}")
    gaussian = rng.normal(size=(ambient_dim, rank)) + 1j * rng.normal(size=(ambient_dim, rank))
    q, _ = np.linalg.qr(gaussian)
    return Subspace(q, label=label)
