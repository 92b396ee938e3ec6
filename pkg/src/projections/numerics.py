"""
Dense complex linear-algebra kernel and the global tolerance policy.

Matrices are plain ``numpy`` complex arrays (``ComplexMatrix``); states are
wrapped in the immutable ``StateVector`` so their norm is computed once and
shared. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
import scipy.linalg

from src.core.exceptions import (
    ConfigurationError,
    ConvergenceFailure,
    DimensionMismatch,
    NonFiniteValue,
    NumericsError,
    RankDeficient,
    ShapeMismatch,
)

ComplexMatrix = npt.NDArray[np.complex128]


@dataclass(frozen=True)
class TolerancePolicy:
    """Numerical tolerances shared by every module."""

    tol_norm: float = 1e-10
    tol_ortho: float = 1e-10
    tol_flat: float = 1e-8  # singular-value spread threshold
    tol_phase: float = 1e-9

    def __post_init__(self):
        for name in ("tol_norm", "tol_ortho", "tol_flat", "tol_phase"):
            value = getattr(self, name)
            if not (0.0 < value < 1e-3):
                raise ConfigurationError(f"{name} must be in (0, 1e-3), got {value}")


DEFAULT_POLICY = TolerancePolicy()


def as_matrix(m: npt.ArrayLike) -> ComplexMatrix:
    """
    Coerce to a finite, non-empty 2-D complex array.

    Raises:
        ShapeMismatch: Input is not 2-D or has an empty axis
        NonFiniteValue: Input contains NaN or Inf
    """
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeMismatch(f"Expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("Matrix contains NaN or Inf entries")
    return arr


def dagger(m: ComplexMatrix) -> ComplexMatrix:
    """Conjugate transpose."""
    return np.conj(m).T


def max_abs_diff(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """Largest elementwise deviation ||a - b||_max."""
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def is_unitary(m: ComplexMatrix, tol: float) -> bool:
    """True when m is square and m^dagger m equals identity within tol."""
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return max_abs_diff(dagger(m) @ m, np.eye(m.shape[0])) <= tol


@dataclass(frozen=True, eq=False)
class StateVector:
    """
    Pure state amplitudes in a fixed orthonormal basis.

    The amplitude array is copied and made read-only on construction.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        arr = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if arr.size < 1:
            raise DimensionMismatch("State vector must have at least one amplitude")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue("State vector contains NaN or Inf amplitudes")
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    @classmethod
    def from_amplitudes(cls, amplitudes: npt.ArrayLike, normalize: bool = False) -> "StateVector":
        state = cls(np.asarray(amplitudes))
        return state.normalized() if normalize else state

    @classmethod
    def basis(cls, dim: int, index: int) -> "StateVector":
        """Computational basis state |index> in dimension dim."""
        amps = np.zeros(dim, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)

    @cached_property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
        return abs(self.norm - 1.0) <= policy.tol_norm

    def normalized(self) -> "StateVector":
        if self.norm == 0.0:
            raise NumericsError("Cannot normalize the zero vector")
        return StateVector(self.amplitudes / self.norm)

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>."""
        if other.dim != self.dim:
            raise DimensionMismatch(f"Overlap of dim {self.dim} with dim {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __len__(self) -> int:
        return self.dim


VectorLike = Union[StateVector, npt.ArrayLike]


def _as_vector(v: VectorLike) -> np.ndarray:
    if isinstance(v, StateVector):
        return np.array(v.amplitudes)
    return np.asarray(v, dtype=np.complex128).reshape(-1)


def orthonormalize(
    vectors: Sequence[VectorLike],
    policy: TolerancePolicy = DEFAULT_POLICY,
    exact_rank: bool = False,
) -> ComplexMatrix:
    """
    Orthonormal basis for the span of ``vectors``.

    The rank r is the number of singular values of the stacked vectors at or
    above ``tol_ortho`` times the largest (``numerical_rank``). Modified
    Gram-Schmidt with one re-orthogonalization pass then keeps the first r
    directions in order of appearance, skipping vectors whose residual is
    negligible.

    Args:
        vectors: Non-empty list of vectors sharing one dimension N
        policy: Tolerance policy
        exact_rank: Raise instead of dropping dependent vectors

    Returns:
        N x r matrix with orthonormal columns, r = numerical rank

    Raises:
        DimensionMismatch: Empty list or mixed dimensions
        RankDeficient: exact_rank and r < len(vectors), or all vectors zero
    """
    if len(vectors) == 0:
        raise DimensionMismatch("orthonormalize needs at least one vector")

    arrays = [_as_vector(v) for v in vectors]
    dims = {a.size for a in arrays}
    if len(dims) != 1:
        raise DimensionMismatch(f"Vectors have mixed dimensions {sorted(dims)}")
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteValue("Vector contains NaN or Inf amplitudes")

    scale = max(float(np.linalg.norm(a)) for a in arrays)
    if scale == 0.0:
        raise RankDeficient("All vectors are zero")

    rank = numerical_rank(svd(np.column_stack(arrays))[1], policy)
    if exact_rank and rank < len(arrays):
        raise RankDeficient(f"Rank {rank} < {len(arrays)} input vectors")

    columns: list[np.ndarray] = []
    for a in arrays:
        if len(columns) == rank:
            break
        w = a.copy()
        for _ in range(2):
            for q in columns:
                w = w - q * np.vdot(q, w)
        residual = float(np.linalg.norm(w))
        if residual <= policy.tol_ortho * scale:
            continue
        columns.append(w / residual)

    return np.column_stack(columns)


def svd(m: npt.ArrayLike) -> Tuple[ComplexMatrix, np.ndarray, ComplexMatrix]:
    """
    Thin singular value decomposition m = left . diag(values) . right^dagger.

    Returns:
        (left, singular values in descending order, right)

    Raises:
        ConvergenceFailure: LAPACK did not converge with either driver
    """
    arr = as_matrix(m)
    try:
        u, s, vh = scipy.linalg.svd(arr, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        # gesdd occasionally fails where the slower QR-iteration driver succeeds
        try:
            u, s, vh = scipy.linalg.svd(arr, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as e:
            raise ConvergenceFailure(f"SVD did not converge: {e}")
    return u, s, dagger(vh)


def numerical_rank(singular_values: Iterable[float], policy: TolerancePolicy = DEFAULT_POLICY) -> int:
    """Count singular values above tol_ortho times the largest one."""
    values = np.asarray(list(singular_values), dtype=float)
    if values.size == 0 or values.max() == 0.0:
        return 0
    return int(np.count_nonzero(values >= policy.tol_ortho * values.max()))
