"""
Unit tests for the dense linear-algebra kernel and tolerance policy.
"""

import numpy as np
import pytest

from src.core.exceptions import (
    ConfigurationError,
    DimensionMismatch,
    NonFiniteValue,
    NumericsError,
    RankDeficient,
    ShapeMismatch,
)
from src.projections.numerics import (
    DEFAULT_POLICY,
    StateVector,
    TolerancePolicy,
    as_matrix,
    dagger,
    is_unitary,
    numerical_rank,
    orthonormalize,
    svd,
)


class TestTolerancePolicy:
    """Test tolerance bounds."""

    def test_defaults(self):
        assert DEFAULT_POLICY.tol_norm == 1e-10
        assert DEFAULT_POLICY.tol_flat == 1e-8

    @pytest.mark.parametrize("value", [0.0, -1e-9, 1e-3, 0.5])
    def test_out_of_range_rejected(self, value):
        with pytest.raises(ConfigurationError):
            TolerancePolicy(tol_phase=value)


class TestMatrixGuards:
    """Test matrix coercion."""

    def test_as_matrix_complex(self):
        m = as_matrix([[1, 2], [3, 4]])
        assert m.dtype == np.complex128
        assert m.shape == (2, 2)

    def test_as_matrix_rejects_vector(self):
        with pytest.raises(ShapeMismatch):
            as_matrix([1, 2, 3])

    def test_as_matrix_rejects_nan(self):
        with pytest.raises(NonFiniteValue):
            as_matrix([[1.0, np.nan]])

    def test_shape_mismatch_is_dimension_mismatch(self):
        assert issubclass(ShapeMismatch, DimensionMismatch)

    def test_is_unitary(self):
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        assert is_unitary(h, 1e-12)
        assert not is_unitary(2 * h, 1e-12)
        assert not is_unitary(np.ones((2, 3)), 1e-12)


class TestStateVector:
    """Test state vector wrapper."""

    def test_read_only_copy(self):
        source = np.array([1.0, 0.0])
        state = StateVector(source)
        source[0] = 5.0
        assert state.amplitudes[0] == 1.0
        with pytest.raises(ValueError):
            state.amplitudes[0] = 2.0

    def test_normalized(self):
        state = StateVector.from_amplitudes([3, 4j], normalize=True)
        assert state.is_normalized()
        assert state.amplitudes[1] == pytest.approx(0.8j)

    def test_zero_cannot_normalize(self):
        with pytest.raises(NumericsError):
            StateVector(np.zeros(3)).normalized()

    def test_overlap_is_antilinear_in_first_argument(self):
        a = StateVector(np.array([1j, 0]))
        b = StateVector(np.array([1, 0]))
        assert a.overlap(b) == pytest.approx(-1j)

    def test_overlap_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            StateVector.basis(2, 0).overlap(StateVector.basis(3, 0))

    def test_rejects_inf(self):
        with pytest.raises(NonFiniteValue):
            StateVector(np.array([np.inf, 0]))


class TestOrthonormalize:
    """Test Gram-Schmidt basis construction."""

    def test_orthonormal_columns(self):
        rng = np.random.default_rng(3)
        vectors = [rng.normal(size=5) + 1j * rng.normal(size=5) for _ in range(3)]
        q = orthonormalize(vectors)
        assert q.shape == (5, 3)
        assert np.allclose(dagger(q) @ q, np.eye(3), atol=1e-12)

    def test_first_column_follows_first_vector(self):
        q = orthonormalize([[0, 2j, 0], [1, 1, 0]])
        assert np.allclose(q[:, 0], [0, 1j, 0])

    def test_dependent_vector_dropped(self):
        q = orthonormalize([[1, 0, 0], [2, 0, 0], [0, 1, 0]])
        assert q.shape == (3, 2)

    def test_exact_rank_raises(self):
        with pytest.raises(RankDeficient):
            orthonormalize([[1, 1], [2, 2]], exact_rank=True)

    def test_all_zero(self):
        with pytest.raises(RankDeficient):
            orthonormalize([[0, 0], [0, 0]])

    def test_empty(self):
        with pytest.raises(DimensionMismatch):
            orthonormalize([])

    def test_mixed_dimensions(self):
        with pytest.raises(DimensionMismatch):
            orthonormalize([[1, 0], [1, 0, 0]])

    def test_two_vector_example(self):
        q = orthonormalize([[1, 0, 1, 0], [1, 0, -1, 0]])
        r = 1 / np.sqrt(2)
        assert np.allclose(q[:, 0], [r, 0, r, 0], atol=1e-15)
        assert np.allclose(q[:, 1], [r, 0, -r, 0], atol=1e-15)

    def test_idempotent(self):
        rng = np.random.default_rng(8)
        vectors = [rng.normal(size=6) + 1j * rng.normal(size=6) for _ in range(4)]
        q = orthonormalize(vectors)
        again = orthonormalize(list(q.T))
        assert np.allclose(again, q, atol=1e-12)

    def test_rank_matches_numerical_rank(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            dim = int(rng.integers(1, 7))
            count = int(rng.integers(1, 7))
            inner = int(rng.integers(1, min(dim, count) + 1))
            left = rng.normal(size=(dim, inner)) + 1j * rng.normal(size=(dim, inner))
            right = rng.normal(size=(inner, count))
            stacked = left @ right
            q = orthonormalize(list(stacked.T))
            assert q.shape[1] == numerical_rank(svd(stacked)[1])

    def test_nearly_dependent_vector_dropped(self):
        vectors = [[1, 0, 0], [1, 1e-13, 0]]
        assert orthonormalize(vectors).shape == (3, 1)
        with pytest.raises(RankDeficient):
            orthonormalize(vectors, exact_rank=True)

    def test_rank_follows_policy(self):
        vectors = [[1, 0, 0], [1, 1e-7, 0]]
        assert orthonormalize(vectors).shape == (3, 2)
        assert orthonormalize(vectors, TolerancePolicy(tol_ortho=1e-6)).shape == (3, 1)


class TestSvd:
    """Test singular value helpers."""

    def test_reconstruction(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            rows, cols = (int(d) for d in rng.integers(1, 9, size=2))
            m = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
            left, values, right = svd(m)
            width = min(rows, cols)
            assert np.all(np.diff(values) <= 0)
            assert np.allclose(left @ np.diag(values) @ dagger(right), m, atol=1e-12)
            assert np.allclose(dagger(left) @ left, np.eye(width), atol=1e-12)
            assert np.allclose(dagger(right) @ right, np.eye(width), atol=1e-12)

    @pytest.mark.parametrize(
        "m, expected",
        [
            ([[3, 0], [0, 1]], [3.0, 1.0]),
            ([[0.5, 0.5], [0.5, 0.5]], [1.0, 0.0]),
            ([[np.cos(np.pi / 4), 0], [0, np.cos(np.pi / 4)]], [1 / np.sqrt(2), 1 / np.sqrt(2)]),
        ],
    )
    def test_known_values(self, m, expected):
        assert np.allclose(svd(m)[1], expected, atol=1e-15)

    def test_numerical_rank(self):
        assert numerical_rank([1.0, 0.5, 1e-14]) == 2
        assert numerical_rank([0.0, 0.0]) == 0
        assert numerical_rank([1e-14, 1.0]) == 1
