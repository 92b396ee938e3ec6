"""
Custom exceptions for the projective holonomy simulator.
"""


class HolonomyError(Exception):
    """Base exception for all custom exceptions."""

    pass


# ============================================================================
# Configuration Exceptions
# ============================================================================


class ConfigurationError(HolonomyError):
    """Configuration is invalid or missing."""

    pass


# ============================================================================
# Numerics Exceptions
# ============================================================================


class NumericsError(HolonomyError):
    """Dense linear-algebra kernel failure."""

    pass


class DimensionMismatch(NumericsError):
    """Operands live in spaces of different dimension."""

    pass


class ShapeMismatch(DimensionMismatch):
    """Matrices have incompatible shapes."""

    pass


class RankDeficient(NumericsError):
    """Vectors are linearly dependent where full rank was required."""

    pass


class ConvergenceFailure(NumericsError):
    """Iterative decomposition did not converge."""

    pass


class NonFiniteValue(NumericsError):
    """Matrix or vector contains NaN or Inf."""

    pass


# ============================================================================
# Subspace Exceptions
# ============================================================================


class SubspaceError(HolonomyError):
    """Invalid subspace construction or query."""

    pass


class FullSpace(SubspaceError):
    """Subspace is the whole space, so it has no complement."""

    pass


# ============================================================================
# Sequence Exceptions
# ============================================================================


class SequenceError(HolonomyError):
    """Projection sequence or phase loop is invalid."""

    pass


class OrthogonalOutcome(SequenceError):
    """Projection outcome has (numerically) zero probability."""

    pass


class BadIndex(SequenceError):
    """Component index outside 1..k."""

    pass


class DegenerateLoop(SequenceError):
    """Consecutive loop states are orthogonal."""

    pass


class DegeneratePolygon(SequenceError):
    """Spherical polygon has antipodal neighbours or too few vertices."""

    pass


class ZeroAmplitude(SequenceError):
    """Loop amplitude with zero magnitude cannot be equalized."""

    pass


# ============================================================================
# Protocol Exceptions
# ============================================================================


class ProtocolError(HolonomyError):
    """Measurement-graph protocol failure."""

    pass


class InvalidGraph(ProtocolError):
    """Measurement graph violates a structural requirement."""

    pass


class UnsupportedState(ProtocolError):
    """Initial state has weight outside the start subspace."""

    pass


class NonAbsorbing(ProtocolError):
    """No path returns to the start subspace."""

    pass


class IncompleteTrace(ProtocolError):
    """Trace did not complete, so no holonomy can be extracted."""

    pass


class NonIsometricPath(ProtocolError):
    """Projection product along a path is not proportional to a unitary."""

    pass


# ============================================================================
# Experiment / Report Exceptions
# ============================================================================


class ExperimentError(HolonomyError):
    """Experiment orchestration failed."""

    pass


class ReportWriteError(ExperimentError):
    """Failed to render or write a report."""

    pass
