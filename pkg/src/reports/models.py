"""
Report models written by every experiment.
"""

import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, model_validator

SCHEMA_VERSION = "1"

ComplexPair = Tuple[float, float]


def complex_pair(z: complex) -> ComplexPair:
    """(real, imag) for JSON output."""
    z = complex(z)
    return (float(z.real), float(z.imag))


def matrix_pairs(m: npt.ArrayLike) -> List[List[ComplexPair]]:
    """Row-major matrix entries as (real, imag) pairs."""
    return [[complex_pair(z) for z in row] for row in np.asarray(m, dtype=np.complex128)]


def _check_finite(value: Any, path: str) -> None:
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"{path} is not finite")
    elif isinstance(value, dict):
        for key, item in value.items():
            _check_finite(item, f"{path}.{key}")
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _check_finite(item, f"{path}[{i}]")


class HolonomyBlock(BaseModel):
    """Induced k x k unitary and how well it matches the target."""

    model_config = ConfigDict(extra="forbid")

    matrix: List[List[ComplexPair]]
    fidelity: float
    global_phase: ComplexPair
    phase_class: Optional[str] = None


class RunReport(BaseModel):
    """
    Structured result of one experiment run.

    ``summary`` holds the headline statistics; ``table`` holds per-item rows
    (refinement sweeps, per-edge diagnostics). The holonomy block is present
    only for modes that complete a loop.
    """

    model_config = ConfigDict(extra="forbid")

    schema_version: str = SCHEMA_VERSION
    mode: str
    config: Dict[str, Any]
    summary: Dict[str, Any]
    holonomy: Optional[HolonomyBlock] = None
    table: Optional[List[Dict[str, Any]]] = None
    shots_file: Optional[str] = None

    @model_validator(mode="after")
    def check_finite(self):
        _check_finite(self.model_dump(), "report")
        return self
