"""
Isometry criterion experiment.

With ambient >= 2k the canonical pair at angle theta and its complement are
checked, together with the state-independence of the transition
probability. Below 2k no isometry exists; a random search over ``shots``
subspace pairs confirms that none is found.
"""

import numpy as np

from src.experiments.base import BaseExperiment, ExperimentResult, register_experiment
from src.projections.numerics import StateVector
from src.projections.subspaces import (
    IsometryReport,
    Subspace,
    canonical_complement,
    canonical_isometry_pair,
    isometry_report,
    random_subspace,
)
from src.protocols.runner import mix_seed
from src.reports.models import RunReport

# Random source states drawn to measure the spread of transition probabilities
PROBE_STATES = 100


def _report_summary(report: IsometryReport) -> dict:
    return {
        "is_isometry": report.is_isometry,
        "scale": report.scale,
        "transition_probability": report.transition_probability,
        "principal_angles": list(report.principal_angles),
        "shared_dim": report.shared_dim,
        "orthogonal_dim": report.orthogonal_dim,
        "reasons": list(report.reasons),
        "notes": list(report.notes),
    }


def probability_spread(source: Subspace, target: Subspace, rng: np.random.Generator, samples: int) -> float:
    """Max - min of <psi|P_target|psi> over random states in ``source``."""
    probabilities = []
    for _ in range(samples):
        coords = rng.normal(size=source.rank) + 1j * rng.normal(size=source.rank)
        state = StateVector(source.basis @ (coords / np.linalg.norm(coords)))
        probabilities.append(target.weight(state))
    return float(max(probabilities) - min(probabilities))


@register_experiment("isometry-check")
class IsometryCheckExperiment(BaseExperiment):
    async def run(self) -> ExperimentResult:
        cfg = self.config
        k = cfg.k
        ambient = cfg.ambient if cfg.ambient is not None else 2 * k
        rng = np.random.default_rng(mix_seed(cfg.seed, 0))

        if ambient < 2 * k:
            return ExperimentResult(self._necessity_search(k, ambient, rng))

        source, target = canonical_isometry_pair(k, cfg.theta, ambient)
        partner = canonical_complement(k, cfg.theta, ambient)
        forward = isometry_report(source, target, self.policy)
        other = isometry_report(source, partner, self.policy)

        summary = {
            "verdict": forward.is_isometry and other.is_isometry,
            "ambient_dim": ambient,
            "required_min_ambient": 2 * k,
            "target": _report_summary(forward),
            "complement": _report_summary(other),
            "probability_spread": probability_spread(source, target, rng, PROBE_STATES),
            "expected_cos_squared": float(np.cos(cfg.theta) ** 2),
            "expected_sin_squared": float(np.sin(cfg.theta) ** 2),
        }
        self._log_progress(f"k={k} N={ambient} theta={cfg.theta:.6g}: {summary['verdict']}")
        return ExperimentResult(self._make_report(summary))

    def _necessity_search(self, k: int, ambient: int, rng: np.random.Generator) -> RunReport:
        trials = self.config.shots
        found = 0
        min_shared = k
        for _ in range(trials):
            report = isometry_report(random_subspace(ambient, k, rng), random_subspace(ambient, k, rng), self.policy)
            found += report.is_isometry
            min_shared = min(min_shared, report.shared_dim)

        self._log_progress(f"k={k} N={ambient}: {found} isometries in {trials} random pairs")
        summary = {
            "verdict": found > 0,
            "reason": "ambient < 2k",
            "ambient_dim": ambient,
            "required_min_ambient": 2 * k,
            "trials": trials,
            "isometries_found": found,
            "min_shared_dim": min_shared,
            "expected_min_shared_dim": 2 * k - ambient,
        }
        return self._make_report(summary)
