"""
Single-ancilla geometric-phase experiments: one loop, the composite
diagonal unitary, and the refinement (Zeno) sweep.
"""

import cmath

import numpy as np

from src.experiments.base import BaseExperiment, ExperimentResult, register_experiment
from src.projections.numerics import StateVector, dagger, is_unitary, max_abs_diff
from src.projections.sequences import (
    PhaseLoopSpec,
    bargmann_invariant,
    bloch_vector,
    build_phase_loop,
    closed_form_scale,
    compose_diag_unitary,
    compose_filtered_unitary,
    cumulative_operator,
    phase_loop_amplitude,
    phase_loop_states,
    solid_angle,
    survival_probability,
)
from src.reports.models import HolonomyBlock, complex_pair, matrix_pairs


@register_experiment("phase-loop")
class PhaseLoopExperiment(BaseExperiment):
    """Run one loop and cross-check its amplitude against the loop geometry."""

    async def run(self) -> ExperimentResult:
        cfg = self.config
        spec = PhaseLoopSpec(k=cfg.k, m=cfg.component, phi=cfg.phi, refinement=cfg.refinement)
        sequence = build_phase_loop(spec)
        gamma = cumulative_operator(sequence)
        t = complex(gamma[spec.m - 1, spec.m - 1])

        states = phase_loop_states(spec)
        bargmann = bargmann_invariant(states, self.policy)
        omega = solid_angle([bloch_vector(s) for s in states], self.policy)
        survival = survival_probability(gamma, StateVector.basis(spec.ambient_dim, spec.m - 1))

        self._log_progress(f"|t| = {abs(t):.12g}, arg t = {cmath.phase(t):.12g}")
        summary = {
            "ambient_dim": spec.ambient_dim,
            "projections": len(sequence),
            "amplitude": complex_pair(t),
            "scale": abs(t),
            "scale_squared": abs(t) ** 2,
            "closed_form_scale": closed_form_scale(spec.refinement),
            "phase": cmath.phase(t),
            "bargmann_invariant": complex_pair(bargmann),
            "solid_angle": omega,
            "half_solid_angle": omega / 2.0,
            "survival_probability": survival,
        }
        return ExperimentResult(self._make_report(summary))


@register_experiment("compose")
class ComposeExperiment(BaseExperiment):
    """Compose one loop per component into a diagonal unitary."""

    async def run(self) -> ExperimentResult:
        cfg = self.config
        phases = list(cfg.phases)
        k = len(phases)

        summary: dict = {"ambient_dim": k + 1}
        if cfg.refinements is None:
            gamma, scale = compose_diag_unitary(phases, cfg.refinement)
            summary["closed_form_scale"] = closed_form_scale(cfg.refinement)
        else:
            gamma, scale, filt = compose_filtered_unitary(phases, cfg.refinements)
            summary["filter"] = [complex_pair(d) for d in filt.diagonal]

        unitary = gamma[:k, :k] / scale
        target = np.diag(np.exp(1j * np.asarray(phases)))
        overlap = complex(np.trace(dagger(target) @ unitary)) / k

        summary.update(
            {
                "scale": scale,
                "scale_squared": scale**2,
                "is_unitary": is_unitary(unitary, self.policy.tol_flat),
                "unitarity_error": max_abs_diff(dagger(unitary) @ unitary, np.eye(k)),
                "target_error": max_abs_diff(unitary, target),
            }
        )
        holonomy = HolonomyBlock(
            matrix=matrix_pairs(unitary),
            fidelity=min(abs(overlap), 1.0),
            global_phase=complex_pair(overlap / abs(overlap)),
        )
        self._log_progress(f"k={k} scale={scale:.12g} target_error={summary['target_error']:.3e}")
        return ExperimentResult(self._make_report(summary, holonomy=holonomy))


@register_experiment("zeno-sweep")
class ZenoSweepExperiment(BaseExperiment):
    """Loop amplitude for refinements 1, 2, 4, ... up to the configured one."""

    async def run(self) -> ExperimentResult:
        cfg = self.config
        rows = []
        n = 1
        while n <= cfg.refinement:
            t = phase_loop_amplitude(PhaseLoopSpec(k=cfg.k, m=cfg.component, phi=cfg.phi, refinement=n))
            expected = closed_form_scale(n)
            rows.append(
                {
                    "refinement": n,
                    "scale": abs(t),
                    "closed_form_scale": expected,
                    "abs_error": abs(abs(t) - expected),
                    "phase": cmath.phase(t),
                }
            )
            n *= 2

        scales = [row["scale"] for row in rows]
        summary = {
            "refinements": len(rows),
            "final_scale": scales[-1],
            "max_abs_error": max(row["abs_error"] for row in rows),
            "strictly_increasing": all(b > a for a, b in zip(scales, scales[1:])),
        }
        self._log_progress(f"{len(rows)} refinements, final scale {scales[-1]:.12g}")
        return ExperimentResult(self._make_report(summary, table=rows))
