"""
Repeat-until-success experiments: Monte Carlo runs of the measurement graph
and its exact absorbing-chain analysis.
"""

import math
from typing import List

import numpy as np

from src.core.exceptions import InvalidGraph
from src.experiments.base import BaseExperiment, ExperimentResult, register_experiment
from src.projections.numerics import StateVector
from src.protocols.analysis import (
    completion_probability,
    expected_steps,
    extract_holonomy,
    step_variance,
    transition_structure,
)
from src.protocols.graph import MeasurementGraph, build_general_rus_graph, build_qubit_rus_graph
from src.protocols.runner import PhaseClass, run_protocol
from src.protocols.worker import ShotRecord, ShotWorker
from src.reports.models import HolonomyBlock, complex_pair, matrix_pairs

# Outcome script of the shortest successful path (through A- and B-)
MINIMAL_PATH = (1, 1, 1, 1)


class RusExperiment(BaseExperiment):
    """Shared graph construction for the RUS modes."""

    def _build_graph(self) -> MeasurementGraph:
        cfg = self.config
        if cfg.graph_family == "qubit":
            graph = build_qubit_rus_graph(cfg.phases[0])
        else:
            graph = build_general_rus_graph(cfg.phases)

        errors = graph.validate(self.policy)
        if errors:
            raise InvalidGraph("; ".join(errors))
        return graph

    def _minimal_path_holonomy(self, graph: MeasurementGraph) -> HolonomyBlock:
        state = StateVector(graph.start_subspace.basis[:, 0])
        trace = run_protocol(graph, state, seed=0, max_steps=len(MINIMAL_PATH), forced_outcomes=MINIMAL_PATH, policy=self.policy)
        result = extract_holonomy(graph, trace, self.policy)
        return HolonomyBlock(
            matrix=matrix_pairs(result.unitary),
            fidelity=result.fidelity_to_target,
            global_phase=complex_pair(result.global_phase),
            phase_class=trace.holonomy_phase_class.value,
        )


@register_experiment("rus-run")
class RusRunExperiment(RusExperiment):
    """Seeded Monte Carlo shots compared with the exact transit statistics."""

    async def run(self) -> ExperimentResult:
        cfg = self.config
        graph = self._build_graph()
        runtime = self.settings.runtime

        worker = ShotWorker(
            graph,
            master_seed=cfg.seed,
            max_steps=cfg.max_steps,
            max_concurrent_batches=runtime.max_concurrent_batches,
            shot_batch_size=runtime.shot_batch_size,
            batch_timeout=runtime.batch_timeout_seconds,
            policy=self.policy,
        )
        records = await worker.run_shots(cfg.shots)

        summary = {"graph": graph.name, "logical_dim": graph.logical_dim, "shots": cfg.shots}
        summary.update(shot_statistics(records))
        summary["expected_steps"] = expected_steps(graph, self.policy)
        summary["expected_std"] = math.sqrt(step_variance(graph, self.policy))
        summary["completion_probability"] = completion_probability(graph, cfg.max_steps, self.policy)
        se = summary["standard_error"]
        summary["z_score"] = (summary["mean_steps"] - summary["expected_steps"]) / se if se > 0 else 0.0

        self._log_progress(
            f"{summary['completed']}/{cfg.shots} completed, mean steps "
            f"{summary['mean_steps']:.6g} (expected {summary['expected_steps']:.6g})"
        )
        report = self._make_report(summary, holonomy=self._minimal_path_holonomy(graph))
        return ExperimentResult(report, shots=records if cfg.write_shots else None)


@register_experiment("rus-analyze")
class RusAnalyzeExperiment(RusExperiment):
    """Exact transit statistics and per-edge isometry diagnostics."""

    async def run(self) -> ExperimentResult:
        cfg = self.config
        graph = self._build_graph()
        order, q, r = transition_structure(graph, self.policy)

        rows = []
        for node_id in order:
            for outcome, branch in enumerate(graph.measurements[node_id]):
                report = graph.branch_report(node_id, outcome, self.policy)
                rows.append(
                    {
                        "node": node_id,
                        "outcome": outcome,
                        "successor": branch.successor,
                        "completes": branch.completes,
                        "is_isometry": report.is_isometry,
                        "scale": report.scale,
                        "probability": report.transition_probability,
                    }
                )

        minimal = 1.0
        node = graph.start_node
        for outcome in MINIMAL_PATH:
            minimal *= graph.branch_report(node, outcome, self.policy).transition_probability
            node = graph.measurements[node][outcome].successor

        variance = step_variance(graph, self.policy)
        summary = {
            "graph": graph.name,
            "logical_dim": graph.logical_dim,
            "nodes": len(order),
            "expected_steps": expected_steps(graph, self.policy),
            "step_variance": variance,
            "step_std": math.sqrt(variance),
            "completion_probability": completion_probability(graph, cfg.max_steps, self.policy),
            "minimal_path_steps": len(MINIMAL_PATH),
            "minimal_path_probability": minimal,
            "transient_matrix": [[float(x) for x in row] for row in q],
            "absorption_vector": [float(x) for x in r],
        }
        self._log_progress(f"expected steps {summary['expected_steps']:.12g}")
        report = self._make_report(summary, holonomy=self._minimal_path_holonomy(graph), table=rows)
        return ExperimentResult(report)


def shot_statistics(records: List[ShotRecord]) -> dict:
    """Success rate, step moments over completed shots, phase classes and worst fidelity."""
    done = [r for r in records if r.completed]
    steps = np.array([r.steps for r in done], dtype=float)
    mean = float(steps.mean()) if done else 0.0
    std = float(steps.std(ddof=1)) if len(done) > 1 else 0.0
    fidelities = [r.fidelity for r in done if r.fidelity is not None]

    return {
        "completed": len(done),
        "success_rate": len(done) / len(records),
        "mean_steps": mean,
        "std_steps": std,
        "standard_error": std / math.sqrt(len(done)) if done else 0.0,
        "min_steps": int(steps.min()) if done else 0,
        "max_steps_seen": int(steps.max()) if done else 0,
        "phase_plus": sum(r.phase_class == PhaseClass.PLUS for r in done),
        "phase_minus": sum(r.phase_class == PhaseClass.MINUS for r in done),
        "phase_unknown": sum(r.phase_class == PhaseClass.UNKNOWN for r in done),
        "min_fidelity": min(fidelities) if fidelities else 0.0,
    }
