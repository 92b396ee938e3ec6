"""
Base experiment class and registry.

Every CLI mode (phase-loop, compose, isometry-check, rus-run, rus-analyze,
zeno-sweep) is an experiment that inherits from BaseExperiment and
implements run().
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Optional, Type
import logging

from src.core.config import ConfigManager
from src.core.exceptions import ExperimentError
from src.experiments.config import ExperimentConfig
from src.protocols.worker import ShotRecord
from src.reports.models import RunReport


@dataclass
class ExperimentResult:
    """Report plus optional per-shot records for shots.csv."""

    report: RunReport
    shots: Optional[List[ShotRecord]] = None


class BaseExperiment(ABC):
    """
    Abstract base class for experiments.

    Each experiment must implement the run() method.
    """

    def __init__(self, config: ExperimentConfig, settings: ConfigManager):
        """
        Initialize experiment.

        Args:
            config: Validated experiment configuration
            settings: Configuration manager (tolerances, runtime limits)
        """
        self.config = config
        self.settings = settings
        self.policy = settings.tolerances
        self.logger = logging.getLogger(self.__class__.__name__)

    @abstractmethod
    async def run(self) -> ExperimentResult:
        """
        Run the experiment.

        Returns:
            ExperimentResult with the report to write

        Raises:
            HolonomyError: If a numerical or protocol step fails
        """
        pass

    def _make_report(self, summary: dict, **kwargs) -> RunReport:
        """
        Create a report echoing the effective configuration.

        Args:
            summary: Headline statistics
            **kwargs: Other RunReport fields (holonomy, table)
        """
        return RunReport(
            mode=self.config.mode,
            config=self.config.report_echo(),
            summary=summary,
            **kwargs,
        )

    def _log_progress(self, message: str, level: str = "info"):
        """
        Log progress prefixed with the mode.

        Args:
            message: Log message
            level: Log level ('debug', 'info', 'warning', 'error')
        """
        getattr(self.logger, level)(f"[{self.config.mode}] {message}")


class ExperimentRegistry:
    """
    Registry for experiments.

    Maps modes to experiment classes.
    """

    def __init__(self):
        """Initialize empty registry."""
        self._experiments: Dict[str, Type[BaseExperiment]] = {}

    def register(self, mode: str, experiment_class: Type[BaseExperiment]):
        """
        Register an experiment for a mode.

        Args:
            mode: Mode name (e.g., 'rus-run')
            experiment_class: Experiment class (must inherit from BaseExperiment)
        """
        if not issubclass(experiment_class, BaseExperiment):
            raise ValueError(f"{experiment_class} must inherit from BaseExperiment")

        self._experiments[mode] = experiment_class
        logging.debug(f"Registered experiment for mode: {mode}")

    def get_experiment(self, config: ExperimentConfig, settings: ConfigManager) -> Optional[BaseExperiment]:
        """
        Get experiment instance for the config's mode.

        Returns:
            Experiment instance or None if not registered
        """
        experiment_class = self._experiments.get(config.mode)

        if not experiment_class:
            return None

        return experiment_class(config, settings)

    def list_registered_modes(self) -> list:
        """Get list of registered modes."""
        return list(self._experiments.keys())


# Global experiment registry
_registry = ExperimentRegistry()


def get_experiment_registry() -> ExperimentRegistry:
    """Get global experiment registry."""
    return _registry


def register_experiment(mode: str):
    """
    Decorator to register an experiment class.

    Usage:
        @register_experiment('rus-run')
        class RusRunExperiment(BaseExperiment):
            async def run(self):
                ...
    """

    def decorator(experiment_class):
        _registry.register(mode, experiment_class)
        return experiment_class

    return decorator


async def run_experiment(config: ExperimentConfig, settings: ConfigManager) -> ExperimentResult:
    """
    Run the experiment registered for ``config.mode``.

    Raises:
        ExperimentError: No experiment registered for the mode
    """
    experiment = _registry.get_experiment(config, settings)
    if experiment is None:
        raise ExperimentError(f"No experiment registered for mode: {config.mode}")
    return await experiment.run()
