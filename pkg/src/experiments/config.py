"""
Experiment configuration.

Precedence, lowest to highest: model defaults, runtime defaults from
config.yaml, HOLONOMY_SEED, the --config file (JSON, or YAML by extension),
command-line flags.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

Mode = Literal["phase-loop", "compose", "isometry-check", "rus-run", "rus-analyze", "zeno-sweep"]

MODES: List[str] = ["phase-loop", "compose", "isometry-check", "rus-run", "rus-analyze", "zeno-sweep"]

DEFAULT_ZENO_REFINEMENT = 64


class ExperimentConfig(BaseModel):
    """Settings for one experiment run."""

    model_config = ConfigDict(extra="forbid")

    mode: Mode
    k: int = Field(1, ge=1)
    phases: List[float] = Field(default_factory=list)
    refinement: int = Field(1, ge=1)
    refinements: Optional[List[int]] = None  # per-component, compose only
    theta: float = math.pi / 4
    seed: int = 0
    shots: int = Field(1000, ge=1)
    max_steps: int = Field(10_000, ge=1)
    output_path: str = "results"
    ambient: Optional[int] = Field(None, ge=1)
    component: int = Field(1, ge=1)
    graph_family: Literal["qubit", "general"] = "qubit"
    write_shots: bool = False

    @model_validator(mode="after")
    def check_mode_fields(self):
        for phase in self.phases:
            if not math.isfinite(phase):
                raise ValueError("phases must be finite")
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")

        if self.mode in ("compose", "rus-run", "rus-analyze") and not self.phases:
            raise ValueError(f"mode {self.mode} requires phases")

        if self.mode == "compose":
            self._infer_k_from_phases()
            if self.refinements is not None:
                if len(self.refinements) != len(self.phases):
                    raise ValueError("refinements must have one entry per phase")
                if any(n < 1 for n in self.refinements):
                    raise ValueError("refinements must all be >= 1")

        if self.mode in ("phase-loop", "zeno-sweep"):
            if self.component > self.k:
                raise ValueError(f"component {self.component} exceeds k = {self.k}")
            if len(self.phases) > 1 and len(self.phases) != self.k:
                raise ValueError("give one phase, or one phase per component")

        if self.mode == "zeno-sweep" and "refinement" not in self.model_fields_set:
            self.refinement = DEFAULT_ZENO_REFINEMENT

        if self.mode in ("rus-run", "rus-analyze"):
            if self.graph_family == "qubit":
                if len(self.phases) != 1:
                    raise ValueError("the qubit graph takes exactly one phase")
                self.k = 2
            else:
                self._infer_k_from_phases()
            if self.max_steps < 4:
                logger.warning(f"max_steps={self.max_steps} is below the 4 steps a successful loop needs")

        if self.mode != "compose" and self.refinements is not None:
            raise ValueError("refinements only applies to mode compose")
        return self

    def _infer_k_from_phases(self):
        if "k" not in self.model_fields_set:
            self.k = len(self.phases)
        elif self.k != len(self.phases):
            raise ValueError(f"k = {self.k} but {len(self.phases)} phases given")

    @property
    def phi(self) -> float:
        """Phase for single-loop modes: the component's phase, or the only one given."""
        if not self.phases:
            return 0.0
        if len(self.phases) == 1:
            return self.phases[0]
        return self.phases[self.component - 1]

    def report_echo(self) -> Dict[str, Any]:
        """Configuration as echoed in reports (the output location is left out)."""
        return self.model_dump(exclude={"output_path"})


def _parse_config_file(path: Path) -> Dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}")

    if path.suffix.lower() in (".yaml", ".yml"):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
            raise ConfigurationError(f"Invalid YAML in {path}{where}: {getattr(e, 'problem', e)}")
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Invalid JSON in {path} at line {e.lineno}, column {e.colno}: {e.msg}")

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must contain an object, got {type(data).__name__}")
    return data


def load_experiment_config(
    mode: str,
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
    env_seed: Optional[int] = None,
    defaults: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Merge all configuration layers into a validated ExperimentConfig.

    Args:
        mode: Subcommand mode
        config_path: Optional JSON/YAML config file
        overrides: Flag values; None entries are ignored
        env_seed: Seed from HOLONOMY_SEED
        defaults: Runtime defaults from config.yaml (below the file and flags)

    Raises:
        ConfigurationError: Unreadable file, unknown keys, invalid values, or mode conflict
    """
    data: Dict[str, Any] = dict(defaults or {})
    if env_seed is not None:
        data["seed"] = env_seed

    if config_path:
        file_data = _parse_config_file(Path(config_path))
        file_mode = file_data.get("mode")
        if file_mode is not None and file_mode != mode:
            raise ConfigurationError(f"Config file mode {file_mode!r} does not match subcommand {mode!r}")
        data.update(file_data)

    data.update({key: value for key, value in (overrides or {}).items() if value is not None})
    data["mode"] = mode

    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        problems = []
        for error in e.errors():
            field = ".".join(str(part) for part in error["loc"]) or "config"
            problems.append(f"{field}: {error['msg']}")
        raise ConfigurationError("Invalid configuration: " + "; ".join(problems))

    logger.debug(f"Experiment config: {config.model_dump()}")
    return config
