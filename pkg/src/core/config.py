"""
Configuration management for the projective holonomy simulator.

Loads configuration from:
1. .env file (process-level defaults such as the master seed)
2. config.yaml (runtime settings: tolerances and shot execution)
"""

from dataclasses import asdict, dataclass, field
from typing import List, Optional
import logging
import os

import yaml
from dotenv import load_dotenv

from src.core.exceptions import ConfigurationError
from src.projections.numerics import TolerancePolicy

logger = logging.getLogger(__name__)


@dataclass
class EnvConfig:
    """Process-level settings read from the environment / .env file."""

    seed: Optional[int] = None
    log_level: str = "INFO"
    log_file: Optional[str] = None
    settings_file: str = "config.yaml"


@dataclass
class ToleranceConfig:
    """Numerical tolerances (config.yaml `tolerances:` section)."""

    tol_norm: float = 1e-10
    tol_ortho: float = 1e-10
    tol_flat: float = 1e-8
    tol_phase: float = 1e-9

    def to_policy(self) -> TolerancePolicy:
        """Build the immutable policy object handed to the numerics layer."""
        return TolerancePolicy(
            tol_norm=self.tol_norm,
            tol_ortho=self.tol_ortho,
            tol_flat=self.tol_flat,
            tol_phase=self.tol_phase,
        )


@dataclass
class RuntimeConfig:
    """Shot execution settings (config.yaml `runtime:` section)."""

    # Concurrency for Monte Carlo shots
    max_concurrent_batches: int = 4
    shot_batch_size: int = 2000
    batch_timeout_seconds: int = 600

    # Protocol defaults
    default_max_steps: int = 10_000

    # Output
    default_output_path: str = "results"


@dataclass
class AppConfig:
    """Runtime application configuration (from config.yaml)."""

    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)


class ConfigManager:
    """Central configuration manager.

    Loads configuration from:
    - .env file for process defaults (HOLONOMY_SEED, logging, settings path)
    - config.yaml for runtime settings (tolerances, shot execution)
    """

    def __init__(self, env_file: Optional[str] = None, config_file: Optional[str] = None):
        """
        Initialize configuration manager.

        Args:
            env_file: Path to .env file (default: .env in working directory)
            config_file: Path to config.yaml (default: HOLONOMY_SETTINGS or config.yaml)
        """
        if env_file is None:
            env_file = ".env"
        load_dotenv(env_file)

        self._load_env_config()

        if config_file is None:
            config_file = self.env.settings_file
        self.config_file = config_file

        self._load_yaml_config()

    def _load_env_config(self):
        """Load process defaults from the environment."""
        seed_raw = os.getenv("HOLONOMY_SEED", "").strip()
        seed: Optional[int] = None
        if seed_raw:
            try:
                seed = int(seed_raw)
            except ValueError:
                raise ConfigurationError(f"HOLONOMY_SEED must be an integer, got {seed_raw!r}")

        self.env = EnvConfig(
            seed=seed,
            log_level=os.getenv("HOLONOMY_LOG_LEVEL", "INFO"),
            log_file=os.getenv("HOLONOMY_LOG_FILE") or None,
            settings_file=os.getenv("HOLONOMY_SETTINGS", "config.yaml"),
        )

    def _load_yaml_config(self):
        """Load runtime configuration from config.yaml."""
        if not os.path.exists(self.config_file):
            # Use defaults if config file doesn't exist
            self.app = AppConfig()
            return

        try:
            with open(self.config_file, "r") as f:
                data = yaml.safe_load(f) or {}

            self.app = AppConfig(
                tolerances=ToleranceConfig(**(data.get("tolerances") or {})),
                runtime=RuntimeConfig(**(data.get("runtime") or {})),
            )
        except Exception as e:
            logger.warning(f"Failed to load {self.config_file}: {e}; using default configuration")
            self.app = AppConfig()

    @property
    def tolerances(self) -> TolerancePolicy:
        """Tolerance policy built from the YAML layer."""
        return self.app.tolerances.to_policy()

    @property
    def runtime(self) -> RuntimeConfig:
        return self.app.runtime

    def validate(self) -> List[str]:
        """
        Validate configuration.

        Returns:
            List of validation error messages (empty if valid)
        """
        errors = []

        for name, value in asdict(self.app.tolerances).items():
            if not (0.0 < value < 1e-3):
                errors.append(f"tolerances.{name} must be in (0, 1e-3), got {value}")

        runtime = self.app.runtime
        if runtime.max_concurrent_batches < 1:
            errors.append("runtime.max_concurrent_batches must be >= 1")
        if runtime.shot_batch_size < 1:
            errors.append("runtime.shot_batch_size must be >= 1")
        if runtime.batch_timeout_seconds < 1:
            errors.append("runtime.batch_timeout_seconds must be >= 1")
        if runtime.default_max_steps < 4:
            errors.append("runtime.default_max_steps must be >= 4")

        return errors


# Global singleton instance
_config: Optional[ConfigManager] = None


def get_config(env_file: Optional[str] = None, config_file: Optional[str] = None) -> ConfigManager:
    """
    Get global configuration manager instance (singleton).

    Args:
        env_file: Path to .env file (only used on first call)
        config_file: Path to config.yaml file (only used on first call)

    Returns:
        ConfigManager instance
    """
    global _config
    if _config is None:
        _config = ConfigManager(env_file=env_file, config_file=config_file)
    return _config


def reset_config():
    """Drop the singleton so the next get_config() re-reads everything."""
    global _config
    _config = None
