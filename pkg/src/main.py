"""
Projective Holonomy Simulator - CLI Entry Point

Command-line interface for running measurement-induced holonomy experiments
and writing deterministic reports.
"""

import asyncio
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import click

# Add src directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.core.config import get_config
from src.core.exceptions import ConfigurationError, HolonomyError
from src.core.logging_config import setup_logging
from src.experiments.base import run_experiment
from src.experiments.config import load_experiment_config
from src.reports.writer import write_report

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _float_list(ctx, param, value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return [float(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def _int_list(ctx, param, value: Optional[str]) -> Optional[List[int]]:
    if value is None:
        return None
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")


def experiment_options(f):
    """Flags shared by every experiment subcommand (same names as the config file)."""
    options = [
        click.option("--config", "config_path", type=str, help="JSON or YAML config file"),
        click.option("--phi", type=float, help="Single phase in radians"),
        click.option("--phases", callback=_float_list, help="Comma-separated phases in radians"),
        click.option("--k", type=int, help="Logical subspace dimension"),
        click.option("--component", type=int, help="Component m receiving the phase (phase-loop)"),
        click.option("--refinement", type=int, help="Geodesic steps per quarter arc"),
        click.option("--refinements", callback=_int_list, help="Per-component refinements (compose)"),
        click.option("--theta", type=float, help="Principal angle of the isometry pair"),
        click.option("--ambient", type=int, help="Ambient dimension N (isometry-check)"),
        click.option("--graph-family", type=click.Choice(["qubit", "general"]), help="RUS graph family"),
        click.option("--seed", type=int, help="Master seed (default: HOLONOMY_SEED or 0)"),
        click.option("--shots", type=int, help="Number of shots / random trials"),
        click.option("--max-steps", type=int, help="Step budget per shot"),
        click.option("--output-path", type=str, help="Directory for report.json and shots.csv"),
        click.option("--write-shots", is_flag=True, help="Also write shots.csv (rus-run)"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose logging")
@click.option("--log-file", type=str, help="Log file path")
@click.pass_context
def cli(ctx, verbose, log_file):
    """Projective Holonomy Simulator CLI.

    Induces unitary holonomies with sequences of degenerate projective
    measurements and checks them against their analytic predictions.
    """
    # Ensure context object exists
    ctx.ensure_object(dict)

    try:
        settings = get_config()
    except ConfigurationError as e:
        click.echo(f"❌ Configuration error: {e}", err=True)
        sys.exit(EXIT_CONFIG)

    # Set up logging
    log_level = "DEBUG" if verbose else settings.env.log_level
    setup_logging(log_level=log_level, log_file=log_file or settings.env.log_file)

    ctx.obj["verbose"] = verbose
    ctx.obj["settings"] = settings


def _run_mode(ctx, mode: str, options: Dict[str, Any]):
    """Merge configuration, run the experiment and write its report."""
    settings = ctx.obj["settings"]
    options = dict(options)
    config_path = options.pop("config_path")
    phi = options.pop("phi")
    if not options["write_shots"]:
        options.pop("write_shots")

    try:
        if phi is not None:
            if options["phases"] is not None:
                raise ConfigurationError("Give either --phi or --phases, not both")
            options["phases"] = [phi]

        errors = settings.validate()
        if errors:
            raise ConfigurationError("; ".join(errors))

        defaults = {
            "max_steps": settings.runtime.default_max_steps,
            "output_path": settings.runtime.default_output_path,
        }
        config = load_experiment_config(mode, config_path, options, env_seed=settings.env.seed, defaults=defaults)
        click.echo(f"🔬 Running {mode} (seed {config.seed})")

        result = asyncio.run(run_experiment(config, settings))
        path = write_report(result.report, config.output_path, result.shots)
        click.echo(f"✅ Report written to {path}")

    except ConfigurationError as e:
        click.echo(f"❌ Configuration error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except HolonomyError as e:
        click.echo(f"❌ {mode} failed: {type(e).__name__}: {e}", err=True)
        sys.exit(EXIT_FAILURE)


# ============================================================================
# EXPERIMENTS
# ============================================================================


@cli.command("phase-loop")
@experiment_options
@click.pass_context
def phase_loop(ctx, **options):
    """Run one single-ancilla phase loop.

    Examples:
        python -m src.main phase-loop --k 1 --phi 0 --refinement 1
        python -m src.main phase-loop --k 3 --component 2 --phi 1.2
    """
    _run_mode(ctx, "phase-loop", options)


@cli.command("compose")
@experiment_options
@click.pass_context
def compose(ctx, **options):
    """Compose one loop per component into diag(e^{i phi_m}).

    Examples:
        python -m src.main compose --phases 0.3,1.1,2.5 --refinement 4
        python -m src.main compose --phases 0.3,1.1 --refinements 1,8
    """
    _run_mode(ctx, "compose", options)


@cli.command("isometry-check")
@experiment_options
@click.pass_context
def isometry_check(ctx, **options):
    """Check the projective isometry criterion.

    Examples:
        python -m src.main isometry-check --k 2 --theta 0.5236
        python -m src.main isometry-check --k 2 --ambient 3    # below 2k
    """
    _run_mode(ctx, "isometry-check", options)


@cli.command("rus-run")
@experiment_options
@click.pass_context
def rus_run(ctx, **options):
    """Monte Carlo shots of the repeat-until-success graph.

    Examples:
        python -m src.main rus-run --phi 1.5707963 --shots 100000 --seed 42
        python -m src.main rus-run --graph-family general --phases 0.4,1.3 --write-shots
    """
    _run_mode(ctx, "rus-run", options)


@cli.command("rus-analyze")
@experiment_options
@click.pass_context
def rus_analyze(ctx, **options):
    """Exact transit statistics of the repeat-until-success graph.

    Example:
        python -m src.main rus-analyze --phi 0.7
    """
    _run_mode(ctx, "rus-analyze", options)


@cli.command("zeno-sweep")
@experiment_options
@click.pass_context
def zeno_sweep(ctx, **options):
    """Loop amplitude for refinements 1, 2, 4, ... (default up to 64).

    Example:
        python -m src.main zeno-sweep --phi 1.0 --refinement 64
    """
    _run_mode(ctx, "zeno-sweep", options)


def run_command(argv: Sequence[str]) -> int:
    """
    Run the CLI with ``argv`` and return its exit code.

    Returns:
        0 on success, 2 for configuration or usage errors, 1 for other failures
    """
    try:
        cli.main(args=list(argv), prog_name="holonomy", standalone_mode=False, obj={})
    except click.UsageError as e:
        e.show()
        return EXIT_CONFIG
    except click.ClickException as e:
        e.show()
        return EXIT_FAILURE
    except click.exceptions.Abort:
        return EXIT_FAILURE
    except SystemExit as e:
        return EXIT_OK if e.code is None else int(e.code)
    return EXIT_OK


# ============================================================================
# ENTRY POINT
# ============================================================================


if __name__ == "__main__":
    sys.exit(run_command(sys.argv[1:]))
