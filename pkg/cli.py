#!/usr/bin/env python3
"""
Nonlocal NS Lab - Main CLI Entry Point
Runs viscous simulations, epsilon sweeps and entropy self-checks from a config file
"""

import json
import sys
from pathlib import Path
from typing import Optional

import click
from dotenv import load_dotenv
from loguru import logger

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src import __version__  # noqa: E402
from src.config.loader import ConfigLoader, RunConfig  # noqa: E402
from src.errors import ConfigError, SimulationError  # noqa: E402
from src.sweep.entropy_suite import run_entropy  # noqa: E402
from src.sweep.runner import SweepAborted, run_single, run_sweep  # noqa: E402

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


class ConsoleLevel:
    """Minimum level of the stderr sink, adjustable after the sink is added"""

    def __init__(self, level: str = "INFO"):
        self.level = level

    def __call__(self, record: dict) -> bool:
        return record["level"].no >= logger.level(self.level).no


console_level = ConsoleLevel()


def setup_logging(verbose: bool, level: str = "INFO") -> None:
    """stderr sink plus a rotating debug file under logs/"""
    console_level.level = "DEBUG" if verbose else level.upper()
    logger.remove()
    logger.add(
        sys.stderr,
        format=(
            "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | "
            "<cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>"
        ),
        level=0,
        filter=console_level,
    )
    Path("logs").mkdir(exist_ok=True)
    logger.add(
        "logs/nonlocal_ns_{time}.log",
        rotation="1 day",
        retention="7 days",
        level="DEBUG",
    )


def load_config(
    config_path: Optional[Path],
    out: Optional[Path],
    workers: Optional[int],
    no_plots: bool,
    verbose: bool = False,
) -> RunConfig:
    """Load and validate, apply the command-line overrides and output.log_level"""
    config = ConfigLoader(config_path).config
    if out is not None:
        config.output.directory = str(out)
    if workers is not None:
        config.output.workers = workers
    if no_plots:
        config.diagnostics.plots = False
    if not verbose:
        console_level.level = config.output.log_level.upper()
    return config


def fail(message: str, code: int) -> None:
    click.echo(click.style(message, fg="red"), err=True)
    sys.exit(code)


def config_options(command):
    """Shared --config/--out/--workers/--no-plots/--verbose options"""
    options = [
        click.option(
            "--config", "-c", "config_path", type=click.Path(path_type=Path), default=None,
            help="Path to configuration file (YAML, or JSON by suffix)",
        ),
        click.option(
            "--out", "-o", type=click.Path(path_type=Path), default=None,
            help="Output directory (overrides output.directory)",
        ),
        click.option(
            "--workers", "-w", type=int, default=None,
            help="Parallel workers for sweeps (overrides NLNS_WORKERS)",
        ),
        click.option("--no-plots", is_flag=True, help="Skip SVG plots"),
        click.option("--verbose", "-v", is_flag=True, help="Enable verbose logging"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


@click.group()
@click.version_option(version=__version__)
def main():
    """
    Nonlocal NS Lab - viscous approximations of 1D Euler flow with nonlocal forces

    Examples:
        python cli.py run --config configs/smoke.yml
        python cli.py sweep --config configs/sweep.yml --workers 4
        python cli.py entropy --config configs/entropy.yml
        python cli.py validate-config --config config.yml
    """
    load_dotenv()


@main.command()
@config_options
def run(config_path, out, workers, no_plots, verbose):
    """Single simulation at the first epsilon of the configuration"""
    banner()
    setup_logging(verbose)
    try:
        config = load_config(config_path, out, workers, no_plots, verbose)
    except ConfigError as e:
        fail(f"❌ {e}", EXIT_CONFIG)
        return

    epsilon = config.viscosity.ladder()[0]
    directory = Path(config.output.directory) / config.name
    try:
        result = run_single(config, epsilon, directory)
    except ConfigError as e:
        fail(f"❌ {e}", EXIT_CONFIG)
        return
    except SimulationError as e:
        write_error(directory, e)
        fail(f"❌ Run failed: {e}", EXIT_FAILED)
        return

    result.report.log_summary()
    if not result.passed:
        names = ", ".join(check.name for check in result.report.failed_checks)
        fail(f"❌ Failed checks: {names}", EXIT_FAILED)
    logger.success(f"✅ All checks passed, artifacts in {directory}")
    sys.exit(EXIT_OK)


@main.command()
@config_options
def sweep(config_path, out, workers, no_plots, verbose):
    """Parallel epsilon ladder with the convergence and uniformity checks"""
    banner()
    setup_logging(verbose)
    try:
        config = load_config(config_path, out, workers, no_plots, verbose)
        config.require_ladder(3)
    except ConfigError as e:
        fail(f"❌ {e}", EXIT_CONFIG)
        return

    directory = Path(config.output.directory) / config.name
    try:
        report = run_sweep(config, directory, config.output.workers)
    except SweepAborted as e:
        fail(f"❌ {e} (partial report in {directory})", EXIT_FAILED)
        return
    except ConfigError as e:
        fail(f"❌ {e}", EXIT_CONFIG)
        return
    except SimulationError as e:
        write_error(directory, e)
        fail(f"❌ Sweep failed: {e}", EXIT_FAILED)
        return

    if not report.passed:
        names = ", ".join(name for name, check in report.flags.items() if not check.passed)
        fail(f"❌ Failed ladder checks: {names}", EXIT_FAILED)
    logger.success(f"✅ Sweep consistent, artifacts in {directory}")
    sys.exit(EXIT_OK)


@main.command()
@config_options
def entropy(config_path, out, workers, no_plots, verbose):
    """Entropy-pair self-checks and Goursat table export"""
    banner()
    setup_logging(verbose)
    try:
        config = load_config(config_path, out, workers, no_plots, verbose)
        directory = Path(config.output.directory) / config.name
        report = run_entropy(config, directory)
    except ConfigError as e:
        fail(f"❌ {e}", EXIT_CONFIG)
        return
    except SimulationError as e:
        fail(f"❌ Entropy checks failed: {e}", EXIT_FAILED)
        return

    if not report.passed:
        names = ", ".join(name for name, check in report.flags.items() if not check.passed)
        fail(f"❌ Failed entropy checks: {names}", EXIT_FAILED)
    logger.success(f"✅ Entropy checks passed, tables in {directory}")
    sys.exit(EXIT_OK)


@main.command("validate-config")
@config_options
def validate_config(config_path, out, workers, no_plots, verbose):
    """Validate a configuration file and print its summary"""
    setup_logging(verbose, level="WARNING")
    try:
        loader = ConfigLoader(config_path)
    except ConfigError as e:
        fail(f"❌ {e}", EXIT_CONFIG)
        return
    click.echo(loader.get_config_summary())
    click.echo(click.style("✅ Configuration valid", fg="green"))
    sys.exit(EXIT_OK)


def write_error(directory: Path, error: Exception) -> None:
    """Partial report for a run that raised"""
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "report.json", "w") as f:
        json.dump({"passed": False, "error": f"{type(error).__name__}: {error}"}, f, indent=2)


def banner() -> None:
    text = """
    ╔══════════════════════════════════════════╗
    ║            NONLOCAL NS LAB               ║
    ║   viscous flow with nonlocal forces      ║
    ╚══════════════════════════════════════════╝
    """
    click.echo(click.style(text, fg="cyan", bold=True))


if __name__ == "__main__":
    main()
