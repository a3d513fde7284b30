"""
Command line surface: one subcommand per pipeline, each writing a run directory
"""
import argparse
import dataclasses
import logging
from pathlib import Path
import sys
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from scipy.sparse.linalg import ArpackError

from vvchip._version import __version__
from vvchip.conversions.conversions import ENERGY_UNIT_TO_J
from vvchip.exceptions.chip_exception import (
    ArtifactIOError,
    ChipError,
    ConfigError,
    NumericalError,
)
from vvchip.io.artifacts import RunDirectory
from vvchip.io.config import Config, config_to_dict, parse_config, serialize
from vvchip.parsing.sweep_parser import (
    parse_energies,
    parse_polarizations,
    parse_values,
)
from vvchip.scenarios.scenario_objects import Scenario, SweepResult
from vvchip.scenarios.sweeps import (
    array_robustness,
    energy_sweep,
    interference_run,
    modes_run,
    phase_match_run,
    polarization_panel,
    propagate_run,
)

logger = logging.getLogger(__name__)

Runner = Callable[[Scenario, Config, int], SweepResult]
NUMERICAL_FAILURES = (np.linalg.LinAlgError, ArpackError, FloatingPointError)


def _phase_match(scenario: Scenario, config: Config, workers: int) -> SweepResult:
    return phase_match_run(scenario, parse_values(config.scenario.radii_um), workers)


def _panel(scenario: Scenario, config: Config, workers: int) -> SweepResult:
    return polarization_panel(
        scenario,
        parse_polarizations(config.scenario.polarizations),
        workers,
        psi_count=config.scenario.psi_count,
    )


def _sweep_energy(scenario: Scenario, config: Config, workers: int) -> SweepResult:
    return energy_sweep(scenario, parse_energies(config.scenario.energies), workers)


def _array(scenario: Scenario, config: Config, workers: int) -> SweepResult:
    step = config.scenario.array_dE_nJ * ENERGY_UNIT_TO_J["nJ"]
    return array_robustness(scenario, [-step, 0.0, step], workers)


COMMANDS: Dict[str, Runner] = {
    "solve-modes": lambda scenario, config, workers: modes_run(scenario),
    "phase-match": _phase_match,
    "propagate": lambda scenario, config, workers: propagate_run(scenario),
    "panel": _panel,
    "sweep-energy": _sweep_energy,
    "array": _array,
    "interfere": lambda scenario, config, workers: interference_run(scenario),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vvchip",
        description="Simulate a vector vortex beam emitter built from a directional "
        "coupler",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--print-defaults",
        action="store_true",
        help="print the default configuration as JSON and exit",
    )
    parser.add_argument("command", nargs="?", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="JSON configuration file")
    parser.add_argument("--out", type=Path, help="run directory")
    parser.add_argument("--seed", type=int, help="overrides the configured seed")
    parser.add_argument("--workers", type=int, help="concurrent points")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    return parser


def _apply_overrides(config: Config, args: argparse.Namespace) -> Config:
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed", f"expected a non-negative value, got {args.seed}")
        config = dataclasses.replace(config, seed=args.seed)
    if args.workers is not None:
        if args.workers <= 0:
            raise ConfigError(
                "workers", f"expected a positive value, got {args.workers}"
            )
        config = dataclasses.replace(config, workers=args.workers)
    return config


def _record_failure(
    run: RunDirectory, command: str, echo: Dict[str, Any], error: ChipError
) -> int:
    logger.error("%s failed: %s", command, error)
    try:
        run.write_manifest(echo, error=error)
    except ArtifactIOError as io_error:
        logger.error("error record not written: %s", io_error)
    return error.exit_code


def run_scenario(
    command: str,
    config: Config,
    out: Optional[Path] = None,
) -> int:
    """
    Run one subcommand and write its run directory

    Parameters
    ----------
    command : str
        One of the subcommand names
    config : Config
        Validated configuration
    out : Path, optional
        Run directory, ``<out_dir>/<command>`` by default

    Returns
    -------
    int
        0 on success, otherwise the exit code of the error recorded in the manifest
    """
    echo = config_to_dict(config)
    try:
        run = RunDirectory(out or Path(config.out_dir) / command, command, config.seed)
    except ArtifactIOError as error:
        logger.error("%s failed: %s", command, error)
        return error.exit_code
    try:
        scenario = Scenario.from_config(config)
        result = COMMANDS[command](scenario, config, config.worker_count)
        run.write_result(result)
        run.write_manifest(echo, result)
    except ChipError as error:
        return _record_failure(run, command, echo, error)
    except NUMERICAL_FAILURES as error:
        failure = NumericalError(command, str(error) or type(error).__name__)
        return _record_failure(run, command, echo, failure)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=args.log_level, format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )
    if args.print_defaults:
        sys.stdout.write(serialize(Config.defaults()) + "\n")
        return 0
    if args.command is None:
        parser.error("a command is required")
    try:
        config = _apply_overrides(parse_config(args.config), args)
    except ChipError as error:
        logger.error("%s", error)
        out = args.out or Path(Config.defaults().out_dir) / args.command
        try:
            RunDirectory(out, args.command, args.seed or 0).write_manifest(
                {}, error=error
            )
        except ArtifactIOError as io_error:
            logger.error("error record not written: %s", io_error)
        return error.exit_code
    return run_scenario(args.command, config, args.out)


if __name__ == "__main__":
    sys.exit(main())
