"""
degrad command line: run, sweep, demo, validate-topology, spectrum, schema.

Exit codes: 0 success, 1 I/O / schema / numerical failure, 2 dominance
violation (or failed demo), 3 regime error, 64 usage error.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, List, Optional, Sequence

from .config import Settings, get_settings
from .middleware import (
    EXIT_DOMINANCE,
    EXIT_FAILURE,
    EXIT_OK,
    ErrorHandlerMiddleware,
    UsageError,
    configure_logging,
)
from .services import (
    ExperimentRunner,
    SweepRunner,
    demo_names,
    experiment_schema,
    load_experiment,
    load_sweep,
    load_topology,
    run_demo,
)
from .topology import spectral_summary, validate


class CommandParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems as UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(message)


def create_parser() -> CommandParser:
    parser = CommandParser(prog="degrad", description="Decentralized gradient methods lab")
    subparsers = parser.add_subparsers(dest="command", parser_class=CommandParser)

    run_parser = subparsers.add_parser("run", help="Simulate one experiment and check its bounds")
    run_parser.add_argument("--config", required=True, help="Experiment JSON")
    run_parser.add_argument("--out", help="Artifact directory (overrides output.dir)")
    run_parser.add_argument("--seed", type=int, help="Overrides the config seed")

    sweep_parser = subparsers.add_parser("sweep", help="Run a parameter grid")
    sweep_parser.add_argument("--config", required=True, help="Sweep JSON")
    sweep_parser.add_argument("--out", help="Artifact directory (overrides output.dir)")
    sweep_parser.add_argument("--seed", type=int, help="Overrides the config seed")

    demo_parser = subparsers.add_parser("demo", help=f"Curated reproduction: {', '.join(demo_names())}")
    demo_parser.add_argument("name")

    for name, help_text in (
        ("validate-topology", "Diagnose a weight matrix"),
        ("spectrum", "Eigenvalues and topology factors of a weight matrix"),
    ):
        topo_parser = subparsers.add_parser(name, help=help_text)
        topo_parser.add_argument("--config", required=True, help="Topology JSON")
        topo_parser.add_argument("--seed", type=int, default=0, help="Seed for random topologies")

    schema_parser = subparsers.add_parser("schema", help="JSON schema of experiment configs")
    schema_parser.add_argument("--out", help="Write to this file instead of stdout")

    return parser


def _emit(payload: Any, *, compact: bool = False) -> None:
    if compact:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


def _check_seed(seed: Optional[int]) -> Optional[int]:
    if seed is not None and not 0 <= seed < 2 ** 64:
        raise UsageError(f"--seed must be an unsigned 64-bit integer, got {seed}", argument="seed")
    return seed


def cmd_run(args: argparse.Namespace, settings: Settings) -> int:
    config = load_experiment(args.config, seed=_check_seed(args.seed))
    outcome = ExperimentRunner(settings).run(config, args.out)
    _emit(
        {
            "verdict": outcome.comparison.verdict,
            "tightness": outcome.comparison.tightness,
            "artifacts": {key: str(path) for key, path in outcome.artifacts.items()},
        }
    )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, settings: Settings) -> int:
    sweep = load_sweep(args.config, seed=_check_seed(args.seed))
    result = SweepRunner(settings).run(sweep, args.out)
    _emit({"cells": len(result.rows), "summary": str(result.path)})
    return EXIT_OK


def cmd_demo(args: argparse.Namespace, settings: Settings) -> int:
    result = run_demo(args.name)
    _emit(result.to_dict(), compact=True)
    return EXIT_OK if result.passed else EXIT_DOMINANCE


def cmd_validate_topology(args: argparse.Namespace, settings: Settings) -> int:
    topo = load_topology(args.config, args.seed, strict=False)
    report = validate(topo)
    _emit(report.to_dict() | {"is_valid": report.is_valid})
    return EXIT_OK if report.is_valid else EXIT_FAILURE


def cmd_spectrum(args: argparse.Namespace, settings: Settings) -> int:
    topo = load_topology(args.config, args.seed, strict=False)
    _emit(spectral_summary(topo))
    return EXIT_OK


def cmd_schema(args: argparse.Namespace, settings: Settings) -> int:
    text = json.dumps(experiment_schema(), indent=2, sort_keys=True)
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "demo": cmd_demo,
    "validate-topology": cmd_validate_topology,
    "spectrum": cmd_spectrum,
    "schema": cmd_schema,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    configure_logging(settings.log_level, settings.log_json)
    middleware = ErrorHandlerMiddleware()
    argv: List[str] = list(sys.argv[1:] if argv is None else argv)

    def dispatch() -> int:
        args = create_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS), argument="command")
        return COMMANDS[args.command](args, settings)

    command = argv[0] if argv else "degrad"
    return middleware.dispatch(command, dispatch)


if __name__ == "__main__":
    sys.exit(main())
