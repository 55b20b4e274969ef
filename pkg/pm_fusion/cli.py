"""
cli.py

Command-line interface for the pm_fusion package.

    pm_fusion simulate --scenario my.yaml --method all --runs 30 --out results/
    pm_fusion sweep --values 0.1 0.3 0.5 0.7 0.9 --out results/
    pm_fusion verify-incentives --samples 1000 --seed 0
    pm_fusion oracle-check --samples 1000
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from .errors import PMFusionError
from .fusion_registry import get_global_registry
from .harness import run_experiment, run_sweep
from .incentives import oracle_check, properness_suite, strategy_grid_check, truthful_optimum_suite
from .reporting import emit_results, emit_sweep
from .scenario import ScenarioConfig, load_scenario

logger = logging.getLogger(__name__)

DEFAULT_SWEEP = (0.1, 0.3, 0.5, 0.7, 0.9)


def _add_scenario_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", help="YAML scenario merged over the packaged default")
    parser.add_argument(
        "--method",
        default="all",
        help="Fusion method (pm, ds, ddf or an alias), or 'all' for the scenario's list",
    )
    parser.add_argument("--runs", type=int, help="Replications per object and method")
    parser.add_argument("--seed", type=int, help="Base seed; run r uses seed + r")
    parser.add_argument("--out", default="results", help="Output directory")
    parser.add_argument("--w-bel", type=float, dest="w_bel", help="Weight of an agent's own signal")
    parser.add_argument("--condition", help="Environment condition: clear, rain or high_metal_soil")
    parser.add_argument("--malicious-fraction", type=float, dest="malicious_fraction")
    parser.add_argument("--window", type=int, help="Time window T")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pm_fusion",
        description="Prediction-market belief aggregation for multi-sensor object classification.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Run an experiment and write result tables")
    _add_scenario_arguments(simulate)

    sweep = commands.add_parser("sweep", help="Repeat the experiment for several w_bel values")
    _add_scenario_arguments(sweep)
    sweep.add_argument("--values", type=float, nargs="+", default=list(DEFAULT_SWEEP))

    verify = commands.add_parser("verify-incentives", help="Run the properness and truthfulness suites")
    verify.add_argument("--samples", type=int, default=1000)
    verify.add_argument("--seed", type=int, default=0)

    oracle = commands.add_parser("oracle-check", help="Compare the log pool with the literal aggregation")
    oracle.add_argument("--samples", type=int, default=1000)
    oracle.add_argument("--seed", type=int, default=0)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")


def _load(args: argparse.Namespace) -> ScenarioConfig:
    overrides: Dict[str, Any] = {}
    if args.runs is not None:
        overrides.setdefault("experiment", {})["runs"] = args.runs
    if args.seed is not None:
        overrides.setdefault("experiment", {})["seed"] = args.seed
    if args.w_bel is not None:
        overrides.setdefault("agents", {})["w_bel"] = args.w_bel
    if args.malicious_fraction is not None:
        overrides.setdefault("agents", {})["malicious_fraction"] = args.malicious_fraction
    if args.window is not None:
        overrides.setdefault("stopping", {})["window"] = args.window
    if args.condition is not None:
        overrides.setdefault("environment", {})["condition"] = args.condition
    return load_scenario(args.scenario, overrides)


def _methods(args: argparse.Namespace, config: ScenarioConfig) -> List[str]:
    if args.method == "all":
        return list(config.methods)
    return [get_global_registry().canonical_name(args.method)]


def _simulate(args: argparse.Namespace) -> int:
    config = _load(args)
    result = run_experiment(config, _methods(args, config))
    for path in emit_results(result, args.out):
        print(path)
    for method in result.methods:
        print(
            f"{method}: mean steps {result.mean_steps(method):.2f}, "
            f"mean final rmse {result.mean_final(method, 'rmse'):.4f}"
        )
    return 0


def _sweep(args: argparse.Namespace) -> int:
    config = _load(args)
    print(emit_sweep(run_sweep(config, args.values, _methods(args, config)), args.out))
    return 0


def _verify_incentives(args: argparse.Namespace) -> int:
    properness = properness_suite(args.samples, seed=args.seed)
    optimum = truthful_optimum_suite(args.samples, seed=args.seed)
    grid = strategy_grid_check()
    print(
        f"properness: {properness.violations} violations in {properness.comparisons} comparisons "
        f"(worst gap {properness.worst_gap:.3g})"
    )
    print(f"truthful optimum: max |r* - b| = {optimum.max_error:.3g} over {optimum.instances} instances")
    print(f"strategy grid: {grid.violations} violations, {grid.ties} ties over {grid.points} beliefs")
    return 0 if properness.passed and optimum.passed and grid.passed else 1


def _oracle_check(args: argparse.Namespace) -> int:
    result = oracle_check(args.samples, seed=args.seed)
    print(
        f"max difference {result.max_difference:.3g}, reward shift {result.max_reward_shift:.3g}, "
        f"varpi shift {result.max_varpi_shift:.3g} over {result.samples} report sets"
    )
    return 0 if result.passed else 1


COMMANDS = {
    "simulate": _simulate,
    "sweep": _sweep,
    "verify-incentives": _verify_incentives,
    "oracle-check": _oracle_check,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except (PMFusionError, ValueError, KeyError, OSError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"Error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
