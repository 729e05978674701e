"""Command-line entry point: info-transition <command> [options]"""
import argparse
import asyncio
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .estimators.calculator import EstimateCalculator
from .harness.runner import ScenarioRunner, render_estimate_table, render_run_summary
from .harness.scenario import ScenarioMode, load_scenario
from .harness.stats import born_chi_squared, tau_u_histogram
from .harness.storage import RunStore, read_jsonl, read_manifest
from .resources.constants import UnitSystem, load_constants
from .utils.config import get_settings
from .utils.errors import InfoTransitionError, ScenarioError
from .utils.log import configure_logging

logger = logging.getLogger(__name__)

SCENARIO_COMMANDS = ("simulate", "lindblad", "lattice", "measure", "run")


def _parse_value(text: str) -> Any:
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_params(pairs: Optional[Sequence[str]]) -> Dict[str, Any]:
    """key=value pairs with numeric values converted"""
    params = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ScenarioError(f"Parameter {pair!r} is not of the form key=value")
        params[key] = _parse_value(value)
    return params


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="info-transition",
        description="Information-transition simulator and resource-estimate calculator",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="Master seed overriding the scenario's")
    parser.add_argument("--out", default=None, help="Output directory")
    parser.add_argument("--constants", default=None, help="JSON constants table")
    parser.add_argument(
        "--log-level", default=None, type=str.upper, choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
    )
    parser.add_argument("--workers", type=int, default=None, help="Concurrent trajectory batches")
    sub = parser.add_subparsers(dest="command", required=True)

    estimate = sub.add_parser("estimate", help="Reproduce a worked resource estimate")
    estimate.add_argument("name", help="Estimate name, or 'all'")
    estimate.add_argument("--param", action="append", metavar="KEY=VALUE", help="Estimator parameter")
    estimate.add_argument("--list", action="store_true", help="List estimate names and exit")

    for name in SCENARIO_COMMANDS:
        help_text = "Run a scenario file of any mode" if name == "run" else f"Run a {name} scenario file"
        command = sub.add_parser(name, help=help_text)
        command.add_argument("scenario", help="Scenario JSON file")

    stats = sub.add_parser("stats", help="Born chi-squared and unitary-phase histogram of a finished run")
    stats.add_argument("run_dir", help="Directory holding manifest.json and records.jsonl")
    stats.add_argument("--expected", default=None, help="Comma-separated Born probabilities by outcome index")
    stats.add_argument("--bins", type=int, default=10)

    replay = sub.add_parser("replay", help="Re-run a manifest and compare output digests")
    replay.add_argument("manifest", help="manifest.json of the run to reproduce")
    return parser


def cmd_estimate(args: argparse.Namespace, constants) -> int:
    calculator = EstimateCalculator(constants)
    if args.list:
        print("\n".join(calculator.estimators))
        return 0
    params = parse_params(args.param)
    if args.name == "all":
        if params:
            raise ScenarioError("--param cannot be combined with 'all'")
        reports = calculator.estimate_all()
    else:
        if args.name not in calculator.estimators:
            raise ScenarioError(f"Unknown estimate {args.name}; use --list")
        try:
            reports = [calculator.estimate(args.name, **params)]
        except TypeError as e:
            raise ScenarioError(f"Bad parameters for {args.name}: {e}") from e
    units = UnitSystem.SI.value
    print(render_estimate_table(reports, calculator.constants.version, units), end="")
    if args.out:
        store = RunStore(args.out, {"units": units, "constants_version": calculator.constants.version})
        store.write_jsonl("estimates.jsonl", (r.to_dict() for r in reports), "estimate-report")
        logger.info(f"Estimates written to {store.path('estimates.jsonl')}")
    return 0


def cmd_scenario(args: argparse.Namespace, runner: ScenarioRunner) -> int:
    scenario, digest = load_scenario(args.scenario)
    if args.command != "run" and scenario.mode != ScenarioMode(args.command):
        raise ScenarioError(f"{args.scenario} is a {scenario.mode.value} scenario, not {args.command}")
    out_dir = args.out or os.path.join(runner.settings.output_dir, scenario.id)
    manifest = asyncio.run(runner.run(scenario, out_dir, args.seed, os.path.abspath(args.scenario), digest))
    print(render_run_summary(manifest), end="")
    return 0


def _group_by_trajectory(records: List[Dict[str, Any]]) -> List[List[Dict[str, Any]]]:
    grouped: Dict[int, List[Dict[str, Any]]] = {}
    for record in records:
        grouped.setdefault(int(record.get("trajectory", 0)), []).append(record)
    return [grouped[k] for k in sorted(grouped)]


def cmd_stats(args: argparse.Namespace) -> int:
    manifest = read_manifest(os.path.join(args.run_dir, "manifest.json"))
    if manifest.get("mode") != ScenarioMode.MEASURE.value:
        raise ScenarioError(f"{args.run_dir} holds a {manifest.get('mode')} run; stats need a measure run")
    records = read_jsonl(os.path.join(args.run_dir, "records.jsonl"))
    trajectories = _group_by_trajectory(records)
    result: Dict[str, Any] = {"trajectories": len(trajectories), "transitions": len(records)}
    if args.expected:
        expected: Any = [float(p) for p in args.expected.split(",")]
    else:
        expected = {int(k): p for k, p in manifest.get("summary", {}).get("born_expected", {}).items()}
    if expected:
        first = [t[0] for t in trajectories if t]
        statistic, p_value = born_chi_squared(first, expected)
        result["born"] = {"statistic": statistic, "p_value": p_value}
    result["tau_u"] = tau_u_histogram(trajectories, bins=args.bins)
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def cmd_replay(args: argparse.Namespace, runner: ScenarioRunner) -> int:
    out_dir = args.out or os.path.join(os.path.dirname(os.path.abspath(args.manifest)), "replay")
    manifest, mismatches = asyncio.run(runner.replay(args.manifest, out_dir))
    if mismatches:
        print(f"Replay differs in: {', '.join(mismatches)}")
        return 1
    print(f"Replay reproduced {len(manifest.outputs)} outputs byte-for-byte")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers is not None and args.workers < 1:
        parser.error("--workers must be at least 1")
    settings = get_settings()
    if args.log_level:
        settings = settings.model_copy(update={"log_level": args.log_level})
    configure_logging(settings)

    try:
        constants = load_constants(args.constants) if args.constants else None
        if args.command == "estimate":
            return cmd_estimate(args, constants or load_constants())
        if args.command == "stats":
            return cmd_stats(args)
        runner = ScenarioRunner(settings, constants, args.workers)
        if args.command == "replay":
            return cmd_replay(args, runner)
        return cmd_scenario(args, runner)
    except InfoTransitionError as e:
        logger.error(f"{args.command} failed: {e}")
        return e.exit_code
    except (ValueError, KeyError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
