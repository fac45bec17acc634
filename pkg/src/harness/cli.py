"""Command-line entry point: one subcommand per experiment kind plus the reproduction suite."""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from src.harness.experiment import COMMANDS, list_corpus, load_experiment, parse_epsilon_grid
from src.harness.runner import FAMILIES, SuiteResult, run_experiment, run_paper_suite
from src.utils.config import Config
from src.utils.errors import BudgetExceededError, ConfigError, EntropyError

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def _budget(text: str) -> Dict[str, int]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    try:
        return {key.strip(): int(value)}
    except ValueError:
        raise argparse.ArgumentTypeError(f"budget {key} needs an integer, got {value!r}")


def _common(parser: argparse.ArgumentParser, units: bool = True):
    parser.add_argument("--format", dest="fmt", choices=("csv", "json"))
    if units:
        parser.add_argument("--units", choices=("nats", "bits"))
    parser.add_argument("--output", type=Path, help="directory for emitted tables")
    parser.add_argument("--log-level", choices=("DEBUG", "INFO", "WARNING", "ERROR"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="receptive-entropy",
        description="Receptive entropies of Z_+^k actions on symbolic spaces",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    for command in COMMANDS:
        sub = subparsers.add_parser(command, help=f"run a {command} experiment document")
        sub.add_argument("--config", required=True,
                         help="experiment YAML path, or the name of a shipped corpus document")
        sub.add_argument("--n-max", type=int)
        sub.add_argument("--epsilon-grid", help="comma-separated epsilons, e.g. 0.3,0.15")
        sub.add_argument("--seed", type=int)
        sub.add_argument("--budget", type=_budget, action="append", default=[],
                         help="override a resource budget, e.g. clique=2048")
        _common(sub)

    suite = subparsers.add_parser("suite", help="run the reproduction checks")
    suite.add_argument("--filter", help=f"comma-separated families out of {', '.join(FAMILIES)}")
    _common(suite, units=False)

    corpus = subparsers.add_parser("corpus", help="list the shipped experiment documents")
    corpus.add_argument("--log-level", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return parser


def _experiment_from_args(args):
    experiment = load_experiment(args.config)
    budgets = dict(experiment.budgets)
    for item in args.budget:
        budgets.update(item)
    grid = None
    if args.epsilon_grid:
        grid = parse_epsilon_grid([e for e in args.epsilon_grid.split(",") if e.strip()], "--epsilon-grid")
    return experiment.with_overrides(
        command=args.command,
        n_max=args.n_max,
        epsilon_grid=grid,
        seed=args.seed,
        budgets=budgets,
        fmt=args.fmt,
        units=args.units,
        output=args.output,
    )


def _report(result: SuiteResult, fmt: Optional[str]):
    if fmt == "json":
        print(json.dumps({
            "passed": len(result.checks) - len(result.failures),
            "failed": len(result.failures),
            "checks": [vars(c) for c in result.checks],
            "artifacts": [str(p) for p in result.artifacts],
        }, indent=2))
        return
    for line in result.summary_lines():
        print(line)
    for path in result.artifacts:
        print(f"wrote {path}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level or Config().log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "corpus":
            for name in list_corpus():
                print(name)
            return EXIT_OK
        if args.command == "suite":
            result = run_paper_suite(args.filter, args.output, args.fmt or "csv")
        else:
            result = run_experiment(_experiment_from_args(args))
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        log.error("budget exceeded: %s", exc)
        return EXIT_BUDGET
    except EntropyError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG

    _report(result, args.fmt)
    if result.exit_status:
        log.error("%d of %d checks failed", len(result.failures), len(result.checks))
    return EXIT_CHECK_FAILED if result.exit_status else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
