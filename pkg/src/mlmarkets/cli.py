"""Command-line front end: ``mlmarkets run|validate|trace|oracle|rerun|generate``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import runner
from .agents import FullJoint, Niche
from .errors import MarketError
from .oracle import brute_force_equilibrium, brute_force_joint_product, exact_marginals
from .scenario import Scenario, load_scenario
from .synthetic import random_scenario

log = logging.getLogger("mlmarkets")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tolerance", type=float, help="override the solver tolerance")
    p.add_argument("--max-iters", type=int, help="override the iteration / sweep cap")
    p.add_argument("--seed", type=int, default=0, help="seed for generated scenarios")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="mlmarkets", description="Equilibrium prices for machine-learning prediction markets."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="solve a scenario")
    p.add_argument("scenario", type=Path)
    p.add_argument("-o", "--output", type=Path, help="write the JSON report here")
    p.add_argument("--json", action="store_true", help="print the JSON report instead of a table")

    p = sub.add_parser("validate", parents=[common], help="solve and compare against an oracle")
    p.add_argument("scenario", type=Path)
    p.add_argument("-o", "--output", type=Path)
    p.add_argument("--validate-tolerance", type=float)

    p = sub.add_parser("trace", parents=[common], help="message-passing trace as CSV")
    p.add_argument("scenario", type=Path)
    p.add_argument("-o", "--output", type=Path, help="CSV file (default stdout)")

    p = sub.add_parser("oracle", parents=[common], help="run a brute-force oracle directly")
    p.add_argument("scenario", type=Path)
    p.add_argument("--kind", choices=["product", "marginals", "equilibrium"], required=True)
    p.add_argument("--step", type=float, default=runner.GRID_STEP)

    p = sub.add_parser("rerun", parents=[common], help="re-run a saved report and compare prices")
    p.add_argument("report", type=Path)

    p = sub.add_parser("generate", parents=[common], help="write a random scenario")
    p.add_argument("--kind", choices=["log", "exp", "niche", "linear", "restricted", "mixed"], required=True)
    p.add_argument("-o", "--output", type=Path, required=True)
    return parser


def _load(args) -> Scenario:
    scenario = load_scenario(args.scenario)
    if args.tolerance is not None:
        scenario.solver.tolerance = args.tolerance
    if args.max_iters is not None:
        scenario.solver.max_iterations = args.max_iters
    return scenario


def _emit(report: runner.RunReport, args) -> None:
    if getattr(args, "output", None):
        report.save(args.output)
    if getattr(args, "json", False):
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(runner.render_table(report))


def _cmd_run(args) -> int:
    report = runner.run(_load(args))
    _emit(report, args)
    return report.exit_code()


def _cmd_validate(args) -> int:
    report = runner.validate(_load(args), args.validate_tolerance)
    _emit(report, args)
    return report.exit_code()


def _cmd_trace(args) -> int:
    rows = runner.trace_rows(_load(args))
    if args.output:
        with open(args.output, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
    else:
        csv.writer(sys.stdout).writerows(rows)
    return runner.EXIT_OK


def _cmd_oracle(args) -> int:
    scenario = _load(args)
    space = scenario.space
    full = [a for a in scenario.agents if isinstance(a.style, FullJoint)]
    factors = [a.style.factor for a in scenario.agents if isinstance(a.style, Niche)]
    if args.kind == "equilibrium":
        result = {"prices": brute_force_equilibrium(scenario.agents, args.step, space).tolist()}
    else:
        if len(full) > 1:
            raise MarketError("product and marginal oracles take at most one full-joint agent")
        base = full[0].style.belief if full else None
        joint = brute_force_joint_product(space, factors, base)
        if args.kind == "product":
            result = {"joint": joint.tolist()}
        else:
            result = {
                name: m.tolist() for name, m in zip(space.names, exact_marginals(joint, space))
            }
    print(json.dumps(result, indent=2))
    return runner.EXIT_OK


def _cmd_rerun(args) -> int:
    saved = runner.load_report(args.report)
    fresh = runner.rerun(saved)
    same = np.array_equal(saved.price_vector, fresh.price_vector)
    print(runner.render_table(fresh))
    print(f"round trip: {'identical' if same else 'MISMATCH'} prices")
    return runner.EXIT_OK if same else runner.EXIT_VALIDATION_FAILED


def _cmd_generate(args) -> int:
    doc = random_scenario(args.kind, np.random.default_rng(args.seed))
    args.output.write_text(json.dumps(doc, indent=2) + "\n")
    return runner.EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "validate": _cmd_validate,
    "trace": _cmd_trace,
    "oracle": _cmd_oracle,
    "rerun": _cmd_rerun,
    "generate": _cmd_generate,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except MarketError as exc:
        log.error("%s", exc)
        return runner.EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
