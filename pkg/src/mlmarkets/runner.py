"""Solver dispatch, run reports and oracle validation for scenarios."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .agents import FullJoint, Marginal, Niche
from .beliefs import UtilityKind
from .equilibrium import (
    TatonnementParams,
    check_no_arbitrage,
    solve_exp_market,
    solve_linear_binary,
    solve_log_market,
    solve_niche_market,
    tatonnement,
)
from .errors import GridTooLargeError, MarketError, ScenarioError, StateCapError
from .message_passing import RestrictedMarket, Schedule, run_message_passing
from .oracle import (
    MAX_ORACLE_GOODS,
    brute_force_equilibrium,
    brute_force_joint_product,
    exact_marginals,
    weighted_median_oracle,
)
from .outcome_space import joint_goods, single_var_goods
from .scenario import Scenario, scenario_digest, scenario_from_dict

CLOSED_FORM_VALIDATE_TOL = 1e-6
GRID_VALIDATE_TOL = 1e-3
GRID_STEP = 1e-3

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_VALIDATION_FAILED = 2
EXIT_INPUT_ERROR = 3


@dataclass
class RunReport:
    digest: str
    solver: str
    prices: dict[str, float]
    positions: dict[str, dict[str, float]]
    residual: float
    iterations: int
    converged: bool
    wall_time: float
    scenario: dict[str, Any]
    warnings: list[str] = field(default_factory=list)
    validation: dict[str, Any] | None = None

    @property
    def price_vector(self) -> np.ndarray:
        return np.array(list(self.prices.values()))

    def exit_code(self) -> int:
        if not self.converged:
            return EXIT_NOT_CONVERGED
        if self.validation and self.validation["status"] == "fail":
            return EXIT_VALIDATION_FAILED
        return EXIT_OK

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def load_report(path: str | Path) -> RunReport:
    try:
        data = json.loads(Path(path).read_text())
        report = RunReport(**data)
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise ScenarioError(f"unreadable report: {exc}", str(path)) from None
    if scenario_digest(report.scenario) != report.digest:
        raise ScenarioError("embedded scenario does not match its digest", str(path))
    return report


def rerun(report: RunReport) -> RunReport:
    return run(scenario_from_dict(report.scenario, "<report>"))


# -- dispatch ----------------------------------------------------------------


def choose_solver(scenario: Scenario) -> str:
    agents = scenario.agents
    method = scenario.solver.method
    if scenario.market == "restricted":
        return "message_passing"
    if method == "tatonnement":
        return "tatonnement"
    closed = _closed_form_kind(scenario)
    if method == "closed_form" and closed is None:
        raise ScenarioError("no closed form applies to this agent population", "solver.method")
    return closed or "tatonnement"


def _closed_form_kind(scenario: Scenario) -> str | None:
    agents = scenario.agents
    full = [a for a in agents if isinstance(a.style, FullJoint)]
    utilities = {a.utility for a in agents}
    if len(full) == len(agents) and utilities == {UtilityKind.LOG}:
        return "closed_form_log"
    if len(full) == len(agents) and utilities == {UtilityKind.EXP}:
        return "closed_form_exp"
    niche = [a for a in agents if isinstance(a.style, Niche)]
    if (
        utilities == {UtilityKind.EXP}
        and len(full) == 1
        and len(niche) == len(agents) - 1
    ):
        return "closed_form_niche"
    if (
        len(full) == len(agents)
        and utilities == {UtilityKind.LINEAR}
        and scenario.space.num_joint_states == 2
    ):
        return "weighted_median"
    return None


def _solve(scenario: Scenario, solver: str):
    s = scenario.solver
    space = scenario.space
    agents = scenario.agents
    if solver == "message_passing":
        order = None if s.order is None else tuple(space.names.index(n) for n in s.order)
        schedule = Schedule(
            order=order,
            tolerance=s.tolerance,
            max_sweeps=s.max_iterations,
            jacobi=s.schedule == "jacobi",
            damping=s.price_damping,
        )
        return run_message_passing(RestrictedMarket(space, agents), schedule)
    if solver == "closed_form_log":
        return solve_log_market(agents, space, s.tolerance)
    if solver == "closed_form_exp":
        return solve_exp_market(agents, space, s.tolerance)
    if solver == "closed_form_niche":
        base = next(a for a in agents if isinstance(a.style, FullJoint))
        niche = [a for a in agents if a is not base]
        return solve_niche_market(base, niche, space, s.tolerance)
    if solver == "weighted_median":
        return solve_linear_binary(agents, space, s.tolerance)
    params = TatonnementParams(
        step_size=s.step_size,
        tolerance=s.tolerance,
        max_iterations=s.max_iterations,
        damping=s.damping,
    )
    return tatonnement(agents, None, params, space)


def good_labels(scenario: Scenario) -> list[str]:
    space = scenario.space
    if scenario.market == "restricted":
        return [g.label(space) for g in single_var_goods(space)]
    return [g.label(space) for g in joint_goods(space)]


def run(scenario: Scenario) -> RunReport:
    solver = choose_solver(scenario)
    start = time.perf_counter()
    result = _solve(scenario, solver)
    elapsed = time.perf_counter() - start
    labels = good_labels(scenario)
    warnings = list(scenario.warnings) + list(result.notes)
    if scenario.market == "joint":
        ok, deviation = check_no_arbitrage(result.prices)
        if not ok:
            warnings.append(f"prices fail the no-arbitrage check (deviation {deviation:.3g})")
    return RunReport(
        digest=scenario.digest,
        solver=solver,
        prices={l: float(v) for l, v in zip(labels, result.prices)},
        positions={
            aid: {l: float(v) for l, v in zip(labels, pos)}
            for aid, pos in result.positions.items()
        },
        residual=float(result.clearing_residual),
        iterations=int(result.iterations),
        converged=bool(result.converged),
        wall_time=elapsed,
        scenario=scenario.raw,
        warnings=warnings,
    )


# -- validation --------------------------------------------------------------


def _oracle_prices(scenario: Scenario, solver: str):
    """``(oracle name, prices, default tolerance)`` or raise to mark unvalidatable."""
    space = scenario.space
    agents = scenario.agents
    if solver == "message_passing":
        full = [a for a in agents if isinstance(a.style, FullJoint)]
        marg = [a for a in agents if isinstance(a.style, Marginal)]
        if len(agents) == 1 and full:
            joint = full[0].style.belief
        elif len(agents) == 1 and len(marg[0].style.belief.scope) == space.num_variables:
            joint = marg[0].style.belief
        else:
            raise GridTooLargeError("no oracle for multi-agent restricted markets")
        return "exact_marginals", np.array([m[1] for m in exact_marginals(joint, space)]), CLOSED_FORM_VALIDATE_TOL
    if solver == "closed_form_niche":
        base = next(a for a in agents if isinstance(a.style, FullJoint))
        factors = [a.style.factor for a in agents if a is not base]
        prices = brute_force_joint_product(space, factors, base.style.belief)
        return "brute_force_joint_product", prices, CLOSED_FORM_VALIDATE_TOL
    if solver == "weighted_median":
        p1 = [float(a.style.belief.table[1]) for a in agents]
        c1 = weighted_median_oracle(p1, [a.wealth for a in agents])
        return "weighted_median_oracle", np.array([1 - c1, c1]), CLOSED_FORM_VALIDATE_TOL
    if space.num_joint_states > MAX_ORACLE_GOODS:
        raise GridTooLargeError(f"equilibrium grid limited to {MAX_ORACLE_GOODS} goods")
    prices = brute_force_equilibrium(agents, GRID_STEP, space)
    return "brute_force_equilibrium", prices, GRID_VALIDATE_TOL


def validate(scenario: Scenario, tolerance: float | None = None) -> RunReport:
    report = run(scenario)
    tol = tolerance if tolerance is not None else scenario.solver.validate_tolerance
    try:
        oracle, prices, default_tol = _oracle_prices(scenario, report.solver)
    except (GridTooLargeError, StateCapError, MarketError) as exc:
        report.validation = {"status": "unvalidatable", "reason": str(exc)}
        return report
    tol = default_tol if tol is None else tol
    gap = float(np.max(np.abs(report.price_vector - prices)))
    # Relative slack for grid points sitting exactly one step away.
    passed = gap <= tol * (1 + 1e-9)
    report.validation = {
        "status": "pass" if passed else "fail",
        "oracle": oracle,
        "oracle_prices": [float(v) for v in prices],
        "max_discrepancy": gap,
        "tolerance": tol,
    }
    return report


# -- rendering ---------------------------------------------------------------


def render_table(report: RunReport) -> str:
    ids = list(report.positions)
    width = max([len(l) for l in report.prices] + [4])
    head = f"{'good':<{width}}  {'price':>12}" + "".join(f"  {i:>12}" for i in ids)
    lines = [
        f"solver: {report.solver}   converged: {report.converged}   "
        f"residual: {report.residual:.3e}   iterations: {report.iterations}",
        head,
        "-" * len(head),
    ]
    for label, price in report.prices.items():
        row = f"{label:<{width}}  {price:>12.8f}"
        row += "".join(f"  {report.positions[i][label]:>12.6f}" for i in ids)
        lines.append(row)
    for w in report.warnings:
        lines.append(f"warning: {w}")
    if report.validation:
        v = report.validation
        if v["status"] == "unvalidatable":
            lines.append(f"validation: unvalidatable at this scale ({v['reason']})")
        else:
            lines.append(
                f"validation: {v['status']} vs {v['oracle']} "
                f"(max discrepancy {v['max_discrepancy']:.3e}, tolerance {v['tolerance']:g})"
            )
    return "\n".join(lines)


def trace_rows(scenario: Scenario):
    """Message-passing trace: header row then one row per (sweep, good)."""
    if scenario.market != "restricted":
        raise ScenarioError("trace needs a restricted market", "market")
    result = _solve(scenario, "message_passing")
    labels = good_labels(scenario)
    ids = [a.id for a in scenario.agents]
    yield ["sweep", "good", "old_price", "new_price", "clearing", *ids]
    for r in result.trace:
        yield [
            r.sweep,
            labels[r.good],
            repr(r.old_price),
            repr(r.new_price),
            repr(r.clearing),
            *(repr(r.holdings[i]) if i in r.holdings else "" for i in ids),
        ]
