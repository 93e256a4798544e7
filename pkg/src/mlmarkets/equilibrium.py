"""Market-clearing prices for joint-bet markets.

Closed forms cover the homogeneous populations: log utility prices at the
wealth-weighted mean of beliefs, exponential utility at the normalized
geometric mean, a base agent plus niche agents at the product of the base
belief with every clique factor, and binary linear-utility markets at the
wealth-weighted median. Everything else goes through :func:`tatonnement`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .agents import (
    Agent,
    FullJoint,
    Niche,
    StandardizationKind,
    buying_function,
    standardize,
)
from .beliefs import UtilityKind
from .errors import ContractError, DegeneratePricesError, DomainError
from .outcome_space import OutcomeSpace, substate_indices

ARBITRAGE_TOL = 1e-10
DEFAULT_TOLERANCE = 1e-9


@dataclass
class EquilibriumReport:
    prices: np.ndarray
    positions: dict[str, np.ndarray]
    clearing_residual: float
    iterations: int
    converged: bool
    solver: str
    tolerance: float = DEFAULT_TOLERANCE
    notes: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class TatonnementParams:
    step_size: float = 0.1
    tolerance: float = 1e-9
    max_iterations: int = 100_000
    damping: float = 0.5
    # Below this step size the iteration is declared divergent.
    min_step: float = 1e-14

    def __post_init__(self):
        if not (self.step_size > 0 and self.max_iterations > 0):
            raise DomainError("step_size and max_iterations must be positive")
        if not 0 < self.tolerance < 1:
            raise DomainError("tolerance must lie in (0, 1)")
        if not 0 < self.damping < 1:
            raise DomainError("damping must lie in (0, 1)")


def default_space(agents: Sequence[Agent]) -> OutcomeSpace:
    """Single-variable space sized by the first full-joint belief."""
    for a in agents:
        if isinstance(a.style, FullJoint):
            return OutcomeSpace((("y", a.style.belief.table.size),))
    raise ContractError("cannot infer the outcome space without a full-joint agent")


def _space_for(agents: Sequence[Agent], space: OutcomeSpace | None) -> OutcomeSpace:
    if not agents:
        raise ContractError("a market needs at least one agent")
    space = space or default_space(agents)
    space.check_cap()
    for a in agents:
        a.check_space(space)
    return space


def positions_at(
    agents: Sequence[Agent], prices, space: OutcomeSpace
) -> dict[str, np.ndarray]:
    return {a.id: buying_function(a, prices, space) for a in agents}


def _residual_from_positions(positions, prices) -> np.ndarray:
    # Project out the risk-free all-ones bundle (held by the neutral agent), so
    # linear agents' min-zero positions compare on the same footing.
    c = np.asarray(prices, dtype=float)
    total = np.zeros_like(c)
    for s in positions:
        total += standardize(s, c, StandardizationKind.ZERO_VALUE)
    return total


def clearing_residual(
    agents: Sequence[Agent], prices, space: OutcomeSpace | None = None
) -> np.ndarray:
    """Net demand per good, each agent's position taken in its zero-value form."""
    space = _space_for(agents, space)
    return _residual_from_positions(positions_at(agents, prices, space).values(), prices)


def check_no_arbitrage(prices, tol: float = ARBITRAGE_TOL) -> tuple[bool, float]:
    c = np.asarray(prices, dtype=float)
    deviation = abs(float(c.sum()) - 1.0)
    ok = deviation <= tol and bool(np.all((c > 0) & (c < 1)))
    return ok, deviation


def _softmax(log_weights: np.ndarray) -> np.ndarray:
    w = np.exp(log_weights - log_weights.max())
    return w / w.sum()


def _closed_form_report(agents, prices, space, solver, tolerance) -> EquilibriumReport:
    positions = positions_at(agents, prices, space)
    residual = float(np.max(np.abs(_residual_from_positions(positions.values(), prices))))
    return EquilibriumReport(
        prices=prices,
        positions=positions,
        clearing_residual=residual,
        iterations=0,
        converged=residual <= tolerance,
        solver=solver,
        tolerance=tolerance,
    )


def _require(agents, utility: UtilityKind, styles=(FullJoint,)):
    for a in agents:
        if a.utility is not utility or not isinstance(a.style, styles):
            raise ContractError(
                f"agent {a.id!r} does not fit a homogeneous {utility.value} market"
            )


def solve_log_market(
    agents: Sequence[Agent],
    space: OutcomeSpace | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> EquilibriumReport:
    """Wealth-weighted mean of the agents' beliefs."""
    space = _space_for(agents, space)
    _require(agents, UtilityKind.LOG)
    wealth = np.array([a.wealth for a in agents])
    beliefs = np.stack([a.style.belief.table for a in agents])
    prices = wealth @ beliefs / wealth.sum()
    if np.any(prices <= 0):
        raise DegeneratePricesError("a good has zero belief under every agent")
    return _closed_form_report(agents, prices, space, "closed_form_log", tolerance)


def solve_exp_market(
    agents: Sequence[Agent],
    space: OutcomeSpace | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> EquilibriumReport:
    """Normalized geometric mean of the beliefs; wealths play no role."""
    space = _space_for(agents, space)
    _require(agents, UtilityKind.EXP)
    for a in agents:
        a.style.belief.require_positive(f"agent {a.id!r} belief")
    # Each agent contributes the potential log(P_i) / N_A.
    potential = np.mean([a.style.belief.log_table for a in agents], axis=0)
    prices = _softmax(potential)
    return _closed_form_report(agents, prices, space, "closed_form_exp", tolerance)


def solve_niche_market(
    base: Agent,
    niche_agents: Sequence[Agent],
    space: OutcomeSpace | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> EquilibriumReport:
    """Base belief times every niche agent's clique factor, normalized."""
    agents = [base, *niche_agents]
    space = _space_for(agents, space)
    _require([base], UtilityKind.EXP)
    _require(niche_agents, UtilityKind.EXP, styles=(Niche,))
    base.style.belief.require_positive(f"agent {base.id!r} belief")
    log_weights = base.style.belief.log_table.copy()
    for a in niche_agents:
        factor = a.style.factor
        log_weights += factor.log_table[substate_indices(factor.scope, space)]
    prices = _softmax(log_weights)
    return _closed_form_report(agents, prices, space, "closed_form_niche", tolerance)


def weighted_median(values: Sequence[float], weights: Sequence[float]) -> float:
    """Smallest value whose cumulative weight reaches half the total."""
    order = np.argsort(np.asarray(values, dtype=float), kind="stable")
    v = np.asarray(values, dtype=float)[order]
    cum = np.cumsum(np.asarray(weights, dtype=float)[order])
    return float(v[np.searchsorted(2 * cum, cum[-1], side="left")])


def solve_linear_binary(
    agents: Sequence[Agent],
    space: OutcomeSpace | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> EquilibriumReport:
    """Wealth-weighted (lower) median of the agents' beliefs in outcome 1.

    Goods are ordered (outcome 0, outcome 1). Agents whose belief equals the
    price are indifferent; their stakes are chosen to bring the market as close
    to clearing as their wealth allows. The median need not clear the market
    exactly, in which case the report is marked unconverged and says so.
    """
    space = _space_for(agents, space)
    _require(agents, UtilityKind.LINEAR)
    if space.num_joint_states != 2:
        raise ContractError("the weighted-median solver needs exactly two goods")
    p1 = np.array([a.style.belief.table[1] for a in agents])
    wealth = np.array([a.wealth for a in agents])
    c1 = weighted_median(p1, wealth)
    if not 0 < c1 < 1:
        raise DegeneratePricesError(f"median belief {c1} leaves a good with zero price")
    c0 = 1.0 - c1
    prices = np.array([c0, c1])

    # Zero-value component in good 1 of a full stake: up W*c0/c1, down -W.
    positions: dict[str, np.ndarray] = {}
    base = 0.0
    marginal = []
    for a, p, w in zip(agents, p1, wealth):
        if p > c1:
            positions[a.id] = np.array([0.0, w / c1])
            base += w * c0 / c1
        elif p < c1:
            positions[a.id] = np.array([w / c0, 0.0])
            base -= w
        else:
            marginal.append(a)
    w_m = sum(a.wealth for a in marginal)
    adjust = float(np.clip(-base, -w_m, w_m * c0 / c1))
    for a in marginal:
        # u units of good 1 contribute u*c0 to the good-1 zero-value component,
        # d units of good 0 contribute -d*c0.
        share = a.wealth / w_m * adjust
        if share >= 0:
            positions[a.id] = np.array([0.0, share / c0])
        else:
            positions[a.id] = np.array([-share / c0, 0.0])
    positions = {a.id: positions[a.id] for a in agents}
    residual_vec = _residual_from_positions(positions.values(), prices)
    residual = float(np.max(np.abs(residual_vec)))
    report = EquilibriumReport(
        prices=prices,
        positions=positions,
        clearing_residual=residual,
        iterations=0,
        converged=residual <= tolerance,
        solver="weighted_median",
        tolerance=tolerance,
    )
    if not report.converged:
        report.notes.append(
            "weighted median does not clear the debt-free linear demands at this "
            f"wealth split (residual {residual:.3g})"
        )
    return report


def tatonnement(
    agents: Sequence[Agent],
    init=None,
    params: TatonnementParams = TatonnementParams(),
    space: OutcomeSpace | None = None,
) -> EquilibriumReport:
    """Multiplicative price adjustment toward zero excess demand.

    Each step sets ``c <- normalize(c * exp(step * excess_demand))``. The step
    is scaled by ``damping`` whenever the excess demand flips direction, and a
    step that increases the residual is rejected. Non-convergence is reported,
    never raised.
    """
    space = _space_for(agents, space)
    n = space.num_joint_states
    c = np.full(n, 1.0 / n) if init is None else np.asarray(init, dtype=float)
    if c.shape != (n,) or np.any(c <= 0):
        raise ContractError("initial prices must be strictly positive, one per good")
    c = c / c.sum()

    def excess(prices):
        return _residual_from_positions(positions_at(agents, prices, space).values(), prices)

    notes: list[str] = []
    if any(a.utility is UtilityKind.LINEAR for a in agents):
        notes.append(
            "linear utility is not strictly concave: demand is discontinuous and "
            "the equilibrium may not be unique"
        )
    z = excess(c)
    r = float(np.max(np.abs(z)))
    step = params.step_size
    iterations = 0
    while r > params.tolerance and iterations < params.max_iterations:
        iterations += 1
        log_c = np.log(c) + step * z
        c_new = _softmax(log_c)
        if np.any(c_new <= 0):
            z_new, r_new = None, np.inf
        else:
            z_new = excess(c_new)
            r_new = float(np.max(np.abs(z_new)))
        if z_new is None or z_new @ z < 0 or r_new > r:
            step *= params.damping
            if step < params.min_step:
                notes.append("step size collapsed; price adjustment diverged")
                break
        if r_new <= r:
            c, z, r = c_new, z_new, r_new
    converged = r <= params.tolerance
    if not converged and iterations >= params.max_iterations:
        notes.append(f"no convergence within {params.max_iterations} iterations")
    return EquilibriumReport(
        prices=c,
        positions=positions_at(agents, c, space),
        clearing_residual=r,
        iterations=iterations,
        converged=converged,
        solver="tatonnement",
        tolerance=params.tolerance,
        notes=notes,
    )
