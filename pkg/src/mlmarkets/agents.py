"""Agents and their buying functions.

A buying function maps market prices to the agent's utility-maximizing
position. Positions are only defined up to adding ``alpha * 1`` (buying one of
every good costs exactly one unit when prices sum to one), so each function
returns a canonical representative: ``s.c = 0`` for the log and exponential
agents and ``min_k s_k = 0`` for the linear agent.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .beliefs import Belief, FactorTable, UtilityKind, normalize
from .errors import ContractError, DegeneratePricesError, DomainError, ZeroPriceError
from .outcome_space import Clique, OutcomeSpace, marginal_costs, substate_indices


class StandardizationKind(enum.Enum):
    ZERO_VALUE = "zero_value"  # s.c = 0
    ZERO_LAST_GOOD = "zero_last_good"  # s[-1] = 0
    MIN_ZERO = "min_zero"  # min_k s_k = 0


@dataclass(frozen=True, eq=False)
class FullJoint:
    belief: Belief


@dataclass(frozen=True, eq=False)
class Niche:
    """Belief expressed as a clique factor times the market price (``P ∝ F c``)."""

    factor: FactorTable


@dataclass(frozen=True, eq=False)
class Marginal:
    """Belief over a clique only; bets on clique substates are spread evenly over
    every consistent joint good."""

    belief: Belief


Style = Union[FullJoint, Niche, Marginal]


@dataclass(frozen=True, eq=False)
class Agent:
    id: str
    wealth: float
    utility: UtilityKind
    style: Style

    def __post_init__(self):
        object.__setattr__(self, "utility", UtilityKind.parse(self.utility))
        if not (math.isfinite(self.wealth) and self.wealth > 0):
            raise DomainError(f"agent {self.id!r}: wealth must be positive, got {self.wealth}")
        if isinstance(self.style, (Niche, Marginal)) and self.utility is not UtilityKind.EXP:
            raise DomainError(
                f"agent {self.id!r}: niche and marginal agents need exponential utility"
            )
        if isinstance(self.style, FullJoint) and self.style.belief.scope is not None:
            raise ContractError(f"agent {self.id!r}: full-joint belief cannot be clique-scoped")
        if isinstance(self.style, Marginal) and self.style.belief.scope is None:
            raise ContractError(f"agent {self.id!r}: marginal belief needs a clique scope")

    def scope(self, space: OutcomeSpace) -> Clique:
        if isinstance(self.style, FullJoint):
            return space.full_clique()
        if isinstance(self.style, Niche):
            return self.style.factor.scope
        return self.style.belief.scope

    def check_space(self, space: OutcomeSpace) -> None:
        if isinstance(self.style, Niche):
            self.style.factor.check_space(space)
        else:
            self.style.belief.check_space(space)


def _prices(prices, n: int | None = None) -> np.ndarray:
    c = np.asarray(prices, dtype=float)
    if c.ndim != 1 or (n is not None and c.size != n):
        raise ContractError(f"expected {n} prices, got shape {c.shape}")
    if np.any(c <= 0) or not np.all(np.isfinite(c)):
        raise ZeroPriceError("prices must be finite and strictly positive")
    return c


def standardize(position, prices, kind: StandardizationKind) -> np.ndarray:
    """Shift a position by ``alpha * 1`` so the chosen constraint holds."""
    s = np.asarray(position, dtype=float)
    c = np.asarray(prices, dtype=float)
    if s.shape != c.shape:
        raise ContractError("position and prices must align")
    if kind is StandardizationKind.ZERO_VALUE:
        total = c.sum()
        if total == 0:
            raise DegeneratePricesError("prices sum to zero")
        alpha = -(s @ c) / total
    elif kind is StandardizationKind.ZERO_LAST_GOOD:
        alpha = -s[-1]
    else:
        alpha = -s.min()
    return s + alpha


def _log_ratio_position(log_numerator: np.ndarray, c: np.ndarray) -> np.ndarray:
    # Subtracting the price-weighted mean is the log(lambda) that makes s.c = 0.
    return log_numerator - (c @ log_numerator) / c.sum()


def buy_linear(agent: Agent, prices) -> np.ndarray:
    """Stake the whole wealth on the good with the largest relative edge.

    Returns the zero position when no good has a positive edge. Ties go to the
    lowest index. The debt-free constraint is strict, so this is the supremum
    of the feasible set rather than an attained optimum.
    """
    p = _full_belief(agent, UtilityKind.LINEAR).table
    c = _prices(prices, p.size)
    edge = (p - c) / c
    k = int(np.argmax(edge))
    s = np.zeros_like(c)
    if edge[k] > 0:
        s[k] = agent.wealth / c[k]
    return s


def buy_log(agent: Agent, prices) -> np.ndarray:
    p = _full_belief(agent, UtilityKind.LOG).table
    c = _prices(prices, p.size)
    return agent.wealth * (p - c) / c


def buy_exp(agent: Agent, prices) -> np.ndarray:
    """Exponential-utility demand; independent of the agent's wealth."""
    belief = _full_belief(agent, UtilityKind.EXP)
    belief.require_positive(f"agent {agent.id!r} belief")
    c = _prices(prices, belief.table.size)
    return _log_ratio_position(belief.log_table - np.log(c), c)


def buy_niche(agent: Agent, prices, space: OutcomeSpace) -> np.ndarray:
    if not isinstance(agent.style, Niche):
        raise ContractError(f"agent {agent.id!r} is not a niche agent")
    factor = agent.style.factor
    factor.check_space(space)
    c = _prices(prices, space.num_joint_states)
    log_f = factor.log_table[substate_indices(factor.scope, space)]
    return _log_ratio_position(log_f, c)


def buy_marginal_substates(agent: Agent, prices, space: OutcomeSpace) -> np.ndarray:
    """Holding per clique substate, standardized so its marginal value is zero."""
    if not isinstance(agent.style, Marginal):
        raise ContractError(f"agent {agent.id!r} is not a marginal agent")
    belief = agent.style.belief
    belief.check_space(space)
    belief.require_positive(f"agent {agent.id!r} marginal belief")
    c = _prices(prices, space.num_joint_states)
    m = marginal_costs(c, belief.scope, space)
    if np.any(m <= 0):
        raise ZeroPriceError("a clique substate has zero marginal cost")
    return _log_ratio_position(belief.log_table - np.log(m), m)


def buy_marginal(agent: Agent, prices, space: OutcomeSpace) -> np.ndarray:
    """Joint-good position: each substate holding copied onto its consistent goods."""
    sub = buy_marginal_substates(agent, prices, space)
    return sub[substate_indices(agent.style.belief.scope, space)]


def buying_function(agent: Agent, prices, space: OutcomeSpace) -> np.ndarray:
    """Dispatch to the agent's closed-form buying function over joint goods."""
    if isinstance(agent.style, Niche):
        return buy_niche(agent, prices, space)
    if isinstance(agent.style, Marginal):
        return buy_marginal(agent, prices, space)
    if agent.utility is UtilityKind.LOG:
        return buy_log(agent, prices)
    if agent.utility is UtilityKind.EXP:
        return buy_exp(agent, prices)
    return buy_linear(agent, prices)


def _full_belief(agent: Agent, kind: UtilityKind) -> Belief:
    if agent.utility is not kind:
        raise ContractError(f"agent {agent.id!r} has {agent.utility.value} utility, not {kind.value}")
    if not isinstance(agent.style, FullJoint):
        raise ContractError(f"agent {agent.id!r} is not a full-joint agent")
    return agent.style.belief


def full_joint(id: str, belief, utility="exp", wealth: float = 1.0) -> Agent:
    """Convenience constructor normalizing a raw belief table."""
    if not isinstance(belief, Belief):
        belief = normalize(belief)
    return Agent(id, wealth, UtilityKind.parse(utility), FullJoint(belief))
