"""Auction dynamics for a market that only trades ``y_j = 1`` bets.

Goods come up for auction one at a time. For good ``k`` every participating
agent summarises its belief and its holdings in the other goods as a message
``A_ik(y_k)``; the clearing price is then the normalized geometric mean of
``A_ik(y) * P_ik(y)`` over participants, and each agent re-buys good ``k`` at
that price. Sweeps repeat until no price moves by more than the tolerance.

Only exponential-utility agents take part. A full-joint agent participates in
every good; a marginal agent only in the variables of its clique, and its
messages sum over clique states only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .agents import Agent, FullJoint, Marginal
from .beliefs import UtilityKind
from .errors import ContractError, DegenerateConditionalError, DomainError
from .outcome_space import OutcomeSpace, SingleVarBet, single_var_goods

INITIAL_PRICE = 0.5


@dataclass(frozen=True)
class Schedule:
    order: tuple[int, ...] | None = None  # None: ascending, every good once per sweep
    tolerance: float = 1e-9
    max_sweeps: int = 10_000
    jacobi: bool = False
    # price <- (1 - damping) * old + damping * new; 1.0 disables damping
    damping: float = 1.0

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise DomainError("damping must lie in (0, 1]")
        if self.tolerance <= 0 or self.max_sweeps < 1:
            raise DomainError("tolerance and max_sweeps must be positive")

    def sweep_order(self, num_goods: int) -> tuple[int, ...]:
        order = tuple(range(num_goods)) if self.order is None else tuple(self.order)
        if set(order) != set(range(num_goods)):
            raise ContractError("schedule order must cover every good")
        return order


@dataclass(frozen=True, eq=False)
class _LocalView:
    """An agent's belief laid out over the variables it trades."""

    members: tuple[int, ...]
    states: np.ndarray  # (2^m, m)
    table: np.ndarray  # (2^m,)


def _local_view(agent: Agent, space: OutcomeSpace) -> _LocalView:
    if agent.utility is not UtilityKind.EXP:
        raise DomainError(f"agent {agent.id!r}: restricted markets need exponential utility")
    if not isinstance(agent.style, (FullJoint, Marginal)):
        raise DomainError(
            f"agent {agent.id!r}: niche agents need joint market prices and cannot "
            "trade in a restricted market"
        )
    agent.check_space(space)
    members = agent.scope(space).members
    m = len(members)
    states = np.indices((2,) * m).reshape(m, -1).T
    return _LocalView(members, states, agent.style.belief.table)


class RestrictedMarket:
    """Binary variables with one tradable bet per variable."""

    def __init__(self, space: OutcomeSpace, agents: Sequence[Agent]):
        if not space.is_binary():
            raise DomainError("restricted markets need every variable to be binary")
        if not agents:
            raise ContractError("a market needs at least one agent")
        self.space = space
        self.agents = list(agents)
        self.goods: list[SingleVarBet] = single_var_goods(space)
        self.views = [_local_view(a, space) for a in self.agents]
        self.participants: list[list[int]] = [
            [i for i, v in enumerate(self.views) if k in v.members]
            for k in range(space.num_variables)
        ]
        idle = [space.names[k] for k, p in enumerate(self.participants) if not p]
        if idle:
            raise ContractError(f"no agent trades variables {idle}")

    @property
    def num_goods(self) -> int:
        return len(self.goods)


def _message_terms(
    view: _LocalView, k: int, positions: np.ndarray, prices: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-state weights of both message sums, and the mask selecting ``y_k = 1``."""
    j = view.members.index(k)
    others = [i for i in range(len(view.members)) if i != j]
    idx = [view.members[i] for i in others]
    y = view.states[:, others]
    exponent = (prices[idx] - y) @ positions[idx]
    return view.table * np.exp(exponent), view.states[:, j] == 1


def compute_message(
    agent_or_view, k: int, positions, prices, space: OutcomeSpace | None = None
) -> tuple[float, float]:
    """``(A(0), A(1))``: expected exp-payoff of the other holdings given ``y_k``.

    ``positions`` and ``prices`` are per-variable vectors; entries outside the
    agent's scope are ignored.
    """
    view = agent_or_view
    if isinstance(agent_or_view, Agent):
        if space is None:
            raise ContractError("an outcome space is needed to lay out the agent's belief")
        view = _local_view(agent_or_view, space)
    if k not in view.members:
        raise ContractError(f"variable {k} is outside the agent's scope")
    weights, on = _message_terms(
        view, k, np.asarray(positions, dtype=float), np.asarray(prices, dtype=float)
    )
    out = []
    for mask in (~on, on):
        pk = view.table[mask].sum()
        if pk <= 0:
            raise DegenerateConditionalError(
                f"belief gives zero probability to a value of variable {k}"
            )
        out.append(float(weights[mask].sum() / pk))
    return out[0], out[1]


def local_marginal(view: _LocalView, k: int) -> tuple[float, float]:
    on = view.states[:, view.members.index(k)] == 1
    p1 = float(view.table[on].sum())
    return float(view.table[~on].sum()), p1


def local_buying(c_k: float, message, marginal) -> float:
    """Optimal holding in good ``k`` given the agent's message and marginal."""
    if not 0 < c_k < 1:
        raise DomainError(f"price {c_k} outside (0, 1)")
    a0, a1 = message
    p0, p1 = marginal
    if min(a0, a1, p0, p1) <= 0:
        raise DomainError("messages and marginals must be strictly positive")
    return math.log((1 - c_k) / c_k) + math.log(a1 * p1 / (a0 * p0))


def update_price(messages: Sequence, marginals: Sequence) -> float:
    """Price that makes the participants' :func:`local_buying` demands sum to zero."""
    a = np.asarray(messages, dtype=float).reshape(-1, 2)
    p = np.asarray(marginals, dtype=float).reshape(-1, 2)
    if len(a) == 0 or len(a) != len(p):
        raise ContractError("need one message and one marginal per participant")
    if np.any(a <= 0) or np.any(p <= 0):
        raise DomainError("messages and marginals must be strictly positive")
    log_g = np.mean(np.log(a) + np.log(p), axis=0)
    # G(1) / (G(0) + G(1)) written as a logistic function of the log-odds.
    return float(1.0 / (1.0 + math.exp(log_g[0] - log_g[1])))


@dataclass
class TraceRecord:
    sweep: int
    good: int
    old_price: float
    new_price: float
    holdings: dict[str, float]
    clearing: float


@dataclass
class MessagePassingReport:
    prices: np.ndarray
    positions: dict[str, np.ndarray]
    sweeps: int
    converged: bool
    max_change: float
    clearing_residual: float
    trace: list[TraceRecord] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    solver: str = "message_passing"

    @property
    def iterations(self) -> int:
        return self.sweeps


def _auction(market: RestrictedMarket, k: int, prices, positions):
    """Messages, marginals, new price and new holdings for one good."""
    parts = market.participants[k]
    msgs = [compute_message(market.views[i], k, positions[i], prices) for i in parts]
    margs = [local_marginal(market.views[i], k) for i in parts]
    return parts, msgs, margs, update_price(msgs, margs)


def run_message_passing(
    market: RestrictedMarket, schedule: Schedule = Schedule()
) -> MessagePassingReport:
    n_goods = market.num_goods
    order = schedule.sweep_order(n_goods)
    prices = np.full(n_goods, INITIAL_PRICE)
    positions = np.zeros((len(market.agents), n_goods))
    ids = [a.id for a in market.agents]
    trace: list[TraceRecord] = []
    gamma = schedule.damping
    converged = False
    max_change = math.inf
    sweep = 0

    def commit(k, parts, msgs, margs, new, old, sweep):
        price = (1 - gamma) * old + gamma * new
        prices[k] = price
        for i, msg, marg in zip(parts, msgs, margs):
            positions[i, k] = local_buying(price, msg, marg)
        trace.append(
            TraceRecord(
                sweep=sweep,
                good=k,
                old_price=old,
                new_price=price,
                holdings={ids[i]: float(positions[i, k]) for i in parts},
                clearing=float(positions[parts, k].sum()),
            )
        )
        return abs(price - old)

    while sweep < schedule.max_sweeps:
        sweep += 1
        max_change = 0.0
        if schedule.jacobi:
            snap_prices, snap_pos = prices.copy(), positions.copy()
            pending = [(k, *_auction(market, k, snap_prices, snap_pos)) for k in order]
            for k, parts, msgs, margs, new in pending:
                max_change = max(
                    max_change, commit(k, parts, msgs, margs, new, snap_prices[k], sweep)
                )
        else:
            for k in order:
                parts, msgs, margs, new = _auction(market, k, prices, positions)
                max_change = max(
                    max_change, commit(k, parts, msgs, margs, new, float(prices[k]), sweep)
                )
        if max_change <= schedule.tolerance:
            converged = True
            break

    clearing = np.abs(positions.sum(axis=0))
    notes = [] if converged else [f"no fixed point within {schedule.max_sweeps} sweeps"]
    return MessagePassingReport(
        prices=prices.copy(),
        positions={ids[i]: positions[i].copy() for i in range(len(ids))},
        sweeps=sweep,
        converged=converged,
        max_change=max_change,
        clearing_residual=float(clearing.max()),
        trace=trace,
        notes=notes,
    )
