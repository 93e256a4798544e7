"""Deliberately naive reference computations used to check the solvers.

Nothing here calls into the closed-form buying functions or solvers. Joint
products and marginals are accumulated with plain Python loops over raw
tables, expected utilities are recomputed from the utility definitions, and
equilibrium demand comes from a generic first-order-condition root-find.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .agents import Agent, FullJoint, Marginal, Niche, StandardizationKind
from .beliefs import Belief, FactorTable, UtilityKind
from .errors import ContractError, DomainError, GridTooLargeError, StateCapError
from .outcome_space import OutcomeSpace

MAX_GRID_POINTS = 10**7
MAX_ORACLE_GOODS = 3
MIN_PRICE_STEP = 1e-3


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    step: float
    standardization: StandardizationKind = StandardizationKind.ZERO_VALUE

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError("grid needs lo < hi")
        if self.step <= 0:
            raise DomainError("grid step must be positive")

    def axis(self) -> np.ndarray:
        n = int(math.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        return self.lo + self.step * np.arange(n)


def _flat_index(values: Sequence[int], cards: Sequence[int]) -> int:
    idx = 0
    for v, c in zip(values, cards):
        idx = idx * c + v
    return idx


def _all_states(space: OutcomeSpace):
    if space.num_joint_states > space.max_states:
        raise StateCapError(
            f"{space.num_joint_states} joint states exceed the oracle cap {space.max_states}"
        )
    return itertools.product(*(range(c) for c in space.cardinalities))


def brute_force_joint_product(
    space: OutcomeSpace,
    factors: Sequence[FactorTable] = (),
    base: Belief | Sequence[float] | None = None,
) -> np.ndarray:
    """Normalized ``base(y) * prod_i F_i(y restricted to S_i)`` by enumeration.

    ``base=None`` means uniform.
    """
    base_table = None if base is None else list(getattr(base, "table", base))
    logs = []
    for k, state in enumerate(_all_states(space)):
        if base_table is None:
            acc = 0.0
        elif base_table[k] > 0:
            acc = math.log(base_table[k])
        else:
            acc = -math.inf
        for f in factors:
            members = f.scope.members
            sub = [state[m] for m in members]
            cards = [space.cardinalities[m] for m in members]
            acc += math.log(float(f.table[_flat_index(sub, cards)]))
        logs.append(acc)
    top = max(logs)
    weights = [math.exp(v - top) for v in logs]
    total = math.fsum(weights)
    return np.array([w / total for w in weights])


def exact_marginals(joint: Belief | Sequence[float], space: OutcomeSpace) -> list[np.ndarray]:
    table = list(getattr(joint, "table", joint))
    out = [[0.0] * c for c in space.cardinalities]
    for k, state in enumerate(_all_states(space)):
        for j, v in enumerate(state):
            out[j][v] += table[k]
    return [np.array(m) / math.fsum(m) for m in out]


def weighted_median_oracle(p1: Sequence[float], wealth: Sequence[float]) -> float:
    """First belief value (ascending) at which cumulative wealth reaches half."""
    total = math.fsum(wealth)
    for b in sorted(p1):
        held = math.fsum(w for p, w in zip(p1, wealth) if p <= b)
        if 2 * held >= total:
            return b
    raise ContractError("empty population")


# -- agent views -------------------------------------------------------------


def _clique_sums(values: Sequence[float], members, space: OutcomeSpace) -> np.ndarray:
    cards = [space.cardinalities[m] for m in members]
    out = np.zeros(math.prod(cards))
    for k, state in enumerate(_all_states(space)):
        out[_flat_index([state[m] for m in members], cards)] += values[k]
    return out


def _clique_index(members, space: OutcomeSpace) -> list[int]:
    cards = [space.cardinalities[m] for m in members]
    return [_flat_index([s[m] for m in members], cards) for s in _all_states(space)]


def _agent_view(agent: Agent, prices: np.ndarray, space: OutcomeSpace):
    """Belief rows, cost rows and the expansion index back to joint goods.

    ``prices`` is ``(P, N)``; returns ``(p, c, expand)`` where ``p`` and ``c``
    are ``(P, n)`` and ``expand`` maps each joint good to one of the ``n``
    traded bets (``None`` for identity).
    """
    style = agent.style
    if isinstance(style, FullJoint):
        p = np.broadcast_to(np.array(style.belief.table, dtype=float), prices.shape)
        return p, prices, None
    if isinstance(style, Niche):
        idx = _clique_index(style.factor.scope.members, space)
        f = np.array([float(style.factor.table[i]) for i in idx])
        w = prices * f
        return w / w.sum(axis=1, keepdims=True), prices, None
    if isinstance(style, Marginal):
        members = style.belief.scope.members
        idx = _clique_index(members, space)
        cards = [space.cardinalities[m] for m in members]
        onehot = np.zeros((len(idx), math.prod(cards)))
        onehot[np.arange(len(idx)), idx] = 1.0
        c = prices @ onehot
        p = np.broadcast_to(np.array(style.belief.table, dtype=float), c.shape)
        return p, c, np.array(idx)
    raise ContractError(f"unsupported agent style {type(style).__name__}")


def _utility(kind: UtilityKind, x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if kind is UtilityKind.EXP:
            return -np.exp(-x)
        if kind is UtilityKind.LOG:
            return np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), -np.inf)
        return np.where(x > 0, x, -np.inf)


# -- best response -----------------------------------------------------------


def _grid_positions(grid: GridSpec, c: np.ndarray) -> np.ndarray:
    n = c.size
    axis = grid.axis()
    kind = grid.standardization
    free = n if kind is StandardizationKind.MIN_ZERO else n - 1
    if axis.size**free > MAX_GRID_POINTS:
        raise GridTooLargeError(f"{axis.size}^{free} grid points exceed {MAX_GRID_POINTS}")
    if axis.size == 0:
        raise ContractError("empty grid")
    pts = np.array(list(itertools.product(axis, repeat=free))).reshape(-1, free)
    if kind is StandardizationKind.ZERO_LAST_GOOD:
        return np.hstack([pts, np.zeros((len(pts), 1))])
    if kind is StandardizationKind.ZERO_VALUE:
        last = -(pts @ c[:-1]) / c[-1]
        return np.hstack([pts, last[:, None]])
    keep = np.isclose(pts.min(axis=1), 0.0, atol=grid.step * 1e-6)
    if not keep.any():
        raise ContractError("grid has no point with a zero holding")
    return pts[keep]


def best_response_oracle(
    agent: Agent, prices, grid: GridSpec, space: OutcomeSpace | None = None
) -> np.ndarray:
    """Grid point with the highest expected utility, over the agent's traded bets.

    Marginal agents are searched over clique-substate holdings and the result
    is expanded to joint goods.
    """
    c_joint = np.asarray(prices, dtype=float)
    space = space or OutcomeSpace((("y", c_joint.size),))
    p, c, expand = _agent_view(agent, c_joint[None, :], space)
    p, c = p[0], c[0]
    if c.size > 4:
        raise GridTooLargeError("best-response grid search is limited to 4 goods")
    s = _grid_positions(grid, c)
    wealth = agent.wealth - s @ c
    outcome = wealth[:, None] + s
    u = _utility(agent.utility, outcome)
    with np.errstate(invalid="ignore"):
        eu = np.where(p > 0, u * p, 0.0).sum(axis=1)
    best = s[int(np.argmax(eu))]
    return best if expand is None else best[expand]


def oracle_expected_utility(agent: Agent, prices, position, space=None) -> float:
    """Expected utility recomputed from the raw utility definition."""
    c_joint = np.asarray(prices, dtype=float)
    space = space or OutcomeSpace((("y", c_joint.size),))
    p, c, expand = _agent_view(agent, c_joint[None, :], space)
    s = np.asarray(position, dtype=float)
    if expand is not None:
        # Collapse a joint position back onto clique substates.
        sub = np.zeros(c.shape[1])
        sub[expand] = s
        s = sub
    outcome = agent.wealth - s @ c[0] + s
    u = _utility(agent.utility, outcome)
    with np.errstate(invalid="ignore"):
        return float(np.where(p[0] > 0, u * p[0], 0.0).sum())


# -- equilibrium grid --------------------------------------------------------


def _kkt_demand(kind: UtilityKind, wealth: float, p: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Zero-value demand solving ``p_k U'(W + s_k) = mu c_k`` by bisection on log mu."""
    if kind is UtilityKind.LINEAR:
        raise ContractError("linear agents have no smooth demand; use weighted_median_oracle")
    if kind is UtilityKind.EXP and np.any(p <= 0):
        raise DomainError("exponential demand needs strictly positive beliefs")

    def demand(log_mu):
        ratio = np.exp(log_mu)[:, None] * c
        with np.errstate(divide="ignore"):
            if kind is UtilityKind.LOG:
                x = p / ratio  # inverse of U'(x) = 1/x
            else:
                x = -np.log(ratio / p)  # inverse of U'(x) = exp(-x)
        return x - wealth

    lo = np.full(len(c), -200.0)
    hi = np.full(len(c), 200.0)
    # 400 / 2**80 is far below double spacing near any root in range.
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        value = (demand(mid) * c).sum(axis=1)
        up = value > 0  # spending is decreasing in mu
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    return demand(0.5 * (lo + hi))


def simplex_grid(num_goods: int, step: float) -> np.ndarray:
    m = int(round(1.0 / step))
    if abs(m * step - 1.0) > 1e-9:
        raise DomainError("price grid step must divide 1")
    count = math.comb(m - 1, num_goods - 1)
    if count > MAX_GRID_POINTS:
        raise GridTooLargeError(f"{count} simplex points exceed {MAX_GRID_POINTS}")
    pts = [
        (*head, m - sum(head))
        for head in itertools.product(range(1, m), repeat=num_goods - 1)
        if sum(head) < m
    ]
    return np.array(pts, dtype=float) / m


def brute_force_equilibrium(
    agents: Sequence[Agent], step: float = 1e-3, space: OutcomeSpace | None = None
) -> np.ndarray:
    """Simplex grid point whose max-norm clearing residual is smallest."""
    if space is None:
        first = next((a for a in agents if isinstance(a.style, FullJoint)), None)
        if first is None:
            raise ContractError("cannot infer the outcome space without a full-joint agent")
        space = OutcomeSpace((("y", first.style.belief.table.size),))
    n = space.num_joint_states
    if n > MAX_ORACLE_GOODS:
        raise GridTooLargeError(f"equilibrium grid limited to {MAX_ORACLE_GOODS} goods")
    if step < MIN_PRICE_STEP:
        raise GridTooLargeError(f"price grid step below {MIN_PRICE_STEP}")
    prices = simplex_grid(n, step)
    total = np.zeros_like(prices)
    for a in agents:
        p, c, expand = _agent_view(a, prices, space)
        s = _kkt_demand(a.utility, a.wealth, p, c)
        total += s if expand is None else s[:, expand]
    residual = np.abs(total).max(axis=1)
    return prices[int(np.argmin(residual))]
