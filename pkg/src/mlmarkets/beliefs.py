"""Belief tables, clique factors and the three agent utility functions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateBeliefError, DomainError, LogDomainError
from .outcome_space import Clique, OutcomeSpace

NORMALIZATION_TOL = 1e-12
# Raw tables further than this from summing to one are reported as a warning.
WARN_TOL = 1e-6

# -inf orders below every real, so argmax over utilities needs no special case.
NEG_INF = -math.inf


class UtilityKind(enum.Enum):
    LINEAR = "linear"  # x for x > 0, -inf otherwise: no debt allowed
    LOG = "log"
    EXP = "exp"  # -exp(-x)

    @classmethod
    def parse(cls, tag: "str | UtilityKind") -> "UtilityKind":
        if isinstance(tag, cls):
            return tag
        aliases = {
            "linear": cls.LINEAR,
            "lineardebtfree": cls.LINEAR,
            "straight": cls.LINEAR,
            "log": cls.LOG,
            "logarithmic": cls.LOG,
            "exp": cls.EXP,
            "exponential": cls.EXP,
            "exponentialnegative": cls.EXP,
        }
        try:
            return aliases[str(tag).lower().replace("_", "").replace("-", "")]
        except KeyError:
            raise DomainError(f"unknown utility kind {tag!r}") from None


def utility_eval(kind: UtilityKind, x: float) -> float:
    if kind is UtilityKind.LINEAR:
        return float(x) if x > 0 else NEG_INF
    if kind is UtilityKind.LOG:
        return math.log(x) if x > 0 else NEG_INF
    return -math.exp(-x)


def utility_array(kind: UtilityKind, x: np.ndarray) -> np.ndarray:
    """Vectorised :func:`utility_eval`."""
    x = np.asarray(x, dtype=float)
    if kind is UtilityKind.EXP:
        return -np.exp(-x)
    out = np.full(x.shape, NEG_INF)
    pos = x > 0
    out[pos] = x[pos] if kind is UtilityKind.LINEAR else np.log(x[pos])
    return out


@dataclass(frozen=True, eq=False)
class Belief:
    """A normalized probability table over the full joint space or a clique.

    ``scope=None`` means the table covers every joint state. Zero entries are
    allowed here; they simply drop out of expected-utility sums.
    """

    table: np.ndarray
    scope: Clique | None = None

    def __post_init__(self):
        table = np.array(self.table, dtype=float).ravel()
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        if table.size == 0 or not np.all(np.isfinite(table)) or np.any(table < 0):
            raise DomainError("belief entries must be finite and nonnegative")
        if abs(table.sum() - 1.0) > NORMALIZATION_TOL:
            raise DegenerateBeliefError(
                f"belief sums to {table.sum()!r}; build it with normalize()"
            )

    @property
    def log_table(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.table)

    def strictly_positive(self) -> bool:
        return bool(np.all(self.table > 0))

    def require_positive(self, what: str = "belief") -> None:
        if not self.strictly_positive():
            raise LogDomainError(f"{what} has zero entries; logarithm undefined")

    def check_space(self, space: OutcomeSpace) -> None:
        expected = (
            space.num_joint_states if self.scope is None else self.scope.num_states(space)
        )
        if self.table.size != expected:
            raise ContractError(
                f"belief has {self.table.size} entries, scope needs {expected}"
            )


@dataclass(frozen=True, eq=False)
class FactorTable:
    """Unnormalized strictly positive potential over a clique's substates."""

    scope: Clique
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float).ravel()
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        if table.size == 0 or not np.all(np.isfinite(table)):
            raise DomainError("factor entries must be finite")
        if np.any(table <= 0):
            raise LogDomainError("factor entries must be strictly positive")

    @property
    def log_table(self) -> np.ndarray:
        return np.log(self.table)

    def check_space(self, space: OutcomeSpace) -> None:
        expected = self.scope.num_states(space)
        if self.table.size != expected:
            raise ContractError(
                f"factor has {self.table.size} entries, clique needs {expected}"
            )


def normalize(table, scope: Clique | None = None) -> Belief:
    arr = np.asarray(table, dtype=float).ravel()
    if arr.size == 0 or not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("table entries must be finite and nonnegative")
    total = arr.sum()
    if total <= 0:
        raise DegenerateBeliefError("cannot normalize an all-zero table")
    return Belief(arr / total, scope)


def normalize_log(log_table, scope: Clique | None = None) -> Belief:
    """Normalize a table given as log-probabilities (max-shifted for stability)."""
    arr = np.asarray(log_table, dtype=float).ravel()
    if arr.size == 0 or np.any(np.isnan(arr)) or np.any(arr == np.inf):
        raise DomainError("log table entries must be finite or -inf")
    top = arr.max()
    if top == -np.inf:
        raise DegenerateBeliefError("cannot normalize an all-zero table")
    return normalize(np.exp(arr - top), scope)


def expected_utility(
    belief: Belief,
    kind: UtilityKind,
    wealth: float,
    prices: np.ndarray,
    position: np.ndarray,
) -> float:
    """Expected utility of holding ``position`` bought at ``prices`` in a joint-bet market.

    The wealth in outcome ``k`` is ``W - s.c + s_k``.
    """
    p = belief.table
    c = np.asarray(prices, dtype=float)
    s = np.asarray(position, dtype=float)
    if not (p.shape == c.shape == s.shape):
        raise ContractError(
            f"belief {p.shape}, prices {c.shape} and position {s.shape} must align"
        )
    outcome_wealth = wealth - s @ c + s
    u = utility_array(kind, outcome_wealth)
    live = p > 0
    if np.any(np.isneginf(u[live])):
        return NEG_INF
    return float(p[live] @ u[live])


def restricted_expected_utility(
    belief: Belief,
    space: OutcomeSpace,
    wealth: float,
    prices: np.ndarray,
    position: np.ndarray,
) -> float:
    """Exponential-utility expected utility when only ``y_j = 1`` bets are traded.

    ``prices`` and ``position`` have one entry per (binary) variable and
    ``belief`` is the agent's full joint table.
    """
    if not space.is_binary():
        raise DomainError("restricted markets need binary variables")
    belief.check_space(space)
    c = np.asarray(prices, dtype=float)
    s = np.asarray(position, dtype=float)
    if c.shape != (space.num_variables,) or s.shape != c.shape:
        raise ContractError("prices and position need one entry per variable")
    y = space.states_array
    exponent = -wealth + (c - y) @ s
    return float(-(belief.table @ np.exp(exponent)))
