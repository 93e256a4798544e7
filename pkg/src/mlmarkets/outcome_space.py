"""Discrete outcome spaces, joint-state enumeration and the goods traded on them.

Joint states are enumerated row-major with the last declared variable varying
fastest, so for ``{y1: 2, y2: 2}`` good ``k`` indexes
``(0, 0), (0, 1), (1, 0), (1, 1)``. Every table in the package follows this
order, including clique-restricted tables (ordered over the clique members in
ascending variable index).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DomainError, InvalidCliqueError, StateCapError

DEFAULT_MAX_STATES = 2**20

JointState = tuple[int, ...]


@dataclass(frozen=True)
class OutcomeSpace:
    """An ordered set of named discrete variables."""

    variables: tuple[tuple[str, int], ...]
    max_states: int = DEFAULT_MAX_STATES

    def __post_init__(self):
        variables = tuple((str(name), int(card)) for name, card in self.variables)
        object.__setattr__(self, "variables", variables)
        if not variables:
            raise DomainError("an outcome space needs at least one variable")
        names = [name for name, _ in variables]
        if len(set(names)) != len(names):
            raise DomainError(f"variable names must be unique, got {names}")
        for name, card in variables:
            if card < 2:
                raise DomainError(f"variable {name!r} has cardinality {card} < 2")
        if self.max_states < 1:
            raise DomainError("max_states must be positive")

    @classmethod
    def binary(cls, *names: str, max_states: int = DEFAULT_MAX_STATES) -> "OutcomeSpace":
        return cls(tuple((n, 2) for n in names), max_states=max_states)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.variables)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(card for _, card in self.variables)

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_joint_states(self) -> int:
        return math.prod(self.cardinalities)

    def is_binary(self) -> bool:
        return all(card == 2 for card in self.cardinalities)

    def check_cap(self) -> None:
        if self.num_joint_states > self.max_states:
            raise StateCapError(
                f"joint space has {self.num_joint_states} states, "
                f"above the cap of {self.max_states}"
            )

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidCliqueError(f"unknown variable {name!r}") from None

    def clique(self, *names: str) -> "Clique":
        return Clique.of(self.index_of(n) for n in names)

    def full_clique(self) -> "Clique":
        return Clique(tuple(range(self.num_variables)))

    def state_index(self, state: Sequence[int]) -> int:
        """Good index ``k`` of a joint state."""
        self.validate_state(state)
        return int(np.ravel_multi_index(tuple(state), self.cardinalities))

    def validate_state(self, state: Sequence[int]) -> None:
        if len(state) != self.num_variables:
            raise DomainError(f"state {tuple(state)} has wrong length")
        for value, card in zip(state, self.cardinalities):
            if not 0 <= value < card:
                raise DomainError(f"state {tuple(state)} out of range")

    @cached_property
    def states_array(self) -> np.ndarray:
        """``(N, J)`` integer array of all joint states in canonical order."""
        self.check_cap()
        grids = np.indices(self.cardinalities).reshape(self.num_variables, -1)
        return np.ascontiguousarray(grids.T)


@dataclass(frozen=True, order=True)
class Clique:
    """A nonempty sorted set of variable indices."""

    members: tuple[int, ...]

    def __post_init__(self):
        members = tuple(int(m) for m in self.members)
        if not members:
            raise InvalidCliqueError("a clique must have at least one member")
        if len(set(members)) != len(members):
            raise InvalidCliqueError(f"duplicate clique members {members}")
        if any(m < 0 for m in members):
            raise InvalidCliqueError(f"negative clique member in {members}")
        object.__setattr__(self, "members", tuple(sorted(members)))

    @classmethod
    def of(cls, members: Iterable[int]) -> "Clique":
        return cls(tuple(members))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def check_within(self, space: OutcomeSpace) -> None:
        bad = [m for m in self.members if m >= space.num_variables]
        if bad:
            raise InvalidCliqueError(
                f"clique {self.members} references variables {bad} outside a "
                f"{space.num_variables}-variable space"
            )

    def cardinalities(self, space: OutcomeSpace) -> tuple[int, ...]:
        self.check_within(space)
        return tuple(space.cardinalities[m] for m in self.members)

    def num_states(self, space: OutcomeSpace) -> int:
        return math.prod(self.cardinalities(space))


@dataclass(frozen=True)
class JointBet:
    state: JointState
    payout: float = field(default=1.0, init=False)

    def label(self, space: OutcomeSpace | None = None) -> str:
        return "(" + ",".join(str(v) for v in self.state) + ")"


@dataclass(frozen=True)
class MarginalBet:
    clique: Clique
    substate: JointState
    payout: float = field(default=1.0, init=False)

    def label(self, space: OutcomeSpace) -> str:
        return ",".join(
            f"{space.names[m]}={v}" for m, v in zip(self.clique.members, self.substate)
        )


@dataclass(frozen=True)
class SingleVarBet:
    """Pays one unit when ``variable`` takes ``value`` (1 for the binary markets)."""

    variable: int
    value: int = 1
    payout: float = field(default=1.0, init=False)

    def label(self, space: OutcomeSpace) -> str:
        return f"{space.names[self.variable]}={self.value}"


Good = Union[JointBet, MarginalBet, SingleVarBet]


def enumerate_joint(space: OutcomeSpace) -> list[JointState]:
    space.check_cap()
    return list(itertools.product(*(range(c) for c in space.cardinalities)))


def joint_goods(space: OutcomeSpace) -> list[JointBet]:
    return [JointBet(s) for s in enumerate_joint(space)]


def single_var_goods(space: OutcomeSpace) -> list[SingleVarBet]:
    if not space.is_binary():
        raise DomainError("single-variable bets need every variable to be binary")
    return [SingleVarBet(j) for j in range(space.num_variables)]


def restrict(state: Sequence[int], clique: Clique) -> JointState:
    """Project a joint state onto the clique's variables."""
    if clique.members[-1] >= len(state):
        raise InvalidCliqueError(
            f"clique {clique.members} out of range for a state of length {len(state)}"
        )
    return tuple(int(state[m]) for m in clique.members)


def clique_states(clique: Clique, space: OutcomeSpace) -> list[JointState]:
    return list(itertools.product(*(range(c) for c in clique.cardinalities(space))))


def _check_substate(substate: Sequence[int], clique: Clique, space: OutcomeSpace) -> None:
    cards = clique.cardinalities(space)
    if len(substate) != len(cards) or any(
        not 0 <= v < c for v, c in zip(substate, cards)
    ):
        raise DomainError(f"substate {tuple(substate)} invalid for clique {clique.members}")


def consistent_states(
    substate: Sequence[int], clique: Clique, space: OutcomeSpace
) -> list[JointState]:
    """All joint states whose restriction to ``clique`` equals ``substate``."""
    _check_substate(substate, clique, space)
    target = tuple(substate)
    return [s for s in enumerate_joint(space) if restrict(s, clique) == target]


def substate_indices(clique: Clique, space: OutcomeSpace) -> np.ndarray:
    """For every joint good ``k``, the index of its restriction among the clique states."""
    clique.check_within(space)
    cols = space.states_array[:, list(clique.members)]
    return np.ravel_multi_index(cols.T, clique.cardinalities(space))


def marginal_costs(prices: np.ndarray, clique: Clique, space: OutcomeSpace) -> np.ndarray:
    """Cost of a bet on each clique substate: the sum over its consistent joint goods."""
    prices = np.asarray(prices, dtype=float)
    if prices.shape != (space.num_joint_states,):
        raise DomainError(
            f"expected {space.num_joint_states} joint prices, got {prices.shape}"
        )
    idx = substate_indices(clique, space)
    return np.bincount(idx, weights=prices, minlength=clique.num_states(space))


def marginal_cost(
    prices: np.ndarray, clique: Clique, substate: Sequence[int], space: OutcomeSpace
) -> float:
    _check_substate(substate, clique, space)
    costs = marginal_costs(prices, clique, space)
    return float(costs[np.ravel_multi_index(tuple(substate), clique.cardinalities(space))])
