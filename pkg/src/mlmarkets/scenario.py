"""Scenario files: JSON documents declaring a space, agents, market and solver.

Every table names its state order, either explicitly (``states``: one
assignment per value, in the order of the table's variables) or with
``"order": "row-major"`` (last variable fastest). Values are probabilities
(or positive factors for niche agents) unless ``"log": true``.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .agents import Agent, FullJoint, Marginal, Niche
from .beliefs import WARN_TOL, FactorTable, UtilityKind, normalize
from .errors import MarketError, ScenarioError
from .outcome_space import DEFAULT_MAX_STATES, Clique, OutcomeSpace

DEFAULT_SMOOTHING = 1e-9


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class VariableSpec(_Model):
    name: str
    cardinality: int = 2


class SpaceSpec(_Model):
    variables: list[VariableSpec] = Field(min_length=1)
    max_states: int = DEFAULT_MAX_STATES


class TableSpec(_Model):
    values: list[float] = Field(min_length=1)
    states: Optional[list[list[int]]] = None
    order: Optional[Literal["row-major"]] = None
    log: bool = False


class AgentSpec(_Model):
    id: str
    utility: Literal["linear", "log", "exp"]
    wealth: float = 1.0
    style: Literal["full", "niche", "marginal"] = "full"
    clique: Optional[list[str]] = None
    table: TableSpec


class SolverSpec(_Model):
    method: Literal["auto", "closed_form", "tatonnement", "message_passing"] = "auto"
    tolerance: float = 1e-9
    max_iterations: int = 100_000
    step_size: float = 0.1
    damping: float = 0.5
    schedule: Literal["gauss-seidel", "jacobi"] = "gauss-seidel"
    price_damping: float = 1.0
    order: Optional[list[str]] = None
    validate_tolerance: Optional[float] = None


class ScenarioSpec(_Model):
    name: str = ""
    space: SpaceSpec
    market: Literal["joint", "restricted"] = "joint"
    agents: list[AgentSpec] = Field(min_length=1)
    solver: SolverSpec = SolverSpec()
    smoothing: Union[bool, float] = False


@dataclass
class Scenario:
    name: str
    space: OutcomeSpace
    market: str
    agents: list[Agent]
    solver: SolverSpec
    raw: dict[str, Any]
    warnings: list[str] = field(default_factory=list)

    @property
    def digest(self) -> str:
        return scenario_digest(self.raw)


def scenario_digest(raw: dict[str, Any]) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(str(exc), str(path)) from None
    return parse_scenario(text, source=str(path))


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, f"{source}:{exc.lineno}:{exc.colno}") from None
    return scenario_from_dict(raw, source)


def scenario_from_dict(raw: dict[str, Any], source: str = "<scenario>") -> Scenario:
    try:
        spec = ScenarioSpec.model_validate(raw)
    except ValidationError as exc:
        err = exc.errors()[0]
        where = ".".join(str(p) for p in err["loc"])
        raise ScenarioError(err["msg"], f"{source}: {where}") from None
    try:
        return _build(spec, raw, source)
    except ScenarioError:
        raise
    except MarketError as exc:
        raise ScenarioError(str(exc), source) from None


def _build(spec: ScenarioSpec, raw: dict, source: str) -> Scenario:
    space = OutcomeSpace(
        tuple((v.name, v.cardinality) for v in spec.space.variables),
        max_states=spec.space.max_states,
    )
    warnings: list[str] = []
    eps = spec.smoothing
    eps = DEFAULT_SMOOTHING if eps is True else (float(eps) if eps else 0.0)
    ids = [a.id for a in spec.agents]
    if len(set(ids)) != len(ids):
        raise ScenarioError("agent ids must be unique", f"{source}: agents")
    agents = []
    for i, a in enumerate(spec.agents):
        where = f"{source}: agents.{i} ({a.id})"
        agents.append(_build_agent(a, space, eps, where, warnings))
    _check_solver(spec, space, agents, source)
    return Scenario(spec.name, space, spec.market, agents, spec.solver, raw, warnings)


def _resolve_clique(a: AgentSpec, space: OutcomeSpace, where: str) -> list[int]:
    if a.style == "full":
        if a.clique is not None:
            raise ScenarioError("full-joint agents take no clique", where)
        return list(range(space.num_variables))
    if not a.clique:
        raise ScenarioError(f"{a.style} agents need a clique", where)
    members = []
    for name in a.clique:
        if name not in space.names:
            raise ScenarioError(f"clique references undeclared variable {name!r}", where)
        members.append(space.names.index(name))
    if len(set(members)) != len(members):
        raise ScenarioError("clique lists a variable twice", where)
    return members


def _canonical_values(t: TableSpec, members: list[int], space: OutcomeSpace, where: str):
    """Reorder table values into canonical order over the sorted members."""
    cards = [space.cardinalities[m] for m in members]
    n = math.prod(cards)
    if len(t.values) != n:
        raise ScenarioError(f"table has {len(t.values)} values, scope needs {n}", where)
    if (t.states is None) == (t.order is None):
        raise ScenarioError("table must declare exactly one of 'states' or 'order'", where)
    states = (
        list(itertools.product(*(range(c) for c in cards)))
        if t.order == "row-major"
        else [tuple(s) for s in t.states]
    )
    if len(states) != n:
        raise ScenarioError(f"{len(states)} states listed for {n} values", where)
    perm = sorted(range(len(members)), key=lambda i: members[i])
    sorted_cards = [cards[i] for i in perm]
    out = [None] * n
    for state, value in zip(states, t.values):
        if len(state) != len(cards) or any(not 0 <= v < c for v, c in zip(state, cards)):
            raise ScenarioError(f"state {list(state)} invalid for the table's variables", where)
        idx = int(np.ravel_multi_index(tuple(state[i] for i in perm), sorted_cards))
        if out[idx] is not None:
            raise ScenarioError(f"state {list(state)} listed twice", where)
        out[idx] = value
    return np.array(out, dtype=float)


def _build_agent(a: AgentSpec, space, eps: float, where: str, warnings: list[str]) -> Agent:
    members = _resolve_clique(a, space, where)
    if a.style == "full":
        space.check_cap()
    values = _canonical_values(a.table, members, space, where)
    clique = Clique.of(members)
    utility = UtilityKind.parse(a.utility)
    if a.style == "niche":
        table = np.exp(values) if a.table.log else values
        return Agent(a.id, a.wealth, utility, Niche(FactorTable(clique, table)))
    if a.table.log:
        shifted = np.exp(values - values.max())
        raw_sum = float(np.exp(values).sum())
        values = shifted
    else:
        raw_sum = float(values.sum())
    if abs(raw_sum - 1.0) > WARN_TOL:
        warnings.append(f"{where}: belief sums to {raw_sum:.6g}; normalized")
    if eps and np.any(values == 0):
        values = values / values.sum() + eps
        warnings.append(f"{where}: zero entries smoothed with epsilon {eps:g}")
    belief = normalize(values, None if a.style == "full" else clique)
    style = FullJoint(belief) if a.style == "full" else Marginal(belief)
    return Agent(a.id, a.wealth, utility, style)


def _check_solver(spec: ScenarioSpec, space: OutcomeSpace, agents: list[Agent], source: str):
    method = spec.solver.method
    where = f"{source}: solver"
    if spec.market == "restricted":
        if not space.is_binary():
            raise ScenarioError("restricted markets need binary variables", f"{source}: space")
        if method not in ("auto", "message_passing"):
            raise ScenarioError(f"{method} is not available for restricted markets", where)
        bad = [a.id for a in agents if a.utility is not UtilityKind.EXP]
        if bad:
            raise ScenarioError(f"message passing needs exponential agents; not {bad}", where)
    elif method == "message_passing":
        raise ScenarioError("message_passing requires a restricted market", where)
    if spec.solver.order is not None:
        for name in spec.solver.order:
            if name not in space.names:
                raise ScenarioError(f"schedule references undeclared variable {name!r}", where)
