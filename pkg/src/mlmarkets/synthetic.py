"""Random scenario documents for tests and the ``generate`` command."""

from __future__ import annotations

from typing import Any

import numpy as np


def _dirichlet(rng: np.random.Generator, n: int) -> list[float]:
    # Floor keeps every entry usable by the exponential agents' logarithms.
    p = rng.dirichlet(np.ones(n)) + 1e-3
    return (p / p.sum()).tolist()


def _table(values) -> dict[str, Any]:
    return {"values": [float(v) for v in values], "order": "row-major"}


def _single_var(rng, utility: str, n_goods=None, n_agents=None, equal_wealth=False):
    n_goods = n_goods or int(rng.integers(2, 6))
    n_agents = n_agents or int(rng.integers(1, 7))
    agents = [
        {
            "id": f"a{i}",
            "utility": utility,
            "wealth": 1.0 if equal_wealth else float(rng.uniform(0.1, 10.0)),
            "table": _table(_dirichlet(rng, n_goods)),
        }
        for i in range(n_agents)
    ]
    return {
        "name": f"random-{utility}",
        "space": {"variables": [{"name": "y", "cardinality": n_goods}]},
        "agents": agents,
    }


def random_scenario(kind: str, rng: np.random.Generator) -> dict[str, Any]:
    if kind in ("log", "exp"):
        return _single_var(rng, kind)
    if kind == "linear":
        n = 2 * int(rng.integers(0, 4)) + 1
        return _single_var(rng, "linear", n_goods=2, n_agents=n, equal_wealth=True)
    if kind == "mixed":
        doc = _single_var(rng, "log")
        for a in doc["agents"][::2]:
            a["utility"] = "exp"
        doc["name"] = "random-mixed"
        return doc
    if kind == "niche":
        j = int(rng.integers(2, 7))
        names = [f"y{i + 1}" for i in range(j)]
        agents = [{"id": "base", "utility": "exp", "table": _table(_dirichlet(rng, 2**j))}]
        for i in range(int(rng.integers(1, 6))):
            size = int(rng.integers(1, min(3, j) + 1))
            clique = sorted(rng.choice(j, size=size, replace=False).tolist())
            agents.append(
                {
                    "id": f"n{i}",
                    "utility": "exp",
                    "style": "niche",
                    "clique": [names[m] for m in clique],
                    "table": _table(rng.uniform(0.2, 5.0, size=2**size)),
                }
            )
        return {
            "name": "random-niche",
            "space": {"variables": [{"name": n} for n in names]},
            "agents": agents,
        }
    if kind == "restricted":
        j = int(rng.integers(2, 5))
        return {
            "name": "random-restricted",
            "space": {"variables": [{"name": f"y{i + 1}"} for i in range(j)]},
            "market": "restricted",
            "agents": [{"id": "a", "utility": "exp", "table": _table(_dirichlet(rng, 2**j))}],
        }
    raise ValueError(f"unknown scenario kind {kind!r}")
