"""Seeded random influence diagrams for property tests."""

from __future__ import annotations

import numpy as np

from .model import InfluenceDiagram, Variable, validate_diagram


def random_diagram(
    seed: int,
    max_chance: int = 8,
    max_decisions: int = 3,
    max_card: int = 3,
    max_parents: int = 3,
) -> InfluenceDiagram:
    """A valid diagram with at most the given sizes.

    Nodes are laid out on a random topological order of chance variables and
    decisions; every arc points forward, so the graph is acyclic. A chance
    variable may be observed before a decision placed after it, as long as it
    does not descend from an earlier decision.
    """
    rng = np.random.default_rng(seed)
    while True:
        diagram = _draw(rng, max_chance, max_decisions, max_card, max_parents)
        if validate_diagram(diagram).ok:
            return diagram


def _draw(rng, max_chance, max_decisions, max_card, max_parents) -> InfluenceDiagram:
    n_chance = int(rng.integers(1, max_chance + 1))
    n_dec = int(rng.integers(1, max_decisions + 1))
    kinds = ["chance"] * n_chance + ["decision"] * n_dec
    rng.shuffle(kinds)
    names, counters = [], {"chance": 0, "decision": 0}
    for k in kinds:
        counters[k] += 1
        names.append(f"X{counters[k]}" if k == "chance" else f"D{counters[k]}")
    cards = {n: int(rng.integers(2, max_card + 1)) for n in names}

    parents: dict[str, tuple[str, ...]] = {}
    for pos, n in enumerate(names):
        if kinds[pos] == "decision":
            parents[n] = ()
            continue
        k = int(rng.integers(0, min(pos, max_parents) + 1))
        parents[n] = tuple(names[j] for j in sorted(rng.choice(pos, size=k, replace=False))) if k else ()

    variables = []
    for pos, n in enumerate(names):
        states = tuple(f"s{i}" for i in range(cards[n]))
        if kinds[pos] == "decision":
            variables.append(Variable(n, "decision", states))
            continue
        rows = int(np.prod([cards[p] for p in parents[n]])) if parents[n] else 1
        cpt = rng.dirichlet(np.ones(cards[n]), size=rows)
        # occasional hard zeros exercise the 0/0 rule
        if rng.random() < 0.2:
            r = int(rng.integers(rows))
            cpt[r] = np.eye(cards[n])[int(rng.integers(cards[n]))]
        variables.append(Variable(n, "chance", states, parents[n], tuple(float(x) for x in cpt.ravel())))

    decisions = [n for n, k in zip(names, kinds) if k == "decision"]
    n_values = int(rng.integers(1, n_dec + 2))
    for u in range(n_values):
        pool = names
        k = int(rng.integers(1, min(3, len(names)) + 1))
        ps = [decisions[u % len(decisions)]] if u < len(decisions) else []
        ps += [str(p) for p in rng.choice(pool, size=k, replace=False) if p not in ps]
        ps = sorted(set(ps), key=names.index)
        size = int(np.prod([cards[p] for p in ps]))
        table = tuple(float(x) for x in np.round(rng.uniform(-10, 20, size), 2))
        variables.append(Variable(f"U{u + 1}", "value", (), tuple(ps), table))

    observations = []
    for pos, n in enumerate(names):
        if kinds[pos] != "chance":
            continue
        later = [d for d in names[pos + 1:] if d in decisions]
        if later and rng.random() < 0.5:
            observations.append((n, later[int(rng.integers(len(later)))]))
    return InfluenceDiagram(tuple(variables), tuple(observations))
