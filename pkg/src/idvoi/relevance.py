"""Bayes-Ball reachability and requisite observations for each decision."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Collection, Iterable, Mapping, Sequence

from .errors import UnknownVariable
from .model import InfluenceDiagram, require_valid


@dataclass(frozen=True)
class BallMarks:
    visited: frozenset[str]
    top: frozenset[str]
    bottom: frozenset[str]
    observed: frozenset[str]

    @property
    def requisite_observed(self) -> frozenset[str]:
        return self.observed & self.visited


def _children_of(parents: Mapping[str, Sequence[str]]) -> dict[str, list[str]]:
    children: dict[str, list[str]] = {n: [] for n in parents}
    for n, ps in parents.items():
        for p in ps:
            children[p].append(n)
    return children


def bayes_ball(
    parents: Mapping[str, Sequence[str]],
    targets: Iterable[str],
    observed: Collection[str],
) -> BallMarks:
    """Pass the ball from ``targets`` through the DAG given by ``parents``.

    Each target is entered as if the ball came from a virtual child. An
    unobserved node passes a ball from a child to its parents and children,
    and a ball from a parent to its children. An observed node bounces a ball
    from a parent back to its parents and absorbs a ball from a child.
    """
    targets = list(targets)
    observed = frozenset(observed)
    for n in list(targets) + list(observed):
        if n not in parents:
            raise UnknownVariable(f"unknown variable {n!r}", n)
    children = _children_of(parents)
    visited: set[str] = set()
    top: set[str] = set()
    bottom: set[str] = set()
    queue = deque((t, True) for t in targets)  # (node, arrived from child)
    while queue:
        node, from_child = queue.popleft()
        visited.add(node)
        if node in observed:
            if not from_child and node not in top:
                top.add(node)
                queue.extend((p, True) for p in parents[node])
            continue
        if from_child and node not in top:
            top.add(node)
            queue.extend((p, True) for p in parents[node])
        if node not in bottom:
            bottom.add(node)
            queue.extend((c, False) for c in children[node])
    return BallMarks(frozenset(visited), frozenset(top), frozenset(bottom), observed)


def diagram_parents(diagram: InfluenceDiagram) -> dict[str, tuple[str, ...]]:
    """Conditioning parents; decisions are treated as roots."""
    return {v.name: v.parents for v in diagram.variables}


@dataclass(frozen=True)
class RequisiteResult:
    decisions: tuple[str, ...]
    requisite: tuple[frozenset[str], ...]  # R_1..R_m
    value_sets: tuple[frozenset[str], ...]  # V_1..V_m
    relevant: tuple[frozenset[str], ...]  # non-value nodes visited at each step
    modified_parents: dict[str, tuple[str, ...]]

    def of(self, decision: str) -> frozenset[str]:
        return self.requisite[self.decisions.index(decision)]

    def values_of(self, decision: str) -> frozenset[str]:
        return self.value_sets[self.decisions.index(decision)]

    def policy_parents(self, decision: str) -> tuple[str, ...]:
        return self.modified_parents[decision]


def _descendants(children: Mapping[str, Sequence[str]], start: str) -> set[str]:
    seen: set[str] = set()
    queue = deque(children[start])
    while queue:
        n = queue.popleft()
        if n not in seen:
            seen.add(n)
            queue.extend(children[n])
    return seen


def requisite_observations(diagram: InfluenceDiagram) -> RequisiteResult:
    """Requisite observations R_i, visiting decisions latest first.

    After D_i is processed it is replaced by a chance-like policy node whose
    parents are R_i, so earlier decisions see how later policies react.
    """
    require_valid(diagram)
    decisions = diagram.decisions
    m = len(decisions)
    parents = diagram_parents(diagram)
    order = diagram.order
    values = set(diagram.values)
    req: list[frozenset[str]] = [frozenset()] * m
    vsets: list[frozenset[str]] = [frozenset()] * m
    relevant: list[frozenset[str]] = [frozenset()] * m
    for i in range(m - 1, -1, -1):
        d = decisions[i]
        children = _children_of(parents)
        v_i = frozenset(_descendants(children, d) & values)
        observed = diagram.info_sets[i] | {d}
        marks = bayes_ball(parents, sorted(v_i, key=order.get), observed)
        r_i = marks.requisite_observed - {d}
        req[i], vsets[i] = frozenset(r_i), v_i
        relevant[i] = frozenset(n for n in marks.visited if n not in values)
        parents = dict(parents)
        parents[d] = tuple(sorted(r_i, key=order.get))
    return RequisiteResult(decisions, tuple(req), tuple(vsets), tuple(relevant), parents)


def relevance_partition(
    diagram: InfluenceDiagram, result: RequisiteResult | None = None, for_voi: bool = True
) -> tuple[frozenset[str], ...]:
    """Sets Q_0..Q_m: the non-value variables first found relevant at each decision.

    Q_m is filled first, working back to Q_1; Q_0 takes what is relevant to
    R_1 plus every remaining variable, so the sets cover the whole diagram.
    """
    result = result or requisite_observations(diagram)
    m = len(diagram.decisions)
    parents = result.modified_parents
    children = _children_of(parents)
    values = set(diagram.values)
    qs: list[frozenset[str]] = [frozenset()] * (m + 1)
    taken: set[str] = set()
    for i in range(m, 0, -1):
        d = diagram.decisions[i - 1]
        q = set(result.relevant[i - 1]) | {d}
        if for_voi:
            q |= {n for n in _descendants(children, d) if diagram[n].kind == "chance"}
        qs[i] = frozenset(q - taken)
        taken |= q
    r1 = result.requisite[0] if m else frozenset()
    q0 = set(bayes_ball(parents, sorted(r1, key=diagram.order.get), ()).visited) - values if r1 else set()
    q0 |= set(diagram.nonvalue)
    qs[0] = frozenset(q0 - taken)
    return tuple(qs)

