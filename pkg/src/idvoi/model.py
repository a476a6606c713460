"""Discrete influence diagrams.

A diagram holds chance, decision and value variables. Decisions are ordered by
declaration; ``observations`` lists which variables are known before which
decision. Everything known before ``D_i`` stays known for later decisions, so
each chance variable gets a single *information slot*: slot ``s`` means it is
first observed just before decision ``s + 1`` (1-based), and slot ``m`` means it
is never observed.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from math import prod
from typing import Iterable, Literal

import numpy as np

from .errors import ConflictingObservation, DuplicateVariable, UnknownVariable

Kind = Literal["chance", "decision", "value"]

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class Variable:
    name: str
    kind: Kind
    states: tuple[str, ...] = ()
    parents: tuple[str, ...] = ()
    table: tuple[float, ...] | None = None

    @property
    def card(self) -> int:
        return len(self.states)

    def state_index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise UnknownVariable(f"{self.name} has no state {state!r}", self.name) from None


@dataclass(frozen=True)
class InfluenceDiagram:
    variables: tuple[Variable, ...]
    observations: tuple[tuple[str, str], ...] = ()
    _index: dict[str, Variable] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, Variable] = {}
        for v in self.variables:
            if not NAME_RE.match(v.name):
                raise ValueError(f"invalid variable name {v.name!r}")
            if v.name in index:
                raise DuplicateVariable(f"variable {v.name} declared twice", v.name)
            index[v.name] = v
        object.__setattr__(self, "_index", index)

    # lookup -----------------------------------------------------------------

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __getitem__(self, name: str) -> Variable:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownVariable(f"unknown variable {name!r}", name) from None

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @cached_property
    def order(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}

    def _of_kind(self, kind: str) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.kind == kind)

    @cached_property
    def chance(self) -> tuple[str, ...]:
        return self._of_kind("chance")

    @cached_property
    def decisions(self) -> tuple[str, ...]:
        return self._of_kind("decision")

    @cached_property
    def values(self) -> tuple[str, ...]:
        return self._of_kind("value")

    @cached_property
    def nonvalue(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.kind != "value")

    def decision_index(self, name: str) -> int:
        """1-based position of a decision in the decision order."""
        if self[name].kind != "decision":
            raise UnknownVariable(f"{name} is not a decision", name)
        return self.decisions.index(name) + 1

    def card(self, name: str) -> int:
        return self[name].card

    # graph ------------------------------------------------------------------

    @cached_property
    def children(self) -> dict[str, tuple[str, ...]]:
        """Children along conditioning arcs (CPT and value-table parents)."""
        out: dict[str, list[str]] = {n: [] for n in self.names}
        for v in self.variables:
            for p in v.parents:
                if p in out:
                    out[p].append(v.name)
        return {k: tuple(c) for k, c in out.items()}

    @cached_property
    def _arcs_out(self) -> dict[str, tuple[str, ...]]:
        # conditioning arcs plus informational arcs and the decision order
        out = {k: list(c) for k, c in self.children.items()}
        for x, d in self.observations:
            if x in out and d in out and d not in out[x]:
                out[x].append(d)
        for a, b in zip(self.decisions, self.decisions[1:]):
            if b not in out[a]:
                out[a].append(b)
        return {k: tuple(c) for k, c in out.items()}

    def descendants(self, name: str) -> frozenset[str]:
        """Everything reachable from ``name`` along any arc, informational included."""
        if name not in self:
            raise UnknownVariable(f"unknown variable {name!r}", name)
        seen: set[str] = set()
        queue = deque(self._arcs_out[name])
        while queue:
            n = queue.popleft()
            if n not in seen:
                seen.add(n)
                queue.extend(self._arcs_out[n])
        seen.discard(name)
        return frozenset(seen)

    # information order ------------------------------------------------------

    @cached_property
    def info_slot(self) -> dict[str, int]:
        return no_forgetting_closure(self)[0]

    @cached_property
    def info_sets(self) -> tuple[frozenset[str], ...]:
        return no_forgetting_closure(self)[1]

    def observed_before(self, decision: str) -> frozenset[str]:
        return self.info_sets[self.decision_index(decision) - 1]

    # tables -----------------------------------------------------------------

    def factor(self, name: str) -> tuple[tuple[str, ...], np.ndarray]:
        """Axes and array for a chance CPT or value table, row-major per the file format."""
        v = self[name]
        if v.kind == "chance":
            axes = v.parents + (v.name,)
        elif v.kind == "value":
            axes = v.parents
        else:
            raise ValueError(f"decision {name} has no table")
        shape = tuple(self.card(a) for a in axes)
        return axes, np.asarray(v.table, dtype=float).reshape(shape)

    def state_space_size(self) -> int:
        return prod(self.card(n) for n in self.nonvalue)

    # modification -----------------------------------------------------------

    def with_slot(self, name: str, slot: int) -> "InfluenceDiagram":
        """Copy of the diagram where chance variable ``name`` is first observed at ``slot``."""
        if self[name].kind != "chance":
            raise UnknownVariable(f"{name} is not a chance variable", name)
        m = len(self.decisions)
        if not 0 <= slot <= m:
            raise ValueError(f"slot {slot} out of range 0..{m}")
        obs = tuple(o for o in self.observations if o[0] != name)
        if slot < m:
            obs = obs + ((name, self.decisions[slot]),)
        return InfluenceDiagram(self.variables, obs)


def no_forgetting_closure(
    diagram: InfluenceDiagram,
) -> tuple[dict[str, int], tuple[frozenset[str], ...]]:
    """Information slots of chance variables and cumulative sets I(D_1)..I(D_m)."""
    decisions = diagram.decisions
    m = len(decisions)
    pos = {d: i for i, d in enumerate(decisions)}
    slot = {c: m for c in diagram.chance}
    for x, d in diagram.observations:
        if x not in diagram:
            raise UnknownVariable(f"observation of unknown variable {x!r}", x)
        if d not in pos:
            raise UnknownVariable(f"{d!r} is not a decision", d)
        kind = diagram[x].kind
        if kind == "decision":
            if pos[x] >= pos[d]:
                raise ConflictingObservation(f"decision {x} cannot be observed before {d}", x, d)
        elif kind == "value":
            raise ConflictingObservation(f"value node {x} cannot be observed", x)
        else:
            slot[x] = min(slot[x], pos[d])
    sets = tuple(
        frozenset(c for c, s in slot.items() if s <= i) | frozenset(decisions[:i])
        for i in range(m)
    )
    return slot, sets


# validation -------------------------------------------------------------------


@dataclass(frozen=True)
class Finding:
    severity: Literal["error", "warning"]
    code: str
    message: str
    variables: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...] = ()

    @property
    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "error")

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> list[str]:
        return [f.code for f in self.findings]


def _check_variable(diagram: InfluenceDiagram, v: Variable) -> Iterable[Finding]:
    for p in v.parents:
        if p not in diagram:
            yield Finding("error", "unknown_variable", f"{v.name} has unknown parent {p}", (v.name, p))
        elif diagram[p].kind == "value":
            yield Finding("error", "value_has_children", f"value node {p} is a parent of {v.name}", (p, v.name))
    if len(set(v.parents)) != len(v.parents):
        yield Finding("error", "duplicate_parent", f"{v.name} lists a parent twice", (v.name,))
    if v.kind == "value":
        if v.states:
            yield Finding("error", "value_has_states", f"value node {v.name} declares states", (v.name,))
    elif not v.states:
        yield Finding("error", "no_states", f"{v.name} has no states", (v.name,))
    elif len(set(v.states)) != len(v.states):
        yield Finding("error", "duplicate_state", f"{v.name} repeats a state name", (v.name,))
    if v.kind == "decision":
        if v.table is not None or v.parents:
            yield Finding("error", "decision_table", f"decision {v.name} carries a table or parents", (v.name,))
        return
    if v.table is None:
        yield Finding("error", "table_arity", f"{v.name} has no table", (v.name,))
        return
    if any(p not in diagram or diagram[p].kind == "value" for p in v.parents):
        return
    expected = prod(diagram.card(p) for p in v.parents) * (v.card if v.kind == "chance" else 1)
    if len(v.table) != expected:
        yield Finding(
            "error", "table_arity", f"{v.name} table has {len(v.table)} entries, expected {expected}", (v.name,)
        )
        return
    if not all(np.isfinite(v.table)):
        yield Finding("error", "non_finite", f"{v.name} table has non-finite entries", (v.name,))
        return
    if v.kind == "chance":
        arr = np.asarray(v.table, dtype=float).reshape(-1, v.card)
        if (arr < 0).any():
            yield Finding("error", "cpt_negative", f"{v.name} has negative probabilities", (v.name,))
        if np.any(np.abs(arr.sum(axis=1) - 1.0) > NORMALIZATION_TOL):
            yield Finding("error", "cpt_not_normalized", f"a distribution of {v.name} does not sum to 1", (v.name,))


def _find_cycle(diagram: InfluenceDiagram) -> list[str]:
    indeg = {n: 0 for n in diagram.names}
    for v in diagram.variables:
        indeg[v.name] = sum(1 for p in v.parents if p in diagram)
    queue = deque(n for n, k in indeg.items() if k == 0)
    while queue:
        n = queue.popleft()
        for c in diagram.children[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    return [n for n in diagram.names if indeg[n] > 0]


def validate_diagram(diagram: InfluenceDiagram) -> ValidationReport:
    """All invariant violations, ordered by declaration position then code."""
    keyed: list[tuple[int, str, Finding]] = []
    order = diagram.order

    def add(anchor: str, finding: Finding) -> None:
        keyed.append((order.get(anchor, len(order)), finding.code, finding))

    for v in diagram.variables:
        for f in _check_variable(diagram, v):
            add(v.name, f)
        if v.kind == "decision" and not any(diagram[d].kind == "value" for d in diagram.descendants(v.name)):
            add(v.name, Finding("warning", "no_value_descendant", f"decision {v.name} affects no value", (v.name,)))

    cyclic = _find_cycle(diagram)
    if cyclic:
        add(cyclic[0], Finding("error", "cycle", "the graph has a directed cycle through " + ", ".join(cyclic), tuple(cyclic)))

    pos = {d: i for i, d in enumerate(diagram.decisions)}
    for x, d in diagram.observations:
        if x not in diagram or d not in diagram:
            missing = x if x not in diagram else d
            add(x, Finding("error", "unknown_variable", f"observation refers to unknown {missing}", (x, d)))
            continue
        if d not in pos:
            add(x, Finding("error", "observe_not_decision", f"{d} is not a decision", (x, d)))
            continue
        kind = diagram[x].kind
        if kind == "value":
            add(x, Finding("error", "observe_value_node", f"value node {x} cannot be observed", (x, d)))
        elif kind == "decision" and pos[x] >= pos[d]:
            add(x, Finding("error", "conflicting_observation", f"decision {x} is not chosen before {d}", (x, d)))
        elif kind == "chance" and x in diagram.descendants(d):
            add(x, Finding("error", "descendant_observation", f"{x} is a descendant of {d} and cannot be observed before it", (x, d)))

    keyed.sort(key=lambda t: (t[0], t[1]))
    return ValidationReport(tuple(f for _, _, f in keyed))


def require_valid(diagram: InfluenceDiagram) -> InfluenceDiagram:
    from .errors import InvalidDiagram

    report = validate_diagram(diagram)
    if not report.ok:
        raise InvalidDiagram(report)
    return diagram
