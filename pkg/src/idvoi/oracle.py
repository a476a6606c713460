"""Brute-force expectimax over the full joint table.

Builds the joint probability P and the weighted utility W = P * U over every
chance and decision variable, then alternates sums and maxima in reverse
information order. Nothing here touches cluster trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import IllegalObservation, IncompleteAssignment, TooLarge, UnknownVariable
from .model import InfluenceDiagram, require_valid

MAX_STATES = 10**7


@dataclass
class OracleResult:
    meu: float | None
    prob_evidence: float
    # decision -> (context variables, chosen state index per context cell)
    policies: dict[str, tuple[tuple[str, ...], np.ndarray]] = field(default_factory=dict)


def joint_probability(diagram: InfluenceDiagram, assignment: Mapping[str, int]) -> float:
    """Product of every CPT entry selected by a total assignment."""
    p = 1.0
    for x in diagram.chance:
        v = diagram[x]
        missing = [n for n in v.parents + (x,) if n not in assignment]
        if missing:
            raise IncompleteAssignment(f"assignment lacks {', '.join(missing)}", *missing)
        axes, table = diagram.factor(x)
        p *= float(table[tuple(assignment[a] for a in axes)])
    return p


def _broadcast(table: np.ndarray, axes: Sequence[str], order: Sequence[str]) -> np.ndarray:
    perm = sorted(range(len(axes)), key=lambda i: order.index(axes[i]))
    shape = [1] * len(order)
    for a, n in zip(axes, table.shape):
        shape[order.index(a)] = n
    return np.transpose(table, perm).reshape(shape)


def oracle_value(
    diagram: InfluenceDiagram,
    evidence: Mapping[str, Sequence[float]] | None = None,
) -> OracleResult:
    """Maximal expected utility by exhaustive sum/max over the information order."""
    require_valid(diagram)
    if diagram.state_space_size() > MAX_STATES:
        raise TooLarge(f"joint state space {diagram.state_space_size()} exceeds {MAX_STATES}")
    axes = list(diagram.chance) + list(diagram.decisions)
    shape = tuple(diagram.card(a) for a in axes)
    P = np.ones(shape)
    U = np.zeros(shape)
    for x in diagram.chance:
        fa, table = diagram.factor(x)
        P = P * _broadcast(table, fa, axes)
    for u in diagram.values:
        fa, table = diagram.factor(u)
        U = U + _broadcast(table, fa, axes)
    for x, w in (evidence or {}).items():
        if diagram[x].kind != "chance":
            raise UnknownVariable(f"{x} is not a chance variable", x)
        P = P * _broadcast(np.asarray(w, dtype=float), (x,), axes)
    W = P * U

    slot = diagram.info_slot
    m = len(diagram.decisions)
    live = list(axes)
    policies = {}
    for t in range(m, -1, -1):
        for x in [c for c in diagram.chance if slot[c] == t]:
            k = live.index(x)
            P, W = P.sum(axis=k), W.sum(axis=k)
            live.pop(k)
        if t == 0:
            break
        d = diagram.decisions[t - 1]
        k = live.index(d)
        choice = np.argmax(np.moveaxis(W, k, -1), axis=-1)
        W = np.take_along_axis(np.moveaxis(W, k, -1), choice[..., None], -1)[..., 0]
        P = np.take_along_axis(np.moveaxis(P, k, -1), choice[..., None], -1)[..., 0]
        live.pop(k)
        policies[d] = (tuple(live), choice)
    p0, w0 = float(P), float(W)
    return OracleResult(w0 / p0 if p0 > 0 else None, p0, policies)


def modified_diagram(diagram: InfluenceDiagram, kind: str, variable: str, decision: str) -> InfluenceDiagram:
    """The diagram with one chance variable observed earlier ('advance') or one stage later ('delay')."""
    if diagram[variable].kind != "chance":
        raise UnknownVariable(f"{variable} is not a chance variable", variable)
    i = diagram.decision_index(decision)
    slot = diagram.info_slot[variable]
    if kind == "advance":
        if variable in diagram.descendants(decision):
            raise IllegalObservation(f"{variable} is a descendant of {decision}", variable, decision)
        return diagram.with_slot(variable, min(slot, i - 1))
    if kind == "delay":
        if slot != i - 1:
            raise IllegalObservation(f"{variable} is not first observed just before {decision}", variable, decision)
        return diagram.with_slot(variable, i)
    raise ValueError(f"unknown modification {kind!r}")


def oracle_modified_value(diagram: InfluenceDiagram, kind: str, variable: str, decision: str) -> float:
    return oracle_value(modified_diagram(diagram, kind, variable, decision)).meu
