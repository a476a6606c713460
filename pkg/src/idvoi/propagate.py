"""Inward sweep over a rooted cluster tree.

Every cluster caches the message it last sent inward. Inserting evidence marks
only the clusters between the evidence and the root as dirty, so the next sweep
recomputes that path and reuses everything else.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DecisionNotEliminated, IllegalObservation, NoHostingCluster, UnknownVariable
from .model import InfluenceDiagram, require_valid
from .potential import PolicyTable, PotentialPair, combine, indicator, max_marginalize, restrict, sum_marginalize
from .relevance import RequisiteResult, requisite_observations
from .treebuild import RootedClusterTree, construct_tree


@dataclass
class SolveResult:
    meu: float | None
    prob_evidence: float
    policies: dict[str, PolicyTable] = field(default_factory=dict)
    clusters_recomputed: int = 0

    @property
    def defined(self) -> bool:
        """False when the evidence has probability zero."""
        return self.meu is not None


def eliminate(
    pot: PotentialPair,
    variables: Iterable[str],
    diagram: InfluenceDiagram,
    policies: dict[str, PolicyTable] | None = None,
    fixed: frozenset[str] = frozenset(),
) -> PotentialPair:
    """Sum out chance variables and maximize decisions, in the given order.

    Decisions in ``fixed`` already carry an indicator and are summed instead.
    """
    for v in variables:
        if diagram[v].kind == "decision" and v not in fixed:
            pot, pol = max_marginalize(pot, v)
            if policies is not None:
                policies[v] = pol
        else:
            pot = sum_marginalize(pot, v)
    return pot


class PropagationContext:
    """Potentials, cached messages and dirty flags for one cluster tree."""

    def __init__(self, tree: RootedClusterTree, diagram: InfluenceDiagram):
        self.tree = tree
        self.diagram = diagram
        self.local: dict[int, PotentialPair] = {}
        self.messages: dict[int, PotentialPair] = {}
        self.dirty: set[int] = set(range(len(tree)))
        self.evidence: dict[str, np.ndarray] = {}
        self.policies: dict[str, PolicyTable] = {}
        self.hosts: dict[str, int] = {}
        self.phi0: float | None = None
        self.psi0: float | None = None
        self.clusters_recomputed = 0
        self.peak_table_size = 0
        self._requisite: RequisiteResult | None = None

    @property
    def requisite(self) -> RequisiteResult:
        if self._requisite is None:
            self._requisite = requisite_observations(self.diagram)
        return self._requisite

    def copy(self) -> "PropagationContext":
        """Independent scratch copy; potentials are immutable so only the maps are copied."""
        other = copy.copy(self)
        other.local = dict(self.local)
        other.messages = dict(self.messages)
        other.dirty = set(self.dirty)
        other.evidence = dict(self.evidence)
        other.policies = dict(self.policies)
        return other

    def gather(self, cid: int, replace: Mapping[int, PotentialPair] | None = None,
               local: PotentialPair | None = None) -> PotentialPair:
        """Local potential of ``cid`` combined with its children's messages."""
        pot = self.local[cid] if local is None else local
        for ch in self.tree[cid].children:
            msg = replace[ch] if replace and ch in replace else self.messages[ch]
            pot = combine(pot, msg)
        self.peak_table_size = max(self.peak_table_size, pot.size)
        return pot

    @property
    def result(self) -> SolveResult:
        if self.phi0 is None:
            raise DecisionNotEliminated("no sweep has been run")
        meu = self.psi0 if self.phi0 > 0 else None
        return SolveResult(meu, self.phi0, dict(self.policies), self.clusters_recomputed)


def initialize(tree: RootedClusterTree, diagram: InfluenceDiagram) -> PropagationContext:
    """Place every CPT and value table in exactly one cluster holding its family."""
    ctx = PropagationContext(tree, diagram)
    for c in tree.clusters:
        ctx.local[c.id] = PotentialPair.unit(c.variables, [tree.cards[v] for v in c.variables])
    sets = {c.id: set(c.variables) for c in tree.clusters}
    for v in diagram.variables:
        if v.kind == "decision":
            continue
        axes, table = diagram.factor(v.name)
        hosts = [cid for cid, vs in sets.items() if set(axes) <= vs]
        if not hosts:
            raise NoHostingCluster(f"no cluster holds the family of {v.name}", v.name)
        cid = min(hosts, key=lambda c: (tree.table_size(c), c))
        factor = PotentialPair.probability(axes, table) if v.kind == "chance" else PotentialPair.utility(axes, table)
        ctx.local[cid] = combine(ctx.local[cid], factor).reorder(tree[cid].variables)
        ctx.hosts[v.name] = cid
    return ctx


def sweep(ctx: PropagationContext) -> SolveResult:
    """Visit clusters leaves-first, recomputing only the dirty ones."""
    tree = ctx.tree
    count = 0
    for cid in tree.postorder():
        if cid not in ctx.dirty and cid in ctx.messages:
            continue
        pot = ctx.gather(cid)
        ctx.messages[cid] = eliminate(pot, tree[cid].eliminate, ctx.diagram, ctx.policies)
        count += 1
    ctx.dirty.clear()
    ctx.phi0, ctx.psi0 = ctx.messages[tree.root].scalars()
    ctx.clusters_recomputed = count
    return ctx.result


repropagate = sweep


def check_evidence_target(diagram: InfluenceDiagram, var: str) -> None:
    if diagram[var].kind != "chance":
        raise UnknownVariable(f"{var} is not a chance variable", var)
    for d in diagram.decisions:
        if var in diagram.descendants(d):
            raise IllegalObservation(f"{var} depends on decision {d}; it cannot be evidence", var, d)


def insert_evidence(ctx: PropagationContext, var: str, likelihood: Sequence[float]) -> PropagationContext:
    """Multiply a likelihood into the inwardmost cluster holding ``var`` and dirty its path."""
    check_evidence_target(ctx.diagram, var)
    cid = ctx.tree.inwardmost(var)
    w = np.asarray(likelihood, dtype=float)
    ctx.local[cid] = restrict(ctx.local[cid], var, w)
    ctx.evidence[var] = ctx.evidence[var] * w if var in ctx.evidence else w
    ctx.dirty.update(ctx.tree.path_to_root(cid))
    return ctx


def observe(ctx: PropagationContext, var: str, state: str) -> PropagationContext:
    v = ctx.diagram[var]
    return insert_evidence(ctx, var, indicator(v.card, v.state_index(state)))


def extract_policy(ctx: PropagationContext, decision: str) -> PolicyTable:
    try:
        return ctx.policies[decision]
    except KeyError:
        raise DecisionNotEliminated(f"{decision} has not been eliminated yet", decision) from None


def compile_diagram(
    diagram: InfluenceDiagram, method: str = "auto"
) -> PropagationContext:
    """Validate, build a proper tree and place the tables (no sweep yet)."""
    require_valid(diagram)
    req = requisite_observations(diagram)
    tree = construct_tree(diagram, req, method=method)
    ctx = initialize(tree, diagram)
    ctx._requisite = req
    return ctx


def solve(
    diagram: InfluenceDiagram,
    evidence: Mapping[str, str | Sequence[float]] | None = None,
    method: str = "auto",
) -> tuple[SolveResult, PropagationContext]:
    ctx = compile_diagram(diagram, method)
    for var, ev in (evidence or {}).items():
        if isinstance(ev, str):
            observe(ctx, var, ev)
        else:
            insert_evidence(ctx, var, ev)
    return sweep(ctx), ctx


def policy_rows(policy: PolicyTable, diagram: InfluenceDiagram) -> list[tuple[str, str]]:
    """(context label, chosen state) for every context assignment."""
    states = [diagram[v].states for v in policy.context]
    rows = []
    for idx in np.ndindex(*policy.cards):
        label = ",".join(f"{v}={states[k][i]}" for k, (v, i) in enumerate(zip(policy.context, idx)))
        rows.append((label, diagram[policy.decision].states[int(policy.choice[idx])]))
    return rows
