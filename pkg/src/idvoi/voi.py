"""Value of information on a single solved cluster tree.

Three queries reuse the baseline sweep:

* ``advance(B, D_i)``: B becomes known before D_i. Each state of B is pushed
  as hard evidence through the clusters where the decisions that could use B
  are eliminated; the cases are summed right after the last of those policies.
* ``delay(A, D_i)``: A is learned only after D_i. Each state of D_i is fixed
  and propagated until a cut whose scope is exactly what D_i may still see;
  there the cases are maximized instead of summed.
* posterior evidence: a likelihood on a scratch copy plus partial
  repropagation.

When the tree cannot host a query, the modified diagram is solved from scratch
and the result is flagged as a fallback.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import IllegalObservation, ImproperTree, UnknownVariable
from .model import InfluenceDiagram
from .potential import PHI_CONSTANCY_TOL, PolicyTable, PotentialPair, indicator, restrict
from .propagate import PropagationContext, SolveResult, eliminate, insert_evidence, solve, sweep
from .relevance import requisite_observations
from .treebuild import co_clustered, weakly_inward

QueryKind = Literal["advance", "delay", "posterior"]


@dataclass(frozen=True)
class VoiQuery:
    kind: QueryKind
    variable: str
    decision: str | None = None
    likelihood: tuple[float, ...] | None = None

    @property
    def label(self) -> str:
        if self.kind == "advance":
            return f"advance({self.variable}, {self.decision})"
        if self.kind == "delay":
            return f"delay({self.variable}, {self.decision})"
        return f"posterior({self.variable})"


@dataclass
class VoiResult:
    query: VoiQuery
    baseline_meu: float | None
    value_with_change: float | None
    shortcut: bool = False
    fallback: bool = False
    clusters_recomputed: int = 0
    per_case_count: int = 0
    prob_evidence: float = 1.0
    peak_table_size: int = 0
    policies: dict[str, PolicyTable] = field(default_factory=dict)

    @property
    def delta(self) -> float | None:
        if self.value_with_change is None or self.baseline_meu is None:
            return None
        return self.value_with_change - self.baseline_meu


@dataclass(frozen=True)
class Legality:
    legal: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.legal


def _chance(diagram: InfluenceDiagram, var: str) -> None:
    if var not in diagram:
        raise UnknownVariable(f"unknown variable {var!r}", var)
    if diagram[var].kind != "chance":
        raise UnknownVariable(f"{var} is not a chance variable", var)


def legality(diagram: InfluenceDiagram, kind: QueryKind, var: str, decision: str) -> Legality:
    _chance(diagram, var)
    i = diagram.decision_index(decision)
    slot = diagram.info_slot[var]
    if kind == "advance":
        if var in diagram.descendants(decision):
            return Legality(False, "descendant")
        return Legality(True)
    if kind == "delay":
        if slot == len(diagram.decisions):
            return Legality(False, "not_observed")
        if slot != i - 1:
            return Legality(False, "not_observed_just_before")
        return Legality(True)
    raise ValueError(f"unknown query kind {kind!r}")


def _require_legal(diagram: InfluenceDiagram, kind: QueryKind, var: str, decision: str) -> None:
    verdict = legality(diagram, kind, var, decision)
    if not verdict:
        raise IllegalObservation(f"{kind}({var}, {decision}) is illegal: {verdict.reason}", var, decision)


def _baseline(ctx: PropagationContext) -> SolveResult:
    if ctx.phi0 is None or ctx.dirty:
        raise ImproperTree("the context needs a completed sweep before VOI queries")
    return ctx.result


# shared machinery -------------------------------------------------------------


def _run_up(
    ctx: PropagationContext,
    path: Sequence[int],
    stop_step: int,
    local: dict[int, PotentialPair],
    fixed: frozenset[str] = frozenset(),
) -> PotentialPair:
    """Recompute ``path`` (outermost first) and stop ``stop_step`` eliminations into its last cluster."""
    tree = ctx.tree
    msg, prev = None, None
    for cid in path:
        replace = {prev: msg} if prev is not None else None
        pot = ctx.gather(cid, replace=replace, local=local.get(cid))
        ctx.clusters_recomputed += 1
        elim = tree[cid].eliminate
        if cid == path[-1]:
            return eliminate(pot, elim[:stop_step], ctx.diagram, fixed=fixed)
        msg, prev = eliminate(pot, elim, ctx.diagram, fixed=fixed), cid
    raise ValueError("empty path")


def _resume(ctx: PropagationContext, cid: int, step: int, pot: PotentialPair) -> tuple[float, float]:
    """Finish cluster ``cid`` from ``step`` and sweep its inward path to the root."""
    tree = ctx.tree
    msg = eliminate(pot, tree[cid].eliminate[step:], ctx.diagram)
    prev = cid
    for anc in tree.path_to_root(cid)[1:]:
        full = ctx.gather(anc, replace={prev: msg})
        ctx.clusters_recomputed += 1
        msg, prev = eliminate(full, tree[anc].eliminate, ctx.diagram), anc
    return msg.scalars()


def _path_between(ctx: PropagationContext, outer: int, inner: int) -> list[int]:
    path = ctx.tree.path_to_root(outer)
    return path[: path.index(inner) + 1]


def _lca(ctx: PropagationContext, cids: Iterable[int]) -> int:
    paths = [ctx.tree.path_to_root(c) for c in cids]
    common = set(paths[0]).intersection(*paths[1:])
    return next(c for c in paths[0] if c in common)


def _scratch(ctx: PropagationContext) -> PropagationContext:
    work = ctx.copy()
    work.clusters_recomputed = 0
    work.peak_table_size = 0
    return work


def _refit(result: VoiResult, work: PropagationContext) -> VoiResult:
    result.clusters_recomputed = work.clusters_recomputed
    result.peak_table_size = work.peak_table_size
    return result


def _fallback(ctx: PropagationContext, query: VoiQuery, modified: InfluenceDiagram, baseline: SolveResult) -> VoiResult:
    res, fresh = solve(modified)
    return VoiResult(
        query, baseline.meu, res.meu, fallback=True,
        clusters_recomputed=fresh.clusters_recomputed, prob_evidence=res.prob_evidence,
        peak_table_size=fresh.peak_table_size, policies=res.policies,
    )


# advance ----------------------------------------------------------------------


def sensitive_decisions(ctx: PropagationContext, var: str, decision: str) -> list[str]:
    """Decisions from ``decision`` on that could use ``var`` if it were observed.

    A later decision can ignore ``var`` when ``var`` is neither weakly outward
    of it nor shares a cluster with it.
    """
    diagram, tree = ctx.diagram, ctx.tree
    i = diagram.decision_index(decision)
    return [
        d for d in diagram.decisions[i - 1:]
        if weakly_inward(tree, d, var) or co_clustered(tree, d, var)
    ]


def advance_observation(ctx: PropagationContext, var: str, decision: str) -> VoiResult:
    """Value of observing ``var`` just before ``decision`` (and every later decision)."""
    diagram, tree = ctx.diagram, ctx.tree
    _require_legal(diagram, "advance", var, decision)
    base = _baseline(ctx)
    query = VoiQuery("advance", var, decision)
    i = diagram.decision_index(decision)
    if diagram.info_slot[var] <= i - 1:
        return VoiResult(query, base.meu, base.meu, shortcut=True, prob_evidence=base.prob_evidence)
    sensitive = sensitive_decisions(ctx, var, decision)
    if not sensitive:
        return VoiResult(query, base.meu, base.meu, shortcut=True, prob_evidence=base.prob_evidence)

    modified = diagram.with_slot(var, i - 1)
    homes = [tree.inwardmost(d) for d in sensitive]
    merge = _lca(ctx, homes)
    inside = [c for c in tree.clusters_with(var) if c in tree.subtree(merge)]
    if not inside:
        merge = _lca(ctx, [merge, tree.inwardmost(var)])
        inside = [c for c in tree.clusters_with(var) if c in tree.subtree(merge)]
    source = min(inside, key=lambda c: (tree.depth[c], c))
    elim = tree[merge].eliminate
    step = max((elim.index(d) + 1 for d in sensitive if d in elim), default=0)

    region = set(_path_between(ctx, source, merge))
    for h in homes:
        region |= set(_path_between(ctx, h, merge))
    earlier = set(diagram.decisions[: i - 1])
    for c in region:
        done = tree[c].eliminate[:step] if c == merge else tree[c].eliminate
        if earlier & set(done):
            return _fallback(ctx, query, modified, base)

    # outermost first; every region cluster lies below ``merge``
    order = [c for c in tree.postorder() if c in region]
    work = _scratch(ctx)
    card = diagram.card(var)
    phis, psis = [], []
    merged_scope = None
    for b in range(card):
        local = {source: restrict(ctx.local[source], var, indicator(card, b))}
        pot = _run_region(work, order, merge, step, local)
        merged_scope = pot.scope
        phis.append(pot.phi)
        psis.append(pot.psi)
    phi = np.sum(phis, axis=0)
    num = np.sum([p * s for p, s in zip(phis, psis)], axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        psi = np.where(phi > 0, num / np.where(phi > 0, phi, 1.0), 0.0)
    pot = PotentialPair(merged_scope, tuple(diagram.card(v) for v in merged_scope), phi, psi)
    phi0, psi0 = _resume(work, merge, step, pot)
    value = psi0 if phi0 > 0 else None
    result = VoiResult(query, base.meu, value, per_case_count=card, prob_evidence=phi0)
    return _refit(result, work)


def _run_region(
    ctx: PropagationContext,
    order: Sequence[int],
    merge: int,
    step: int,
    local: dict[int, PotentialPair],
) -> PotentialPair:
    """Recompute the clusters of ``order`` leaves-first, stopping ``step`` eliminations into ``merge``."""
    tree = ctx.tree
    fresh: dict[int, PotentialPair] = {}
    for cid in order:
        replace = {ch: fresh[ch] for ch in tree[cid].children if ch in fresh}
        pot = ctx.gather(cid, replace=replace, local=local.get(cid))
        ctx.clusters_recomputed += 1
        if cid == merge:
            return eliminate(pot, tree[cid].eliminate[:step], ctx.diagram)
        fresh[cid] = eliminate(pot, tree[cid].eliminate, ctx.diagram)
    raise ValueError("merge cluster not in region")


# delay ------------------------------------------------------------------------


def _delay_cut(
    ctx: PropagationContext, decision: str, seen: frozenset[str], need: frozenset[str]
) -> tuple[list[int], int] | None:
    """First (path, step) where the live scope is visible to ``decision`` and holds ``need``."""
    diagram, tree = ctx.diagram, ctx.tree
    i = diagram.decision_index(decision)
    earlier = set(diagram.decisions[: i - 1])
    home = tree.inwardmost(decision)
    chain = tree.path_to_root(home)
    for k, cid in enumerate(chain):
        c = tree[cid]
        start = c.eliminate.index(decision) + 1 if cid == home else 0
        for p in range(start, len(c.eliminate) + 1):
            if earlier & set(c.eliminate[:p]):
                return None
            scope = set(c.variables) - set(c.eliminate[:p])
            if scope <= seen and need <= scope:
                return chain[: k + 1], p
        if earlier & set(c.eliminate):
            return None
    return None


def delay_observation(ctx: PropagationContext, var: str, decision: str) -> VoiResult:
    """Value of learning ``var`` only after ``decision`` instead of just before it."""
    diagram = ctx.diagram
    _require_legal(diagram, "delay", var, decision)
    base = _baseline(ctx)
    query = VoiQuery("delay", var, decision)
    i = diagram.decision_index(decision)
    if var not in ctx.requisite.of(decision):
        return VoiResult(query, base.meu, base.meu, shortcut=True, prob_evidence=base.prob_evidence)

    modified = diagram.with_slot(var, i)
    need = requisite_observations(modified).of(decision)
    seen = modified.observed_before(decision)
    cut = _delay_cut(ctx, decision, seen, need)
    if cut is None:
        return _fallback(ctx, query, modified, base)
    path, step = cut
    home = path[0]
    work = _scratch(ctx)
    card = diagram.card(decision)
    cases = []
    for d in range(card):
        local = {home: restrict(ctx.local[home], decision, indicator(card, d))}
        cases.append(_run_up(work, path, step, local, fixed=frozenset({decision})))
    phis = np.stack([c.phi for c in cases], axis=-1)
    psis = np.stack([c.psi for c in cases], axis=-1)
    top = phis.max(axis=-1)
    if ((top > 0) & (top - phis.min(axis=-1) > PHI_CONSTANCY_TOL * top)).any():
        raise ImproperTree(f"probability varies with {decision} at the delay cut", decision)
    choice = np.argmax(psis, axis=-1)
    psi = np.take_along_axis(psis, choice[..., None], -1)[..., 0]
    phi = np.take_along_axis(phis, choice[..., None], -1)[..., 0]
    scope = cases[0].scope
    cards = tuple(diagram.card(v) for v in scope)
    policy = PolicyTable(decision, scope, cards, choice)
    phi0, psi0 = _resume(work, path[-1], step, PotentialPair(scope, cards, phi, psi))
    value = psi0 if phi0 > 0 else None
    result = VoiResult(query, base.meu, value, per_case_count=card, prob_evidence=phi0,
                       policies={decision: policy})
    return _refit(result, work)


# posterior --------------------------------------------------------------------


def posterior_evidence(ctx: PropagationContext, var: str, likelihood: Sequence[float]) -> SolveResult:
    """Conditional MEU given a likelihood on ``var``; ``ctx`` itself is untouched."""
    _baseline(ctx)
    work = ctx.copy()
    insert_evidence(work, var, likelihood)
    return sweep(work)


def posterior_query(ctx: PropagationContext, var: str, likelihood: Sequence[float]) -> VoiResult:
    base = _baseline(ctx)
    res = posterior_evidence(ctx, var, likelihood)
    query = VoiQuery("posterior", var, None, tuple(float(x) for x in likelihood))
    return VoiResult(query, base.meu, res.meu, clusters_recomputed=res.clusters_recomputed,
                     prob_evidence=res.prob_evidence, policies=res.policies)


# report -----------------------------------------------------------------------


def voi_queries(diagram: InfluenceDiagram) -> list[VoiQuery]:
    """Every legal advance and delay, by decision then declaration order."""
    out = []
    slot = diagram.info_slot
    for i, d in enumerate(diagram.decisions, start=1):
        for x in diagram.chance:
            if slot[x] > i - 1 and legality(diagram, "advance", x, d):
                out.append(VoiQuery("advance", x, d))
            if slot[x] == i - 1:
                out.append(VoiQuery("delay", x, d))
    return out


def run_query(ctx: PropagationContext, query: VoiQuery) -> VoiResult:
    if query.kind == "advance":
        return advance_observation(ctx, query.variable, query.decision)
    if query.kind == "delay":
        return delay_observation(ctx, query.variable, query.decision)
    return posterior_query(ctx, query.variable, query.likelihood)


def voi_report(ctx: PropagationContext) -> list[VoiResult]:
    return [run_query(ctx, q) for q in voi_queries(ctx.diagram)]
