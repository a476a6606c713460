"""Rooted cluster trees for influence diagrams.

Trees come from eliminating the moral graph of the policy-modified diagram in an
order that respects the information order: a variable may only be eliminated
before decision D_i if D_i cannot observe it. ``build_tree`` turns an
elimination order into a pruned cluster tree; ``construct_tree`` picks the
first candidate that passes :func:`check_proper`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import prod
from typing import Iterable, Literal, Mapping

from .errors import ImproperTree, UnknownVariable
from .model import InfluenceDiagram, require_valid
from .relevance import RequisiteResult, requisite_observations

EdgeTag = Literal["original", "informational", "moralizing"]
_TAG_PRIORITY = {"original": 0, "informational": 1, "moralizing": 2}


@dataclass(frozen=True)
class MoralGraph:
    vertices: tuple[str, ...]
    edges: dict[frozenset[str], EdgeTag]

    @cached_property
    def adjacency(self) -> dict[str, frozenset[str]]:
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for e in self.edges:
            a, b = tuple(e)
            adj[a].add(b)
            adj[b].add(a)
        return {v: frozenset(n) for v, n in adj.items()}

    def tag(self, a: str, b: str) -> EdgeTag | None:
        return self.edges.get(frozenset((a, b)))


def moral_graph(diagram: InfluenceDiagram, req: RequisiteResult | None = None) -> MoralGraph:
    """Moral graph of the diagram with decisions replaced by their policies."""
    req = req or requisite_observations(diagram)
    edges: dict[frozenset[str], EdgeTag] = {}

    def add(a: str, b: str, tag: EdgeTag) -> None:
        key = frozenset((a, b))
        if a == b:
            return
        old = edges.get(key)
        if old is None or _TAG_PRIORITY[tag] < _TAG_PRIORITY[old]:
            edges[key] = tag

    for v in diagram.variables:
        if v.kind == "chance":
            for p in v.parents:
                add(p, v.name, "original")
    for d in diagram.decisions:
        for r in req.of(d):
            add(r, d, "informational")
    for v in diagram.variables:
        fam = req.modified_parents[v.name] if v.kind == "decision" else v.parents
        for a, b in combinations(fam, 2):
            add(a, b, "moralizing")
    return MoralGraph(diagram.nonvalue, edges)


def elimination_ranks(diagram: InfluenceDiagram) -> dict[str, int]:
    """Elimination ranks; larger ranks are eliminated first.

    Decision D_i gets ``2i - 1``. A chance variable first observed at slot
    ``s`` gets ``2s``, so it is summed out after every decision that observes
    it and before every decision that does not.
    """
    rank = {d: 2 * i - 1 for i, d in enumerate(diagram.decisions, start=1)}
    for x in diagram.chance:
        rank[x] = 2 * diagram.info_slot[x]
    return rank


@dataclass(frozen=True)
class Cluster:
    id: int
    variables: tuple[str, ...]
    parent: int | None
    children: tuple[int, ...]
    separator: tuple[str, ...]
    eliminate: tuple[str, ...]


@dataclass(frozen=True)
class RootedClusterTree:
    clusters: tuple[Cluster, ...]
    root: int
    position: dict[str, int]  # global elimination position
    cards: dict[str, int]
    method: str = "elimination"

    def __getitem__(self, cid: int) -> Cluster:
        return self.clusters[cid]

    def __len__(self) -> int:
        return len(self.clusters)

    @cached_property
    def variables(self) -> frozenset[str]:
        return frozenset(v for c in self.clusters for v in c.variables)

    @cached_property
    def containing(self) -> dict[str, tuple[int, ...]]:
        out: dict[str, list[int]] = {}
        for c in self.clusters:
            for v in c.variables:
                out.setdefault(v, []).append(c.id)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def depth(self) -> dict[int, int]:
        depth = {self.root: 0}
        queue = deque([self.root])
        while queue:
            c = queue.popleft()
            for ch in self.clusters[c].children:
                depth[ch] = depth[c] + 1
                queue.append(ch)
        return depth

    def clusters_with(self, var: str) -> tuple[int, ...]:
        try:
            return self.containing[var]
        except KeyError:
            raise UnknownVariable(f"{var} is not in the tree", var) from None

    def inwardmost(self, var: str) -> int:
        return min(self.clusters_with(var), key=lambda c: (self.depth[c], c))

    def path_to_root(self, cid: int) -> list[int]:
        path = [cid]
        while self.clusters[path[-1]].parent is not None:
            path.append(self.clusters[path[-1]].parent)
        return path

    def is_inward(self, a: int, b: int) -> bool:
        """True when cluster ``a`` lies strictly between the root and ``b`` (or is the root)."""
        return a != b and a in self.path_to_root(b)

    def postorder(self) -> list[int]:
        out: list[int] = []
        stack = [(self.root, False)]
        while stack:
            c, done = stack.pop()
            if done:
                out.append(c)
                continue
            stack.append((c, True))
            for ch in reversed(self.clusters[c].children):
                stack.append((ch, False))
        return out

    def table_size(self, cid: int) -> int:
        return prod(self.cards[v] for v in self.clusters[cid].variables)

    @property
    def max_table_size(self) -> int:
        return max(self.table_size(c.id) for c in self.clusters)

    def subtree(self, cid: int) -> set[int]:
        out, stack = set(), [cid]
        while stack:
            c = stack.pop()
            out.add(c)
            stack.extend(self.clusters[c].children)
        return out


# construction -----------------------------------------------------------------


def eliminate_graph(
    graph: MoralGraph, ranks: Mapping[str, int], order: Mapping[str, int]
) -> list[tuple[str, frozenset[str]]]:
    """Greedy elimination: highest rank class first, min-fill inside it, declaration order on ties."""
    adj = {v: set(n) for v, n in graph.adjacency.items()}
    remaining = set(graph.vertices)
    out: list[tuple[str, frozenset[str]]] = []

    def fill(v: str) -> int:
        nb = adj[v] & remaining
        return sum(1 for a, b in combinations(nb, 2) if b not in adj[a])

    while remaining:
        top = max(ranks[v] for v in remaining)
        v = min((u for u in remaining if ranks[u] == top), key=lambda u: (fill(u), order[u]))
        nb = adj[v] & remaining
        for a, b in combinations(nb, 2):
            adj[a].add(b)
            adj[b].add(a)
        out.append((v, frozenset(nb | {v})))
        remaining.remove(v)
    return out


def _assemble(
    groups: list[tuple[set[str], set[str], int | None]],
    position: dict[str, int],
    cards: dict[str, int],
    order: Mapping[str, int],
    method: str,
) -> RootedClusterTree:
    """Number clusters outward-first and derive separators and elimination lists.

    ``groups`` holds (variables, eliminated-here, parent index) triples.
    """
    alive = [i for i, g in enumerate(groups) if g is not None]
    alive.sort(key=lambda i: min(position[v] for v in groups[i][1]))
    new_id = {old: k for k, old in enumerate(alive)}
    parent = {new_id[i]: (new_id[groups[i][2]] if groups[i][2] is not None else None) for i in alive}
    variables = {new_id[i]: tuple(sorted(groups[i][0], key=order.get)) for i in alive}
    roots = [c for c, p in parent.items() if p is None]
    if len(roots) != 1:
        raise ImproperTree(f"cluster graph has {len(roots)} roots")
    clusters = []
    for c in range(len(alive)):
        p = parent[c]
        sep = tuple(v for v in variables[c] if p is not None and v in variables[p])
        elim = tuple(sorted((v for v in variables[c] if v not in sep), key=position.get))
        children = tuple(k for k in range(len(alive)) if parent[k] == c)
        clusters.append(Cluster(c, variables[c], p, children, sep, elim))
    return RootedClusterTree(tuple(clusters), roots[0], dict(position), dict(cards), method)


def build_tree(
    graph: MoralGraph,
    ranks: Mapping[str, int],
    order: Mapping[str, int],
    cards: Mapping[str, int],
    method: str = "elimination",
) -> RootedClusterTree:
    """Cluster tree from strong elimination of ``graph``.

    Each elimination clique becomes a cluster whose inward neighbour is the
    clique of the first separator variable eliminated after it. Cliques
    contained in a neighbour are merged into it.
    """
    steps = eliminate_graph(graph, ranks, order)
    position = {v: k for k, (v, _) in enumerate(steps)}
    groups: list = []
    for v, clique in steps:
        sep = clique - {v}
        parent = position[min(sep, key=position.get)] if sep else None
        groups.append([set(clique), {v}, parent])
    last = len(groups) - 1
    for i, g in enumerate(groups):
        if g[2] is None and i != last:
            g[2] = last

    changed = True
    while changed:
        changed = False
        for i, g in enumerate(groups):
            if g is None or g[2] is None:
                continue
            p = g[2]
            pg = groups[p]
            if g[0] <= pg[0]:
                keep, drop = p, i
            elif pg[0] <= g[0]:
                keep, drop = i, p
                groups[i][2] = pg[2]
            else:
                continue
            groups[keep][1] |= groups[drop][1]
            groups[keep][0] |= groups[drop][0]
            for h in groups:
                if h is not None and h[2] == drop:
                    h[2] = keep
            groups[drop] = None
            if groups[keep][2] == keep:
                groups[keep][2] = None
            changed = True
    return _assemble([tuple(g) if g else None for g in groups], position, dict(cards), order, method)


def fallback_chain_tree(
    diagram: InfluenceDiagram, req: RequisiteResult | None = None
) -> RootedClusterTree:
    """A chain of clusters, one per information stage, outermost stage first.

    Stage ``t`` holds the chance variables first observed at slot ``t`` and
    the decision D_t. Each stage cluster is the union of its elimination
    cliques plus every variable still live from outer stages, so running
    intersection holds by construction.
    """
    req = req or requisite_observations(diagram)
    graph = moral_graph(diagram, req)
    ranks = elimination_ranks(diagram)
    steps = eliminate_graph(graph, ranks, diagram.order)
    position = {v: k for k, (v, _) in enumerate(steps)}
    stage = {v: (ranks[v] + 1) // 2 for v in graph.vertices}
    m = len(diagram.decisions)
    groups: list = []
    live: set[str] = set()
    for t in range(m, -1, -1):
        here = {v for v, _ in steps if stage[v] == t}
        if not here:
            continue
        members = set(live) | here
        for v, clique in steps:
            if stage[v] == t:
                members |= clique
        groups.append([members, here, None])
        live = members - here
    for k in range(len(groups) - 1):
        groups[k][2] = k + 1
    cards = {v: diagram.card(v) for v in graph.vertices}
    return _assemble([tuple(g) for g in groups], position, cards, diagram.order, "chain")


def value_set_pattern(req: RequisiteResult) -> str:
    """'nested', 'branching', or 'other' for the V_1..V_m sequence."""
    v = req.value_sets
    if all(v[i] >= v[i + 1] for i in range(len(v) - 1)):
        return "nested"
    for i in range(len(v) - 1):
        if not v[i] >= v[i + 1] and v[i] & v[i + 1]:
            return "other"
    return "branching"


# relations ------------------------------------------------------------------

RELATION_PRIORITY = (
    "strictly_inward",
    "strictly_outward",
    "weakly_inward",
    "weakly_outward",
    "co_clustered_only",
    "incomparable",
)


@dataclass(frozen=True)
class InwardRelation:
    strongest: str
    labels: frozenset[str]
    co_clustered: bool

    def __contains__(self, label: str) -> bool:
        return label in self.labels


def _covers(tree: RootedClusterTree, inner: Iterable[int], outer: Iterable[int], weak: bool) -> bool:
    inner = set(inner)
    for c in outer:
        if weak and c in inner:
            continue
        if not any(a in inner for a in tree.path_to_root(c)[1:]):
            return False
    return True


def strictly_inward(tree: RootedClusterTree, x: str, y: str) -> bool:
    """Every cluster with ``y`` is outward of some cluster with ``x``."""
    return _covers(tree, tree.clusters_with(x), tree.clusters_with(y), weak=False)


def weakly_inward(tree: RootedClusterTree, x: str, y: str) -> bool:
    """Every cluster with ``y`` contains ``x`` or is outward of a cluster with ``x``."""
    return _covers(tree, tree.clusters_with(x), tree.clusters_with(y), weak=True)


def co_clustered(tree: RootedClusterTree, x: str, y: str) -> bool:
    return bool(set(tree.clusters_with(x)) & set(tree.clusters_with(y)))


def inward_relation(tree: RootedClusterTree, x: str, y: str) -> InwardRelation:
    """How ``x`` sits relative to ``y``: e.g. 'strictly_inward' means x is strictly inward of y."""
    labels = set()
    if strictly_inward(tree, x, y):
        labels.add("strictly_inward")
    if strictly_inward(tree, y, x):
        labels.add("strictly_outward")
    if weakly_inward(tree, x, y):
        labels.add("weakly_inward")
    if weakly_inward(tree, y, x):
        labels.add("weakly_outward")
    co = co_clustered(tree, x, y)
    if not labels:
        labels.add("co_clustered_only" if co else "incomparable")
    strongest = next(lbl for lbl in RELATION_PRIORITY if lbl in labels)
    return InwardRelation(strongest, frozenset(labels), co)


# proper construction ---------------------------------------------------------

CONDITIONS = ("1", "2", "3", "4", "5", "lemma1", "structure")


@dataclass(frozen=True)
class ProperConstructionReport:
    failures: dict[str, tuple[tuple[str, ...], ...]] = field(default_factory=dict)

    def passed(self, condition: str) -> bool:
        return not self.failures.get(condition)

    @property
    def ok(self) -> bool:
        return all(self.passed(c) for c in CONDITIONS)

    def summary(self) -> str:
        return ", ".join(f"{c}:{'pass' if self.passed(c) else 'FAIL'}" for c in CONDITIONS)


def check_structure(tree: RootedClusterTree, diagram: InfluenceDiagram) -> list[tuple[str, ...]]:
    problems: list[tuple[str, ...]] = []
    for v in diagram.nonvalue:
        if v not in tree.containing:
            problems.append(("missing", v))
    for v in diagram.variables:
        if v.kind == "decision":
            continue
        fam = set(v.parents) | ({v.name} if v.kind == "chance" else set())
        if fam and not any(fam <= set(c.variables) for c in tree.clusters):
            problems.append(("family", v.name))
    for v, cs in tree.containing.items():
        # clusters holding v must form a connected subtree: exactly one top
        tops = [c for c in cs if tree[c].parent is None or v not in tree[tree[c].parent].variables]
        if len(tops) != 1:
            problems.append(("running_intersection", v))
    return problems


def check_proper(
    tree: RootedClusterTree, diagram: InfluenceDiagram, req: RequisiteResult | None = None
) -> ProperConstructionReport:
    req = req or requisite_observations(diagram)
    fails: dict[str, list[tuple[str, ...]]] = {c: [] for c in CONDITIONS}
    fails["structure"] = check_structure(tree, diagram)
    if fails["structure"]:
        return ProperConstructionReport({k: tuple(v) for k, v in fails.items()})
    decisions = diagram.decisions
    idx = {d: i for i, d in enumerate(decisions)}
    for d in decisions:
        for e in decisions:
            if d != e and strictly_inward(tree, d, e) and not idx[d] < idx[e]:
                fails["1"].append((d, e))
        for a in sorted(diagram.descendants(d), key=diagram.order.get):
            if diagram[a].kind == "chance" and not weakly_inward(tree, d, a):
                fails["2"].append((d, a))
        seen = diagram.observed_before(d)
        for a in sorted(seen, key=diagram.order.get):
            if strictly_inward(tree, d, a):
                fails["3"].append((d, a))
        need = set(req.of(d)) | {d}
        if not any(need <= set(c.variables) for c in tree.clusters):
            fails["4"].append((d,))
        mates = sorted({v for c in tree.clusters_with(d) for v in tree[c].variables} - {d}, key=diagram.order.get)
        for a in mates:
            if a not in seen and strictly_inward(tree, a, d):
                fails["5"].append((d, a))
        top = tree.inwardmost(d)
        if not set(req.of(d)) <= set(tree[top].variables):
            fails["lemma1"].append((d,))
    return ProperConstructionReport({k: tuple(v) for k, v in fails.items()})


def construct_tree(
    diagram: InfluenceDiagram, req: RequisiteResult | None = None, method: str = "auto"
) -> RootedClusterTree:
    """Build a properly constructed tree.

    ``auto`` tries strong elimination in information order, then the stage
    chain; ``strong`` and ``chain`` force one of them.
    """
    require_valid(diagram)
    req = req or requisite_observations(diagram)
    cards = {v: diagram.card(v) for v in diagram.nonvalue}
    if method not in ("auto", "strong", "chain"):
        raise ValueError(f"unknown tree method {method!r}")
    candidates = ("strong", "chain") if method == "auto" else (method,)
    report = None
    for name in candidates:
        if name == "chain":
            tree = fallback_chain_tree(diagram, req)
        else:
            tree = build_tree(moral_graph(diagram, req), elimination_ranks(diagram), diagram.order, cards, method=name)
        report = check_proper(tree, diagram, req)
        if report.ok:
            return tree
    raise ImproperTree(f"no properly constructed tree found ({report.summary()})")
