"""Reading and writing influence diagrams.

File format, one statement per declaration::

    chance   <name> { states: s1, s2 ; parents: p1, p2 ; cpt: v1 v2 ... }
    decision <name> { states: s1, s2 }
    value    <name> { parents: p1, p2 ; table: v1 v2 ... }
    observe  <name> before <decision>

Tables are row-major with the first-listed parent varying slowest and, for
CPTs, the variable's own state varying fastest. ``#`` starts a comment.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from math import prod
from typing import Any, Iterator

from .errors import IDVoiError
from .model import InfluenceDiagram, Variable
from .potential import PolicyTable
from .treebuild import MoralGraph, RootedClusterTree

KEYWORDS = ("chance", "decision", "value", "observe")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}:;,])
  | (?P<bad>.)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: SourceSpan

    def __str__(self) -> str:
        return f"{self.span}: {self.code}: {self.message}"


class ParseError(IDVoiError, ValueError):
    code = "parse_error"

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan
    line_start: bool


def tokenize(text: str) -> Iterator[Token]:
    line, col, fresh = 1, 1, True
    for m in _TOKEN_RE.finditer(text):
        kind, value = m.lastgroup, m.group()
        span = SourceSpan(line, col)
        if kind == "nl":
            line, col, fresh = line + 1, 1, True
            continue
        col += len(value)
        if kind in ("ws", "comment"):
            continue
        yield Token(kind, value, span, fresh)
        fresh = False
    yield Token("eof", "", SourceSpan(line, col), True)


class _Syntax(Exception):
    def __init__(self, message: str, span: SourceSpan):
        self.message, self.span = message, span


@dataclass
class _Decl:
    kind: str
    name: str
    span: SourceSpan
    fields: dict[str, tuple[list[Token], SourceSpan]]


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(tokenize(text))
        self.i = 0
        self.diags: list[Diagnostic] = []

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            want = repr(text) if text else kind
            raise _Syntax(f"expected {want}, found {t.text or 'end of input'!r}", t.span)
        return self.advance()

    def recover(self, start: int) -> None:
        if self.i == start:
            self.advance()
        while self.tok.kind != "eof" and not (self.tok.line_start and self.tok.text in KEYWORDS):
            self.advance()

    def statements(self) -> Iterator[Any]:
        while self.tok.kind != "eof":
            start = self.i
            try:
                yield self.statement()
            except _Syntax as e:
                self.diags.append(Diagnostic("syntax_error", e.message, e.span))
                self.recover(start)

    def statement(self):
        t = self.expect("name")
        if t.text == "observe":
            x = self.expect("name")
            self.expect("name", "before")
            d = self.expect("name")
            return ("observe", x, d)
        if t.text not in ("chance", "decision", "value"):
            raise _Syntax(f"unknown statement {t.text!r}", t.span)
        name = self.expect("name")
        self.expect("punct", "{")
        fields: dict[str, tuple[list[Token], SourceSpan]] = {}
        allowed = {
            "chance": ("states", "parents", "cpt"),
            "decision": ("states",),
            "value": ("parents", "table"),
        }[t.text]
        while not (self.tok.kind == "punct" and self.tok.text == "}"):
            key = self.expect("name")
            if key.text not in allowed:
                raise _Syntax(f"{t.text} does not take field {key.text!r}", key.span)
            if key.text in fields:
                raise _Syntax(f"field {key.text!r} given twice", key.span)
            self.expect("punct", ":")
            span = self.tok.span
            items: list[Token] = []
            while not (self.tok.kind == "punct" and self.tok.text in ";}"):
                if self.tok.kind == "eof":
                    raise _Syntax("unterminated block", self.tok.span)
                if self.tok.kind == "punct" and self.tok.text == ",":
                    self.advance()
                    continue
                if self.tok.kind not in ("name", "number"):
                    raise _Syntax(f"unexpected {self.tok.text!r}", self.tok.span)
                items.append(self.advance())
            fields[key.text] = (items, span)
            if self.tok.text == ";":
                self.advance()
        self.expect("punct", "}")
        return _Decl(t.text, name.text, name.span, fields)


def parse(text: str) -> InfluenceDiagram:
    """Parse diagram text; raises :class:`ParseError` carrying every diagnostic found."""
    p = _Parser(text)
    decls: list[_Decl] = []
    observes: list[tuple[Token, Token]] = []
    for st in p.statements():
        if isinstance(st, _Decl):
            decls.append(st)
        else:
            observes.append((st[1], st[2]))
    diags = p.diags

    seen: dict[str, _Decl] = {}
    for d in decls:
        if d.name in seen:
            diags.append(Diagnostic("duplicate_variable", f"{d.name} already declared", d.span))
        else:
            seen[d.name] = d

    def names(d: _Decl, key: str) -> list[str]:
        return [t.text for t in d.fields.get(key, ([], d.span))[0]]

    variables: list[Variable] = []
    for d in seen.values():
        states = tuple(names(d, "states"))
        parents = tuple(names(d, "parents"))
        table = None
        key = {"chance": "cpt", "value": "table"}.get(d.kind)
        if key:
            items, span = d.fields.get(key, ([], d.span))
            bad = [t for t in items if t.kind != "number"]
            if bad:
                diags.append(Diagnostic("syntax_error", f"{bad[0].text!r} is not a number", bad[0].span))
                continue
            table = tuple(float(t.text) for t in items)
            unknown = [(q, t) for q, t in zip(parents, d.fields.get("parents", ([], d.span))[0]) if q not in seen]
            for q, t in unknown:
                diags.append(Diagnostic("unknown_variable", f"{d.name} has unknown parent {q}", t.span))
            # a value-node parent is reported by validation, not as an arity error
            if not unknown and all(seen[q].kind != "value" for q in parents):
                n_own = len(states) if d.kind == "chance" else 1
                expected = n_own * prod(len(names(seen[q], "states")) for q in parents)
                if len(table) != expected:
                    diags.append(Diagnostic(
                        "arity_mismatch", f"{d.name} needs {expected} numbers, got {len(table)}", span))
        if d.kind != "value" and not states:
            diags.append(Diagnostic("syntax_error", f"{d.name} declares no states", d.span))
        variables.append(Variable(d.name, d.kind, states, parents, table))

    observations = []
    for x, dec in observes:
        for t in (x, dec):
            if t.text not in seen:
                diags.append(Diagnostic("unknown_variable", f"unknown variable {t.text}", t.span))
        observations.append((x.text, dec.text))

    if diags:
        diags.sort(key=lambda g: (g.span.line, g.span.column))
        raise ParseError(diags)
    return InfluenceDiagram(tuple(variables), tuple(observations))


def parse_file(path) -> InfluenceDiagram:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def _num(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e16 else repr(x)


def format_diagram(diagram: InfluenceDiagram) -> str:
    lines = []
    for v in diagram.variables:
        parts = []
        if v.kind != "value":
            parts.append("states: " + ", ".join(v.states))
        if v.kind != "decision" and v.parents:
            parts.append("parents: " + ", ".join(v.parents))
        if v.table is not None:
            key = "cpt" if v.kind == "chance" else "table"
            parts.append(f"{key}: " + " ".join(_num(x) for x in v.table))
        lines.append(f"{v.kind} {v.name} {{ " + " ; ".join(parts) + " }")
    for x, d in diagram.observations:
        lines.append(f"observe {x} before {d}")
    return "\n".join(lines) + "\n"


# DOT ---------------------------------------------------------------------------

_SHAPES = {"chance": "ellipse", "decision": "box", "value": "diamond"}


def diagram_dot(diagram: InfluenceDiagram) -> str:
    out = ["digraph influence_diagram {"]
    for v in diagram.variables:
        out.append(f"  {v.name} [shape={_SHAPES[v.kind]}];")
    for v in diagram.variables:
        for p in v.parents:
            out.append(f"  {p} -> {v.name};")
    for x, d in diagram.observations:
        out.append(f"  {x} -> {d} [style=dotted];")
    out.append("}")
    return "\n".join(out) + "\n"


def moral_dot(graph: MoralGraph, diagram: InfluenceDiagram) -> str:
    order = diagram.order
    out = ["graph moral {"]
    for v in graph.vertices:
        out.append(f"  {v} [shape={_SHAPES[diagram[v].kind]}];")
    style = {"original": "", "informational": " [penwidth=3]", "moralizing": " [style=dashed]"}
    edges = sorted((tuple(sorted(e, key=order.get)), tag) for e, tag in graph.edges.items())
    edges.sort(key=lambda et: (order[et[0][0]], order[et[0][1]]))
    for (a, b), tag in edges:
        out.append(f"  {a} -- {b}{style[tag]};")
    out.append("}")
    return "\n".join(out) + "\n"


def tree_dot(tree: RootedClusterTree) -> str:
    out = ["digraph cluster_tree {"]
    for c in tree.clusters:
        shape = "doubleoctagon" if c.id == tree.root else "box"
        out.append(f'  c{c.id} [shape={shape}, label="{", ".join(c.variables)}"];')
    for c in tree.clusters:
        if c.parent is not None:
            out.append(f'  c{c.id} -> c{c.parent} [label="{", ".join(c.separator)}"];')
    out.append("}")
    return "\n".join(out) + "\n"


def export_dot(obj, diagram: InfluenceDiagram | None = None) -> str:
    if isinstance(obj, InfluenceDiagram):
        return diagram_dot(obj)
    if isinstance(obj, RootedClusterTree):
        return tree_dot(obj)
    if isinstance(obj, MoralGraph):
        if diagram is None:
            raise TypeError("moral graph export needs the diagram for node shapes")
        return moral_dot(obj, diagram)
    raise TypeError(f"cannot export {type(obj).__name__}")


# JSON --------------------------------------------------------------------------


def policy_mapping(policy: PolicyTable, diagram: InfluenceDiagram) -> dict[str, str]:
    from .propagate import policy_rows

    return dict(policy_rows(policy, diagram))


def _as_table(decision: str, policy) -> PolicyTable:
    # oracle policies are (context, choice array) pairs
    if isinstance(policy, PolicyTable):
        return policy
    context, choice = policy
    return PolicyTable(decision, tuple(context), tuple(choice.shape), choice)


def result_dict(result, diagram: InfluenceDiagram) -> dict[str, Any]:
    if hasattr(result, "query"):
        return {
            "meu": result.value_with_change,
            "prob_evidence": result.prob_evidence,
            "policies": {},
            "query": result.query.label,
            "value_with_change": result.value_with_change,
            "baseline": result.baseline_meu,
            "delta": result.delta,
            "shortcut": result.shortcut,
            "fallback": result.fallback,
            "clusters_recomputed": result.clusters_recomputed,
            "per_case_count": result.per_case_count,
        }
    order = {d: i for i, d in enumerate(diagram.decisions)}
    policies = {
        d: policy_mapping(_as_table(d, result.policies[d]), diagram)
        for d in sorted(result.policies, key=order.get)
    }
    return {"meu": result.meu, "prob_evidence": result.prob_evidence, "policies": policies}


def serialize_result(result, diagram: InfluenceDiagram) -> str:
    """Canonical JSON for a solve or value-of-information result."""
    if isinstance(result, list):
        return json.dumps([result_dict(r, diagram) for r in result], indent=2) + "\n"
    return json.dumps(result_dict(result, diagram), indent=2) + "\n"
