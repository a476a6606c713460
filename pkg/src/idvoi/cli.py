"""Command-line front end.

Exit codes: 0 success, 1 parse error, 2 invalid diagram, 3 illegal query,
4 internal failure (for example no properly constructed tree).
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .errors import (
    ConflictingObservation,
    IDVoiError,
    IllegalObservation,
    InvalidDiagram,
    UnknownVariable,
)
from .io import ParseError, export_dot, parse_file, result_dict, serialize_result
from .model import InfluenceDiagram, require_valid
from .oracle import oracle_modified_value, oracle_value
from .propagate import compile_diagram, solve, sweep
from .relevance import requisite_observations
from .treebuild import check_proper, construct_tree, fallback_chain_tree, moral_graph
from .voi import VoiQuery, VoiResult, legality, run_query, voi_queries, voi_report

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_QUERY, EXIT_INTERNAL = range(5)


def _fmt(x: float | None) -> str:
    return "undefined" if x is None else f"{x:.10g}"


def _evidence(diagram: InfluenceDiagram, items: Sequence[str]) -> dict[str, str]:
    out = {}
    for item in items or ():
        var, sep, state = item.partition("=")
        if not sep:
            raise IllegalObservation(f"evidence {item!r} is not VAR=state")
        if var not in diagram:
            raise UnknownVariable(f"unknown variable {var!r}", var)
        if state not in diagram[var].states:
            raise IllegalObservation(f"{var} has no state {state!r}", var)
        out[var] = state
    return out


def _print_solve(result, diagram: InfluenceDiagram, as_json: bool) -> None:
    if as_json:
        sys.stdout.write(serialize_result(result, diagram))
        return
    print(f"MEU          {_fmt(result.meu)}")
    print(f"P(evidence)  {_fmt(result.prob_evidence)}")
    for d, rows in result_dict(result, diagram)["policies"].items():
        print(f"policy {d}")
        for ctx, choice in rows.items():
            print(f"  {ctx or '(always)'} -> {choice}")


def _print_voi(results: list[VoiResult], diagram: InfluenceDiagram, as_json: bool) -> None:
    if as_json:
        sys.stdout.write(serialize_result(results if len(results) != 1 else results[0], diagram))
        return
    header = ("query", "baseline", "value", "delta", "shortcut", "fallback", "clusters", "cases")
    rows = [
        (r.query.label, _fmt(r.baseline_meu), _fmt(r.value_with_change), _fmt(r.delta),
         "yes" if r.shortcut else "no", "yes" if r.fallback else "no",
         str(r.clusters_recomputed), str(r.per_case_count))
        for r in results
    ]
    widths = [max(len(row[k]) for row in rows + [header]) for k in range(len(header))]
    for row in [header] + rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    if len(results) > 1:
        print(f"total clusters recomputed: {sum(r.clusters_recomputed for r in results)}")


def _queries(args, diagram: InfluenceDiagram) -> list[VoiQuery] | None:
    if args.all:
        return None
    if args.observe:
        if not args.before:
            raise IllegalObservation("--observe needs --before")
        return [VoiQuery("advance", args.observe, args.before)]
    if not args.decision:
        raise IllegalObservation("--delay needs --decision")
    return [VoiQuery("delay", args.delay, args.decision)]


def cmd_solve(args) -> int:
    diagram = require_valid(parse_file(args.file))
    evidence = _evidence(diagram, args.evidence)
    result, _ = solve(diagram, evidence, method=args.method)
    _print_solve(result, diagram, args.json)
    return EXIT_OK


def cmd_requisite(args) -> int:
    diagram = require_valid(parse_file(args.file))
    req = requisite_observations(diagram)
    order = diagram.order
    for i in range(len(diagram.decisions), 0, -1):
        d = diagram.decisions[i - 1]
        names = ", ".join(sorted(req.of(d), key=order.get))
        print(f"R{i} ({d}) = {{{names}}}")
    return EXIT_OK


def cmd_tree(args) -> int:
    diagram = require_valid(parse_file(args.file))
    req = requisite_observations(diagram)
    tree = fallback_chain_tree(diagram, req) if args.fallback_chain else construct_tree(diagram, req)
    report = check_proper(tree, diagram, req)
    print(f"method {tree.method}, root {tree.root}, max table {tree.max_table_size}")
    for c in tree.clusters:
        inward = "root" if c.parent is None else f"-> {c.parent}"
        print(f"  C{c.id} {{{', '.join(c.variables)}}} {inward}; eliminates {', '.join(c.eliminate) or '-'}")
    print(f"proper construction: {report.summary()}")
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(export_dot(tree))
    if args.moral_dot:
        with open(args.moral_dot, "w", encoding="utf-8") as fh:
            fh.write(export_dot(moral_graph(diagram, req), diagram))
    return EXIT_OK if report.ok else EXIT_INTERNAL


def cmd_voi(args) -> int:
    diagram = require_valid(parse_file(args.file))
    ctx = compile_diagram(diagram)
    sweep(ctx)
    queries = _queries(args, diagram)
    results = voi_report(ctx) if queries is None else [run_query(ctx, q) for q in queries]
    _print_voi(results, diagram, args.json)
    return EXIT_OK


def cmd_oracle_solve(args) -> int:
    diagram = require_valid(parse_file(args.file))
    evidence = {
        var: [1.0 if s == state else 0.0 for s in diagram[var].states]
        for var, state in _evidence(diagram, args.evidence).items()
    }
    res = oracle_value(diagram, evidence)
    _print_solve(res, diagram, args.json)
    return EXIT_OK


def cmd_oracle_voi(args) -> int:
    diagram = require_valid(parse_file(args.file))
    base = oracle_value(diagram).meu
    queries = _queries(args, diagram)
    if queries is None:
        queries = voi_queries(diagram)
    results = []
    for q in queries:
        verdict = legality(diagram, q.kind, q.variable, q.decision)
        if not verdict:
            raise IllegalObservation(f"{q.label} is illegal: {verdict.reason}", q.variable)
        value = oracle_modified_value(diagram, q.kind, q.variable, q.decision)
        results.append(VoiResult(q, base, value))
    _print_voi(results, diagram, args.json)
    return EXIT_OK


def _voi_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--observe", metavar="B", help="observe B earlier")
    group.add_argument("--delay", metavar="A", help="observe A one decision later")
    group.add_argument("--all", action="store_true", help="every legal advance and delay")
    p.add_argument("--before", metavar="D")
    p.add_argument("--decision", metavar="D")
    p.add_argument("--json", action="store_true")


def _solve_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("file")
    p.add_argument("--evidence", action="append", metavar="VAR=state", default=[])
    p.add_argument("--json", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="idvoi", description="Influence diagrams and value of information.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="maximal expected utility and policies")
    _solve_flags(p)
    p.add_argument("--method", choices=("auto", "strong", "chain"), default="auto")
    p.set_defaults(run=cmd_solve)

    p = sub.add_parser("requisite", help="requisite observations per decision")
    p.add_argument("file")
    p.set_defaults(run=cmd_requisite)

    p = sub.add_parser("tree", help="rooted cluster tree and its checks")
    p.add_argument("file")
    p.add_argument("--dot", metavar="OUT", help="write the tree as DOT")
    p.add_argument("--moral-dot", metavar="OUT", help="write the moral graph as DOT")
    p.add_argument("--fallback-chain", action="store_true", help="use the stage chain tree")
    p.set_defaults(run=cmd_tree)

    p = sub.add_parser("voi", help="value of information on the solved tree")
    _voi_flags(p)
    p.set_defaults(run=cmd_voi)

    p = sub.add_parser("oracle", help="brute-force mirrors of solve and voi")
    osub = p.add_subparsers(dest="oracle_command", required=True)
    q = osub.add_parser("solve")
    _solve_flags(q)
    q.set_defaults(run=cmd_oracle_solve)
    q = osub.add_parser("voi")
    _voi_flags(q)
    q.set_defaults(run=cmd_oracle_voi)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except ParseError as e:
        for diag in e.diagnostics:
            print(f"{args.file}:{diag}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (InvalidDiagram, ConflictingObservation) as e:
        print(f"invalid diagram: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (IllegalObservation, UnknownVariable) as e:
        print(f"illegal query: {e}", file=sys.stderr)
        return EXIT_QUERY
    except IDVoiError as e:
        print(f"internal error [{e.code}]: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
