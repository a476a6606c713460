from __future__ import annotations

from pathlib import Path

import pytest

from idvoi.generate import random_diagram
from idvoi.io import parse, parse_file
from idvoi.treebuild import Cluster, RootedClusterTree

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

ACCEPTANCE_LINES: list[str] = []


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load(name: str):
    return parse_file(FIXTURES / name)


@pytest.fixture
def umbrella():
    return load("umbrella.id")


@pytest.fixture
def umbrella_observed():
    return load("umbrella_observed.id")


@pytest.fixture
def fig1():
    return load("fig1.id")


@pytest.fixture
def fig3():
    return load("fig3.id")


def diagram_from(text: str):
    return parse(text)


def random_diagrams(n: int, start: int = 0):
    return [(seed, random_diagram(seed)) for seed in range(start, start + n)]


def rel_close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def hand_tree(diagram, spec):
    """Tree from [(variables, parent index)] with cluster 0 as root."""
    cards = {v: diagram.card(v) for v in diagram.nonvalue}
    clusters = []
    for cid, (vs, parent) in enumerate(spec):
        sep = tuple(v for v in vs if parent is not None and v in spec[parent][0])
        children = tuple(k for k, (_, p) in enumerate(spec) if p == cid)
        elim = tuple(v for v in vs if v not in sep)
        clusters.append(Cluster(cid, tuple(vs), parent, children, sep, elim))
    return RootedClusterTree(tuple(clusters), 0, dict(diagram.order), cards, "hand")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
