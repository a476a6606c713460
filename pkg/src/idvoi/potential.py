"""Paired probability/utility potentials.

A :class:`PotentialPair` holds ``phi`` (non-negative probability weights) and
``psi`` (conditional expected utility) over the same discrete scope. Utilities
are kept *conditional*: marginalizing a chance variable divides the
phi-weighted sum of ``psi`` by the new ``phi``, so combining two potentials is
a cellwise product of ``phi`` and a cellwise sum of ``psi``.

Canonical form: wherever ``phi == 0``, ``psi == 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CardinalityMismatch, ImproperTree, InvalidLikelihood, VariableNotInScope

PHI_CONSTANCY_TOL = 1e-9


def _canonical(phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.where(phi == 0, 0.0, psi)


@dataclass(frozen=True, eq=False)
class PotentialPair:
    scope: tuple[str, ...]
    cards: tuple[int, ...]
    phi: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        if len(set(self.scope)) != len(self.scope):
            raise ValueError(f"duplicate variable in scope {self.scope}")
        if len(self.scope) != len(self.cards) or any(c < 1 for c in self.cards):
            raise ValueError("scope and cardinalities disagree")
        shape = tuple(self.cards)
        phi = np.asarray(self.phi, dtype=float).reshape(shape)
        psi = np.asarray(self.psi, dtype=float).reshape(shape)
        if (phi < 0).any():
            raise ValueError("phi must be non-negative")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", _canonical(phi, psi))

    @classmethod
    def unit(cls, scope: Sequence[str] = (), cards: Sequence[int] = ()) -> "PotentialPair":
        shape = tuple(cards)
        return cls(tuple(scope), shape, np.ones(shape), np.zeros(shape))

    @classmethod
    def probability(cls, scope: Sequence[str], table: np.ndarray) -> "PotentialPair":
        table = np.asarray(table, dtype=float)
        return cls(tuple(scope), table.shape, table, np.zeros(table.shape))

    @classmethod
    def utility(cls, scope: Sequence[str], table: np.ndarray) -> "PotentialPair":
        table = np.asarray(table, dtype=float)
        return cls(tuple(scope), table.shape, np.ones(table.shape), table)

    @property
    def size(self) -> int:
        return int(self.phi.size)

    def card_of(self, var: str) -> int:
        return self.cards[self._axis(var)]

    def _axis(self, var: str) -> int:
        try:
            return self.scope.index(var)
        except ValueError:
            raise VariableNotInScope(f"{var} is not in scope {self.scope}", var) from None

    def aligned(self, scope: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        """phi and psi broadcast to ``scope`` (a superset of this scope)."""
        scope = tuple(scope)
        missing = [v for v in self.scope if v not in scope]
        if missing:
            raise VariableNotInScope(f"{missing} not in target scope", *missing)
        perm = sorted(range(len(self.scope)), key=lambda i: scope.index(self.scope[i]))
        phi = np.transpose(self.phi, perm)
        psi = np.transpose(self.psi, perm)
        present = set(self.scope)
        shape = tuple(self.cards[self.scope.index(v)] if v in present else 1 for v in scope)
        return phi.reshape(shape), psi.reshape(shape)

    def reorder(self, scope: Sequence[str]) -> "PotentialPair":
        scope = tuple(scope)
        if set(scope) != set(self.scope) or len(scope) != len(self.scope):
            raise ValueError(f"{scope} is not a permutation of {self.scope}")
        phi, psi = self.aligned(scope)
        return PotentialPair(scope, tuple(self.card_of(v) for v in scope), phi, psi)

    def scalars(self) -> tuple[float, float]:
        if self.scope:
            raise ValueError("potential is not a scalar")
        return float(self.phi), float(self.psi)


def combine(a: PotentialPair, b: PotentialPair) -> PotentialPair:
    """Product of phi and sum of psi over the union scope."""
    scope = a.scope + tuple(v for v in b.scope if v not in a.scope)
    cards = []
    for v in scope:
        ca = a.cards[a.scope.index(v)] if v in a.scope else None
        cb = b.cards[b.scope.index(v)] if v in b.scope else None
        if ca is not None and cb is not None and ca != cb:
            raise CardinalityMismatch(f"{v} has cardinality {ca} and {cb}", v)
        cards.append(ca if ca is not None else cb)
    pa, sa = a.aligned(scope)
    pb, sb = b.aligned(scope)
    shape = tuple(cards)
    phi = np.broadcast_to(pa * pb, shape)
    psi = np.broadcast_to(sa + sb, shape)
    return PotentialPair(scope, shape, phi.copy(), psi.copy())


def sum_marginalize(p: PotentialPair, var: str) -> PotentialPair:
    ax = p._axis(var)
    phi = p.phi.sum(axis=ax)
    num = (p.phi * p.psi).sum(axis=ax)
    with np.errstate(invalid="ignore", divide="ignore"):
        psi = np.where(phi > 0, num / np.where(phi > 0, phi, 1.0), 0.0)
    scope = p.scope[:ax] + p.scope[ax + 1 :]
    cards = p.cards[:ax] + p.cards[ax + 1 :]
    return PotentialPair(scope, cards, phi, psi)


@dataclass(frozen=True, eq=False)
class PolicyTable:
    """Chosen decision state for every assignment of ``context``."""

    decision: str
    context: tuple[str, ...]
    cards: tuple[int, ...]
    choice: np.ndarray

    def lookup(self, assignment: dict[str, int]) -> int:
        return int(self.choice[tuple(assignment[v] for v in self.context)])


def max_marginalize(
    p: PotentialPair, decision: str, tol: float = PHI_CONSTANCY_TOL
) -> tuple[PotentialPair, PolicyTable]:
    """Maximize ``psi`` over a decision; ties go to the lowest state index.

    ``phi`` must not depend on the decision in any cell with positive
    probability. A violation means the cluster tree does not respect
    the information order and raises :class:`ImproperTree`.
    """
    ax = p._axis(decision)
    psi_m = np.moveaxis(p.psi, ax, -1)
    phi_m = np.moveaxis(p.phi, ax, -1)
    choice = np.argmax(psi_m, axis=-1)
    psi = np.take_along_axis(psi_m, choice[..., None], axis=-1)[..., 0]
    phi = np.take_along_axis(phi_m, choice[..., None], axis=-1)[..., 0]
    top = phi_m.max(axis=-1)
    bad = (top > 0) & (top - phi_m.min(axis=-1) > tol * top)
    if bad.any():
        raise ImproperTree(f"probability potential varies with decision {decision}", decision)
    scope = p.scope[:ax] + p.scope[ax + 1 :]
    cards = p.cards[:ax] + p.cards[ax + 1 :]
    return PotentialPair(scope, cards, phi, psi), PolicyTable(decision, scope, cards, choice)


def restrict(p: PotentialPair, var: str, weight: Sequence[float]) -> PotentialPair:
    """Multiply ``phi`` by a likelihood over ``var``'s states."""
    ax = p._axis(var)
    w = np.asarray(weight, dtype=float)
    if w.shape != (p.cards[ax],) or (w < 0).any() or not np.isfinite(w).all() or not (w > 0).any():
        raise InvalidLikelihood(f"bad likelihood {list(weight)} for {var}", var)
    shape = [1] * len(p.scope)
    shape[ax] = p.cards[ax]
    return PotentialPair(p.scope, p.cards, p.phi * w.reshape(shape), p.psi)


def indicator(card: int, index: int) -> np.ndarray:
    w = np.zeros(card)
    w[index] = 1.0
    return w
