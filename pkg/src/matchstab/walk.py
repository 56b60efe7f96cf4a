"""Weighted random walks on the edges of a multigraph.

A strictly positive weight family ``alpha`` defines the walk
``P(i, j) = alpha_ij / sum_l alpha_il``, which is reversible with respect to the
weighted measure ``mu^alpha``. Conversely a walk reversible with respect to
``mu`` gives back weights ``alpha_ij = mu(i) P(i, j)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from ._util import frac_str, to_fraction
from .errors import InputError, ReversibilityError
from .graph import Multigraph
from .stability import EdgeWeights, as_measure, as_weights


@dataclass(frozen=True)
class EdgeWalk:
    """Transition kernel supported on the (oriented) edges of ``graph``."""

    graph: Multigraph
    transition: dict

    def __post_init__(self):
        g = self.graph
        rows = {v: Fraction(0) for v in g.nodes}
        clean = {}
        for (i, j), p in self.transition.items():
            p = to_fraction(p)
            if p < 0:
                raise InputError(f"negative transition probability {i!r}->{j!r}")
            if p == 0:
                continue
            if not g.has_edge(i, j):
                raise InputError(f"transition {i!r}->{j!r} is not along an edge")
            clean[(i, j)] = p
            rows[i] += p
        for v, s in rows.items():
            if s != 1:
                raise InputError(f"row {v!r} sums to {s}, not 1")
        object.__setattr__(self, "transition", clean)

    def __call__(self, i, j) -> Fraction:
        return self.transition.get((i, j), Fraction(0))

    def step(self, mu: Mapping) -> dict:
        """Exact row-vector product ``mu P``."""
        out = {v: Fraction(0) for v in self.graph.nodes}
        for (i, j), p in self.transition.items():
            out[j] += mu[i] * p
        return out

    def to_json(self) -> dict:
        out: dict = {str(v): {} for v in self.graph.nodes}
        for (i, j), p in self.transition.items():
            out[str(i)][str(j)] = frac_str(p)
        return out

    @classmethod
    def from_json(cls, g: Multigraph, data) -> "EdgeWalk":
        if isinstance(data, str):
            data = json.loads(data)
        names = {str(v): v for v in g.nodes}
        trans = {}
        try:
            for i, row in data.items():
                for j, p in row.items():
                    trans[(names[i], names[j])] = to_fraction(p)
        except KeyError as exc:
            raise InputError(f"unknown node {exc.args[0]!r} in walk") from None
        return cls(g, trans)


def walk_from_weights(g: Multigraph, alpha) -> EdgeWalk:
    """The weighted random walk ``P^alpha``.

    >>> g = Multigraph([(1, 2), (2, 3)])
    >>> P = walk_from_weights(g, {(1, 2): 1, (2, 3): 3})
    >>> P(1, 2), P(2, 1), P(2, 3)
    (Fraction(1, 1), Fraction(1, 4), Fraction(3, 4))
    """
    alpha = as_weights(g, alpha, "strict")
    if alpha.mode != "strict":
        alpha = EdgeWeights(g, dict(alpha.items()), "strict")
    row = {v: Fraction(0) for v in g.nodes}
    for (u, v), x in alpha.items():
        row[u] += x
        if u != v:
            row[v] += x
    trans = {}
    for (u, v), x in alpha.items():
        trans[(u, v)] = x / row[u]
        if u != v:
            trans[(v, u)] = x / row[v]
    return EdgeWalk(g, trans)


def check_detailed_balance(g: Multigraph, p: EdgeWalk, mu) -> tuple[bool, tuple | None]:
    """Exact test of ``mu(i) P(i, j) = mu(j) P(j, i)`` on every edge.

    Returns ``(True, None)`` or ``(False, first offending edge)``. A self-loop
    balances trivially.
    """
    mu = as_measure(g, mu)
    for u, v in g.edges:
        if u != v and mu[u] * p(u, v) != mu[v] * p(v, u):
            return False, (u, v)
    return True, None


def is_stationary(g: Multigraph, p: EdgeWalk, mu) -> bool:
    """Exact test of ``mu P = mu``."""
    mu = as_measure(g, mu)
    return p.step(mu) == dict(mu.items())


def weights_from_reversible(g: Multigraph, p: EdgeWalk, mu) -> EdgeWeights:
    """Weights ``alpha_ij = mu(i) P(i, j)`` of a walk reversible with respect to ``mu``.

    Raises :class:`ReversibilityError` naming the edge where balance fails.
    """
    mu = as_measure(g, mu)
    ok, edge = check_detailed_balance(g, p, mu)
    if not ok:
        u, v = edge
        raise ReversibilityError(
            f"detailed balance fails on edge {u!r}-{v!r}: "
            f"{mu[u] * p(u, v)} != {mu[v] * p(v, u)}", edge=edge)
    return EdgeWeights(g, {(u, v): mu[u] * p(u, v) for u, v in g.edges})
