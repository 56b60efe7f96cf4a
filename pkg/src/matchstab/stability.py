"""Node measures, edge weights and the Hall-type stability-region tests.

Every test works on exact rationals. Subset enumeration is done on bitmasks with
the measure scaled to integers by its common denominator, so comparisons are
plain integer comparisons.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from ._util import common_scale, edge_label, frac_str, to_fraction
from .errors import InputError
from .graph import Multigraph, Node, _guard, bipartition, independent_set_masks


class NodeMeasure(Mapping):
    """Exact measure on nodes. Values must be positive unless ``allow_zero``."""

    __slots__ = ("_values", "total")

    def __init__(self, values: Mapping | Iterable, allow_zero: bool = False):
        items = values.items() if isinstance(values, Mapping) else values
        vals = {}
        for k, x in items:
            f = to_fraction(x)
            if f < 0 or (f == 0 and not allow_zero):
                raise InputError(f"measure must be positive on every node, got {k!r}: {f}")
            vals[k] = f
        self._values = vals
        self.total = sum(vals.values(), Fraction(0))

    def __getitem__(self, k):
        return self._values[k]

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def mass(self, nodes: Iterable[Node]) -> Fraction:
        return sum((self._values[v] for v in nodes), Fraction(0))

    def restrict(self, nodes: Iterable[Node]) -> "NodeMeasure":
        return NodeMeasure({v: self._values[v] for v in nodes})

    def scaled(self, c) -> "NodeMeasure":
        c = to_fraction(c)
        return NodeMeasure({k: c * v for k, v in self._values.items()}, allow_zero=True)

    def to_json(self) -> dict:
        return {str(k): frac_str(v) for k, v in self._values.items()}

    def __repr__(self):
        body = ", ".join(f"{k!r}: {v}" for k, v in self._values.items())
        return f"NodeMeasure({{{body}}})"


class EdgeWeights(Mapping):
    """Symmetric family of weights keyed on the edges of a given graph.

    Lookups accept either orientation of an edge. In ``"strict"`` mode all values
    must be > 0, in ``"nonnegative"`` mode >= 0. Values are Fractions, except for
    empirical weights which may be floats.
    """

    __slots__ = ("graph", "mode", "_values")

    def __init__(self, graph: Multigraph, values: Mapping, mode: str = "strict"):
        if mode not in ("strict", "nonnegative"):
            raise InputError(f"unknown positivity mode {mode!r}")
        vals = {}
        for (u, v), x in values.items():
            key = graph.edge_key(u, v)
            if key in vals:
                raise InputError(f"edge {u!r}-{v!r} given twice")
            x = x if isinstance(x, float) else to_fraction(x)
            if x < 0 or (x == 0 and mode == "strict"):
                raise InputError(f"weight on {u!r}-{v!r} violates {mode} positivity: {x}")
            vals[key] = x
        missing = [e for e in graph.edges if e not in vals]
        if missing:
            raise InputError(f"no weight for edge(s) {missing!r}")
        self.graph = graph
        self.mode = mode
        self._values = {e: vals[e] for e in graph.edges}

    def __getitem__(self, key):
        u, v = key
        return self._values[self.graph.edge_key(u, v)]

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def scaled(self, c) -> "EdgeWeights":
        c = to_fraction(c)
        return EdgeWeights(self.graph, {e: c * x for e, x in self._values.items()}, self.mode)

    def to_json(self) -> dict:
        out = {}
        for (u, v), x in self._values.items():
            out[edge_label(u, v)] = x if isinstance(x, float) else frac_str(x)
        return out

    def __eq__(self, other):
        if isinstance(other, EdgeWeights):
            return self.graph == other.graph and dict(self._values) == {
                self.graph.edge_key(*e): x for e, x in other._values.items()
            }
        return Mapping.__eq__(self, other)

    __hash__ = None

    def __repr__(self):
        body = ", ".join(f"{u}-{v}: {x}" for (u, v), x in self._values.items())
        return f"EdgeWeights({{{body}}}, mode={self.mode!r})"


def as_measure(g: Multigraph, mu, allow_zero: bool = False) -> NodeMeasure:
    """Coerce ``mu`` to a NodeMeasure whose support is exactly the node set of ``g``."""
    if not isinstance(mu, NodeMeasure):
        mu = NodeMeasure(mu, allow_zero=allow_zero)
    extra = [k for k in mu if k not in g._index]
    if extra:
        raise InputError(f"measure given on unknown node(s) {extra!r}")
    missing = [v for v in g.nodes if v not in mu]
    if missing:
        raise InputError(f"measure lacks node(s) {missing!r}; full support is required")
    return mu


def as_weights(g: Multigraph, alpha, mode: str = "strict") -> EdgeWeights:
    if isinstance(alpha, EdgeWeights) and alpha.graph == g:
        return alpha
    return EdgeWeights(g, dict(alpha.items()), mode)


# ---------------------------------------------------------------------------

def weighted_measure(g: Multigraph, alpha) -> NodeMeasure:
    """Node measure ``i -> sum of alpha over edges at i``; a self-loop counts once."""
    alpha = as_weights(g, alpha, getattr(alpha, "mode", "strict"))
    acc = {v: Fraction(0) for v in g.nodes}
    for (u, v), x in alpha.items():
        acc[u] += x
        if u != v:
            acc[v] += x
    return NodeMeasure(acc, allow_zero=alpha.mode == "nonnegative")


def normalize(mu) -> NodeMeasure:
    mu = mu if isinstance(mu, NodeMeasure) else NodeMeasure(mu)
    if mu.total == 0:
        raise InputError("cannot normalize the null measure")
    return NodeMeasure({k: v / mu.total for k, v in mu.items()}, allow_zero=True)


def tilde_marginals(g: Multigraph, mu) -> tuple[NodeMeasure, NodeMeasure]:
    """Per-side normalizations of ``mu`` on a bipartite graph."""
    bp = _require_bipartite(g)
    mu = as_measure(g, mu)
    side1 = [v for v in g.nodes if v in bp.part1]
    side2 = [v for v in g.nodes if v in bp.part2]
    t1, t2 = mu.mass(side1), mu.mass(side2)
    return (NodeMeasure({v: mu[v] / t1 for v in side1}),
            NodeMeasure({v: mu[v] / t2 for v in side2}))


# ---------------------------------------------------------------------------
# region checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    subset: frozenset
    mu_U: Fraction
    mu_EU: Fraction

    @property
    def slack(self) -> Fraction:
        return self.mu_U - self.mu_EU

    def to_json(self) -> dict:
        return {"subset": sorted(map(str, self.subset)),
                "mu_U": frac_str(self.mu_U), "mu_EU": frac_str(self.mu_EU)}


@dataclass(frozen=True)
class RegionVerdict:
    member: bool
    violation: Violation | None = None
    witness: EdgeWeights | None = None

    def __bool__(self):
        return self.member

    def to_json(self) -> dict:
        return {"member": self.member,
                "violation": self.violation.to_json() if self.violation else None}


class _Scaled:
    """Integer-scaled measure with subset sums and neighborhoods tabulated over all masks."""

    def __init__(self, g: Multigraph, mu: NodeMeasure):
        self.g = g
        self.den, w = common_scale(mu[v] for v in g.nodes)
        size = 1 << g.n
        sums = [0] * size
        nbrs = [0] * size
        for mask in range(1, size):
            low = mask & -mask
            k = low.bit_length() - 1
            rest = mask ^ low
            sums[mask] = sums[rest] + w[k]
            nbrs[mask] = nbrs[rest] | g.neighbor_mask(k)
        self.sums = sums
        self.nbrs = nbrs


def _best_violation(g: Multigraph, mu: NodeMeasure, masks: Iterable[int]) -> RegionVerdict:
    """Scan candidate subsets; member iff every one has mu(U) < mu(E(U))."""
    sc = _Scaled(g, mu)
    sums, nbrs = sc.sums, sc.nbrs
    best = None
    for mask in masks:
        slack = sums[mask] - sums[nbrs[mask]]
        if slack < 0:
            continue
        key = (-slack, tuple(k for k in range(g.n) if mask >> k & 1))
        if best is None or key < best[0]:
            best = (key, mask)
    if best is None:
        return RegionVerdict(True)
    mask = best[1]
    return RegionVerdict(False, Violation(
        g.subset(mask),
        Fraction(sums[mask], sc.den),
        Fraction(sums[nbrs[mask]], sc.den)))


def _all_proper_masks(g: Multigraph):
    return range(1, (1 << g.n) - 1)


def check_ncond(g: Multigraph, mu) -> RegionVerdict:
    """``mu(U) < mu(E(U))`` for every nonempty proper subset ``U``.

    On failure the violation is the subset maximizing ``mu(U) - mu(E(U))``
    (ties: smallest sorted index tuple). A zero-slack subset counts as a
    violation, the region being open.
    """
    _guard(g)
    mu = as_measure(g, mu)
    return _best_violation(g, mu, _all_proper_masks(g))


def check_ncond_independent(g: Multigraph, mu) -> RegionVerdict:
    """Same condition restricted to independent sets."""
    mu = as_measure(g, mu)
    return _best_violation(g, mu, independent_set_masks(g))


def _require_bipartite(g: Multigraph):
    bp = bipartition(g)
    if bp is None:
        raise InputError("graph is not bipartite")
    return bp


def _proper_submasks(full: int):
    sub = (full - 1) & full
    while sub:
        yield sub
        sub = (sub - 1) & full


def check_ncond_bipartite(g: Multigraph, mu) -> RegionVerdict:
    """Bipartite region: balanced sides and the strict condition on proper subsets of each side."""
    _guard(g)
    bp = _require_bipartite(g)
    mu = as_measure(g, mu)
    m1, m2 = g.mask(bp.part1), g.mask(bp.part2)
    candidates = list(_proper_submasks(m1)) + list(_proper_submasks(m2))
    b1, b2 = mu.mass(bp.part1), mu.mass(bp.part2)
    if b1 > b2:
        candidates.append(m1)
    elif b2 > b1:
        candidates.append(m2)
    return _best_violation(g, mu, candidates)


def _check_partition(g: Multigraph, v1) -> frozenset:
    v1 = frozenset(v1)
    for v in v1:
        g.index(v)
    if not v1 or len(v1) == g.n:
        raise InputError("partition (V1, V2) must be nontrivial")
    return v1


def check_ncond_asym(g: Multigraph, v1, mu) -> RegionVerdict:
    """``mu(U1) < mu(E(U1))`` for every nonempty ``U1`` included in ``v1`` (``v1`` itself included)."""
    _guard(g)
    v1 = _check_partition(g, v1)
    mu = as_measure(g, mu)
    full = g.mask(v1)
    return _best_violation(g, mu, [full, *_proper_submasks(full)])


# ---------------------------------------------------------------------------
# measure files
# ---------------------------------------------------------------------------

def parse_measure(text: str) -> NodeMeasure:
    """Parse ``node value`` lines; values are decimals or ``p/q`` rationals, read exactly."""
    vals = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise InputError(f"line {lineno}: expected 'node value', got {line!r}")
        if parts[0] in vals:
            raise InputError(f"line {lineno}: node {parts[0]!r} given twice")
        vals[parts[0]] = to_fraction(parts[1])
    if not vals:
        raise InputError("measure file is empty")
    return NodeMeasure(vals)


def read_measure(path) -> NodeMeasure:
    with open(path, encoding="utf-8") as fh:
        return parse_measure(fh.read())
