"""Exact solutions of the balance system ``sum_{j in E(i)} alpha_ij = mu(i)`` on sparse topologies.

Covered graphs: trees, cycles, and trees carrying one extra edge (closing a
cycle, or a self-loop). On these the system is (almost) square, so its solution
is explicit. Trees are solved from the leaves up; a cycle ``c_1 ... c_n`` with
edge ``k`` joining ``c_k`` and ``c_{k+1}`` has solutions
``x_k = b_k + (-1)^(k+1) a`` where the ``b_k`` are alternating partial sums and
``a = x_1``; the closing equation fixes ``a`` when ``n`` is odd and is a
solvability condition when ``n`` is even. Every computation is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from ._util import edge_label, frac_str, to_fraction
from .errors import InputError
from .graph import Multigraph, Topology, bipartition, classify_topology
from .stability import EdgeWeights, NodeMeasure, as_measure, normalize

UNIQUE, NONE, FAMILY = "Unique", "None", "OneParameterFamily"


@dataclass(frozen=True)
class SolutionFamily:
    """Solution set of the balance system.

    ``values`` holds the unique solution (``Unique``) or the base point
    (``OneParameterFamily``, where ``alpha(t) = values + t * direction`` solves
    the system for every ``t``). ``interval`` is the open range of ``t`` keeping
    every weight positive, or ``None`` when that range is empty. For ``None``
    solutions ``witness`` names the failed equation. Values may be zero or
    negative; ``valid`` tells whether they form a strictly positive decomposition.
    """

    kind: str
    graph: Multigraph
    values: dict = field(default_factory=dict)
    direction: dict | None = None
    interval: tuple | None = None
    witness: str = ""

    @property
    def valid(self) -> bool:
        return self.kind != NONE and bool(self.values) and all(x > 0 for x in self.values.values())

    @property
    def weights(self) -> EdgeWeights:
        if not self.valid:
            raise InputError("solution is not a strictly positive decomposition")
        return EdgeWeights(self.graph, self.values)

    def at(self, t) -> dict:
        if self.direction is None:
            raise InputError("not a one-parameter family")
        t = to_fraction(t)
        return {e: x + t * self.direction[e] for e, x in self.values.items()}

    def to_json(self) -> dict:
        def enc(d):
            return {edge_label(u, v): frac_str(x) for (u, v), x in d.items()}
        out = {"kind": self.kind, "weights": None, "family": None, "witness": self.witness or None}
        if self.kind == UNIQUE:
            out["weights"] = enc(self.values)
            out["valid"] = self.valid
        elif self.kind == FAMILY:
            out["family"] = {
                "base": enc(self.values), "direction": enc(self.direction),
                "interval": None if self.interval is None else [frac_str(x) for x in self.interval]}
        return out


def _measure(g: Multigraph, mu) -> dict:
    return dict(as_measure(g, mu).items())


def _tree_part(g: Multigraph, root, allowed, mu: Mapping) -> tuple[dict, Fraction]:
    """Leaf-up solution on the tree spanned by ``root`` and ``allowed``.

    Returns the weights ``{edge: alpha(v, parent(v))}`` and the root residual
    ``mu(root) - sum of the weights at the root``.
    """
    r = g.index(root)
    ok = {g.index(v) for v in allowed} | {r}
    parent = {r: None}
    order = [r]
    for u in order:
        for w in g.adjacency(u):
            if w in ok and w not in parent:
                parent[w] = u
                order.append(w)
    if len(order) != len(ok):
        raise InputError("the given nodes do not span a tree from the root")
    below = {k: Fraction(0) for k in order}
    alpha = {}
    for v in reversed(order[1:]):
        x = mu[g.nodes[v]] - below[v]
        alpha[g.edge_key(g.nodes[v], g.nodes[parent[v]])] = x
        below[parent[v]] += x
    return alpha, mu[root] - below[r]


def _require(g: Multigraph, *tags):
    tc = classify_topology(g)
    if tc.tag not in tags:
        names = ", ".join(t.value for t in tags)
        raise InputError(f"graph is of class {tc.tag.value}; expected {names}")
    return tc


def solve_rooted_tree(g: Multigraph, root, mu) -> dict:
    """Weights satisfying the balance equation at every node except ``root``.

    ``alpha(v, parent(v)) = mu(v) - sum of alpha over the children of v``.
    Values can be zero or negative.

    >>> g = Multigraph([(1, 2), (2, 3)])
    >>> a = solve_rooted_tree(g, 1, {1: Fraction(1, 4), 2: Fraction(1, 2), 3: Fraction(1, 4)})
    >>> a[(2, 3)], a[(1, 2)]
    (Fraction(1, 4), Fraction(1, 4))
    """
    _require(g, Topology.TREE)
    mu = _measure(g, mu)
    g.index(root)
    alpha, _ = _tree_part(g, root, g.nodes, mu)
    return alpha


def alternating_descendant_sums(g: Multigraph, root, mu) -> dict:
    """``alpha(v, parent(v)) = sum over descendants w of v of (-1)^(depth w - depth v) mu(w)``.

    Evaluated directly, independently of the recursion in :func:`solve_rooted_tree`.
    """
    _require(g, Topology.TREE)
    mu = _measure(g, mu)
    r = g.index(root)
    parent, depth, order = {r: None}, {r: 0}, [r]
    for u in order:
        for w in g.adjacency(u):
            if w not in parent:
                parent[w], depth[w] = u, depth[u] + 1
                order.append(w)
    out = {}
    for v in order[1:]:
        total = Fraction(0)
        for w in order:
            a = w
            while a is not None and a != v:
                a = parent[a]
            if a == v:
                total += (-1) ** (depth[w] - depth[v]) * mu[g.nodes[w]]
        out[g.edge_key(g.nodes[v], g.nodes[parent[v]])] = total
    return out


def solve_tree(g: Multigraph, mu) -> SolutionFamily:
    """Unique solution iff both sides of the bipartition carry the same mass."""
    _require(g, Topology.TREE)
    mu = _measure(g, mu)
    root = g.nodes[0]
    alpha, residual = _tree_part(g, root, g.nodes, mu)
    if residual == 0:
        return SolutionFamily(UNIQUE, g, alpha)
    bp = bipartition(g)
    m1 = sum(mu[v] for v in bp.part1)
    m2 = sum(mu[v] for v in bp.part2)
    return SolutionFamily(NONE, g, witness=f"bipartite balance fails: {m1} != {m2}")


def _cycle_core(g: Multigraph, order, mu: Mapping) -> SolutionFamily:
    n = len(order)
    edges = [g.edge_key(order[k], order[(k + 1) % n]) for k in range(n)]
    b = [Fraction(0)] * n  # x_k = b_k + s_k a, s_k = +1 for even k (0-based)
    for k in range(1, n):
        b[k] = mu[order[k]] - b[k - 1]
    sign = [1 if k % 2 == 0 else -1 for k in range(n)]
    if n % 2 == 1:
        a = (mu[order[0]] - b[n - 1]) / 2
        return SolutionFamily(UNIQUE, g, {edges[k]: b[k] + sign[k] * a for k in range(n)})
    if b[n - 1] != mu[order[0]]:
        even = sum((mu[order[k]] for k in range(0, n, 2)), Fraction(0))
        odd = sum((mu[order[k]] for k in range(1, n, 2)), Fraction(0))
        return SolutionFamily(NONE, g, witness=f"alternating sums differ: {even} != {odd}")
    lows = [-b[k] for k in range(0, n, 2)]
    highs = [b[k] for k in range(1, n, 2)]
    lo, hi = max(lows), min(highs)
    direction = {edges[k]: Fraction(sign[k]) for k in range(n)}
    if lo < hi:
        a0 = (lo + hi) / 2
        interval = (lo - a0, hi - a0)
    else:
        a0, interval = Fraction(0), None
    return SolutionFamily(FAMILY, g, {edges[k]: b[k] + sign[k] * a0 for k in range(n)},
                          direction, interval)


def solve_cycle(g: Multigraph, mu) -> SolutionFamily:
    """Odd cycles: unique solution. Even cycles: a line of solutions or none.

    >>> tri = Multigraph([(1, 2), (1, 3), (2, 3)])
    >>> s = solve_cycle(tri, {1: Fraction(2, 5), 2: Fraction(7, 20), 3: Fraction(1, 4)})
    >>> [str(s.values[e]) for e in tri.edges]
    ['1/4', '3/20', '1/10']
    """
    tc = _require(g, Topology.ODD_CYCLE, Topology.EVEN_CYCLE)
    return _cycle_core(g, tc.cycle, _measure(g, mu))


def solve_tree_plus_edge(g: Multigraph, mu) -> SolutionFamily:
    """A tree plus one edge: either a self-loop or an edge closing a cycle.

    The trees hanging from the cycle are solved first; each cycle node keeps
    the mass ``mu(r) - sum of the weights at r on its hanging tree``, and the
    cycle is solved on those reduced masses (which need not be positive nor
    sum to one).
    """
    tc = _require(g, Topology.TREE_PLUS_ODD_CYCLE_EDGE, Topology.TREE_PLUS_EVEN_CYCLE_EDGE,
                  Topology.TREE_PLUS_SELF_LOOP)
    mu = _measure(g, mu)
    if tc.tag is Topology.TREE_PLUS_SELF_LOOP:
        (r,) = tc.cycle
        alpha, residual = _tree_part(g, r, [v for v in g.nodes if v != r], mu)
        alpha[(r, r)] = residual
        return SolutionFamily(UNIQUE, g, alpha)
    tree_alpha = {}
    reduced = dict(mu)
    for r, hanging in tc.attachments.items():
        alpha, residual = _tree_part(g, r, hanging, mu)
        tree_alpha.update(alpha)
        reduced[r] = residual
    core = _cycle_core(g, tc.cycle, reduced)
    if core.kind == NONE:
        bp = bipartition(g)
        m1 = sum(mu[v] for v in bp.part1)
        m2 = sum(mu[v] for v in bp.part2)
        return SolutionFamily(NONE, g, witness=f"bipartite balance fails: {m1} != {m2}")
    values = {**tree_alpha, **core.values}
    values = {e: values[e] for e in g.edges}
    if core.kind == UNIQUE:
        return SolutionFamily(UNIQUE, g, values)
    direction = {e: core.direction.get(e, Fraction(0)) for e in g.edges}
    return SolutionFamily(FAMILY, g, values, direction, core.interval)


def solve(g: Multigraph, mu) -> SolutionFamily:
    """Dispatch on the topology class; other graphs raise :class:`InputError`."""
    tag = classify_topology(g).tag
    if tag is Topology.TREE:
        return solve_tree(g, mu)
    if tag in (Topology.ODD_CYCLE, Topology.EVEN_CYCLE):
        return solve_cycle(g, mu)
    if tag is Topology.OTHER:
        raise InputError("no closed form for graphs of class Other")
    return solve_tree_plus_edge(g, mu)


# ---------------------------------------------------------------------------
# determinants
# ---------------------------------------------------------------------------

def cycle_incidence_matrix(n: int) -> list[list[int]]:
    """Node-by-edge incidence matrix of the cycle ``0 - 1 - ... - (n-1) - 0``."""
    if n < 3:
        raise InputError("a cycle has at least 3 nodes")
    M = [[0] * n for _ in range(n)]
    for k in range(n):
        M[k][k] = 1
        M[(k + 1) % n][k] = 1
    return M


def exact_determinant(M) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination."""
    A = [[Fraction(x) for x in row] for row in M]
    n = len(A)
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            A[c], A[p] = A[p], A[c]
            det = -det
        det *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            if f:
                for k in range(c, n):
                    A[r][k] -= f * A[c][k]
    return det


# ---------------------------------------------------------------------------
# policy invariance
# ---------------------------------------------------------------------------

COVERED = (Topology.ODD_CYCLE, Topology.TREE, Topology.TREE_PLUS_ODD_CYCLE_EDGE,
           Topology.TREE_PLUS_SELF_LOOP)


@dataclass(frozen=True)
class PolicyInvarianceReport:
    """Simulated weights per policy against the closed-form oracle."""

    topology: Topology
    oracle: dict
    estimates: dict
    deviation: dict
    pairwise: dict

    def to_json(self) -> dict:
        return {"topology": self.topology.value,
                "oracle": {edge_label(*e): frac_str(x) for e, x in self.oracle.items()},
                "estimates": {p: {edge_label(*e): x for e, x in est.items()}
                              for p, est in self.estimates.items()},
                "deviation": dict(self.deviation),
                "pairwise": {f"{a}/{b}": d for (a, b), d in self.pairwise.items()}}


def policy_invariance_report(g: Multigraph, mu, n: int = 10**6, seed=0) -> PolicyInvarianceReport:
    """Simulate every policy and compare the empirical weights with the exact solution.

    Non-bipartite covered graphs run the general model under FCFM, ML and
    random; the weights are ``(1 + [i = j]) theta`` and the oracle solves the
    system for the normalized measure. Trees run the pairwise-arrival model
    under ML and FCFM with the per-side normalized measures; the weights are
    the bipartite rates and the oracle solves the system for the concatenation
    of the two normalized marginals.
    """
    from .bipartite import PairArrivalLaw, simulate_bipartite, weights_from_bipartite_rates
    from .simulation import MatchingPolicy, simulate_general, weights_from_rates

    tag = classify_topology(g).tag
    if tag not in COVERED:
        raise InputError(f"matching rates are not known to be policy-invariant on class {tag.value}")
    mu = as_measure(g, mu)
    estimates = {}
    if tag is Topology.TREE:
        law = PairArrivalLaw.from_measure(g, mu)
        target = NodeMeasure({**law.marginal1, **law.marginal2})
        sol = solve_tree(g, target)
        policies = (MatchingPolicy.ML, MatchingPolicy.FCFM)
        for p in policies:
            est = simulate_bipartite(g, law, p, n, seed)
            estimates[p.value] = dict(weights_from_bipartite_rates(est).items())
    else:
        mu = normalize(mu)
        sol = solve(g, mu)
        policies = tuple(MatchingPolicy)
        for p in policies:
            est = simulate_general(g, mu, p, n, seed)
            estimates[p.value] = dict(weights_from_rates(est).items())
    if sol.kind != UNIQUE:
        raise InputError(f"no unique closed-form solution: {sol.witness}")
    oracle = {e: sol.values[e] for e in g.edges}
    deviation = {p: max(abs(est[e] - float(oracle[e])) for e in g.edges)
                 for p, est in estimates.items()}
    names = list(estimates)
    pairwise = {(a, b): max(abs(estimates[a][e] - estimates[b][e]) for e in g.edges)
                for i, a in enumerate(names) for b in names[i + 1:]}
    return PolicyInvarianceReport(tag, oracle, estimates, deviation, pairwise)
