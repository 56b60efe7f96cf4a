"""Constructive membership: edge weights reproducing a measure, or a certificate that none exist.

:func:`find_weights` solves ``max eps s.t. A alpha = mu, alpha_e >= eps`` exactly
(``A`` the node/edge incidence matrix, self-loops contributing a single 1).
When the optimum is not positive, the LP dual supplies a vector ``y`` with
``y(i) + y(j) >= 0`` on edges, ``y(i) >= 0`` on self-loops and ``mu.y <= 0``;
collapsing the levels of ``|y|`` then isolates an independent set ``I`` with
``mu(I) >= mu(E(I))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from ._util import frac_str, to_fraction
from .errors import InputError
from .flow import FlowNetwork, max_flow
from .graph import Multigraph, bipartition
from .lp import max_min_weight
from .stability import (
    EdgeWeights,
    NodeMeasure,
    _check_partition,
    _proper_submasks,
    as_measure,
    check_ncond_bipartite,
)


@dataclass(frozen=True)
class FarkasCertificate:
    """Dual witness that ``mu`` is not a positive weighted measure.

    ``y`` is normalized so that ``max |y| = 1``. ``slack = sum mu(i) y(i)`` is
    negative, or zero when ``mu`` lies on the boundary of the region (then a
    decomposition with some null weights exists, ``boundary`` is set).
    """

    y: dict
    violating_set: frozenset
    slack: Fraction
    mu_U: Fraction
    mu_EU: Fraction
    boundary: bool = False

    def verify(self, g: Multigraph, mu) -> bool:
        """Check every invariant exactly against ``(g, mu)``."""
        y = self.y
        for u, v in g.edges:
            if u == v:
                if y[u] < 0:
                    return False
            elif y[u] + y[v] < 0:
                return False
        slack = sum((mu[v] * y[v] for v in g.nodes), Fraction(0))
        if slack != self.slack:
            return False
        if not (slack < 0 or (self.boundary and slack == 0)):
            return False
        U = self.violating_set
        if not U:
            return False
        mask = g.mask(U)
        if g.neighborhood_mask(mask) & mask:
            return False
        EU = g.subset(g.neighborhood_mask(mask))
        return (sum((mu[v] for v in U), Fraction(0)) == self.mu_U
                and sum((mu[v] for v in EU), Fraction(0)) == self.mu_EU
                and self.mu_U >= self.mu_EU)

    def to_json(self) -> dict:
        return {"y": {str(k): frac_str(v) for k, v in self.y.items()},
                "violating_set": sorted(map(str, self.violating_set)),
                "slack": frac_str(self.slack),
                "mu_U": frac_str(self.mu_U),
                "mu_EU": frac_str(self.mu_EU)}


@dataclass(frozen=True)
class Decomposition:
    """Outcome of :func:`find_weights` / :func:`decompose_asym`.

    Exactly one of ``weights`` (member) and ``certificate`` (non-member) is set.
    ``boundary_weights`` holds the degenerate nonnegative decomposition found
    when the optimal minimum weight is exactly zero; it is diagnostic only.
    """

    member: bool
    epsilon: Fraction | None
    weights: EdgeWeights | None = None
    certificate: FarkasCertificate | None = None
    boundary: bool = False
    boundary_weights: EdgeWeights | None = None
    slack: dict | None = None

    def to_json(self) -> dict:
        out = {"member": self.member,
               "epsilon": None if self.epsilon is None else frac_str(self.epsilon),
               "weights": self.weights.to_json() if self.weights is not None else None,
               "certificate": self.certificate.to_json() if self.certificate else None,
               "slack": ({str(k): frac_str(v) for k, v in self.slack.items()}
                         if self.slack is not None else None)}
        if self.boundary:
            out["boundary"] = True
            out["boundary_weights"] = self.boundary_weights.to_json()
        return out


def incidence(g: Multigraph) -> list[list[int]]:
    """Node-by-edge incidence matrix; a self-loop column has a single 1."""
    rows = [[0] * g.m for _ in range(g.n)]
    for k, (a, b) in enumerate(g.edge_indices()):
        rows[a][k] = 1
        rows[b][k] = 1
    return rows


def collapse_levels(g: Multigraph, mu, y: Mapping) -> tuple[frozenset, dict]:
    """Reduce the number of distinct values of ``|y|`` until the lowest level isolates a violation.

    ``y`` must satisfy the edge inequalities and ``mu.y <= 0`` with ``y != 0``.
    Returns ``(V_-, y')`` where ``V_- = {i : y'(i) = -max|y'|}`` is an independent
    set with ``mu(V_-) >= mu(E(V_-))`` and ``y'`` is the collapsed vector.
    """
    y = dict(y)
    nodes = g.nodes
    while True:
        levels = sorted({abs(y[v]) for v in nodes}, reverse=True)
        p = levels[0]
        if p == 0:
            raise InputError("collapse needs a nonzero vector")
        plus = [v for v in nodes if y[v] == p]
        minus = [v for v in nodes if y[v] == -p]
        if len(levels) == 1 or mu.mass(plus) <= mu.mass(minus):
            return frozenset(minus), y
        q = levels[1]
        for v in plus:
            y[v] = q
        for v in minus:
            y[v] = -q


def _certificate(g: Multigraph, mu: NodeMeasure, yvec, boundary: bool) -> FarkasCertificate:
    y0 = {v: Fraction(yvec[k]) for k, v in enumerate(g.nodes)}
    U, y = collapse_levels(g, mu, y0)
    top = max(abs(v) for v in y.values())
    y = {k: v / top for k, v in y.items()}
    bp = bipartition(g)
    if bp is not None and U in (bp.part1, bp.part2) and mu.mass(bp.part1) == mu.mass(bp.part2):
        # a whole side is no violation of the bipartite region when sides balance
        viol = check_ncond_bipartite(g, mu).violation
        if viol is not None:
            U = viol.subset
    EU = g.subset(g.neighborhood_mask(g.mask(U)))
    slack = sum((mu[v] * y[v] for v in g.nodes), Fraction(0))
    return FarkasCertificate(y, U, slack, mu.mass(U), mu.mass(EU), boundary)


def find_weights(g: Multigraph, mu) -> Decomposition:
    """Strictly positive edge weights ``alpha`` with ``mu^alpha = mu``, or a Farkas certificate.

    Membership is decided by the sign of the optimal minimum weight, exactly.
    Among several decompositions the one returned is the simplex vertex reached
    under Bland's rule; it is *a* decomposition, not a canonical one.

    Examples
    --------
    >>> from fractions import Fraction as F
    >>> tri = Multigraph([(1, 2), (1, 3), (2, 3)])
    >>> d = find_weights(tri, {1: F(2, 5), 2: F(7, 20), 3: F(1, 4)})
    >>> d.member, d.weights[1, 2], d.weights[1, 3], d.weights[2, 3]
    (True, Fraction(1, 4), Fraction(3, 20), Fraction(1, 10))
    """
    mu = as_measure(g, mu)
    res = max_min_weight(incidence(g), [mu[v] for v in g.nodes])
    if res.feasible and res.epsilon > 0:
        return Decomposition(True, res.epsilon, EdgeWeights(g, dict(zip(g.edges, res.x))))
    boundary = res.feasible and res.epsilon == 0
    cert = _certificate(g, mu, res.y, boundary)
    bw = EdgeWeights(g, dict(zip(g.edges, res.x)), "nonnegative") if boundary else None
    return Decomposition(False, res.epsilon, None, cert, boundary, bw)


def _require_graph(g: Multigraph) -> None:
    if g.loop_nodes:
        raise InputError("a graph without self-loops is required here")


def decompose_asym(g: Multigraph, v1, mu) -> Decomposition:
    """Weights with ``mu^alpha = mu`` on ``v1`` and ``mu^alpha < mu`` on the other side.

    Adds a self-loop at every node outside ``v1`` and decomposes on that
    multigraph; the loop weights become ``slack`` (``mu(j) - mu^alpha(j)``).
    On failure the certificate refers to the looped multigraph.
    """
    _require_graph(g)
    v1 = _check_partition(g, v1)
    mu = as_measure(g, mu)
    v2 = [v for v in g.nodes if v not in v1]
    hat = g.with_loops(v2)
    res = find_weights(hat, mu)
    if not res.member:
        return res
    alpha = EdgeWeights(g, {e: res.weights[e] for e in g.edges})
    slack = {j: res.weights[j, j] for j in v2}
    return Decomposition(True, res.epsilon, alpha, slack=slack)


# ---------------------------------------------------------------------------
# flow route (bipartite graphs)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowCut:
    source_side: frozenset
    capacity: Fraction
    violating_set: frozenset
    mu_U: Fraction
    mu_EU: Fraction

    def to_json(self) -> dict:
        return {"source_side": sorted(map(str, self.source_side)),
                "capacity": frac_str(self.capacity),
                "violating_set": sorted(map(str, self.violating_set)),
                "mu_U": frac_str(self.mu_U), "mu_EU": frac_str(self.mu_EU)}


@dataclass(frozen=True)
class FlowDecomposition:
    member: bool
    flow_value: Fraction
    delta: dict
    weights: EdgeWeights | None = None
    cut: FlowCut | None = None

    def to_json(self) -> dict:
        return {"member": self.member,
                "flow_value": frac_str(self.flow_value),
                "delta": {str(k): frac_str(v) for k, v in self.delta.items()},
                "weights": self.weights.to_json() if self.weights is not None else None,
                "cut": self.cut.to_json() if self.cut else None}


SOURCE, SINK = ("__source__",), ("__sink__",)


def choose_delta(g: Multigraph, v1: frozenset, mu: NodeMeasure) -> tuple[Fraction, dict]:
    """Pick ``delta = (1 - theta) mu`` on the pool side, ``theta`` the largest of 1/2, 1/4, ...

    such that ``mu(U1) < delta(E(U1))`` for every nonempty ``U1`` of ``v1`` already
    satisfying ``mu(U1) < mu(E(U1))``. Subsets violating the latter cannot be
    repaired by any ``delta < mu`` and are left out.
    """
    full = g.mask(v1)
    pairs = []
    for mask in [full, *_proper_submasks(full)]:
        a = mu.mass(g.subset(mask))
        b = mu.mass(g.subset(g.neighborhood_mask(mask)))
        if a < b:
            pairs.append((a, b))
    theta = Fraction(1, 2)
    while any(a >= (1 - theta) * b for a, b in pairs):
        theta /= 2
    return theta, {j: (1 - theta) * mu[j] for j in g.nodes if j not in v1}


def maxflow_decompose(g: Multigraph, mu, v1=None) -> FlowDecomposition:
    """Flow-network route to the asymmetric decomposition on a bipartite graph.

    ``v1`` (default: the bipartition side holding the first node) is the
    customer side. Succeeds iff the maximum flow saturates every source arc,
    in which case the flow on customer-to-pool arcs gives nonnegative weights
    with ``mu^alpha = mu`` on ``v1`` and ``mu^alpha <= delta < mu`` elsewhere.
    Otherwise the source side of a minimum cut yields a violating subset.
    """
    bp = bipartition(g)
    if bp is None:
        raise InputError("maxflow_decompose needs a bipartite graph")
    v1 = bp.part1 if v1 is None else frozenset(v1)
    if v1 not in (bp.part1, bp.part2):
        raise InputError("v1 must be one side of the bipartition")
    mu = as_measure(g, mu)
    _, delta = choose_delta(g, v1, mu)

    net = FlowNetwork(SOURCE, SINK)
    for i in g.nodes:
        if i in v1:
            net.add_arc(SOURCE, i, mu[i])
    for j in delta:
        net.add_arc(j, SINK, delta[j])
    for u, v in g.edges:
        i, j = (u, v) if u in v1 else (v, u)
        net.add_arc(i, j, FlowNetwork.INF)

    value, flow, reach = max_flow(net)
    target = mu.mass(v1)
    if value == target:
        alpha = {}
        for u, v in g.edges:
            i, j = (u, v) if u in v1 else (v, u)
            alpha[(u, v)] = flow[(i, j)]
        return FlowDecomposition(True, value, delta, EdgeWeights(g, alpha, "nonnegative"))
    side = frozenset(reach) - {SOURCE}
    U1 = frozenset(v for v in side if v in v1)
    EU = g.subset(g.neighborhood_mask(g.mask(U1)))
    cut = FlowCut(side, value, U1, mu.mass(U1), mu.mass(EU))
    return FlowDecomposition(False, value, delta, cut=cut)


# ---------------------------------------------------------------------------
# skill-based queues
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SkillBasedVerdict:
    """Membership in the maximal stability region of a multi-class multi-pool queue.

    ``pi[(i, j)]`` is the long-run fraction of pool ``j`` busy with class ``i``;
    ``load[j] = sum_i pi[(i, j)]`` stays below 1 on success.
    """

    member: bool
    weights: EdgeWeights | None = None
    pi: dict | None = None
    load: dict | None = None
    certificate: object | None = None
    epsilon: Fraction | None = None
    extra: dict = field(default_factory=dict)


def _positive(x, what):
    x = to_fraction(x)
    if x <= 0:
        raise InputError(f"{what} must be positive, got {x}")
    return x


def skillbased_membership(g: Multigraph, mu1, gamma: Mapping, servers: Mapping,
                          per_edge: bool | None = None) -> SkillBasedVerdict:
    """Decide whether customer arrival rates ``mu1`` (on one bipartition side) are stabilizable.

    ``gamma`` holds service rates either per pool node (``gamma[j]``) or per
    edge (``gamma[(i, j)]``); ``servers[j]`` is the number of servers of pool
    ``j``. The per-node case reduces to :func:`decompose_asym` on the measure
    ``mu1`` extended by ``servers[j] * gamma[j]`` on pools. The per-edge case
    solves the max-min LP with rows ``sum_j alpha_ij = mu1(i)`` and
    ``sum_i alpha_ij / gamma_ij + loop_j = servers[j]``.
    """
    bp = bipartition(g)
    if bp is None:
        raise InputError("skill-based regions need a bipartite graph")
    keys = frozenset(mu1)
    if keys == bp.part1:
        v1, v2 = bp.part1, bp.part2
    elif keys == bp.part2:
        v1, v2 = bp.part2, bp.part1
    else:
        raise InputError("customer rates must cover exactly one side of the bipartition")
    mu1 = NodeMeasure(mu1)
    s = {}
    for j in v2:
        if j not in servers:
            raise InputError(f"no server count for pool {j!r}")
        sj = servers[j]
        if not isinstance(sj, int) or isinstance(sj, bool) or sj <= 0:
            raise InputError(f"server count of pool {j!r} must be a positive integer")
        s[j] = sj
    if per_edge is None:
        per_edge = all(isinstance(k, tuple) and len(k) == 2 and g.has_edge(*k) for k in gamma) \
            if all(isinstance(k, tuple) for k in gamma) else False

    if not per_edge:
        gam = {j: _positive(gamma[j], f"service rate of pool {j!r}") for j in v2}
        ext = dict(mu1.items())
        ext.update({j: s[j] * gam[j] for j in v2})
        res = decompose_asym(g, v1, ext)
        if not res.member:
            return SkillBasedVerdict(False, certificate=res.certificate, epsilon=res.epsilon)
        rate = {}
        for u, v in g.edges:
            j = v if v in v2 else u
            rate[(u, v)] = gam[j]
        return _skill_result(g, v1, v2, res.weights, rate, s, res.epsilon)

    rate = {}
    for u, v in g.edges:
        key = (u, v) if (u, v) in gamma else (v, u)
        if key not in gamma:
            raise InputError(f"no service rate for edge {u!r}-{v!r}")
        rate[(u, v)] = _positive(gamma[key], f"service rate of edge {u!r}-{v!r}")
    v2_order = [j for j in g.nodes if j in v2]
    cols = len(g.edges) + len(v2_order)
    rows, rhs = [], []
    for node in g.nodes:
        row = [Fraction(0)] * cols
        for k, (u, v) in enumerate(g.edges):
            if node in (u, v):
                row[k] = Fraction(1) if node in v1 else 1 / rate[(u, v)]
        if node in v2:
            row[len(g.edges) + v2_order.index(node)] = Fraction(1)
            rhs.append(Fraction(s[node]))
        else:
            rhs.append(mu1[node])
        rows.append(row)
    res = max_min_weight(rows, rhs)
    if not (res.feasible and res.epsilon > 0):
        y = {v: Fraction(res.y[k]) for k, v in enumerate(g.nodes)}
        return SkillBasedVerdict(False, certificate=y, epsilon=res.epsilon)
    alpha = EdgeWeights(g, dict(zip(g.edges, res.x[:len(g.edges)])))
    return _skill_result(g, v1, v2, alpha, rate, s, res.epsilon)


def _skill_result(g, v1, v2, alpha, rate, s, eps) -> SkillBasedVerdict:
    pi, load = {}, {j: Fraction(0) for j in g.nodes if j in v2}
    for (u, v), a in alpha.items():
        i, j = (u, v) if u in v1 else (v, u)
        p = a / (rate[(u, v)] * s[j])
        pi[(i, j)] = p
        load[j] += p
    ok = all(x < 1 for x in load.values())
    return SkillBasedVerdict(ok, alpha, pi, load, epsilon=eps)
