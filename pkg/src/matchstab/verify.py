"""Cross-checking harness over all small connected multigraphs.

For every graph (up to isomorphism) and a batch of random rational measures,
the harness confirms that the subset conditions, the LP decomposition and the
flow construction agree, and that every certificate verifies exactly. Graphs
are enumerated by adding one vertex at a time to connected graphs (every
connected graph has a vertex whose removal keeps it connected), deduplicated
by a canonical form taken over degree-respecting relabelings.
"""

from __future__ import annotations

import itertools
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .decompose import decompose_asym, find_weights, maxflow_decompose
from .errors import ResourceError
from .graph import Multigraph, bipartition
from .stability import (
    NodeMeasure,
    check_ncond,
    check_ncond_asym,
    check_ncond_bipartite,
    check_ncond_independent,
    weighted_measure,
)

MAX_HARNESS_NODES = 6


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

def _relabelings(n: int, edges):
    deg = [0] * n
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    groups = {}
    for v in range(n):
        groups.setdefault(deg[v], []).append(v)
    blocks = [groups[d] for d in sorted(groups, reverse=True)]
    for parts in itertools.product(*(itertools.permutations(b) for b in blocks)):
        order = [v for p in parts for v in p]
        perm = [0] * n
        for new, old in enumerate(order):
            perm[old] = new
        yield perm


def _canon(n: int, edges, loops=()) -> tuple:
    best = None
    for p in _relabelings(n, edges):
        key = (tuple(sorted(tuple(sorted((p[a], p[b]))) for a, b in edges)),
               tuple(sorted(p[v] for v in loops)))
        if best is None or key < best:
            best = key
    return best


def connected_simple_graphs(n: int) -> list[tuple]:
    """Edge lists on ``0..n-1`` of the connected simple graphs with ``n`` nodes, one per class."""
    if n > MAX_HARNESS_NODES:
        raise ResourceError(f"graph enumeration is limited to {MAX_HARNESS_NODES} nodes")
    if n < 2:
        return []
    layer = {((0, 1),)}
    for k in range(3, n + 1):
        nxt = set()
        for edges in layer:
            for r in range(1, k):
                for nbrs in itertools.combinations(range(k - 1), r):
                    new = list(edges) + [(v, k - 1) for v in nbrs]
                    nxt.add(_canon(k, new)[0])
        layer = nxt
    return sorted(layer)


def _automorphisms(n: int, edges):
    es = {tuple(sorted(e)) for e in edges}
    for perm in itertools.permutations(range(n)):
        if {tuple(sorted((perm[a], perm[b]))) for a, b in es} == es:
            yield perm


def connected_multigraphs(max_nodes: int, loops: bool = True, min_nodes: int = 2) -> list[Multigraph]:
    """Connected multigraphs (simple edges plus optional self-loops) on ``min_nodes..max_nodes`` nodes.

    One representative per isomorphism class; nodes are ``1..n``.
    """
    if max_nodes > MAX_HARNESS_NODES:
        raise ResourceError(f"graph enumeration is limited to {MAX_HARNESS_NODES} nodes")
    out = []
    for n in range(max(2, min_nodes), max_nodes + 1):
        for edges in connected_simple_graphs(n):
            loop_sets = [()]
            if loops:
                auts = list(_automorphisms(n, edges))
                seen = set()
                loop_sets = []
                for r in range(n + 1):
                    for L in itertools.combinations(range(n), r):
                        key = min(tuple(sorted(p[v] for v in L)) for p in auts)
                        if key not in seen:
                            seen.add(key)
                            loop_sets.append(L)
            for L in loop_sets:
                es = [(a + 1, b + 1) for a, b in edges] + [(v + 1, v + 1) for v in L]
                out.append(Multigraph(es, nodes=range(1, n + 1)))
    return out


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def measure_from_weights(g: Multigraph, rng: random.Random, zero_prob: float = 0.0,
                         extra_edges=()):
    """``mu^alpha`` for random integer weights; with ``zero_prob`` some weights vanish.

    Returns ``None`` when the zeros leave a node uncovered.
    """
    acc = {v: 0 for v in g.nodes}
    for u, v in list(g.edges) + list(extra_edges):
        x = 0 if rng.random() < zero_prob else rng.randint(1, 20)
        acc[u] += x
        if u != v:
            acc[v] += x
    if any(x == 0 for x in acc.values()):
        return None
    return NodeMeasure(acc)


def random_measure(g: Multigraph, rng: random.Random) -> NodeMeasure:
    return NodeMeasure({v: Fraction(rng.randint(1, 20), rng.randint(1, 4)) for v in g.nodes})


def balanced_measure(g: Multigraph, rng: random.Random) -> NodeMeasure:
    """Random measure rescaled so both bipartition sides carry the same mass."""
    bp = bipartition(g)
    mu = random_measure(g, rng)
    t1, t2 = mu.mass(bp.part1), mu.mass(bp.part2)
    return NodeMeasure({v: mu[v] * (t2 if v in bp.part1 else t1) for v in g.nodes})


def sample_measures(g: Multigraph, k: int, rng: random.Random, extra_edges=()) -> list:
    """``k`` measures: about 2/5 positive weighted measures, 1/5 with some zero
    weights (boundary candidates), the rest arbitrary (balanced across the two
    sides for half of them on bipartite graphs)."""
    bp = bipartition(g) if not extra_edges else None
    out = []
    n_in, n_bd = (2 * k) // 5, k // 5
    while len(out) < n_in:
        out.append(("inside", measure_from_weights(g, rng, 0.0, extra_edges)))
    tries = 0
    while len(out) < n_in + n_bd and tries < 50 * k:
        tries += 1
        mu = measure_from_weights(g, rng, 0.4, extra_edges)
        if mu is not None:
            out.append(("boundary", mu))
    while len(out) < k:
        if bp is not None and len(out) % 2:
            out.append(("balanced", balanced_measure(g, rng)))
        else:
            out.append(("random", random_measure(g, rng)))
    return out


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def _edges_repr(g: Multigraph):
    return [list(e) for e in g.edges]


@dataclass
class HarnessReport:
    """Counts of checked instances per family and every disagreement found."""

    counts: Counter = field(default_factory=Counter)
    certificates: Counter = field(default_factory=Counter)
    discrepancies: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.discrepancies

    def add(self, check, g, mu, detail, partition=None):
        self.discrepancies.append({
            "check": check, "edges": _edges_repr(g),
            "measure": {str(k): str(v) for k, v in mu.items()},
            "partition": sorted(partition) if partition is not None else None,
            "detail": detail})

    def merge(self, other: "HarnessReport"):
        self.counts.update(other.counts)
        self.certificates.update(other.certificates)
        self.discrepancies.extend(other.discrepancies)

    def to_json(self) -> dict:
        return {"ok": self.ok, "instances": dict(sorted(self.counts.items())),
                "certificates": dict(sorted(self.certificates.items())),
                "discrepancies": self.discrepancies}


def _check_certificate(rep: HarnessReport, tag, g, mu, res, check_graph=None):
    """Record the certificate of a non-member decomposition and validate it."""
    cg = check_graph or g
    cert = res.certificate
    rep.certificates[f"{tag}:not-member"] += 1
    if cert is None or not cert.verify(cg, mu):
        rep.add(f"{tag}:certificate", g, mu, "missing or invalid certificate")
        return
    if cert.slack < 0:
        rep.certificates[f"{tag}:negative"] += 1
    else:
        # the only way to reach a zero objective: mu is a nonnegative weighted measure
        if not res.boundary or dict(weighted_measure(cg, res.boundary_weights)) != dict(mu):
            rep.add(f"{tag}:certificate", g, mu, "zero objective without a boundary decomposition")
            return
        rep.certificates[f"{tag}:boundary"] += 1


def check_general_instance(rep: HarnessReport, g: Multigraph, mu) -> None:
    """Subset condition, independent-set condition and LP agree (non-bipartite graphs)."""
    a = check_ncond(g, mu).member
    b = check_ncond_independent(g, mu).member
    d = find_weights(g, mu)
    rep.counts["general"] += 1
    if not (a == b == d.member):
        rep.add("general", g, mu, {"ncond": a, "independent": b, "lp": d.member})
        return
    if d.member:
        if dict(weighted_measure(g, d.weights)) != dict(mu):
            rep.add("general:weights", g, mu, "weights do not reproduce the measure")
    else:
        _check_certificate(rep, "general", g, mu, d)


def check_bipartite_instance(rep: HarnessReport, g: Multigraph, mu) -> None:
    """Bipartite condition and LP agree; successes balance the two sides."""
    a = check_ncond_bipartite(g, mu).member
    d = find_weights(g, mu)
    rep.counts["bipartite"] += 1
    if a != d.member:
        rep.add("bipartite", g, mu, {"ncond_b": a, "lp": d.member})
        return
    if d.member:
        bp = bipartition(g)
        if mu.mass(bp.part1) != mu.mass(bp.part2):
            rep.add("bipartite:balance", g, mu, "member with unbalanced sides")
        if dict(weighted_measure(g, d.weights)) != dict(mu):
            rep.add("bipartite:weights", g, mu, "weights do not reproduce the measure")
    else:
        _check_certificate(rep, "bipartite", g, mu, d)


def check_asym_instance(rep: HarnessReport, g: Multigraph, v1, mu) -> None:
    """One-sided condition, looped-graph LP and (on bipartite sides) max flow agree."""
    v1 = frozenset(v1)
    a = check_ncond_asym(g, v1, mu).member
    d = decompose_asym(g, v1, mu)
    rep.counts["asym"] += 1
    if a != d.member:
        rep.add("asym", g, mu, {"ncond_asym": a, "lp": d.member}, v1)
        return
    if d.member:
        got = weighted_measure(g, d.weights)
        if any(got[v] != mu[v] for v in v1) or any(
                got[v] + d.slack[v] != mu[v] or d.slack[v] <= 0 for v in g.nodes if v not in v1):
            rep.add("asym:weights", g, mu, "weights do not meet the one-sided balance", v1)
    else:
        hat = g.with_loops([v for v in g.nodes if v not in v1])
        _check_certificate(rep, "asym", g, mu, d, check_graph=hat)
        if d.certificate is not None and not d.certificate.violating_set <= v1:
            rep.add("asym:certificate", g, mu, "violating set leaves V1", v1)
    bp = bipartition(g)
    if bp is not None and v1 in (bp.part1, bp.part2):
        f = maxflow_decompose(g, mu, v1)
        rep.counts["maxflow"] += 1
        if f.member != a:
            rep.add("maxflow", g, mu, {"ncond_asym": a, "flow": f.member}, v1)
        elif f.member:
            got = weighted_measure(g, f.weights)
            if any(got[v] != mu[v] for v in v1) or any(got[v] >= mu[v] for v in g.nodes if v not in v1):
                rep.add("maxflow:weights", g, mu, "flow weights do not meet the one-sided balance", v1)
        else:
            c = f.cut
            if not c.violating_set or not c.violating_set <= v1 or c.mu_U < c.mu_EU:
                rep.add("maxflow:cut", g, mu, "cut does not expose a violating subset", v1)
            else:
                rep.certificates["maxflow:cut"] += 1


def nontrivial_partitions(g: Multigraph):
    nodes = g.nodes
    for r in range(1, g.n):
        for combo in itertools.combinations(nodes, r):
            yield frozenset(combo)


def run_general(max_nodes: int, measures: int, seed: int, loops: bool = True) -> HarnessReport:
    rep = HarnessReport()
    rng = random.Random(seed)
    for g in connected_multigraphs(max_nodes, loops=loops):
        if bipartition(g) is not None:
            continue
        for _, mu in sample_measures(g, measures, rng):
            check_general_instance(rep, g, mu)
    return rep


def run_bipartite(max_nodes: int, measures: int, seed: int) -> HarnessReport:
    rep = HarnessReport()
    rng = random.Random(seed)
    for g in connected_multigraphs(max_nodes, loops=False):
        if bipartition(g) is None:
            continue
        for _, mu in sample_measures(g, measures, rng):
            check_bipartite_instance(rep, g, mu)
    return rep


def run_asym(max_nodes: int, measures: int, seed: int) -> HarnessReport:
    rep = HarnessReport()
    rng = random.Random(seed)
    for g in connected_multigraphs(max_nodes, loops=False):
        for v1 in nontrivial_partitions(g):
            loops = [(v, v) for v in g.nodes if v not in v1]
            for _, mu in sample_measures(g, measures, rng, extra_edges=loops):
                check_asym_instance(rep, g, v1, mu)
    return rep


def run_harness(max_nodes: int = 4, measures: int = 10, seed: int = 0,
                asym_max_nodes: int | None = None, progress=None) -> HarnessReport:
    """Run the general, bipartite and one-sided families up to ``max_nodes`` nodes.

    The one-sided family, whose size grows with the number of partitions, is
    limited to ``asym_max_nodes`` (default ``min(max_nodes, 5)``).
    """
    if max_nodes > MAX_HARNESS_NODES:
        raise ResourceError(f"the harness is limited to {MAX_HARNESS_NODES} nodes")
    if asym_max_nodes is None:
        asym_max_nodes = min(max_nodes, 5)
    rep = HarnessReport()
    for name, job in (("general", lambda: run_general(max_nodes, measures, seed)),
                      ("bipartite", lambda: run_bipartite(max_nodes, measures, seed + 1)),
                      ("asym", lambda: run_asym(asym_max_nodes, measures, seed + 2))):
        part = job()
        rep.merge(part)
        if progress:
            progress(f"{name}: {sum(part.counts.values())} checks, "
                     f"{len(part.discrepancies)} discrepancies")
    return rep
