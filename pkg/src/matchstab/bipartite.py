"""Extended bipartite matching model: items arrive two by two, one on each side.

At every step a pair ``(i, j)`` with ``i`` in ``V1`` and ``j`` in ``V2`` arrives.
The incoming ``j`` first looks for a stored compatible ``V1`` item, then the
incoming ``i`` looks for a stored compatible ``V2`` item. If neither found one
and ``i`` and ``j`` are neighbors, they are matched together. Unmatched
incomers are stored. Random numbers follow the contract of
:mod:`matchstab.simulation`; with the product law the arrival stream yields
two doubles per step (first ``i``, then ``j``).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import InputError
from .graph import Multigraph, bipartition
from .simulation import (
    CHUNK,
    MatchingPolicy,
    cdf_of,
    pick,
    replicate,
    streams,
    take,
)
from .stability import EdgeWeights, NodeMeasure, as_weights, normalize


@dataclass(frozen=True)
class PairArrivalLaw:
    """Law of the arriving pair.

    The default coupling is the product of the two marginals. A ``joint``
    mapping ``(i, j) -> probability`` replaces it; its marginals must then match.
    """

    marginal1: NodeMeasure
    marginal2: NodeMeasure
    joint: Mapping | None = None

    def __post_init__(self):
        m1 = self.marginal1 if isinstance(self.marginal1, NodeMeasure) else NodeMeasure(self.marginal1)
        m2 = self.marginal2 if isinstance(self.marginal2, NodeMeasure) else NodeMeasure(self.marginal2)
        if m1.total != 1:
            m1 = normalize(m1)
        if m2.total != 1:
            m2 = normalize(m2)
        object.__setattr__(self, "marginal1", m1)
        object.__setattr__(self, "marginal2", m2)
        if self.joint is not None:
            joint = NodeMeasure(self.joint, allow_zero=True)
            if joint.total != 1:
                raise InputError("joint arrival law must sum to 1")
            for i in m1:
                if sum((p for (a, _), p in joint.items() if a == i), 0) != m1[i]:
                    raise InputError(f"joint law disagrees with the first marginal at {i!r}")
            for j in m2:
                if sum((p for (_, b), p in joint.items() if b == j), 0) != m2[j]:
                    raise InputError(f"joint law disagrees with the second marginal at {j!r}")
            object.__setattr__(self, "joint", dict(joint.items()))

    @classmethod
    def from_measure(cls, g: Multigraph, mu, v1=None) -> "PairArrivalLaw":
        """Product law of the per-side normalizations of ``mu``."""
        bp = bipartition(g)
        if bp is None:
            raise InputError("graph is not bipartite")
        v1 = bp.part1 if v1 is None else frozenset(v1)
        mu = mu if isinstance(mu, NodeMeasure) else NodeMeasure(mu)
        side1 = [v for v in g.nodes if v in v1]
        side2 = [v for v in g.nodes if v not in v1]
        return cls(mu.restrict(side1), mu.restrict(side2))


@dataclass
class BipartiteRateEstimate:
    """Match counts per edge, oriented ``(i in V1, j in V2)``."""

    graph: Multigraph
    policy: MatchingPolicy
    n: int
    seed: object
    side1: tuple
    side2: tuple
    counts: dict
    arrivals: dict
    stored: dict
    max_buffer: tuple
    buffer_sum: int
    trace: list = field(default_factory=list)
    violations: dict = field(default_factory=lambda: {"independence": 0, "balance": 0, "counting": 0})
    replications: int = 1

    @property
    def theta_b(self) -> dict:
        return {e: c / self.n for e, c in self.counts.items()}

    @property
    def mean_buffer(self) -> float:
        return self.buffer_sum / self.n

    def same_run(self, other: "BipartiteRateEstimate") -> bool:
        return (self.counts == other.counts and self.stored == other.stored
                and self.arrivals == other.arrivals and self.trace == other.trace
                and self.buffer_sum == other.buffer_sum)


def _sides(g: Multigraph, law: PairArrivalLaw):
    bp = bipartition(g)
    if bp is None:
        raise InputError("graph is not bipartite")
    s1, s2 = frozenset(law.marginal1), frozenset(law.marginal2)
    if (s1, s2) not in ((bp.part1, bp.part2), (bp.part2, bp.part1)):
        raise InputError("marginals must live on the two sides of the bipartition")
    return s1, s2


def _pair_draws(stream, law, idx1, idx2, n):
    """Yield ``n`` pairs of node indices."""
    if law.joint is None:
        c1 = cdf_of(law.marginal1[v] for v in idx1)
        c2 = cdf_of(law.marginal2[v] for v in idx2)
        done = 0
        while done < n:
            k = min(CHUNK, n - done)
            u = stream.block(2 * k).reshape(k, 2)
            a = np.minimum(np.searchsorted(c1, u[:, 0], side="right"), len(c1) - 1)
            b = np.minimum(np.searchsorted(c2, u[:, 1], side="right"), len(c2) - 1)
            yield from zip(a.tolist(), b.tolist())
            done += k
        return
    pairs = [(a, b) for a in range(len(idx1)) for b in range(len(idx2))]
    c = cdf_of(law.joint.get((idx1[a], idx2[b]), 0) for a, b in pairs)
    done = 0
    while done < n:
        k = min(CHUNK, n - done)
        sel = np.minimum(np.searchsorted(c, stream.block(k), side="right"), len(c) - 1)
        for s in sel.tolist():
            yield pairs[s]
        done += k


def simulate_bipartite(g: Multigraph, law: PairArrivalLaw, policy="ml", n: int = 10**6,
                       seed=0, audit: bool = False,
                       record_every: int | None = None) -> BipartiteRateEstimate:
    """Run ``n`` pair arrivals from empty buffers.

    With ``audit`` set, every step checks that no stored ``V1`` item is
    compatible with a stored ``V2`` item, that both sides hold the same number
    of items, and the per-class identity ``arrivals = departures + stored``.
    """
    if not isinstance(n, int) or n < 1:
        raise InputError("the number of steps must be a positive integer")
    policy = MatchingPolicy.parse(policy)
    s1, s2 = _sides(g, law)
    idx1 = [v for v in g.nodes if v in s1]
    idx2 = [v for v in g.nodes if v in s2]
    k = g.n
    gi = {v: g.index(v) for v in g.nodes}
    # global node indices of both sides; queues are indexed globally
    a_glob = [gi[v] for v in idx1]
    b_glob = [gi[v] for v in idx2]
    compat = [sorted(g.adjacency(x)) for x in range(k)]
    edge_id = {}
    for e, (a, b) in enumerate(g.edge_indices()):
        edge_id[(a, b)] = edge_id[(b, a)] = e
    queues = [deque() for _ in range(k)]
    counts = [0] * g.m
    arrivals = [0] * k
    departures = [0] * k
    every = record_every or max(1, math.ceil(n / 100))
    trace = []
    size1 = size2 = top1 = top2 = acc = 0
    bad = {"independence": 0, "balance": 0, "counting": 0}

    arr, pol = streams(seed)
    for t, (a, b) in enumerate(_pair_draws(arr, law, idx1, idx2, n)):
        i, j = a_glob[a], b_glob[b]
        arrivals[i] += 1
        arrivals[j] += 1
        choice = pick(policy, compat[j], queues, pol)
        j_done = choice is not None
        if j_done:
            c, pos = choice
            take(queues[c], pos)
            size1 -= 1
            counts[edge_id[(c, j)]] += 1
            departures[c] += 1
            departures[j] += 1
        choice = pick(policy, compat[i], queues, pol)
        i_done = choice is not None
        if i_done:
            c, pos = choice
            take(queues[c], pos)
            size2 -= 1
            counts[edge_id[(i, c)]] += 1
            departures[c] += 1
            departures[i] += 1
        if not i_done and not j_done and (i, j) in edge_id:
            counts[edge_id[(i, j)]] += 1
            departures[i] += 1
            departures[j] += 1
        else:
            if not i_done:
                queues[i].append(t)
                size1 += 1
                if size1 > top1:
                    top1 = size1
            if not j_done:
                queues[j].append(t)
                size2 += 1
                if size2 > top2:
                    top2 = size2
        acc += size1 + size2
        if (t + 1) % every == 0:
            trace.append((t + 1, size1 + size2))
        if audit:
            _audit(a_glob, b_glob, compat, queues, arrivals, departures, bad)

    side_of = {v: (1 if v in s1 else 2) for v in g.nodes}
    oriented = {}
    for e, (u, v) in enumerate(g.edges):
        oriented[(u, v) if side_of[u] == 1 else (v, u)] = counts[e]
    return BipartiteRateEstimate(
        graph=g, policy=policy, n=n, seed=seed, side1=tuple(idx1), side2=tuple(idx2),
        counts=oriented, arrivals={g.nodes[x]: arrivals[x] for x in range(k)},
        stored={g.nodes[x]: len(queues[x]) for x in range(k)},
        max_buffer=(top1, top2), buffer_sum=acc, trace=trace, violations=bad)


def _audit(a_glob, b_glob, compat, queues, arrivals, departures, bad):
    n1 = sum(len(queues[x]) for x in a_glob)
    n2 = sum(len(queues[x]) for x in b_glob)
    if n1 != n2:
        bad["balance"] += 1
    for x in a_glob:
        if queues[x] and any(queues[y] for y in compat[x]):
            bad["independence"] += 1
            break
    for x in a_glob + b_glob:
        if arrivals[x] != departures[x] + len(queues[x]):
            bad["counting"] += 1


def _one(args):
    return simulate_bipartite(*args)


def merge_bipartite(ests) -> BipartiteRateEstimate:
    ests = list(ests)
    if not ests:
        raise InputError("nothing to merge")
    f = ests[0]
    out = BipartiteRateEstimate(
        graph=f.graph, policy=f.policy, n=0, seed=[e.seed for e in ests],
        side1=f.side1, side2=f.side2, counts={e: 0 for e in f.counts},
        arrivals={v: 0 for v in f.arrivals}, stored={v: 0 for v in f.stored},
        max_buffer=(0, 0), buffer_sum=0, trace=list(f.trace),
        violations={key: 0 for key in f.violations}, replications=0)
    for e in ests:
        out.n += e.n
        for key, c in e.counts.items():
            out.counts[key] += c
        for v in e.arrivals:
            out.arrivals[v] += e.arrivals[v]
            out.stored[v] += e.stored[v]
        out.max_buffer = (max(out.max_buffer[0], e.max_buffer[0]),
                          max(out.max_buffer[1], e.max_buffer[1]))
        out.buffer_sum += e.buffer_sum
        for key in out.violations:
            out.violations[key] += e.violations[key]
        out.replications += e.replications
    return out


def simulate_bipartite_replications(g, law, policy="ml", n=10**6, seed=0, replications=1,
                                    workers=None) -> BipartiteRateEstimate:
    """Independent runs on spawned seeds, merged by count-summing."""
    if not isinstance(replications, int) or replications < 1:
        raise InputError("replications must be a positive integer")
    if replications == 1:
        return simulate_bipartite(g, law, policy, n, seed)
    children = np.random.SeedSequence(seed).spawn(replications)
    merged = merge_bipartite(replicate(_one, [(g, law, policy, n, ss) for ss in children], workers))
    merged.seed = seed
    return merged


def bipartite_balance_residual(est: BipartiteRateEstimate, law: PairArrivalLaw) -> dict:
    """``marginal(v) - sum of theta_b over the edges at v``, for every node ``v``."""
    out = {v: float(law.marginal1[v]) for v in est.side1}
    out.update({v: float(law.marginal2[v]) for v in est.side2})
    for (i, j), th in est.theta_b.items():
        out[i] -= th
        out[j] -= th
    return out


def conditional_measures_from_weights(g: Multigraph, alpha, v1=None) -> tuple[NodeMeasure, NodeMeasure]:
    """Per-side normalizations of the weighted measure of ``alpha``.

    ``v1`` defaults to the bipartition side holding the first node.

    >>> g = Multigraph([(1, 2), (2, 3)])
    >>> m1, m2 = conditional_measures_from_weights(g, {(1, 2): 1, (2, 3): 1}, v1={2})
    >>> dict(m1), dict(m2)
    ({2: Fraction(1, 1)}, {1: Fraction(1, 2), 3: Fraction(1, 2)})
    """
    bp = bipartition(g)
    if bp is None:
        raise InputError("graph is not bipartite")
    v1 = bp.part1 if v1 is None else frozenset(v1)
    if v1 not in (bp.part1, bp.part2):
        raise InputError("v1 must be one side of the bipartition")
    alpha = as_weights(g, alpha, "strict")
    acc = {v: 0 for v in g.nodes}
    for (u, v), x in alpha.items():
        acc[u] += x
        acc[v] += x
    t1 = sum(acc[v] for v in g.nodes if v in v1)
    t2 = sum(acc[v] for v in g.nodes if v not in v1)
    return (NodeMeasure({v: acc[v] / t1 for v in g.nodes if v in v1}),
            NodeMeasure({v: acc[v] / t2 for v in g.nodes if v not in v1}))


def weights_from_bipartite_rates(est: BipartiteRateEstimate) -> EdgeWeights:
    """Empirical weights ``alpha(i, j) = theta_b[i, j]`` (zero counts allowed)."""
    return EdgeWeights(est.graph, est.theta_b, "nonnegative")
