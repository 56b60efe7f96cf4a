"""Discrete-time simulation of the general stochastic matching model.

One item arrives per step, its class drawn IID from a normalized node measure.
It is matched right away with a stored compatible item chosen by the policy,
or stored when none is compatible. Counting the matches of every edge over
``n`` steps estimates the matching rates; twice the loop rate plus the edge
rates recovers the arrival law when the model is stable.

Random numbers
--------------
All randomness comes from numpy's PCG64 bit generator. The master ``seed`` is
fed to ``numpy.random.SeedSequence`` and spawned into two children: the first
drives arrivals, the second drives policy decisions (tie breaks for ML and the
item choice of the random policy). Both streams are consumed as blocks of
doubles in ``[0, 1)`` (``Generator.random``); an arrival class is the first
index whose cumulative probability exceeds the draw, a choice among ``k``
options takes index ``floor(k * u)``. Replication ``r`` of a batch of ``R``
uses ``SeedSequence(seed).spawn(R)[r]`` as its master.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .graph import Multigraph
from .stability import EdgeWeights, as_measure, normalize

CHUNK = 1 << 14


class MatchingPolicy(str, enum.Enum):
    """Admissible matching policies.

    ``FCFM`` picks the oldest compatible stored item. ``ML`` picks the
    compatible class holding the most stored items (ties uniformly at random)
    and its oldest item. ``RANDOM`` picks uniformly among all compatible stored
    items.
    """

    FCFM = "fcfm"
    ML = "ml"
    RANDOM = "random"

    @classmethod
    def parse(cls, x) -> "MatchingPolicy":
        if isinstance(x, cls):
            return x
        try:
            return cls(str(x).lower())
        except ValueError:
            raise InputError(f"unknown policy {x!r}; expected fcfm, ml or random") from None


class UniformStream:
    """Buffered doubles in ``[0, 1)`` from a PCG64 stream."""

    __slots__ = ("_gen", "_buf", "_pos")

    def __init__(self, seed_seq: np.random.SeedSequence):
        self._gen = np.random.Generator(np.random.PCG64(seed_seq))
        self._buf = []
        self._pos = 0

    def block(self, k: int) -> np.ndarray:
        return self._gen.random(k)

    def next(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self._gen.random(CHUNK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


def streams(seed) -> tuple[UniformStream, UniformStream]:
    """Arrival and policy streams split from a master seed (int or SeedSequence)."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    arr, pol = ss.spawn(2)
    return UniformStream(arr), UniformStream(pol)


def class_draws(stream: UniformStream, cdf: np.ndarray, n: int):
    """Yield ``n`` class indices, drawn in blocks from ``stream``."""
    done = 0
    while done < n:
        k = min(CHUNK, n - done)
        idx = np.searchsorted(cdf, stream.block(k), side="right")
        np.minimum(idx, len(cdf) - 1, out=idx)
        yield from idx.tolist()
        done += k


def cdf_of(probs) -> np.ndarray:
    c = np.cumsum(np.asarray([float(p) for p in probs], dtype=float))
    c[-1] = 1.0
    return c


def pick(policy: MatchingPolicy, cands, queues, pol: UniformStream):
    """Choose ``(class, position)`` of the stored item to match, or ``None``.

    ``cands`` lists the compatible classes in a fixed order.
    """
    if policy is MatchingPolicy.FCFM:
        best, head = -1, None
        for c in cands:
            q = queues[c]
            if q and (head is None or q[0] < head):
                best, head = c, q[0]
        return None if best < 0 else (best, 0)
    if policy is MatchingPolicy.ML:
        top, ties = 0, []
        for c in cands:
            k = len(queues[c])
            if k > top:
                top, ties = k, [c]
            elif k == top and k:
                ties.append(c)
        if not ties:
            return None
        if len(ties) == 1:
            return ties[0], 0
        return ties[int(pol.next() * len(ties))], 0
    total = 0
    for c in cands:
        total += len(queues[c])
    if not total:
        return None
    r = int(pol.next() * total)
    for c in cands:
        k = len(queues[c])
        if r < k:
            return c, r
        r -= k
    raise AssertionError("unreachable")


def take(queue: deque, pos: int) -> int:
    if pos == 0:
        return queue.popleft()
    item = queue[pos]
    del queue[pos]
    return item


@dataclass
class RateEstimate:
    """Match counts of a simulation run (or of merged replications).

    ``counts[e]`` is the number of matches along edge ``e`` (a key of
    ``graph.edges``); ``theta`` divides by the number of steps.
    """

    graph: Multigraph
    policy: MatchingPolicy
    n: int
    seed: object
    counts: dict
    arrivals: dict
    stored: dict
    max_buffer: int
    buffer_sum: int
    trace: list = field(default_factory=list)
    violations: dict = field(default_factory=lambda: {"independence": 0, "counting": 0})
    replications: int = 1

    @property
    def theta(self) -> dict:
        return {e: c / self.n for e, c in self.counts.items()}

    @property
    def mean_buffer(self) -> float:
        return self.buffer_sum / self.n

    def same_run(self, other: "RateEstimate") -> bool:
        """True when both runs produced identical counts, buffers and traces."""
        return (self.counts == other.counts and self.arrivals == other.arrivals
                and self.stored == other.stored and self.trace == other.trace
                and self.max_buffer == other.max_buffer
                and self.buffer_sum == other.buffer_sum)


def simulate_general(g: Multigraph, mu, policy="fcfm", n: int = 10**6, seed=0,
                     audit: bool = False, record_every: int | None = None) -> RateEstimate:
    """Run ``n`` arrivals of the general matching model from an empty buffer.

    ``mu`` is normalized if it does not sum to 1. With ``audit`` set, every step
    checks that the stored classes form an independent set and that
    ``arrivals(i) = departures(i) + stored(i)``; failures are counted in
    ``violations``. The buffer size is sampled every ``record_every`` steps
    (default ``ceil(n / 100)``).
    """
    if not isinstance(n, int) or n < 1:
        raise InputError("the number of steps must be a positive integer")
    policy = MatchingPolicy.parse(policy)
    mu = as_measure(g, mu)
    if mu.total != 1:
        mu = normalize(mu)
    k = g.n
    cdf = cdf_of(mu[v] for v in g.nodes)
    edge_id = {}
    for e, (a, b) in enumerate(g.edge_indices()):
        edge_id[(a, b)] = edge_id[(b, a)] = e
    compat = [sorted(g.adjacency(i)) for i in range(k)]
    queues = [deque() for _ in range(k)]
    counts = [0] * g.m
    arrivals = [0] * k
    departures = [0] * k
    every = record_every or max(1, math.ceil(n / 100))
    trace = []
    bad_indep = bad_count = 0
    size = top = acc = 0

    arr, pol = streams(seed)
    for t, i in enumerate(class_draws(arr, cdf, n)):
        arrivals[i] += 1
        choice = pick(policy, compat[i], queues, pol)
        if choice is None:
            queues[i].append(t)
            size += 1
            if size > top:
                top = size
        else:
            c, pos = choice
            take(queues[c], pos)
            size -= 1
            counts[edge_id[(i, c)]] += 1
            departures[i] += 1
            departures[c] += 1
        acc += size
        if (t + 1) % every == 0:
            trace.append((t + 1, size))
        if audit:
            for c in range(k):
                if queues[c]:
                    for d in compat[c]:
                        if (d != c and queues[d]) or (d == c and len(queues[c]) > 1):
                            bad_indep += 1
                            break
                if arrivals[c] != departures[c] + len(queues[c]):
                    bad_count += 1

    return RateEstimate(
        graph=g, policy=policy, n=n, seed=seed,
        counts={g.edges[e]: counts[e] for e in range(g.m)},
        arrivals={g.nodes[i]: arrivals[i] for i in range(k)},
        stored={g.nodes[i]: len(queues[i]) for i in range(k)},
        max_buffer=top, buffer_sum=acc, trace=trace,
        violations={"independence": bad_indep, "counting": bad_count})


def merge_estimates(ests) -> RateEstimate:
    """Pool replications by summing their counts."""
    ests = list(ests)
    if not ests:
        raise InputError("nothing to merge")
    first = ests[0]
    out = RateEstimate(
        graph=first.graph, policy=first.policy, n=0, seed=[e.seed for e in ests],
        counts={e: 0 for e in first.counts}, arrivals={v: 0 for v in first.arrivals},
        stored={v: 0 for v in first.stored}, max_buffer=0, buffer_sum=0,
        violations={"independence": 0, "counting": 0}, replications=0)
    for e in ests:
        out.n += e.n
        for key in e.counts:
            out.counts[key] += e.counts[key]
        for v in e.arrivals:
            out.arrivals[v] += e.arrivals[v]
            out.stored[v] += e.stored[v]
        out.max_buffer = max(out.max_buffer, e.max_buffer)
        out.buffer_sum += e.buffer_sum
        for key in out.violations:
            out.violations[key] += e.violations[key]
        out.replications += e.replications
    out.trace = list(first.trace)
    return out


def _one(args):
    return simulate_general(*args)


def replicate(runner, arg_list, workers: int | None = None):
    if workers and workers > 1 and len(arg_list) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(runner, arg_list))
    return [runner(a) for a in arg_list]


def simulate_replications(g: Multigraph, mu, policy="fcfm", n: int = 10**6, seed=0,
                          replications: int = 1, workers: int | None = None) -> RateEstimate:
    """Independent runs on spawned seeds, merged by count-summing.

    Results do not depend on ``workers``.
    """
    if not isinstance(replications, int) or replications < 1:
        raise InputError("replications must be a positive integer")
    if replications == 1:
        return simulate_general(g, mu, policy, n, seed)
    children = np.random.SeedSequence(seed).spawn(replications)
    args = [(g, mu, policy, n, ss) for ss in children]
    merged = merge_estimates(replicate(_one, args, workers))
    merged.seed = seed
    return merged


def balance_residual(est: RateEstimate, mu) -> dict:
    """``mu(i) - sum_j (1 + [i = j]) theta[i, j]`` for every node ``i``."""
    mu = as_measure(est.graph, mu)
    if mu.total != 1:
        mu = normalize(mu)
    out = {v: float(mu[v]) for v in est.graph.nodes}
    for (u, v), th in est.theta.items():
        if u == v:
            out[u] -= 2 * th
        else:
            out[u] -= th
            out[v] -= th
    return out


def weights_from_rates(est: RateEstimate) -> EdgeWeights:
    """Empirical weights ``(1 + [i = j]) theta[i, j]``; zero counts are allowed."""
    return EdgeWeights(est.graph, {(u, v): (2.0 if u == v else 1.0) * th
                                   for (u, v), th in est.theta.items()}, "nonnegative")


@dataclass(frozen=True)
class StabilityReport:
    """Heuristic reading of the buffer trajectory. Not a proof of (in)stability."""

    slope: float
    threshold: float
    samples: list
    max_buffer: int

    @property
    def verdict(self) -> str:
        return "divergent-looking" if self.slope > self.threshold else "stable-looking"

    def to_json(self) -> dict:
        return {"slope": self.slope, "verdict": self.verdict, "max_buffer": self.max_buffer}


def trace_slope(trace) -> float:
    """Least-squares slope of buffer size against time (items per step)."""
    if len(trace) < 2:
        return 0.0
    t = np.array([a for a, _ in trace], dtype=float)
    s = np.array([b for _, b in trace], dtype=float)
    return float(np.polyfit(t, s, 1)[0])


def stability_diagnostic(g: Multigraph, mu, policy="fcfm", n: int = 10**5, seed=0,
                         threshold: float = 1e-3) -> StabilityReport:
    """Fit a line to the buffer size sampled every ``ceil(n / 100)`` steps.

    A slope above ``threshold`` reads as divergence; anything else as
    stability. Both readings are heuristics on a finite run.
    """
    est = simulate_general(g, mu, policy, n, seed)
    return StabilityReport(trace_slope(est.trace), threshold, est.trace, est.max_buffer)

