"""Shortest-augmenting-path maximum flow on exact rational capacities."""

from __future__ import annotations

from collections import deque
from fractions import Fraction


class FlowNetwork:
    """Directed capacitated network on hashable vertices.

    ``INF`` capacities are stored as an explicit marker and replaced by a finite
    bound (larger than any achievable flow) when the flow is computed.
    """

    INF = object()

    def __init__(self, source, sink):
        self.source = source
        self.sink = sink
        self.capacity: dict = {}
        self._out: dict = {source: [], sink: []}

    def add_arc(self, u, v, cap):
        if cap is not self.INF and cap < 0:
            raise ValueError("capacities must be nonnegative")
        self.capacity[(u, v)] = cap
        self._out.setdefault(u, [])
        self._out.setdefault(v, [])
        self._out[u].append(v)
        self._out[v].append(u)

    @property
    def vertices(self):
        return list(self._out)

    def finite_bound(self) -> Fraction:
        """Sum of the finite capacities leaving the source, plus one."""
        return sum((c for (u, _), c in self.capacity.items()
                    if u == self.source and c is not self.INF), Fraction(0)) + 1


def max_flow(net: FlowNetwork) -> tuple[Fraction, dict, frozenset]:
    """Edmonds-Karp. Returns ``(value, flow on each arc, source side of a minimum cut)``."""
    big = net.finite_bound()
    cap = {a: (big if c is FlowNetwork.INF else Fraction(c)) for a, c in net.capacity.items()}
    flow = {a: Fraction(0) for a in cap}

    def residual(u, v):
        return cap.get((u, v), 0) - flow.get((u, v), 0) + flow.get((v, u), 0)

    s, t = net.source, net.sink
    total = Fraction(0)
    while True:
        parent = {s: None}
        queue = deque([s])
        while queue and t not in parent:
            u = queue.popleft()
            for v in net._out[u]:
                if v not in parent and residual(u, v) > 0:
                    parent[v] = u
                    queue.append(v)
        if t not in parent:
            break
        path = []
        v = t
        while parent[v] is not None:
            path.append((parent[v], v))
            v = parent[v]
        push = min(residual(u, v) for u, v in path)
        for u, v in path:
            # cancel reverse flow first, then use forward capacity
            back = min(flow.get((v, u), 0), push)
            if back:
                flow[(v, u)] -= back
            if push - back:
                flow[(u, v)] += push - back
        total += push
    return total, flow, frozenset(parent)
