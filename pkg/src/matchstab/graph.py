"""Compatibility multigraphs and the structural queries used throughout the package.

A :class:`Multigraph` is undirected and connected, has at least two nodes, may
carry self-loops and never carries parallel edges. Node identifiers are kept as
given (any hashable, strings when read from a file) and mapped to dense integer
indices, which is what the bitmask-based routines work with.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Sequence

from .errors import InputError, ResourceError

Node = Hashable
Edge = tuple  # (u, v), u == v for a self-loop

MAX_ENUM_NODES = 20


class Multigraph:
    """Undirected connected multigraph with optional self-loops.

    Parameters
    ----------
    edges:
        Iterable of ``(u, v)`` pairs. ``(v, v)`` is a self-loop.
    nodes:
        Optional explicit node order. Defaults to order of first appearance
        in ``edges``. Every node must be covered by an edge.

    Examples
    --------
    >>> g = Multigraph([(1, 2), (2, 3), (3, 1)])
    >>> g.nodes
    (1, 2, 3)
    >>> sorted(neighborhood(g, {1}))
    [2, 3]
    """

    __slots__ = ("nodes", "edges", "_index", "_adj", "_nbr_mask", "_loops", "_edge_set")

    def __init__(self, edges: Iterable[tuple[Node, Node]], nodes: Sequence[Node] | None = None):
        raw = [tuple(e) for e in edges]
        for e in raw:
            if len(e) != 2:
                raise InputError(f"edge {e!r} is not a pair")
        if nodes is None:
            order: dict[Node, None] = {}
            for u, v in raw:
                order.setdefault(u, None)
                order.setdefault(v, None)
            nodes = list(order)
        nodes = tuple(nodes)
        index = {v: k for k, v in enumerate(nodes)}
        if len(index) != len(nodes):
            raise InputError("duplicate node identifiers")
        if len(nodes) < 2:
            raise InputError("a compatibility graph needs at least two nodes")

        canon: list[tuple[Node, Node]] = []
        seen: set[tuple[int, int]] = set()
        for u, v in raw:
            if u not in index or v not in index:
                bad = u if u not in index else v
                raise InputError(f"edge endpoint {bad!r} is not a declared node")
            a, b = sorted((index[u], index[v]))
            if (a, b) in seen:
                raise InputError(f"parallel edge {u!r}-{v!r}: all edges must be simple")
            seen.add((a, b))
            canon.append((nodes[a], nodes[b]))

        adj: list[list[int]] = [[] for _ in nodes]
        masks = [0] * len(nodes)
        loops = set()
        for a, b in seen:
            if a == b:
                loops.add(a)
                adj[a].append(a)
                masks[a] |= 1 << a
            else:
                adj[a].append(b)
                adj[b].append(a)
                masks[a] |= 1 << b
                masks[b] |= 1 << a
        for lst in adj:
            lst.sort()

        self.nodes = nodes
        self.edges = tuple(canon)
        self._index = index
        self._adj = tuple(tuple(lst) for lst in adj)
        self._nbr_mask = tuple(masks)
        self._loops = frozenset(loops)
        self._edge_set = frozenset(seen)

        if any(not lst for lst in adj):
            isolated = [nodes[k] for k, lst in enumerate(adj) if not lst]
            raise InputError(f"isolated node(s) {isolated!r}")
        if not _connected(self._adj):
            raise InputError("graph is not connected")

    # -- basic accessors -------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.edges)

    def index(self, v: Node) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise InputError(f"unknown node {v!r}") from None

    def adjacency(self, k: int) -> tuple[int, ...]:
        """Neighbor indices of node index ``k`` (contains ``k`` itself for a self-loop)."""
        return self._adj[k]

    def neighbor_mask(self, k: int) -> int:
        return self._nbr_mask[k]

    @property
    def loop_nodes(self) -> frozenset:
        return frozenset(self.nodes[k] for k in self._loops)

    def has_loop(self, v: Node) -> bool:
        return self.index(v) in self._loops

    def has_edge(self, u: Node, v: Node) -> bool:
        a, b = sorted((self.index(u), self.index(v)))
        return (a, b) in self._edge_set

    def edge_key(self, u: Node, v: Node) -> tuple[Node, Node]:
        """Canonical orientation of edge ``{u, v}``; raises if it is not an edge."""
        a, b = sorted((self.index(u), self.index(v)))
        if (a, b) not in self._edge_set:
            raise InputError(f"{u!r}-{v!r} is not an edge")
        return self.nodes[a], self.nodes[b]

    def edge_indices(self) -> Iterator[tuple[int, int]]:
        for u, v in self.edges:
            yield self._index[u], self._index[v]

    def degree(self, v: Node) -> int:
        return len(self._adj[self.index(v)])

    # -- subsets as bitmasks ---------------------------------------------

    def mask(self, subset: Iterable[Node]) -> int:
        m = 0
        for v in subset:
            m |= 1 << self.index(v)
        return m

    def subset(self, mask: int) -> frozenset:
        return frozenset(self.nodes[k] for k in range(self.n) if mask >> k & 1)

    def neighborhood_mask(self, mask: int) -> int:
        out = 0
        k = 0
        while mask:
            if mask & 1:
                out |= self._nbr_mask[k]
            mask >>= 1
            k += 1
        return out

    # -- derived graphs --------------------------------------------------

    def with_loops(self, at: Iterable[Node]) -> "Multigraph":
        """Copy of the graph with a self-loop added at every node of ``at`` lacking one."""
        extra = [(v, v) for v in at if not self.has_loop(v)]
        return Multigraph(list(self.edges) + extra, nodes=self.nodes)

    def __eq__(self, other):
        if not isinstance(other, Multigraph):
            return NotImplemented
        return set(self.nodes) == set(other.nodes) and _edge_multiset(self) == _edge_multiset(other)

    def __hash__(self):
        return hash((frozenset(self.nodes), frozenset(_edge_multiset(self))))

    def __repr__(self):
        return f"Multigraph(nodes={list(self.nodes)!r}, edges={list(self.edges)!r})"


def _edge_multiset(g: Multigraph) -> set[frozenset]:
    return {frozenset(e) for e in g.edges}


def _connected(adj: Sequence[Sequence[int]]) -> bool:
    seen = {0}
    todo = [0]
    while todo:
        u = todo.pop()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return len(seen) == len(adj)


# ---------------------------------------------------------------------------
# structural queries
# ---------------------------------------------------------------------------

def neighborhood(g: Multigraph, u: Iterable[Node]) -> frozenset:
    """Set of nodes adjacent to some node of ``u``; a looped node of ``u`` is its own neighbor."""
    return g.subset(g.neighborhood_mask(g.mask(u)))


@dataclass(frozen=True)
class Bipartition:
    part1: frozenset
    part2: frozenset

    def side_of(self, v: Node) -> int:
        return 1 if v in self.part1 else 2

    def swapped(self) -> "Bipartition":
        return Bipartition(self.part2, self.part1)


def bipartition(g: Multigraph) -> Bipartition | None:
    """Two-coloring of ``g`` with the first node in ``part1``, or ``None`` if ``g`` is not bipartite."""
    if g._loops:
        return None
    color = [-1] * g.n
    color[0] = 0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for w in g.adjacency(u):
            if color[w] < 0:
                color[w] = 1 - color[u]
                queue.append(w)
            elif color[w] == color[u]:
                return None
    p1 = frozenset(g.nodes[k] for k in range(g.n) if color[k] == 0)
    p2 = frozenset(g.nodes[k] for k in range(g.n) if color[k] == 1)
    return Bipartition(p1, p2)


def _guard(g: Multigraph) -> None:
    if g.n > MAX_ENUM_NODES:
        raise ResourceError(f"subset enumeration limited to {MAX_ENUM_NODES} nodes, got {g.n}")


def independent_set_masks(g: Multigraph) -> list[int]:
    """Bitmasks of all independent sets, ordered by size then by sorted node indices."""
    _guard(g)
    out = []
    for mask in range(1, 1 << g.n):
        if g.neighborhood_mask(mask) & mask == 0:
            out.append(mask)
    out.sort(key=lambda m: (bin(m).count("1"), _index_tuple(m)))
    return out


def _index_tuple(mask: int) -> tuple[int, ...]:
    return tuple(k for k in range(mask.bit_length()) if mask >> k & 1)


def independent_sets(g: Multigraph) -> list[frozenset]:
    """All nonempty independent sets. A node carrying a self-loop belongs to none of them."""
    return [g.subset(m) for m in independent_set_masks(g)]


# ---------------------------------------------------------------------------
# topology classification
# ---------------------------------------------------------------------------

class Topology(str, enum.Enum):
    TREE = "Tree"
    ODD_CYCLE = "OddCycle"
    EVEN_CYCLE = "EvenCycle"
    TREE_PLUS_ODD_CYCLE_EDGE = "TreePlusOddCycleEdge"
    TREE_PLUS_EVEN_CYCLE_EDGE = "TreePlusEvenCycleEdge"
    TREE_PLUS_SELF_LOOP = "TreePlusSelfLoop"
    OTHER = "Other"


@dataclass(frozen=True)
class TopologyClass:
    """Result of :func:`classify_topology`.

    ``cycle`` lists the cycle nodes in walking order (a one-element tuple holding
    the looped node for ``TreePlusSelfLoop``). ``attachments`` maps every cycle
    node of degree > 2 to the node set of the tree hanging from it (root excluded).
    """

    tag: Topology
    cycle: tuple = ()
    attachments: dict = field(default_factory=dict)


def classify_topology(g: Multigraph) -> TopologyClass:
    loops = len(g._loops)
    plain = g.m - loops
    if loops == 0 and plain == g.n - 1:
        return TopologyClass(Topology.TREE)
    if loops == 1 and plain == g.n - 1:
        (r,) = g._loops
        return TopologyClass(Topology.TREE_PLUS_SELF_LOOP, (g.nodes[r],), {})
    if loops or plain != g.n:
        return TopologyClass(Topology.OTHER)

    # unicyclic: peel leaves until only the cycle is left
    deg = [len(a) for a in g._adj]
    alive = [True] * g.n
    leaves = [k for k in range(g.n) if deg[k] == 1]
    while leaves:
        u = leaves.pop()
        alive[u] = False
        for w in g._adj[u]:
            if alive[w]:
                deg[w] -= 1
                if deg[w] == 1:
                    leaves.append(w)
    on_cycle = [k for k in range(g.n) if alive[k]]
    start = on_cycle[0]
    seq = [start]
    prev, cur = None, start
    while True:
        nxt = min(w for w in g._adj[cur] if alive[w] and w != prev)
        if nxt == start:
            break
        seq.append(nxt)
        prev, cur = cur, nxt
        if len(seq) > len(on_cycle):  # pragma: no cover - defensive
            raise AssertionError("cycle walk did not close")
    cycle = tuple(g.nodes[k] for k in seq)
    odd = len(seq) % 2 == 1
    if len(seq) == g.n:
        return TopologyClass(Topology.ODD_CYCLE if odd else Topology.EVEN_CYCLE, cycle, {})

    attachments = {}
    cyc = set(seq)
    for r in seq:
        hanging = set()
        todo = [w for w in g._adj[r] if w not in cyc]
        while todo:
            u = todo.pop()
            if u in hanging:
                continue
            hanging.add(u)
            todo.extend(w for w in g._adj[u] if w not in cyc and w not in hanging)
        if hanging:
            attachments[g.nodes[r]] = frozenset(g.nodes[k] for k in hanging)
    tag = Topology.TREE_PLUS_ODD_CYCLE_EDGE if odd else Topology.TREE_PLUS_EVEN_CYCLE_EDGE
    return TopologyClass(tag, cycle, attachments)


# ---------------------------------------------------------------------------
# edge-list files
# ---------------------------------------------------------------------------

def parse_graph(text: str) -> Multigraph:
    """Parse the whitespace-separated edge-list format (``u v`` per line, ``#`` comments)."""
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise InputError(f"line {lineno}: expected 'u v', got {line!r}")
        edges.append((parts[0], parts[1]))
    if not edges:
        raise InputError("graph file contains no edges")
    return Multigraph(edges)


def serialize_graph(g: Multigraph) -> str:
    return "".join(f"{u} {v}\n" for u, v in g.edges)


def read_graph(path) -> Multigraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())
