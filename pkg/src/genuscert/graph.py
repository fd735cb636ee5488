"""Simple connected graphs with integer-ish vertex labels.

The network being certified uses integer IDs from {1, ..., n^2}.  Graphs
produced by surgery reuse this class with freshly allocated integer tokens,
so everything here is generic over hashable, sortable vertex labels.
"""

from __future__ import annotations

from collections import deque


class Graph:
    """Immutable simple graph: vertex set plus symmetric adjacency."""

    __slots__ = ("_adj", "_vertices")

    def __init__(self, adjacency):
        adj = {}
        for v, nbrs in adjacency.items():
            ns = frozenset(nbrs)
            if v in ns:
                raise ValueError(f"self-loop at {v}")
            adj[v] = ns
        for v, ns in adj.items():
            for w in ns:
                if w not in adj or v not in adj[w]:
                    raise ValueError(f"asymmetric adjacency at edge {{{v}, {w}}}")
        self._adj = adj
        self._vertices = frozenset(adj)

    @classmethod
    def from_edges(cls, edges, vertices=()):
        adj = {v: set() for v in vertices}
        for u, v in edges:
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        return cls(adj)

    @property
    def vertices(self):
        return self._vertices

    def neighbors(self, v):
        return self._adj[v]

    def degree(self, v):
        return len(self._adj[v])

    def has_edge(self, u, v):
        return u in self._adj and v in self._adj[u]

    def edges(self):
        seen = set()
        for v in self._adj:
            for w in self._adj[v]:
                e = frozenset((v, w))
                if e not in seen:
                    seen.add(e)
                    yield e

    def num_edges(self):
        return sum(len(ns) for ns in self._adj.values()) // 2

    def __len__(self):
        return len(self._vertices)

    def __contains__(self, v):
        return v in self._vertices

    def __eq__(self, other):
        return isinstance(other, Graph) and self._adj == other._adj

    def __hash__(self):
        return hash(self._vertices)

    def __repr__(self):
        return f"Graph(n={len(self)}, m={self.num_edges()})"

    def is_connected(self):
        if not self._vertices:
            return True
        start = next(iter(self._vertices))
        seen = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in self._adj[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == len(self._vertices)

    def without_vertices(self, drop):
        drop = set(drop)
        return Graph({v: self._adj[v] - drop for v in self._vertices if v not in drop})


def validate_network(g: Graph):
    """Check the invariants required of an input network.

    IDs must be positive integers within {1, ..., n^2}, the graph simple
    (guaranteed by construction) and connected.
    """
    n = len(g)
    for v in g.vertices:
        if not isinstance(v, int) or v < 1 or v > n * n:
            raise ValueError(f"vertex ID {v!r} outside {{1, ..., {n * n}}}")
    if not g.is_connected():
        raise ValueError("graph is not connected")


def spanning_tree(g: Graph, root):
    """BFS spanning tree; returns (parent map, distance map).

    Neighbors are explored in sorted order so the tree is reproducible.
    The root has parent ``None`` and distance 0.
    """
    if root not in g:
        raise ValueError(f"root {root!r} not a vertex")
    parent = {root: None}
    dist = {root: 0}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in sorted(g.neighbors(v)):
            if w not in parent:
                parent[w] = v
                dist[w] = dist[v] + 1
                queue.append(w)
    if len(parent) != len(g):
        raise ValueError("graph is not connected")
    return parent, dist


def degeneracy_order(g: Graph):
    """Greedy minimum-degree elimination; returns (ordering, d).

    ``ordering`` lists vertices in removal order and ``d`` is the largest
    degree seen at removal time.  Lowest label breaks degree ties.
    Reinserting in reverse order, every vertex has at most ``d`` neighbors
    already present.
    """
    remaining = {v: set(g.neighbors(v)) for v in g.vertices}
    order = []
    d = 0
    while remaining:
        v = min(remaining, key=lambda u: (len(remaining[u]), u))
        d = max(d, len(remaining[v]))
        order.append(v)
        for w in remaining[v]:
            remaining[w].discard(v)
        del remaining[v]
    return order, d
