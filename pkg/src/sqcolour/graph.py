"""Multigraph carrier and the structural transforms used throughout the package.

Vertices are dense integers ``0..n-1``; edges are identified by their position
in the edge list, so parallel edges are distinct objects with distinct ids.
Graphs are treated as immutable: every transform returns a new graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence


class MultiGraph:
    """Loop-free multigraph with insertion-ordered edge ids."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        self.n = int(n)
        edge_list = []
        incidence: list[list[int]] = [[] for _ in range(self.n)]
        for eid, (u, v) in enumerate(edges):
            u, v = int(u), int(v)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge {eid} = ({u}, {v}) has an endpoint outside 0..{self.n - 1}")
            if u == v:
                raise ValueError(f"edge {eid} is a loop at vertex {u}")
            edge_list.append((u, v))
            incidence[u].append(eid)
            incidence[v].append(eid)
        self.edges: tuple[tuple[int, int], ...] = tuple(edge_list)
        self._incidence = tuple(tuple(ids) for ids in incidence)

    def __repr__(self):
        return f"MultiGraph(n={self.n}, m={self.m})"

    def __eq__(self, other):
        if not isinstance(other, MultiGraph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    def vertices(self) -> range:
        return range(self.n)

    def incident(self, v: int) -> tuple[int, ...]:
        """Edge ids incident to ``v`` (each parallel edge listed once)."""
        return self._incidence[v]

    def degree(self, v: int) -> int:
        return len(self._incidence[v])

    def other(self, eid: int, v: int) -> int:
        u, w = self.edges[eid]
        return w if u == v else u

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(ids) for ids in self._incidence)

    @cached_property
    def max_degree(self) -> int:
        return max(self.degrees, default=0)

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        """Distinct neighbour sets (multiplicity collapsed)."""
        return tuple(
            frozenset(self.other(e, v) for e in self._incidence[v]) for v in range(self.n)
        )

    def neighbours(self, v: int) -> frozenset[int]:
        return self.adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def multiplicity(self, u: int, v: int) -> int:
        return sum(1 for e in self._incidence[u] if self.other(e, u) == v)

    def is_simple(self) -> bool:
        return len({(min(u, v), max(u, v)) for u, v in self.edges}) == self.m

    def simple_edges(self) -> list[tuple[int, int]]:
        """Sorted list of distinct vertex pairs ``u < v`` joined by at least one edge."""
        return sorted({(min(u, v), max(u, v)) for u, v in self.edges})

    def e_between(self, U: Iterable[int], W: Iterable[int]) -> int:
        """Edge count between ``U`` and ``W``; an edge inside ``U & W`` counts twice."""
        U, W = set(U), set(W)
        return sum((u in U and w in W) + (w in U and u in W) for u, w in self.edges)

    def bfs_distances(self, source: int, cutoff: int | None = None) -> dict[int, int]:
        dist = {source: 0}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            if cutoff is not None and dist[u] >= cutoff:
                continue
            for w in self.adjacency[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def induced(self, keep: Sequence[int]) -> tuple["MultiGraph", list[int]]:
        """Induced sub-multigraph on ``keep``; returns the graph and its vertex labels."""
        labels = sorted(set(keep))
        index = {v: i for i, v in enumerate(labels)}
        edges = [(index[u], index[v]) for u, v in self.edges if u in index and v in index]
        return MultiGraph(len(labels), edges), labels

    @classmethod
    def from_simple(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "MultiGraph":
        """Simple graph from vertex pairs, deduplicated and sorted."""
        return cls(n, sorted({(min(u, v), max(u, v)) for u, v in pairs}))


def square(G: MultiGraph) -> MultiGraph:
    """Simple graph joining every pair of vertices at distance 1 or 2 in ``G``."""
    pairs = set()
    adj = G.adjacency
    for v in G.vertices():
        reach = set(adj[v])
        for w in adj[v]:
            reach |= adj[w]
        reach.discard(v)
        pairs.update((v, u) for u in reach if v < u)
    return MultiGraph(G.n, sorted(pairs))


def distance_classes(G: MultiGraph) -> tuple[list[set[int]], list[set[int]]]:
    """Per-vertex sets of vertices at distance exactly 1 and exactly 2."""
    adj = G.adjacency
    near = [set(adj[v]) for v in G.vertices()]
    far = []
    for v in G.vertices():
        second = set()
        for w in adj[v]:
            second |= adj[w]
        second -= near[v]
        second.discard(v)
        far.append(second)
    return near, far


@dataclass(frozen=True)
class SubdivisionMap:
    """``H*``: every edge of ``base`` subdivided once.

    ``core[i]`` is the vertex of ``result`` placed in the middle of base edge ``i``.
    Base vertices keep their ids.
    """

    base: MultiGraph
    result: MultiGraph
    core: tuple[int, ...]

    def edge_of(self, core_vertex: int) -> int:
        return core_vertex - self.base.n

    def contract_core(self) -> MultiGraph:
        """Contract every core vertex onto its first endpoint; recovers ``base``."""
        log = MinorLog()
        for i, c in enumerate(self.core):
            u, _ = self.base.edges[i]
            # the two result edges of base edge i are 2i and 2i + 1; 2i joins u and c
            log.contract(2 * i, keep=u)
        return apply_minor_ops(self.result, log)


def subdivide(H: MultiGraph) -> SubdivisionMap:
    core = tuple(range(H.n, H.n + H.m))
    edges = []
    for i, (u, v) in enumerate(H.edges):
        edges.append((u, core[i]))
        edges.append((core[i], v))
    return SubdivisionMap(H, MultiGraph(H.n + H.m, edges), core)


def line_graph(H: MultiGraph) -> MultiGraph:
    """Simple graph on edge ids of ``H``; two ids are adjacent iff the edges share an endpoint."""
    pairs = set()
    for v in H.vertices():
        ids = H.incident(v)
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                e, f = ids[a], ids[b]
                pairs.add((min(e, f), max(e, f)))
    return MultiGraph(H.m, sorted(pairs))


# --------------------------------------------------------------------------
# Minor operations
# --------------------------------------------------------------------------


@dataclass
class MinorLog:
    """Ordered minor operations referring to original vertex labels and edge ids.

    Edges created by ``add_edge`` receive fresh ids ``m, m+1, ...`` in creation
    order, where ``m`` is the edge count of the graph the log is applied to.
    Contraction keeps the ids of the surviving edges and re-points them to the
    kept endpoint; the contracted edge and any edges it would turn into loops
    disappear.
    """

    ops: list[tuple] = field(default_factory=list)

    def delete_vertex(self, v: int) -> "MinorLog":
        self.ops.append(("delete-vertex", v))
        return self

    def delete_edge(self, e: int) -> "MinorLog":
        self.ops.append(("delete-edge", e))
        return self

    def contract(self, e: int, keep: int | None = None) -> "MinorLog":
        self.ops.append(("contract-edge", e, keep))
        return self

    def add_edge(self, u: int, v: int) -> "MinorLog":
        self.ops.append(("add-edge", u, v))
        return self

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)


class MinorLogError(ValueError):
    """A log entry references a vertex or edge that is not live, or an uncertified add-edge."""


class MinorWorkspace:
    """Mutable multigraph on original labels that records applied operations."""

    def __init__(self, G: MultiGraph):
        self.alive = set(G.vertices())
        self.edges: dict[int, tuple[int, int]] = dict(enumerate(G.edges))
        self.incidence: dict[int, set[int]] = {v: set(G.incident(v)) for v in G.vertices()}
        self.next_id = G.m
        self.log = MinorLog()
        # pairs that may be joined by add-edge: neighbours of a deleted degree-2 vertex
        self._licensed: set[frozenset[int]] = set()

    def _check_vertex(self, v):
        if v not in self.alive:
            raise MinorLogError(f"vertex {v} is not live")

    def _check_edge(self, e):
        if e not in self.edges:
            raise MinorLogError(f"edge {e} is not live")

    def neighbours(self, v: int) -> set[int]:
        out = set()
        for e in self.incidence[v]:
            a, b = self.edges[e]
            out.add(b if a == v else a)
        return out

    def degree(self, v: int) -> int:
        return len(self.incidence[v])

    def edges_between(self, u: int, v: int) -> list[int]:
        return sorted(e for e in self.incidence[u] if v in self.edges[e])

    def delete_edge(self, e: int):
        self._check_edge(e)
        a, b = self.edges.pop(e)
        self.incidence[a].discard(e)
        self.incidence[b].discard(e)
        self.log.delete_edge(e)

    def delete_vertex(self, v: int):
        self._check_vertex(v)
        nbrs = self.neighbours(v)
        if self.degree(v) == 2 and len(nbrs) == 2:
            self._licensed.add(frozenset(nbrs))
        for e in sorted(self.incidence[v]):
            a, b = self.edges.pop(e)
            other = b if a == v else a
            self.incidence[other].discard(e)
        del self.incidence[v]
        self.alive.discard(v)
        self.log.delete_vertex(v)

    def contract(self, e: int, keep: int | None = None):
        self._check_edge(e)
        a, b = self.edges[e]
        if keep is None:
            keep = a
        if keep not in (a, b):
            raise MinorLogError(f"vertex {keep} is not an endpoint of edge {e}")
        gone = b if keep == a else a
        for f in sorted(self.incidence[gone]):
            x, y = self.edges[f]
            other = y if x == gone else x
            if other == keep:
                self.edges.pop(f)
                self.incidence[keep].discard(f)
            else:
                self.edges[f] = (keep, other) if x == gone else (other, keep)
                self.incidence[keep].add(f)
        del self.incidence[gone]
        self.alive.discard(gone)
        self.log.contract(e, keep)

    def add_edge(self, u: int, v: int) -> int:
        self._check_vertex(u)
        self._check_vertex(v)
        if u == v:
            raise MinorLogError("add-edge would create a loop")
        if frozenset((u, v)) not in self._licensed:
            raise MinorLogError(
                f"add-edge {u} {v} does not join the two neighbours of a deleted degree-2 vertex"
            )
        eid = self.next_id
        self.next_id += 1
        self.edges[eid] = (u, v)
        self.incidence[u].add(eid)
        self.incidence[v].add(eid)
        self.log.add_edge(u, v)
        return eid

    def result(self) -> tuple[MultiGraph, list[int]]:
        labels = sorted(self.alive)
        index = {v: i for i, v in enumerate(labels)}
        edges = [(index[a], index[b]) for _, (a, b) in sorted(self.edges.items())]
        return MultiGraph(len(labels), edges), labels


def apply_minor_ops_labelled(G: MultiGraph, log: MinorLog) -> tuple[MultiGraph, list[int]]:
    """Replay ``log`` on ``G``; returns the relabelled result and the surviving original labels."""
    ws = MinorWorkspace(G)
    for op in log:
        kind = op[0]
        if kind == "delete-vertex":
            ws.delete_vertex(op[1])
        elif kind == "delete-edge":
            ws.delete_edge(op[1])
        elif kind == "contract-edge":
            ws.contract(op[1], op[2] if len(op) > 2 else None)
        elif kind == "add-edge":
            ws.add_edge(op[1], op[2])
        else:
            raise MinorLogError(f"unknown operation {kind!r}")
    return ws.result()


def apply_minor_ops(G: MultiGraph, log: MinorLog) -> MultiGraph:
    return apply_minor_ops_labelled(G, log)[0]


def degeneracy_order(G: MultiGraph) -> tuple[list[int], int]:
    """Ordering ``v_1..v_n`` where each vertex has at most ``q`` earlier neighbours.

    Built by repeatedly removing a minimum-degree vertex (ties to the smallest id)
    and reversing the removal sequence; ``q`` is the largest degree seen at
    removal time, which is the degeneracy. Degrees count distinct neighbours.
    """
    adj = [set(a) for a in G.adjacency]
    deg = [len(a) for a in adj]
    buckets: dict[int, set[int]] = {}
    for v, d in enumerate(deg):
        buckets.setdefault(d, set()).add(v)
    removed = []
    gone = [False] * G.n
    q = 0
    d = 0
    for _ in range(G.n):
        d = max(d - 1, 0)
        while not buckets.get(d):
            d += 1
        v = min(buckets[d])
        buckets[d].discard(v)
        q = max(q, d)
        gone[v] = True
        removed.append(v)
        for w in adj[v]:
            if not gone[w]:
                buckets[deg[w]].discard(w)
                deg[w] -= 1
                buckets.setdefault(deg[w], set()).add(w)
    removed.reverse()
    return removed, q


def greedy_colouring(G: MultiGraph, order: Sequence[int]) -> dict[int, int]:
    """First-fit colouring with colours ``0, 1, ...`` in the given vertex order."""
    colour: dict[int, int] = {}
    for v in order:
        used = {colour[w] for w in G.adjacency[v] if w in colour}
        c = 0
        while c in used:
            c += 1
        colour[v] = c
    return colour
