"""Extremal and test graph families, plus the nice-family edge-count check."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graph import MultiGraph


def wegner_graph(k: int) -> MultiGraph:
    """Planar graph ``G_k`` with maximum degree ``2k`` whose square has a ``3k+1`` clique.

    Vertex ids: ``x=0``, ``y=1``, ``z=2``; then ``k`` common neighbours of ``z`` and
    ``x``, ``k`` common neighbours of ``z`` and ``y``, and ``k-1`` common
    neighbours of ``x`` and ``y``. The edge ``xy`` comes last.
    """
    if k < 2:
        raise ValueError("wegner_graph needs k >= 2")
    x, y, z = 0, 1, 2
    edges = []
    nxt = 3
    for a, b, count in ((z, x, k), (z, y, k), (x, y, k - 1)):
        for _ in range(count):
            edges.append((a, nxt))
            edges.append((nxt, b))
            nxt += 1
    edges.append((x, y))
    return MultiGraph(nxt, edges)


def wegner_clique(k: int) -> list[int]:
    """The ``3k+1`` vertices of ``wegner_graph(k)`` other than ``z``."""
    return [0, 1] + list(range(3, 3 * k + 2))


def kkk_free_example(m: int) -> MultiGraph:
    """``K_{4,4}``-minor-free graph with ``Δ = 2m`` whose square holds a ``4m`` clique.

    Vertices ``0..4m-1`` are ``V_1..V_4`` in blocks of ``m``; the six hubs
    ``x_12, x_13, x_14, x_23, x_24, x_34`` follow in that order.
    """
    if m < 2:
        raise ValueError("kkk_free_example needs m >= 2")
    blocks = [list(range(i * m, (i + 1) * m)) for i in range(4)]
    edges = []
    hub = 4 * m
    for i, j in itertools.combinations(range(4), 2):
        for v in blocks[i] + blocks[j]:
            edges.append((hub, v))
        hub += 1
    return MultiGraph(4 * m + 6, edges)


def _cycle(n: int) -> MultiGraph:
    if n < 3:
        raise ValueError("cycle needs at least 3 vertices")
    return MultiGraph(n, [(i, (i + 1) % n) for i in range(n)])


def _complete(n: int) -> MultiGraph:
    return MultiGraph(n, list(itertools.combinations(range(n), 2)))


def _complete_bipartite(a: int, b: int) -> MultiGraph:
    return MultiGraph(a + b, [(i, a + j) for i in range(a) for j in range(b)])


def _petersen() -> MultiGraph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return MultiGraph(10, outer + spokes + inner)


def _octahedron() -> MultiGraph:
    # K_{2,2,2}: opposite pairs (0,1), (2,3), (4,5)
    return MultiGraph(6, [(u, v) for u, v in itertools.combinations(range(6), 2) if u // 2 != v // 2])


def named_graph(name: str) -> MultiGraph:
    """Standard small graphs: ``petersen``, ``octahedron``, ``c<n>``, ``k<n>``, ``p<n>``
    (path on n vertices), ``k_{a,b}`` (also written ``k<a>,<b>``)."""
    key = name.strip().lower().replace(" ", "")
    if key == "petersen":
        return _petersen()
    if key == "octahedron":
        return _octahedron()
    if key == "triangle":
        return _complete(3)
    match = re.fullmatch(r"k_?\{?(\d+),(\d+)\}?", key)
    if match:
        return _complete_bipartite(int(match.group(1)), int(match.group(2)))
    match = re.fullmatch(r"([ckp])_?(\d+)", key)
    if match:
        kind, n = match.group(1), int(match.group(2))
        if kind == "c":
            return _cycle(n)
        if kind == "k":
            return _complete(n)
        return MultiGraph(n, [(i, i + 1) for i in range(n - 1)])
    raise ValueError(f"unknown graph name {name!r}")


def random_planar_triangulation(n: int, seed=None) -> MultiGraph:
    """Stacked triangulation: each new vertex goes into a uniformly chosen face.

    Starting from a triangle (two faces), inserting a vertex into a face joins it
    to the three corners and splits the face in three, so ``n >= 3`` vertices
    give ``3n - 6`` edges and the result is planar by construction.
    """
    if n < 3:
        raise ValueError("triangulation needs n >= 3")
    rng = np.random.default_rng(seed)
    faces = [(0, 1, 2), (0, 1, 2)]
    edges = [(0, 1), (1, 2), (0, 2)]
    for v in range(3, n):
        i = int(rng.integers(len(faces)))
        a, b, c = faces[i]
        faces[i] = (a, b, v)
        faces.append((b, c, v))
        faces.append((a, c, v))
        edges.extend([(a, v), (b, v), (c, v)])
    return MultiGraph(n, edges)


@dataclass(frozen=True)
class NiceCertificateReport:
    B: frozenset[int]
    A: frozenset[int]
    eAB: int
    beta: Fraction
    passed: bool

    @property
    def bipartite_average_degree(self) -> Fraction:
        """Average degree of the bipartite graph between ``A`` and ``B``."""
        return Fraction(2 * self.eAB, len(self.A) + len(self.B))


def check_nice_condition(G: MultiGraph, B, beta=6) -> NiceCertificateReport:
    """Compute ``A`` (outside vertices with at least three neighbours in ``B``) and test
    ``e(A, B) <= beta * |B|``."""
    B = frozenset(int(b) for b in B)
    if not B:
        raise ValueError("B must be non-empty")
    if any(not 0 <= b < G.n for b in B):
        raise ValueError("B must be a subset of the vertex set")
    beta = Fraction(beta)
    A = frozenset(
        v for v in G.vertices() if v not in B and len(G.adjacency[v] & B) >= 3
    )
    eAB = G.e_between(A, B)
    return NiceCertificateReport(B, A, eAB, beta, eAB <= beta * len(B))


def count_triangles(G: MultiGraph) -> int:
    """Triangles of the underlying simple graph."""
    adj = G.adjacency
    total = 0
    for u in G.vertices():
        for v in adj[u]:
            if v > u:
                total += sum(1 for w in adj[u] & adj[v] if w > v)
    return total


def random_core_instance(seed=None, *, max_edges: int = 12, delta: int = 16, max_pendants: int = 3):
    """Graph ``G`` built around a subdivided random multigraph ``H``, with its type-B certificate.

    ``G`` holds ``H*`` (``H`` vertices first, then one core vertex per ``H``
    edge) plus up to ``max_pendants`` pendant vertices on each ``H`` vertex,
    so that every ``H`` vertex has degree at least 2 and at most ``delta``.
    """
    from .reduction import ReductionCertificate, ReductionParams

    rng = np.random.default_rng(seed)
    params = ReductionParams(delta)
    h = int(rng.integers(2, 6))
    m = int(rng.integers(1, max_edges + 1))
    H_edges = []
    for _ in range(m):
        u, v = (int(x) for x in rng.choice(h, size=2, replace=False))
        H_edges.append((u, v))
    H = MultiGraph(h, H_edges)
    edges = []
    for j, (u, v) in enumerate(H_edges):
        edges += [(u, h + j), (h + j, v)]
    nxt = h + m
    for v in range(h):
        low = max(0, 2 - H.degree(v))
        high = min(max_pendants, delta - H.degree(v))
        for _ in range(int(rng.integers(low, max(low, high) + 1))):
            edges.append((v, nxt))
            nxt += 1
    G = MultiGraph(nxt, edges)
    core = list(range(h, h + m))
    boundary = [G.degree(v) - H.degree(v) for v in range(h)]
    cert = ReductionCertificate(kind="B", params=params, H=H, h_vertices=list(range(h)), core=core, boundary=boundary)
    return G, cert
