"""Removable vertices, the patched graph ``G_1``, and the search for a reduction.

All thresholds are expressed through ``ReductionParams`` so that the capital
``Δ`` can be chosen independently of the instance's true maximum degree.
Comparisons against fractional powers of ``Δ`` are decided with integer
arithmetic (``d >= Δ^{1/4}`` is ``d**4 >= Δ`` and so on); the additive
slack ``Δ^{9/10}`` and the light threshold ``Δ^{1/4}`` are floored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import networkx as nx

from .graph import MinorLog, MinorWorkspace, MultiGraph, SubdivisionMap, square, subdivide


def iroot(value: int, k: int) -> int:
    """Largest integer ``r`` with ``r**k <= value``."""
    if value < 0:
        raise ValueError("iroot needs a non-negative value")
    if value < 2:
        return value
    r = int(round(value ** (1.0 / k)))
    while r**k > value:
        r -= 1
    while (r + 1) ** k <= value:
        r += 1
    return r


@dataclass(frozen=True)
class ReductionParams:
    delta: int
    epsilon: Fraction = Fraction(1, 4)

    def __post_init__(self):
        if int(self.delta) != self.delta or self.delta < 1:
            raise ValueError("delta must be a positive integer")
        eps = Fraction(self.epsilon) if not isinstance(self.epsilon, float) else Fraction(repr(self.epsilon))
        if not 0 < eps <= Fraction(1, 4):
            raise ValueError("epsilon must lie in (0, 1/4]")
        object.__setattr__(self, "delta", int(self.delta))
        object.__setattr__(self, "epsilon", eps)

    @property
    def t_light(self) -> int:
        return iroot(self.delta, 4)

    @property
    def t_half(self) -> Fraction:
        return Fraction(self.delta, 2)

    @property
    def t_S0(self) -> int:
        return iroot(self.delta**7, 8)

    @property
    def t_slack(self) -> int:
        return iroot(self.delta**9, 10)

    # exact comparisons against the fractional thresholds
    def heavy(self, d: int) -> bool:
        """``d >= Δ^{1/4}``."""
        return d**4 >= self.delta

    def exceeds_quarter(self, d: int) -> bool:
        """``d > Δ^{1/4}`` (membership in the big-degree set ``B``)."""
        return d**4 > self.delta

    def light(self, d: int) -> bool:
        """``d < Δ^{1/4}``."""
        return d**4 < self.delta

    def at_least_half(self, d: int) -> bool:
        return 2 * d >= self.delta

    def sees_many(self, count: int) -> bool:
        """``count > Δ^{7/8}``."""
        return count**8 > self.delta**7

    def below_A_bound(self, square_degree: int) -> bool:
        """``square_degree < (3/2)Δ + Δ^{1/2}``."""
        a = 2 * square_degree - 3 * self.delta
        return a < 0 or a * a < 4 * self.delta


def is_removable(G: MultiGraph, v: int, params: ReductionParams) -> bool:
    deg = G.degrees
    if not deg[v] ** 4 <= params.delta:
        return False
    return sum(1 for w in G.adjacency[v] if params.heavy(deg[w])) <= 2


def removable_vertices(G: MultiGraph, params: ReductionParams) -> frozenset[int]:
    """Vertices of degree at most ``Δ^{1/4}`` with at most two neighbours of degree at least ``Δ^{1/4}``."""
    return frozenset(v for v in G.vertices() if is_removable(G, v, params))


class PatchResult(NamedTuple):
    graph: MultiGraph
    log: MinorLog
    labels: list[int]


def remove_and_patch(G: MultiGraph, R: Iterable[int], params: ReductionParams) -> PatchResult:
    """Delete ``R`` and patch the graph so that ``G² - R`` survives inside the square.

    Edges inside ``R`` are deleted first. Then each ``v`` in ``R`` (ascending)
    with at least three neighbours outside ``R`` is contracted onto a light
    neighbour, the one of smallest current degree; parallel edges created by
    the contraction are deleted. A vertex with exactly two outside neighbours
    is deleted and its neighbours joined if they were not adjacent. Other
    vertices are deleted. ``labels[i]`` is the original id of vertex ``i`` of
    the result.
    """
    R = sorted(set(int(v) for v in R))
    Rset = set(R)
    removable = removable_vertices(G, params)
    bad = [v for v in R if v not in removable]
    if bad:
        raise ValueError(f"vertices {bad} are not removable")
    deg = G.degrees
    ws = MinorWorkspace(G)
    for eid, (a, b) in enumerate(G.edges):
        if a in Rset and b in Rset:
            ws.delete_edge(eid)

    def drop_parallels(u, others):
        for x in sorted(others):
            extra = ws.edges_between(u, x)[1:]
            for e in extra:
                ws.delete_edge(e)

    for v in R:
        out = ws.neighbours(v)
        drop_parallels(v, out)
        if len(out) >= 3:
            light = [w for w in out if params.light(deg[w])]
            if not light:
                raise ValueError(f"vertex {v} has three outside neighbours but none of degree below Δ^(1/4)")
            w = min(light, key=lambda u: (ws.degree(u), u))
            ws.contract(ws.edges_between(v, w)[0], keep=w)
            drop_parallels(w, out - {w})
        elif len(out) == 2:
            x, y = sorted(out)
            ws.delete_vertex(v)
            if not ws.edges_between(x, y):
                ws.add_edge(x, y)
        else:
            ws.delete_vertex(v)
    graph, labels = ws.result()
    return PatchResult(graph, ws.log, labels)


def square_containment_violation(G: MultiGraph, R: Iterable[int], patched: PatchResult):
    """First edge of ``G² - R`` missing from the square of the patched graph, or ``None``."""
    Rset = set(R)
    index = {v: i for i, v in enumerate(patched.labels)}
    sq1 = square(patched.graph).adjacency
    for u, v in square(G).simple_edges():
        if u in Rset or v in Rset:
            continue
        if index[v] not in sq1[index[u]]:
            return u, v
    return None


# --------------------------------------------------------------------------
# Violating sets
# --------------------------------------------------------------------------


def violation_value(H: MultiGraph, boundary: Sequence, slack, Z: Iterable[int]):
    """``g(Z) = Σ_Z boundary - cut_H(Z) - slack |Z|``."""
    Z = set(Z)
    cut = sum(1 for u, v in H.edges if (u in Z) != (v in Z))
    return sum((boundary[v] for v in Z), 0) - cut - slack * len(Z)


def _integral(values: Sequence) -> tuple[list[int], int]:
    fr = [Fraction(v) if not isinstance(v, float) else Fraction(repr(v)) for v in values]
    scale = math.lcm(*(f.denominator for f in fr))
    return [int(f * scale) for f in fr], scale


def find_violating_set(H: MultiGraph, boundary_degree, slack) -> frozenset[int] | None:
    """Inclusion-minimal maximiser of ``g`` if ``max g > 0``, else ``None``.

    ``g`` is modular minus a cut function, hence supermodular, and is maximised
    exactly by one maximum-flow computation on the project-selection network:
    source to ``v`` with capacity ``w(v)`` when ``w(v) = boundary(v) - slack > 0``,
    ``v`` to sink with ``-w(v)`` when negative, and both directions of every
    edge of ``H`` with capacity one per parallel edge. The source side of the
    cut reachable in the residual network is the smallest maximiser.
    """
    n = H.n
    boundary = [boundary_degree[v] for v in range(n)]
    weights = [b - slack for b in boundary]
    ints, scale = _integral(weights + [1])
    w = ints[:n]
    edge_cap = ints[n]  # one H edge, scaled
    if not any(x > 0 for x in w):
        return None
    net = nx.DiGraph()
    s, t = "s", "t"
    net.add_node(s)
    net.add_node(t)
    for v in range(n):
        net.add_node(v)
        if w[v] > 0:
            net.add_edge(s, v, capacity=w[v])
        elif w[v] < 0:
            net.add_edge(v, t, capacity=-w[v])
    for a, b in H.edges:
        for x, y in ((a, b), (b, a)):
            if net.has_edge(x, y):
                net[x][y]["capacity"] += edge_cap
            else:
                net.add_edge(x, y, capacity=edge_cap)
    _, flow = nx.maximum_flow(net, s, t)
    # residual reachability from the source
    seen = {s}
    stack = [s]
    while stack:
        x = stack.pop()
        for y, data in net[x].items():
            if y not in seen and flow[x][y] < data["capacity"]:
                seen.add(y)
                stack.append(y)
        for y in net.predecessors(x):
            if y not in seen and flow[y][x] > 0:
                seen.add(y)
                stack.append(y)
    Z = frozenset(v for v in seen if v not in (s, t))
    if not Z or violation_value(H, boundary, slack, Z) <= 0:
        return None
    return Z


def find_violating_set_exhaustive(H: MultiGraph, boundary_degree, slack, cap: int = 20):
    """Brute-force reference: ``(max g, intersection of all maximisers)``; set is ``None`` if max <= 0."""
    n = H.n
    if n > cap:
        raise ValueError(f"exhaustive search capped at {cap} vertices")
    boundary = [boundary_degree[v] for v in range(n)]
    best = 0
    best_sets: list[frozenset[int]] = []
    for mask in range(1, 1 << n):
        Z = [v for v in range(n) if (mask >> v) & 1]
        g = violation_value(H, boundary, slack, Z)
        if g > best:
            best, best_sets = g, [frozenset(Z)]
        elif g == best and best > 0:
            best_sets.append(frozenset(Z))
    if best <= 0:
        return best, None
    return best, frozenset.intersection(*best_sets)


# --------------------------------------------------------------------------
# The reduction search
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IterationRecord:
    V_size: int
    R_size: int
    Z: frozenset[int]
    g: object


@dataclass
class ReductionCertificate:
    kind: str  # "A", "B" or "diagnostic"
    params: ReductionParams
    vertex: int | None = None
    square_degree: int | None = None
    early_exit_rule: str | None = None
    H: MultiGraph | None = None
    h_vertices: list[int] = field(default_factory=list)
    core: list[int] = field(default_factory=list)
    boundary: list[int] = field(default_factory=list)
    iterations: list[IterationRecord] = field(default_factory=list)
    discrepancies: list[tuple[int, int]] = field(default_factory=list)
    reason: str = ""
    stages: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.kind in ("A", "B")

    def subdivision(self) -> tuple[SubdivisionMap, dict[int, int]]:
        """``H*`` together with the map from its vertices to vertices of ``G``."""
        if self.kind != "B":
            raise ValueError("only B certificates carry a copy of H*")
        sub = subdivide(self.H)
        to_g = {i: v for i, v in enumerate(self.h_vertices)}
        to_g.update({self.H.n + j: r for j, r in enumerate(self.core)})
        return sub, to_g


def _build_H(G: MultiGraph, V: Sequence[int], R: Sequence[int]):
    index = {v: i for i, v in enumerate(V)}
    edges = []
    for r in R:
        a, b = sorted(w for w in G.adjacency[r] if w in index)
        edges.append((index[a], index[b]))
    return MultiGraph(len(V), edges)


def find_reduction(G: MultiGraph, params: ReductionParams) -> ReductionCertificate:
    """Search for a removable low-square-degree vertex (A) or a balanced removable copy of ``H*`` (B).

    Follows the construction: heavy set ``B``, removable set ``R_0``, the early
    exit for removable vertices seeing a light member of ``B`` or at most one
    member of ``B``, then ``V_0``, ``S_0``, ``V_1``, ``R_1`` and repeated removal
    of violating sets. A vertex claimed by the early exit has its square degree
    checked directly; failures are recorded in ``discrepancies`` and the
    search goes on. When the loop stops with no core left the result is a
    ``diagnostic`` certificate.
    """
    if not G.is_simple():
        raise ValueError("find_reduction expects a simple graph")
    if G.max_degree > params.delta:
        raise ValueError(f"delta={params.delta} is below the maximum degree {G.max_degree}")
    deg = G.degrees
    adj = G.adjacency
    B = frozenset(v for v in G.vertices() if params.exceeds_quarter(deg[v]))
    R0 = removable_vertices(G, params)
    cert = ReductionCertificate(kind="diagnostic", params=params)
    cert.stages["B"] = len(B)
    cert.stages["R0"] = len(R0)

    sq = None
    for v in sorted(R0):
        seen_B = adj[v] & B
        rule = None
        if len(seen_B) <= 1:
            rule = "at-most-one-in-B"
        elif any(not params.at_least_half(deg[w]) for w in seen_B):
            rule = "light-member-of-B"
        if rule is None:
            continue
        if sq is None:
            sq = square(G)
        d2 = sq.degree(v)
        if params.below_A_bound(d2):
            cert.kind, cert.vertex, cert.square_degree, cert.early_exit_rule = "A", v, d2, rule
            return cert
        cert.discrepancies.append((v, d2))

    V0 = frozenset(v for v in G.vertices() if params.at_least_half(deg[v]))
    S0 = frozenset(v for v in V0 if params.sees_many(len(adj[v] - R0)))
    V = sorted(V0 - S0)
    Vset = set(V)
    R = sorted(r for r in R0 - Vset if len(adj[r] & Vset) == 2)
    cert.stages.update(V0=len(V0), S0=len(S0), V1=len(V), R1=len(R))

    slack = params.t_slack
    while True:
        H = _build_H(G, V, R)
        Rset = set(R)
        boundary = [deg[v] - len(adj[v] & Rset) for v in V]
        Z = find_violating_set(H, boundary, slack) if V else None
        if Z is None:
            break
        g = violation_value(H, boundary, slack, Z)
        Zg = frozenset(V[i] for i in Z)
        cert.iterations.append(IterationRecord(len(V), len(R), Zg, g))
        V = [v for v in V if v not in Zg]
        R = [r for r in R if not (adj[r] & Zg)]

    if R:
        cert.kind = "B"
        cert.H, cert.h_vertices, cert.core, cert.boundary = H, V, R, boundary
    else:
        cert.reason = "no core vertices remain (expected when Δ is far below the asymptotic regime)"
        cert.h_vertices, cert.boundary = V, boundary
    return cert


def verify_certificate(G: MultiGraph, cert: ReductionCertificate) -> list[str]:
    """Independent re-check of a certificate against ``G``; returns the list of problems found."""
    params = cert.params
    problems = []
    if cert.kind == "A":
        v = cert.vertex
        if not is_removable(G, v, params):
            problems.append(f"vertex {v} is not removable")
        d2 = len(G.bfs_distances(v, cutoff=2)) - 1
        if d2 != cert.square_degree:
            problems.append(f"square degree of {v} is {d2}, certificate says {cert.square_degree}")
        if not params.below_A_bound(d2):
            problems.append(f"square degree {d2} is not below (3/2)Δ + Δ^(1/2)")
        return problems
    if cert.kind != "B":
        return [f"certificate kind {cert.kind!r} certifies nothing"]
    H, V, core = cert.H, cert.h_vertices, cert.core
    if H.m < 1:
        problems.append("H has no edge")
    if len(core) != H.m or H.n != len(V):
        problems.append("core/H size mismatch")
        return problems
    if len(set(V) | set(core)) != len(V) + len(core):
        problems.append("H vertices and core overlap or repeat")
    Vset = set(V)
    for j, r in enumerate(core):
        if not is_removable(G, r, params):
            problems.append(f"core vertex {r} is not removable")
        nbrs = sorted(w for w in G.adjacency[r] if w in Vset)
        a, b = H.edges[j]
        if nbrs != sorted((V[a], V[b])) or G.multiplicity(r, V[a]) != 1 or G.multiplicity(r, V[b]) != 1:
            problems.append(f"core vertex {r} is not the subdivision of H edge {j}")
    for v in V:
        if not params.heavy(G.degree(v)):
            problems.append(f"H vertex {v} has degree below Δ^(1/4)")
    coreset = set(core)
    boundary = [G.degree(v) - len(G.adjacency[v] & coreset) for v in V]
    if boundary != list(cert.boundary):
        problems.append("boundary degrees do not match G")
    slack = params.t_slack
    if H.n <= 16:
        best, _ = find_violating_set_exhaustive(H, boundary, slack)
        if best > 0:
            problems.append(f"some set violates the slack bound by {best}")
    elif find_violating_set(H, boundary, slack) is not None:
        problems.append("a violating set remains")
    return problems
