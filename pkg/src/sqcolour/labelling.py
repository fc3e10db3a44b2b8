"""L(p,q)-labellings, list variants, greedy solvers and the exact backtracking oracle."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .graph import MultiGraph, degeneracy_order, distance_classes, square

Labelling = dict[int, int]
ListAssignment = Mapping[int, Iterable[int]]

EXACT_LIMIT_ENV = "SQCOLOUR_EXACT_LIMIT"


def default_exact_limit() -> int:
    return int(os.environ.get(EXACT_LIMIT_ENV, 25))


@dataclass(frozen=True)
class LpqParams:
    p: int
    q: int

    def __post_init__(self):
        if self.q < 0 or self.p < 0:
            raise ValueError("p and q must be non-negative")
        if self.p < self.q:
            raise ValueError("L(p,q) parameters need p >= q")


class LabellingError(RuntimeError):
    """A solver could not produce a labelling although its precondition promised one."""


def _require_total(G: MultiGraph, f: Mapping[int, int]):
    missing = [v for v in G.vertices() if v not in f]
    if missing:
        raise ValueError(f"labelling is partial; missing vertices {missing[:5]}")


def lpq_violation(G: MultiGraph, f: Mapping[int, int], p: int, q: int):
    """First pair ``(u, v, distance, gap)`` breaking the L(p,q) separations, or ``None``."""
    _require_total(G, f)
    near, far = distance_classes(G)
    for u in G.vertices():
        for v in sorted(near[u]):
            if u < v and abs(f[u] - f[v]) < p:
                return u, v, 1, abs(f[u] - f[v])
        for v in sorted(far[u]):
            if u < v and abs(f[u] - f[v]) < q:
                return u, v, 2, abs(f[u] - f[v])
    return None


def is_valid_lpq(G: MultiGraph, f: Mapping[int, int], p: int, q: int) -> bool:
    return lpq_violation(G, f, p, q) is None


def span(f: Mapping[int, int]) -> int:
    """Largest label minus smallest label plus one."""
    if not f:
        raise ValueError("span of an empty labelling")
    values = f.values()
    return max(values) - min(values) + 1


def many_passes_bound(delta: int, p: int, q: int) -> int:
    return q * delta * (delta - 1) + p * delta + 1


def greedy_many_passes(G: MultiGraph, p: int, q: int, lists: ListAssignment | None = None) -> Labelling:
    """Many-passes greedy L(p,q)-labelling.

    Candidate values are swept in increasing order; in the pass for value ``c``
    every still unlabelled vertex (in id order) that has ``c`` in its list and
    no conflict with the labels placed so far receives ``c``. A labelled
    neighbour at distance one can only block ``p`` values at or above its own
    label and one at distance two only ``q``, so lists of size
    ``qΔ(Δ-1) + pΔ + 1`` never run dry. Without lists the values ``0..bound-1``
    are used, which bounds the span by the same quantity.
    """
    LpqParams(p, q)
    if lists is None:
        bound = many_passes_bound(G.max_degree, p, q)
        domain = {v: range(bound) for v in G.vertices()}
    else:
        domain = {v: set(lists[v]) for v in G.vertices()}
    near, far = distance_classes(G)
    blocked: list[set[int]] = [set() for _ in G.vertices()]
    f: Labelling = {}
    values = sorted(set().union(*(set(d) for d in domain.values()))) if G.n else []
    member = {v: set(domain[v]) for v in G.vertices()}
    for c in values:
        for v in G.vertices():
            if v in f or c not in member[v] or c in blocked[v]:
                continue
            f[v] = c
            for w in near[v]:
                blocked[w].update(range(c - p + 1, c + p))
            for w in far[v]:
                blocked[w].update(range(c - q + 1, c + q))
        if len(f) == G.n:
            break
    if len(f) < G.n:
        missing = [v for v in G.vertices() if v not in f]
        raise LabellingError(f"list exhausted for vertices {missing[:5]}")
    return f


def degeneracy_greedy_square(G: MultiGraph) -> Labelling:
    """Proper colouring of ``G²`` by first-fit along a degeneracy ordering of ``G``.

    Each vertex has at most ``(2q-1)Δ`` earlier neighbours in the square, where
    ``q`` is the degeneracy of ``G``, so at most ``(2q-1)Δ + 1`` colours appear.
    """
    order, _ = degeneracy_order(G)
    G2 = square(G)
    colour: Labelling = {}
    for v in order:
        used = {colour[w] for w in G2.adjacency[v] if w in colour}
        c = 0
        while c in used:
            c += 1
        colour[v] = c
    return colour


# --------------------------------------------------------------------------
# Exact oracle
# --------------------------------------------------------------------------


def max_clique(G: MultiGraph) -> list[int]:
    """A maximum clique (Bron-Kerbosch with pivoting); fine for small graphs."""
    adj = G.adjacency
    best: list[int] = []

    def expand(R, P, X):
        nonlocal best
        if not P and not X:
            if len(R) > len(best):
                best = list(R)
            return
        if len(R) + len(P) <= len(best):
            return
        pivot = max(P | X, key=lambda u: len(adj[u] & P))
        for v in sorted(P - adj[pivot]):
            expand(R + [v], P & adj[v], X & adj[v])
            P = P - {v}
            X = X | {v}

    expand([], set(G.vertices()), set())
    return sorted(best)


def _normalise_separation(separation) -> list[tuple[MultiGraph, int]]:
    if separation is None:
        return []
    if isinstance(separation, tuple) and len(separation) == 2 and isinstance(separation[0], MultiGraph):
        return [separation]
    return list(separation)


def exact_list_colouring(
    target: MultiGraph,
    lists: ListAssignment,
    separation=None,
    *,
    cliques: Sequence[Sequence[int]] | None = None,
    limit: int | None = -1,
) -> Labelling | None:
    """Backtracking list colouring with forward checking; ``None`` means UNSAT.

    Adjacent vertices of ``target`` receive different colours. ``separation``
    is an optional ``(graph, s)`` pair, or a list of them, demanding
    ``|c(u) - c(v)| >= s`` across each edge of that graph. Variables are
    chosen smallest-domain first; each clique in ``cliques`` (by default one
    maximum clique of ``target``) is checked for having enough distinct
    colours left among its unassigned members.

    ``limit`` caps the vertex count (default from ``SQCOLOUR_EXACT_LIMIT`` or 25);
    pass ``None`` to disable the cap.
    """
    if limit == -1:
        limit = default_exact_limit()
    n = target.n
    if limit is not None and n > limit:
        raise ValueError(f"exact solver limited to {limit} vertices, got {n}")
    seps = _normalise_separation(separation)
    for graph, _ in seps:
        if graph.n != n:
            raise ValueError("separation graph must share the target's vertex set")

    # per vertex: list of (neighbour, gap) with gap 1 meaning "different"
    gap: list[dict[int, int]] = [dict() for _ in range(n)]
    for u in range(n):
        for w in target.adjacency[u]:
            gap[u][w] = max(gap[u].get(w, 0), 1)
    for graph, s in seps:
        for u in range(n):
            for w in graph.adjacency[u]:
                gap[u][w] = max(gap[u].get(w, 0), int(s))
    constraints = [tuple((w, g) for w, g in gap[u].items() if g > 0) for u in range(n)]

    domains = [set(lists[v]) for v in range(n)]
    if any(not d for d in domains):
        return None
    if cliques is None:
        cliques = [max_clique(target)] if n else []
    cliques = [list(c) for c in cliques if len(c) > 1]
    member_of = [[] for _ in range(n)]
    for i, c in enumerate(cliques):
        for v in c:
            member_of[v].append(i)

    assignment: Labelling = {}

    def clique_ok(doms, touched) -> bool:
        for i in touched:
            free = [v for v in cliques[i] if v not in assignment]
            if not free:
                continue
            pool = set()
            for v in free:
                pool |= doms[v]
                if len(pool) >= len(free):
                    break
            if len(pool) < len(free):
                return False
        return True

    if not clique_ok(domains, range(len(cliques))):
        return None

    def search(doms) -> bool:
        if len(assignment) == n:
            return True
        v = min(
            (u for u in range(n) if u not in assignment),
            key=lambda u: (len(doms[u]), -len(constraints[u]), u),
        )
        for c in sorted(doms[v]):
            new = doms[:]
            ok = True
            touched = set(member_of[v])
            for w, g in constraints[v]:
                if w in assignment:
                    if abs(assignment[w] - c) < g:
                        ok = False
                        break
                    continue
                d = new[w]
                pruned = {x for x in d if abs(x - c) < g}
                if pruned:
                    d = d - pruned
                    if not d:
                        ok = False
                        break
                    new[w] = d
                    touched.update(member_of[w])
            if not ok:
                continue
            assignment[v] = c
            if clique_ok(new, touched) and search(new):
                return True
            del assignment[v]
        return False

    if search(domains):
        return dict(sorted(assignment.items()))
    return None


def colouring_violation(target: MultiGraph, colour: Mapping[int, int], separation=None):
    """First violated pair ``(u, v, required_gap, actual_gap)`` or ``None``."""
    _require_total(target, colour)
    for u, v in target.simple_edges():
        if colour[u] == colour[v]:
            return u, v, 1, 0
    for graph, s in _normalise_separation(separation):
        for u, v in graph.simple_edges():
            if abs(colour[u] - colour[v]) < s:
                return u, v, s, abs(colour[u] - colour[v])
    return None


def chromatic_number(G: MultiGraph, *, limit: int | None = -1, clique: Sequence[int] | None = None) -> tuple[int, Labelling]:
    """Exact chromatic number with a witness colouring using colours ``0..k-1``."""
    if G.n == 0:
        return 0, {}
    clique = list(clique) if clique is not None else max_clique(G)
    k = max(len(clique), 1)
    while True:
        witness = exact_list_colouring(
            G, {v: range(k) for v in G.vertices()}, cliques=[clique], limit=limit
        )
        if witness is not None:
            return k, witness
        k += 1


def lpq_constraints(G: MultiGraph, p: int, q: int):
    """``(target, separation)`` encoding L(p,q) for the exact solver."""
    G2 = square(G)
    target = G2 if q >= 1 else (G if p >= 1 else MultiGraph(G.n))
    return target, [(G, p), (G2, q)]


def min_span_lpq(G: MultiGraph, p: int, q: int, *, max_span: int | None = None) -> tuple[int, Labelling]:
    """Exact ``λ_{p,q}`` (span convention max - min + 1) by increasing-span search."""
    LpqParams(p, q)
    if G.n == 0:
        raise ValueError("empty graph")
    target, sep = lpq_constraints(G, p, q)
    if max_span is None:
        max_span = p * square(G).max_degree + 1
    for k in range(1, max_span + 1):
        f = exact_list_colouring(target, {v: range(k) for v in G.vertices()}, sep, cliques=[])
        if f is not None:
            return k, f
    raise LabellingError(f"no L({p},{q})-labelling with span <= {max_span}")


# --------------------------------------------------------------------------
# Lifting L(t,1) list labellings to L(p,q)
# --------------------------------------------------------------------------


def lift_parameter(p: int, q: int) -> int:
    """``t = ceil((p-1)/q) + 1``."""
    if q < 1:
        raise ValueError("lifting needs q >= 1")
    return -(-(p - 1) // q) + 1


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def lift_labelling_route(
    G: MultiGraph,
    p: int,
    q: int,
    lists: ListAssignment,
    base_solver: Callable[[MultiGraph, int, dict[int, set[int]]], Labelling | None] | None = None,
) -> tuple[Labelling, str]:
    """L(p,q) list labelling obtained from an L(t,1) labelling of the shrunken lists.

    Lists shrink to ``{ceil(k/q) : k in L(v)}``; ``base_solver(G, t, lists)``
    labels those with separations ``t`` and ``1``. Each vertex then takes a
    value of ``L(v)`` in the preimage block of its shrunken label, which keeps
    adjacent gaps at least ``q(t-1)+1 >= p``. Distance-two pairs whose shrunken
    labels are neighbours can land closer than ``q``, so representatives are
    picked by a constrained search (route ``"blocks"``). When no choice of
    representatives works for the base labelling, the base and the
    representatives are searched jointly over the original lists with the
    adjacent gap ``q(t-1)+1`` imposed directly (route ``"joint"``).
    """
    LpqParams(p, q)
    t = lift_parameter(p, q)
    shrunk = {v: {_ceil_div(k, q) for k in lists[v]} for v in G.vertices()}
    if base_solver is None:
        def base_solver(graph, tt, lst):
            return greedy_many_passes(graph, tt, 1, lst)
    f_tilde = base_solver(G, t, shrunk)
    if f_tilde is None:
        raise LabellingError("base L(t,1) solver failed")
    blocks = {
        v: sorted((k for k in lists[v] if _ceil_div(k, q) == f_tilde[v]), reverse=True)
        for v in G.vertices()
    }
    if any(not b for b in blocks.values()):
        raise LabellingError("base labelling uses a value outside the shrunken lists")
    first = {v: blocks[v][0] for v in G.vertices()}
    if is_valid_lpq(G, first, p, q):
        return first, "blocks"
    target, sep = lpq_constraints(G, p, q)
    f = exact_list_colouring(target, blocks, sep, cliques=[], limit=None)
    if f is not None:
        return f, "blocks"
    joint = [(G, max(p, q * (t - 1) + 1)), sep[1]]
    f = exact_list_colouring(target, lists, joint, cliques=[])
    if f is None:
        raise LabellingError("no L(p,q) list labelling with adjacent gaps q(t-1)+1 exists")
    return f, "joint"


def lift_labelling(
    G: MultiGraph,
    p: int,
    q: int,
    lists: ListAssignment,
    base_solver: Callable[[MultiGraph, int, dict[int, set[int]]], Labelling | None] | None = None,
) -> Labelling:
    """Labelling part of :func:`lift_labelling_route`."""
    return lift_labelling_route(G, p, q, lists, base_solver)[0]
