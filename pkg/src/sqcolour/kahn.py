"""Iterative list edge-colouring by per-colour hard-core matchings, and the core extension.

The procedure colours the edges of a multigraph ``H`` from lists ``L(e)``
while respecting two conflict graphs on ``E(H)``: ``J1`` (joined edges get
different colours) and ``J2`` (joined edges get colours at least ``s`` apart).
Each iteration samples one matching per colour from a hard-core distribution
on the edges still allowed that colour, assigns colours, uncolours edges in
``J1``/``J2`` conflicts and shrinks the per-colour graphs. Bad events are
monitored after each iteration and the whole iteration is resampled when one
fires. Whatever remains is finished greedily, with an exact backtracking
fallback.

``colour_core_extension`` applies this to a reduction certificate: the core
vertices of a removable copy of ``H*`` are the edges of ``H``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import MultiGraph, line_graph, square
from .labelling import colouring_violation, exact_list_colouring
from .matching import (
    NonConvergence,
    fit_activities,
    in_matching_polytope,
    make_engine,
    polytope_cap,
    HardCoreModel,
    sample_matching,
)
from .reduction import ReductionCertificate, iroot


@dataclass(frozen=True)
class KahnParams:
    """Constants of the iterative procedure.

    ``delta`` defaults to ``1 - 1/(1 + ε/2)`` and ``xi`` to ``delta/2``. The
    three bad-event thresholds are multiplied (degree, conflicts) or divided
    (marginal mass) by ``loosen``, since at small ``Δ`` the exact forms are
    vacuous or unattainable.
    """

    epsilon: float = 0.25
    delta: float | None = None
    xi: float | None = None
    K: float = 8.0
    C: float = 3.0
    t: int = 2
    retry_limit: int = 10
    loosen: float = 2.0
    resolve: str = "smallest"
    max_iterations: int = 30
    shrink: float = 0.9
    fit_tol: float = 1e-7
    fit_max_iter: int = 5000

    def __post_init__(self):
        eps = float(self.epsilon)
        delta = self.delta if self.delta is not None else 1 - 1 / (1 + eps / 2)
        xi = self.xi if self.xi is not None else delta / 2
        object.__setattr__(self, "delta", float(delta))
        object.__setattr__(self, "xi", float(xi))
        if not 0 < self.xi <= self.delta < 1:
            raise ValueError("need 0 < xi <= delta < 1")
        if not (self.C > 0 and self.K > 0 and self.t > 0):
            raise ValueError("C, K and t must be positive")
        if self.resolve not in ("smallest", "uniform"):
            raise ValueError("resolve must be 'smallest' or 'uniform'")
        if self.retry_limit < 0 or not 0 < self.shrink < 1 or self.loosen < 1:
            raise ValueError("retry_limit >= 0, 0 < shrink < 1 and loosen >= 1 required")


# --------------------------------------------------------------------------
# Conflicts
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConflictGraphs:
    J1: MultiGraph
    J2: MultiGraph
    s: int

    @classmethod
    def empty(cls, m: int, s: int = 1) -> "ConflictGraphs":
        return cls(MultiGraph(m), MultiGraph(m), s)

    @classmethod
    def from_pairs(cls, m: int, j1=(), j2=(), s: int = 1) -> "ConflictGraphs":
        return cls(MultiGraph.from_simple(m, j1), MultiGraph.from_simple(m, j2), s)

    def forbidden(self, e: int, assigned: Mapping[int, int]) -> set[int]:
        """Colours ruled out on ``e`` by coloured ``J1`` and ``J2`` neighbours."""
        out = set()
        for f in self.J1.adjacency[e]:
            if f in assigned:
                out.add(assigned[f])
        for f in self.J2.adjacency[e]:
            if f in assigned:
                c = assigned[f]
                out.update(range(c - self.s + 1, c + self.s))
        return out

    def clash(self, e: int, c: int, f: int, cf: int) -> bool:
        if f in self.J1.adjacency[e] and c == cf:
            return True
        return f in self.J2.adjacency[e] and abs(c - cf) < self.s


def assignment_violation(H: MultiGraph, assignment: Mapping[int, int], lists, conflicts: ConflictGraphs):
    """First problem with a (possibly partial) edge colouring, or ``None``."""
    for e, c in assignment.items():
        if c not in lists[e]:
            return ("not-in-list", e, c)
    for v in H.vertices():
        seen = {}
        for e in H.incident(v):
            if e in assignment:
                c = assignment[e]
                if c in seen:
                    return ("improper", seen[c], e, c)
                seen[c] = e
    for u, v in conflicts.J1.simple_edges():
        if u in assignment and v in assignment and assignment[u] == assignment[v]:
            return ("J1", u, v, assignment[u])
    for u, v in conflicts.J2.simple_edges():
        if u in assignment and v in assignment and abs(assignment[u] - assignment[v]) < conflicts.s:
            return ("J2", u, v, abs(assignment[u] - assignment[v]))
    return None


def resolve_multicoloured(matchings: Mapping[int, Iterable[int]], rule: str = "smallest", rng=None) -> dict[int, int]:
    """One colour per edge lying in at least one of the per-colour matchings."""
    offers: dict[int, list[int]] = {}
    for colour in sorted(matchings):
        for e in matchings[colour]:
            offers.setdefault(e, []).append(colour)
    if rule == "uniform":
        rng = np.random.default_rng(rng)
        return {e: cs[int(rng.integers(len(cs)))] for e, cs in sorted(offers.items())}
    if rule != "smallest":
        raise ValueError(f"unknown rule {rule!r}")
    return {e: min(cs) for e, cs in sorted(offers.items())}


# --------------------------------------------------------------------------
# State and reports
# --------------------------------------------------------------------------


@dataclass
class ColourState:
    H: MultiGraph
    lists: tuple[frozenset[int], ...]
    residual: dict[int, set[int]]
    assigned: dict[int, int]
    covered: dict[int, set[int]]
    activities: dict[int, dict[int, float]]
    palette: list[int]
    delta_param: int
    iteration: int = 0

    def copy(self) -> "ColourState":
        return ColourState(
            self.H,
            self.lists,
            {e: set(c) for e, c in self.residual.items()},
            dict(self.assigned),
            {g: set(vs) for g, vs in self.covered.items()},
            self.activities,
            self.palette,
            self.delta_param,
            self.iteration,
        )

    def uncoloured(self) -> list[int]:
        return [e for e in range(self.H.m) if e not in self.assigned]

    def colour_edges(self, colour: int) -> list[int]:
        """Edges of the current per-colour graph."""
        return [e for e in self.uncoloured() if colour in self.residual[e]]

    def uncoloured_degrees(self) -> list[int]:
        deg = [0] * self.H.n
        for e in self.uncoloured():
            u, v = self.H.edges[e]
            deg[u] += 1
            deg[v] += 1
        return deg


def _compressed(H: MultiGraph, edge_ids: Sequence[int]) -> MultiGraph:
    verts = sorted({x for e in edge_ids for x in H.edges[e]})
    index = {v: i for i, v in enumerate(verts)}
    return MultiGraph(len(verts), [(index[H.edges[e][0]], index[H.edges[e][1]]) for e in edge_ids])


def colour_model(state: ColourState, colour: int) -> tuple[HardCoreModel | None, list[int]]:
    """Hard-core model on the current graph of ``colour`` with the carried activities."""
    ids = state.colour_edges(colour)
    if not ids:
        return None, ids
    acts = state.activities[colour]
    return HardCoreModel(_compressed(state.H, ids), tuple(acts[e] for e in ids)), ids


@dataclass
class FitRecord:
    colour: int
    edges: int
    scale: float
    iterations_ok: bool


def initial_state(
    H: MultiGraph,
    lists: Sequence[Iterable[int]],
    params: KahnParams,
    delta_param: int | None = None,
) -> tuple[ColourState, list[FitRecord]]:
    """Fit activities for every colour to targets ``1/|L(e)|``.

    Targets that are not strictly inside the matching polytope of the colour
    graph are scaled by ``params.shrink`` until they are; fitting failures
    are met the same way.
    """
    lists = tuple(frozenset(L) for L in lists)
    if len(lists) != H.m:
        raise ValueError("one list per edge required")
    palette = sorted(set().union(*lists)) if lists else []
    records = []
    activities: dict[int, dict[int, float]] = {}
    for colour in palette:
        ids = [e for e in range(H.m) if colour in lists[e]]
        sub = _compressed(H, ids)
        target = [1.0 / len(lists[e]) for e in ids]
        scale = 1.0
        fitted = None
        for _ in range(200):
            scaled = [scale * x for x in target]
            if sub.n <= polytope_cap() and not in_matching_polytope(sub, scaled, strict=True, atol=1e-12).inside:
                scale *= params.shrink
                continue
            try:
                fitted = fit_activities(sub, scaled, tol=params.fit_tol, max_iter=params.fit_max_iter)
                break
            except NonConvergence:
                scale *= params.shrink
        if fitted is None:
            raise RuntimeError(f"could not fit activities for colour {colour}")
        activities[colour] = {e: float(a) for e, a in zip(ids, fitted.activities)}
        records.append(FitRecord(colour, len(ids), scale, True))
    state = ColourState(
        H,
        lists,
        {e: set(lists[e]) for e in range(H.m)},
        {},
        {c: set() for c in palette},
        activities,
        palette,
        delta_param if delta_param is not None else max(H.max_degree, 1),
    )
    return state, records


@dataclass
class BadEventReport:
    iteration: int
    attempt: int
    coloured: int
    uncoloured_after: int
    degree_threshold: float
    mass_threshold: float
    conflict_threshold: float
    T_v: list[int] = field(default_factory=list)
    T_e: list[int] = field(default_factory=list)
    S_v: list[int] = field(default_factory=list)
    max_degree_after: int = 0
    min_mass: float = math.inf
    max_conflicts: int = 0
    events_total: int = 0

    @property
    def fired(self) -> bool:
        return bool(self.T_v or self.T_e or self.S_v)

    @property
    def fired_count(self) -> int:
        return len(self.T_v) + len(self.T_e) + len(self.S_v)


@dataclass
class LocalLemmaDiagnostic:
    iteration: int
    attempts: int
    p_hat: float
    d: int
    product: float


class RetryExhausted(RuntimeError):
    def __init__(self, state: ColourState, report: BadEventReport, attempts: int):
        super().__init__(
            f"bad events survived {attempts} attempts in iteration {state.iteration + 1}: "
            f"T_v={report.T_v} T_e={report.T_e} S_v={report.S_v}"
        )
        self.state = state
        self.report = report
        self.attempts = attempts


def _colour_rng(seed: int, iteration: int, attempt: int, index: int):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(iteration, attempt, index)))


def _one_pass(state: ColourState, conflicts: ConflictGraphs, params: KahnParams, seed: int, attempt: int):
    H = state.H
    start_deg = max(state.uncoloured_degrees(), default=0)
    matchings: dict[int, frozenset[int]] = {}
    for index, colour in enumerate(state.palette):
        model, ids = colour_model(state, colour)
        if model is None:
            continue
        picked = sample_matching(model, _colour_rng(seed, state.iteration, attempt, index))
        matchings[colour] = frozenset(ids[i] for i in picked)
    newly = resolve_multicoloured(
        matchings, params.resolve, _colour_rng(seed, state.iteration, attempt, len(state.palette))
    )

    bad = set()
    for e, c in newly.items():
        for f in set(conflicts.J1.adjacency[e]) | set(conflicts.J2.adjacency[e]):
            if f in state.assigned and conflicts.clash(e, c, f, state.assigned[f]):
                bad.add(e)
            elif f in newly and conflicts.clash(e, c, f, newly[f]):
                bad.update((e, f))
    new = state.copy()
    new.iteration += 1
    for e, c in newly.items():
        if e not in bad:
            new.assigned[e] = c
    for colour, M in matchings.items():
        for e in M:
            new.covered[colour].update(H.edges[e])
    for e in new.uncoloured():
        u, v = H.edges[e]
        keep = {c for c in new.residual[e] if u not in new.covered[c] and v not in new.covered[c]}
        new.residual[e] = keep - conflicts.forbidden(e, new.assigned)

    factor = (1 + params.delta) / (1 + params.xi) / math.e
    report = BadEventReport(
        iteration=new.iteration,
        attempt=attempt,
        coloured=len(newly) - len(bad & set(newly)),
        uncoloured_after=len(new.uncoloured()),
        degree_threshold=params.loosen * factor * start_deg,
        mass_threshold=math.exp(-params.delta) / params.loosen,
        conflict_threshold=params.loosen * state.delta_param ** 0.8,
    )
    deg_after = new.uncoloured_degrees()
    report.max_degree_after = max(deg_after, default=0)
    report.T_v = [v for v in H.vertices() if deg_after[v] > report.degree_threshold]
    mass = {e: 0.0 for e in new.uncoloured()}
    for colour in new.palette:
        model, ids = colour_model(new, colour)
        if model is None:
            continue
        for e, x in zip(ids, model.marginals):
            mass[e] += float(x)
    report.T_e = [e for e, x in mass.items() if x <= report.mass_threshold]
    report.min_mass = min(mass.values(), default=math.inf)
    conflicts_at = [0] * H.n
    for e in bad:
        for v in set(H.edges[e]):
            conflicts_at[v] += 1
    report.max_conflicts = max(conflicts_at, default=0)
    report.S_v = [v for v in H.vertices() if conflicts_at[v] > report.conflict_threshold]
    report.events_total = 2 * H.n + len(mass)
    return new, report


def dependency_bound(H: MultiGraph, conflicts: ConflictGraphs, t: int) -> int:
    """Largest number of event indices (vertices and edges) within distance ``2t`` of one index.

    Distances are measured in ``H`` with the endpoints of ``J1``/``J2``-joined
    edges also made adjacent.
    """
    pairs = set(H.simple_edges())
    for J in (conflicts.J1, conflicts.J2):
        for e, f in J.simple_edges():
            for a in H.edges[e]:
                for b in H.edges[f]:
                    if a != b:
                        pairs.add((min(a, b), max(a, b)))
    Hp = MultiGraph.from_simple(H.n, pairs)
    best = 0
    for v in H.vertices():
        near = Hp.bfs_distances(v, cutoff=2 * t)
        edges_near = sum(1 for a, b in H.edges if a in near or b in near)
        best = max(best, len(near) + edges_near)
    return best


def iterate(state: ColourState, conflicts: ConflictGraphs, params: KahnParams, seed: int = 0):
    """One iteration with whole-iteration resampling while a bad event fires.

    Returns ``(new_state, report, diagnostic)``; raises ``RetryExhausted``
    carrying the last attempt when the retry budget runs out.
    """
    if not state.uncoloured():
        empty = BadEventReport(state.iteration, 0, 0, 0, 0.0, 0.0, 0.0)
        return state, empty, LocalLemmaDiagnostic(state.iteration, 0, 0.0, 0, 0.0)
    fired = 0
    total = 0
    d = dependency_bound(state.H, conflicts, params.t)
    for attempt in range(params.retry_limit + 1):
        new, report = _one_pass(state, conflicts, params, seed, attempt)
        fired += report.fired_count
        total += report.events_total
        if not report.fired:
            p_hat = fired / total if total else 0.0
            return new, report, LocalLemmaDiagnostic(new.iteration, attempt + 1, p_hat, d, math.e * p_hat * d)
    raise RetryExhausted(state, report, params.retry_limit + 1)


# --------------------------------------------------------------------------
# Finishing
# --------------------------------------------------------------------------


@dataclass
class FinishResult:
    assignment: dict[int, int] | None
    path: str  # greedy, exact-partial, exact-full or unsat


def _line_target(H: MultiGraph, conflicts: ConflictGraphs) -> MultiGraph:
    L = line_graph(H)
    pairs = set(L.simple_edges()) | set(conflicts.J1.simple_edges()) | set(conflicts.J2.simple_edges())
    return MultiGraph.from_simple(H.m, pairs)


def _allowed(H: MultiGraph, e: int, lists, assigned: Mapping[int, int], conflicts: ConflictGraphs) -> list[int]:
    taken = {assigned[f] for v in H.edges[e] for f in H.incident(v) if f != e and f in assigned}
    taken |= conflicts.forbidden(e, assigned)
    return sorted(c for c in lists[e] if c not in taken)


def greedy_finish(
    H: MultiGraph,
    lists: Sequence[Iterable[int]],
    assigned: Mapping[int, int],
    conflicts: ConflictGraphs,
) -> FinishResult:
    """Complete ``assigned`` from the original lists; exact search when greedy gets stuck.

    Remaining edges are coloured in id order with the smallest colour that is
    free at both endpoints and clear of ``J1``/``J2`` neighbours. If that fails,
    the remaining edges are solved exactly with the colouring so far fixed,
    and if that is unsatisfiable the whole instance is solved exactly from
    scratch. ``None`` comes back only when the whole instance has no solution.
    """
    lists = [frozenset(L) for L in lists]
    out = dict(assigned)
    for e in range(H.m):
        if e in out:
            continue
        options = _allowed(H, e, lists, out, conflicts)
        if not options:
            break
        out[e] = options[0]
    else:
        return FinishResult(out, "greedy")

    target = _line_target(H, conflicts)
    rest = [e for e in range(H.m) if e not in assigned]
    if rest:
        sub, labels = target.induced(rest)
        sub_lists = {i: _allowed(H, e, lists, assigned, conflicts) for i, e in enumerate(labels)}
        j2_sub = conflicts.J2.induced(rest)[0]
        found = exact_list_colouring(sub, sub_lists, (j2_sub, conflicts.s), limit=None)
        if found is not None:
            out = dict(assigned)
            out.update({labels[i]: c for i, c in found.items()})
            return FinishResult(out, "exact-partial")
    found = exact_list_colouring(
        target, {e: sorted(lists[e]) for e in range(H.m)}, (conflicts.J2, conflicts.s), limit=None
    )
    if found is None:
        return FinishResult(None, "unsat")
    return FinishResult(dict(found), "exact-full")


@dataclass
class KahnRun:
    assignment: dict[int, int] | None
    finish_path: str
    reports: list[BadEventReport]
    diagnostics: list[LocalLemmaDiagnostic]
    fits: list[FitRecord]
    retry_exhausted: bool
    stopped_by_threshold: bool
    iterations: int
    problem: tuple | None

    @property
    def ok(self) -> bool:
        return self.assignment is not None and self.problem is None


def finishing_threshold_met(state: ColourState, params: KahnParams, conflicts: ConflictGraphs) -> bool:
    """Uncoloured max degree at most ``Δ/(2eK)`` and at least ``Δ/(eK)`` free colours per uncoloured edge."""
    D = state.delta_param
    if max(state.uncoloured_degrees(), default=0) > D / (2 * math.e * params.K):
        return False
    for e in state.uncoloured():
        if len(_allowed(state.H, e, state.lists, state.assigned, conflicts)) < D / (math.e * params.K):
            return False
    return True


def kahn_colour(
    H: MultiGraph,
    lists: Sequence[Iterable[int]],
    conflicts: ConflictGraphs | None = None,
    params: KahnParams | None = None,
    *,
    seed: int = 0,
    delta_param: int | None = None,
) -> KahnRun:
    """Iterate to a fixpoint, then finish greedily (exact fallback below)."""
    params = params or KahnParams()
    conflicts = conflicts or ConflictGraphs.empty(H.m)
    state, fits = initial_state(H, lists, params, delta_param)
    reports, diags = [], []
    exhausted = stopped = False
    while state.uncoloured() and state.iteration < params.max_iterations:
        if finishing_threshold_met(state, params, conflicts):
            stopped = True
            break
        try:
            new, report, diag = iterate(state, conflicts, params, seed)
        except RetryExhausted as exc:
            reports.append(exc.report)
            exhausted = True
            break
        reports.append(report)
        diags.append(diag)
        progressed = len(new.assigned) > len(state.assigned)
        state = new
        if not progressed and not any(state.colour_edges(c) for c in state.palette):
            break
    finish = greedy_finish(H, state.lists, state.assigned, conflicts)
    problem = None
    if finish.assignment is not None:
        if len(finish.assignment) != H.m:
            problem = ("incomplete",)
        else:
            problem = assignment_violation(H, finish.assignment, state.lists, conflicts)
    return KahnRun(
        finish.assignment, finish.path, reports, diags, fits, exhausted, stopped, state.iteration, problem
    )


# --------------------------------------------------------------------------
# Extension over the core of a reduction certificate
# --------------------------------------------------------------------------


def core_conflicts(G: MultiGraph, cert: ReductionCertificate, s: int | None = None) -> ConflictGraphs:
    """``J2`` joins core vertices adjacent in ``G``; ``J1`` joins those adjacent in ``G²``
    whose ``H``-edges share no endpoint."""
    H, core = cert.H, cert.core
    if s is None:
        s = max(cert.params.t_light, 1)
    index = {r: j for j, r in enumerate(core)}
    j1, j2 = set(), set()
    for j, r in enumerate(core):
        near = G.bfs_distances(r, cutoff=2)
        for w, dist in near.items():
            k = index.get(w)
            if k is None or k <= j:
                continue
            if dist == 1:
                j2.add((j, k))
            if not set(H.edges[j]) & set(H.edges[k]):
                j1.add((j, k))
    return ConflictGraphs.from_pairs(H.m, j1, j2, s)


def required_list_length(delta: int, epsilon, gap_v: int, gap_w: int) -> int:
    """``ceil((3/2+ε)Δ - gap_v - gap_w - 3 sqrt(Δ))`` computed exactly."""
    eps = Fraction(repr(epsilon)) if isinstance(epsilon, float) else Fraction(epsilon)
    base = (Fraction(3, 2) + eps) * delta - gap_v - gap_w
    # smallest integer k with k >= base - 3 sqrt(Δ), i.e. (base - k)^2 <= 9Δ when k < base
    k = math.floor(base)
    while k - 1 >= base or (base - (k - 1)) ** 2 <= 9 * delta:
        k -= 1
    return k


def palette_size(delta: int, epsilon) -> int:
    eps = Fraction(repr(epsilon)) if isinstance(epsilon, float) else Fraction(epsilon)
    return math.ceil((Fraction(3, 2) + eps) * delta)


@dataclass
class TwoCopies:
    graph: MultiGraph
    copy_edge: list[tuple[int, int]]  # edge j of H -> (id in copy 1, id in copy 2)
    bridge_edges: dict[int, list[int]]  # H vertex -> ids of the edges between its copies

    def copy_vertex(self, v: int, which: int, n: int) -> int:
        return v if which == 1 else n + v


def two_copies(H: MultiGraph, degree_in_G: Sequence[int], delta: int) -> TwoCopies:
    """Two disjoint copies of ``H`` plus ``Δ - d_G(v)`` parallel edges between the copies of each ``v``."""
    n, m = H.n, H.m
    edges = list(H.edges) + [(u + n, v + n) for u, v in H.edges]
    bridges: dict[int, list[int]] = {}
    for v in range(n):
        extra = delta - degree_in_G[v]
        if extra < 0:
            raise ValueError(f"vertex {v} has degree {degree_in_G[v]} above Δ={delta}")
        bridges[v] = list(range(len(edges), len(edges) + extra))
        edges.extend([(v, v + n)] * extra)
    return TwoCopies(MultiGraph(2 * n, edges), [(j, j + m) for j in range(m)], bridges)


@dataclass
class ExtensionResult:
    colouring: dict[int, int] | None
    verified: bool
    problem: tuple | None
    used_two_copies: bool
    conflicts: ConflictGraphs
    residual_lists: dict[int, list[int]]
    run: KahnRun | None
    status: str


def extension_violation(G: MultiGraph, colouring: Mapping[int, int], R: Iterable[int], s: int):
    """Properness on ``G²`` and gap at least ``s`` across every ``G``-edge meeting ``R``."""
    problem = colouring_violation(square(G), colouring)
    if problem is not None:
        return ("square",) + tuple(problem)
    Rset = set(R)
    for u, v in G.simple_edges():
        if (u in Rset or v in Rset) and abs(colouring[u] - colouring[v]) < s:
            return ("gap", u, v, abs(colouring[u] - colouring[v]))
    return None


def colour_core_extension(
    G: MultiGraph,
    cert: ReductionCertificate,
    partial: Mapping[int, int],
    lists: Mapping[int, Iterable[int]] | None = None,
    epsilon=0.25,
    *,
    params: KahnParams | None = None,
    seed: int = 0,
    list_policy: str = "full",
    use_two_copies: str = "auto",
) -> ExtensionResult:
    """Extend a colouring of ``G² - R`` over the core ``R`` of a type-B certificate.

    Residual list of a core vertex: its list minus colours on its ``G²``
    neighbours outside ``R`` and minus colours within ``s-1`` of colours on its
    ``G`` neighbours. ``list_policy="minimal"`` truncates each residual list to
    the length ``ceil((3/2+ε)Δ - (d_G(v)-d_H(v)) - (d_G(w)-d_H(w)) - 3 sqrt(Δ))``
    (never below one). When some vertex of ``H`` has ``G``-degree below ``Δ``
    (or ``use_two_copies="always"``) the doubled multigraph is coloured
    instead, with new edges offered the full palette, and copy one is read
    off.
    """
    if cert.kind != "B":
        raise ValueError("extension needs a type-B certificate")
    params = params or KahnParams(epsilon=float(epsilon))
    delta = cert.params.delta
    H, core, V = cert.H, cert.core, cert.h_vertices
    R = set(core)
    outside = [v for v in G.vertices() if v not in R]
    missing = [v for v in outside if v not in partial]
    if missing:
        raise ValueError(f"partial colouring misses vertices {missing[:5]}")
    conflicts = core_conflicts(G, cert)
    s = conflicts.s
    full_palette = list(range(palette_size(delta, epsilon)))
    if lists is None:
        lists = {r: full_palette for r in core}

    residual: dict[int, list[int]] = {}
    for j, r in enumerate(core):
        near = G.bfs_distances(r, cutoff=2)
        blocked = set()
        for w, dist in near.items():
            if w == r or w in R:
                continue
            blocked.add(partial[w])
            if dist == 1:
                blocked.update(range(partial[w] - s + 1, partial[w] + s))
        options = sorted(c for c in lists[r] if c not in blocked)
        if list_policy == "minimal":
            a, b = H.edges[j]
            gap_a = G.degree(V[a]) - H.degree(a)
            gap_b = G.degree(V[b]) - H.degree(b)
            options = options[: max(required_list_length(delta, epsilon, gap_a, gap_b), 1)]
        elif list_policy != "full":
            raise ValueError("list_policy must be 'full' or 'minimal'")
        residual[j] = options

    needs_copies = any(G.degree(v) < delta for v in V)
    doubled = use_two_copies == "always" or (use_two_copies == "auto" and needs_copies)
    if doubled:
        tc = two_copies(H, [G.degree(v) for v in V], delta)
        edge_lists: list[list[int]] = [None] * tc.graph.m
        for j, (a, b) in enumerate(tc.copy_edge):
            edge_lists[a] = residual[j]
            edge_lists[b] = residual[j]
        for ids in tc.bridge_edges.values():
            for e in ids:
                edge_lists[e] = full_palette
        m = H.m
        shift = lambda pairs: [(u, v) for u, v in pairs] + [(u + m, v + m) for u, v in pairs]
        ov_conf = ConflictGraphs.from_pairs(
            tc.graph.m, shift(conflicts.J1.simple_edges()), shift(conflicts.J2.simple_edges()), s
        )
        run = kahn_colour(tc.graph, edge_lists, ov_conf, params, seed=seed, delta_param=delta)
        core_colours = None if run.assignment is None else {j: run.assignment[a] for j, (a, _) in enumerate(tc.copy_edge)}
    else:
        run = kahn_colour(H, [residual[j] for j in range(H.m)], conflicts, params, seed=seed, delta_param=delta)
        core_colours = run.assignment

    if core_colours is None:
        return ExtensionResult(None, False, None, doubled, conflicts, residual, run, "unsat")
    colouring = {v: partial[v] for v in outside}
    colouring.update({core[j]: c for j, c in core_colours.items()})
    colouring = dict(sorted(colouring.items()))
    problem = extension_violation(G, colouring, R, s)
    if problem is None:
        for r in core:
            if colouring[r] not in set(lists[r]):
                problem = ("not-in-list", r, colouring[r])
                break
    return ExtensionResult(colouring, problem is None, problem, doubled, conflicts, residual, run, "sat")
