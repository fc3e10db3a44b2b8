"""Exact machinery for hard-core distributions on matchings.

Edge subsets are Python int bitmasks over edge ids. Partition functions come
from the deletion/contraction recursion

    Z(S) = Z(S - e) + λ(e) Z(S - N[e])

memoised on the residual bitmask, where ``N[e]`` is every edge meeting an
endpoint of ``e``. Parallel edges are pivoted together as one bundle so that
multigraphs with heavy multiplicity stay cheap. Dense multigraphs on few
vertices use a second recursion over vertex subsets instead (``VertexEngine``).
Activities may be floats or ``Fraction``s; with ``Fraction`` inputs every
result is exact.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .graph import MultiGraph

MATCHING_CAP_ENV = "SQCOLOUR_MATCHING_CAP"
POLYTOPE_CAP_ENV = "SQCOLOUR_POLYTOPE_CAP"


def matching_cap() -> int:
    return int(os.environ.get(MATCHING_CAP_ENV, 30))


def polytope_cap() -> int:
    return int(os.environ.get(POLYTOPE_CAP_ENV, 20))


class NonConvergence(RuntimeError):
    """Activity fitting did not reach the requested tolerance."""

    def __init__(self, message, *, iterations=0, error=math.inf, verdict=None, trace=()):
        super().__init__(message)
        self.iterations = iterations
        self.error = error
        self.verdict = verdict
        self.trace = list(trace)


def _rational(value) -> Fraction:
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def edge_masks(H: MultiGraph) -> tuple[list[int], list[int]]:
    """Per edge: mask of edges meeting it (itself included) and mask of its parallel bundle."""
    vertex_mask = [0] * H.n
    for eid, (u, v) in enumerate(H.edges):
        vertex_mask[u] |= 1 << eid
        vertex_mask[v] |= 1 << eid
    closed = [vertex_mask[u] | vertex_mask[v] for u, v in H.edges]
    bundle = [vertex_mask[u] & vertex_mask[v] for u, v in H.edges]
    return closed, bundle


class PartitionEngine:
    """Memoised partition function of a fixed graph with fixed activities."""

    def __init__(self, H: MultiGraph, activities: Sequence):
        if len(activities) != H.m:
            raise ValueError("one activity per edge required")
        self.graph = H
        self.activities = list(activities)
        self.closed, self.bundle = edge_masks(H)
        self.full = (1 << H.m) - 1
        self._memo: dict[int, object] = {0: 1}

    def Z(self, mask: int | None = None):
        if mask is None:
            mask = self.full
        memo = self._memo
        if mask in memo:
            return memo[mask]
        # iterative post-order to avoid deep recursion on long paths
        stack = [mask]
        while stack:
            s = stack[-1]
            if s in memo:
                stack.pop()
                continue
            e = (s & -s).bit_length() - 1
            same = self.bundle[e] & s
            rest = s & ~same
            apart = s & ~self.closed[e]
            missing = [t for t in (rest, apart) if t not in memo]
            if missing:
                stack.extend(missing)
                continue
            weight = 0
            b = same
            while b:
                f = (b & -b).bit_length() - 1
                weight = weight + self.activities[f]
                b &= b - 1
            memo[s] = memo[rest] + weight * memo[apart]
            stack.pop()
        return memo[mask]

    def inclusion_probability(self, e: int, mask: int | None = None):
        """``Pr(e in M)`` for the hard-core distribution restricted to edges in ``mask``."""
        if mask is None:
            mask = self.full
        if not (mask >> e) & 1:
            return 0
        return self.activities[e] * self.Z(mask & ~self.closed[e]) / self.Z(mask)

    def marginals(self, mask: int | None = None) -> list:
        if mask is None:
            mask = self.full
        return [self.inclusion_probability(e, mask) if (mask >> e) & 1 else 0 for e in range(self.graph.m)]


class VertexEngine:
    """Partition function by recursion over vertex subsets.

    ``Z(S) = Z(S - v) + Σ_u w(v,u) Z(S - v - u)`` for the smallest ``v`` in
    ``S``, where ``w(v,u)`` sums the activities of all parallel ``vu`` edges.
    At most ``2^n`` states, so this suits dense multigraphs on few vertices
    where the edge-set recursion would have too many residual states.
    """

    def __init__(self, H: MultiGraph, activities: Sequence):
        if len(activities) != H.m:
            raise ValueError("one activity per edge required")
        if H.n > VERTEX_ENGINE_CAP:
            raise ValueError(f"vertex-subset engine capped at {VERTEX_ENGINE_CAP} vertices")
        self.graph = H
        self.activities = list(activities)
        weight: dict[tuple[int, int], object] = {}
        for e, (u, v) in enumerate(H.edges):
            key = (min(u, v), max(u, v))
            weight[key] = weight.get(key, 0) + self.activities[e]
        self.weights = weight
        self.nbrs: list[list[tuple[int, object]]] = [[] for _ in range(H.n)]
        for (u, v), w in sorted(weight.items()):
            self.nbrs[u].append((v, w))
            self.nbrs[v].append((u, w))
        self.full = (1 << H.n) - 1
        self._memo: dict[int, object] = {0: 1}

    def Z(self, vmask: int | None = None):
        if vmask is None:
            vmask = self.full
        memo = self._memo
        if vmask in memo:
            return memo[vmask]
        v = (vmask & -vmask).bit_length() - 1
        rest = vmask & ~(1 << v)
        total = self.Z(rest)
        for u, w in self.nbrs[v]:
            if (rest >> u) & 1:
                total = total + w * self.Z(rest & ~(1 << u))
        memo[vmask] = total
        return total

    def inclusion_probability(self, e: int, vmask: int | None = None):
        if vmask is None:
            vmask = self.full
        u, v = self.graph.edges[e]
        if not ((vmask >> u) & 1 and (vmask >> v) & 1):
            return 0
        return self.activities[e] * self.Z(vmask & ~(1 << u) & ~(1 << v)) / self.Z(vmask)

    def marginals(self) -> list:
        return [self.inclusion_probability(e) for e in range(self.graph.m)]


VERTEX_ENGINE_CAP = 22


def make_engine(H: MultiGraph, activities: Sequence):
    """Edge-set recursion for sparse graphs, vertex-subset recursion for dense small ones."""
    if H.n <= 16 and (H.m > 2 * H.n or H.m > matching_cap()):
        return VertexEngine(H, activities)
    if H.m > matching_cap() and H.n <= VERTEX_ENGINE_CAP:
        return VertexEngine(H, activities)
    if H.m > matching_cap():
        raise ValueError(f"hard-core engine capped at {matching_cap()} edges or {VERTEX_ENGINE_CAP} vertices")
    return PartitionEngine(H, activities)


@dataclass(frozen=True, eq=False)
class HardCoreModel:
    """Distribution on matchings of ``graph`` proportional to the product of edge activities."""

    graph: MultiGraph
    activities: tuple

    def __post_init__(self):
        acts = tuple(self.activities)
        if len(acts) != self.graph.m:
            raise ValueError("one activity per edge required")
        if any(a < 0 for a in acts):
            raise ValueError("activities must be non-negative")
        if self.graph.m > matching_cap() and self.graph.n > VERTEX_ENGINE_CAP:
            raise ValueError(f"hard-core engine capped at {matching_cap()} edges or {VERTEX_ENGINE_CAP} vertices")
        object.__setattr__(self, "activities", acts)

    @classmethod
    def uniform(cls, H: MultiGraph, value=1) -> "HardCoreModel":
        return cls(H, (value,) * H.m)

    @cached_property
    def engine(self):
        return make_engine(self.graph, self.activities)

    @cached_property
    def edge_engine(self) -> PartitionEngine:
        """Edge-set engine, needed for conditioning on arbitrary edge subsets."""
        if isinstance(self.engine, PartitionEngine):
            return self.engine
        return PartitionEngine(self.graph, self.activities)

    @cached_property
    def Z(self):
        return self.engine.Z()

    @cached_property
    def marginals(self) -> tuple:
        return tuple(self.engine.marginals())

    def probability(self, matching) -> object:
        weight = 1
        for e in matching:
            weight = weight * self.activities[e]
        return weight / self.Z


def sample_matching(model: HardCoreModel, rng=None, *, method: str = "auto") -> frozenset[int]:
    """Exact sample from the hard-core distribution.

    ``method="edges"`` walks the edges in id order and keeps ``e`` with
    probability ``λ(e) Z(S - N[e]) / Z(S)``, ``S`` being the still-undecided
    edges compatible with the choices so far. ``method="vertices"`` walks the
    vertices instead, matching the smallest live vertex to each live
    neighbour (or to nothing) in proportion to the partition functions of what
    remains. ``auto`` picks whichever engine the model uses.
    """
    rng = np.random.default_rng(rng)
    if method == "auto":
        method = "vertices" if isinstance(model.engine, VertexEngine) else "edges"
    H = model.graph
    chosen = []
    if method == "edges":
        engine = model.edge_engine
        S = engine.full
        for e in range(H.m):
            if not (S >> e) & 1:
                continue
            p = engine.inclusion_probability(e, S)
            if rng.random() < float(p):
                chosen.append(e)
                S &= ~engine.closed[e]
            else:
                S &= ~(1 << e)
        return frozenset(chosen)
    if method != "vertices":
        raise ValueError(f"unknown sampling method {method!r}")
    engine = model.engine if isinstance(model.engine, VertexEngine) else VertexEngine(H, model.activities)
    parallel: dict[tuple[int, int], list[int]] = {}
    for e, (u, v) in enumerate(H.edges):
        parallel.setdefault((min(u, v), max(u, v)), []).append(e)
    S = engine.full
    while S:
        v = (S & -S).bit_length() - 1
        rest = S & ~(1 << v)
        total = float(engine.Z(S))
        r = rng.random() * total
        acc = float(engine.Z(rest))
        partner = None
        if r >= acc:
            for u, w in engine.nbrs[v]:
                if not (rest >> u) & 1:
                    continue
                acc += float(w * engine.Z(rest & ~(1 << u)))
                partner = u
                if r < acc:
                    break
        if partner is None:
            S = rest
            continue
        ids = parallel[(min(v, partner), max(v, partner))]
        acts = np.array([float(model.activities[e]) for e in ids])
        pick = ids[int(rng.choice(len(ids), p=acts / acts.sum()))] if len(ids) > 1 else ids[0]
        chosen.append(pick)
        S = rest & ~(1 << partner)
    return frozenset(chosen)


def enumerate_matchings(H: MultiGraph, cap: int | None = None) -> list[tuple[int, ...]]:
    """All matchings (as sorted edge-id tuples), the empty matching first."""
    cap = matching_cap() if cap is None else cap
    if H.m > cap:
        raise ValueError(f"matching enumeration capped at {cap} edges")
    out: list[tuple[int, ...]] = []

    def grow(start, used, chosen):
        out.append(tuple(chosen))
        for e in range(start, H.m):
            u, v = H.edges[e]
            if u in used or v in used:
                continue
            chosen.append(e)
            grow(e + 1, used | {u, v}, chosen)
            chosen.pop()

    grow(0, frozenset(), [])
    return out


def partition_and_marginals(model: HardCoreModel):
    """``(Z, marginals)`` of the model."""
    return model.Z, model.marginals


def partition_by_enumeration(model: HardCoreModel):
    """Reference computation summing over every matching explicitly."""
    Z = 0
    mass = [0] * model.graph.m
    for M in enumerate_matchings(model.graph):
        w = 1
        for e in M:
            w = w * model.activities[e]
        Z = Z + w
        for e in M:
            mass[e] = mass[e] + w
    return Z, [m_ / Z for m_ in mass]


# --------------------------------------------------------------------------
# Matching polytope
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PolytopeVerdict:
    inside: bool
    violated_constraint: tuple | None
    scale: object = 1
    strict: bool = False

    def describe(self) -> str:
        if self.inside:
            return "inside"
        c = self.violated_constraint
        if c[0] == "vertex":
            return f"vertex {c[1]}: sum={float(c[2]):.12g} > 1"
        if c[0] == "odd-set":
            return f"odd set {sorted(c[1])}: sum={float(c[2]):.12g} > {c[3]}"
        return f"negative entry at edge {c[1]}: {float(c[2]):.12g}"


def _odd_subset_table(n: int):
    masks = np.arange(1 << n, dtype=np.int64)
    sizes = np.zeros(1 << n, dtype=np.int64)
    for v in range(n):
        sizes += (masks >> v) & 1
    return masks, sizes


def _vector(H, x):
    if isinstance(x, Mapping):
        return [x.get(e, 0) for e in range(H.m)]
    values = list(x)
    if len(values) != H.m:
        raise ValueError("marginal vector must have one entry per edge")
    return values


def in_matching_polytope(
    H: MultiGraph,
    x,
    scale=1,
    *,
    strict: bool = False,
    cap: int | None = None,
    atol: float = 1e-12,
) -> PolytopeVerdict:
    """Test ``x / scale`` against the vertex and odd-set inequalities of the matching polytope.

    Odd sets of size at least three are enumerated exhaustively (the induced
    subgraph carries the edge sum). Integer or ``Fraction`` input is checked
    exactly; float input uses the absolute tolerance ``atol``. With
    ``strict=True`` every inequality must hold strictly. The reported
    violation is the worst vertex if any, otherwise the odd set with the
    largest excess (smallest such set on ties).
    """
    cap = polytope_cap() if cap is None else cap
    if H.n > cap:
        raise ValueError(f"odd-set enumeration capped at {cap} vertices")
    values = _vector(H, x)
    exact = all(isinstance(v, (int, Fraction)) for v in values) and not isinstance(scale, float)
    if exact:
        scale_q = Fraction(scale)
        y = [Fraction(v) / scale_q for v in values]
        tol = 0
    else:
        y = [float(v) / float(scale) for v in values]
        tol = atol

    def bad(total, bound):
        return total >= bound - tol if strict else total > bound + tol

    for e, val in enumerate(y):
        if val < -tol:
            return PolytopeVerdict(False, ("negative", e, val), scale, strict)

    worst = None
    for v in H.vertices():
        total = sum((y[e] for e in H.incident(v)), 0)
        if bad(total, 1) and (worst is None or total > worst[2]):
            worst = ("vertex", v, total)
    if worst is not None:
        return PolytopeVerdict(False, worst, scale, strict)

    n = H.n
    if n >= 3 and H.m:
        masks, sizes = _odd_subset_table(n)
        if exact:
            denom = math.lcm(*(q.denominator for q in y))
            ints = [int(q * denom) for q in y]
            dtype = np.int64 if sum(abs(i) for i in ints) < (1 << 62) // 2 else object
            sums = np.zeros(1 << n, dtype=dtype)
            weights = ints
        else:
            sums = np.zeros(1 << n, dtype=np.float64)
            weights = y
            denom = 1
        for e, (u, v) in enumerate(H.edges):
            if weights[e]:
                inside = ((masks >> u) & (masks >> v) & 1).astype(bool)
                sums[inside] += weights[e]
        odd = (sizes >= 3) & (sizes % 2 == 1)
        bounds = (sizes - 1) * denom  # twice the bound, times denom
        doubled = sums * 2
        if strict:
            viol = odd & (doubled >= bounds - 2 * tol * denom)
        else:
            viol = odd & (doubled > bounds + 2 * tol * denom)
        if viol.any():
            idx = np.nonzero(viol)[0]
            excess = doubled[idx] - bounds[idx]
            order = sorted(range(len(idx)), key=lambda i: (-excess[i], sizes[idx[i]], idx[i]))
            best = int(idx[order[0]])
            members = frozenset(v for v in range(n) if (best >> v) & 1)
            total = Fraction(int(sums[best]), denom) if exact else float(sums[best])
            bound = Fraction(len(members) - 1, 2)
            return PolytopeVerdict(False, ("odd-set", members, total, bound), scale, strict)
    return PolytopeVerdict(True, None, scale, strict)


# --------------------------------------------------------------------------
# Fitting activities to target marginals
# --------------------------------------------------------------------------


def _initial_activities(H: MultiGraph, target: Sequence[float]) -> list[float]:
    acts = []
    for e, (u, _) in enumerate(H.edges):
        others = sum(target[f] for f in H.incident(u) if f != e)
        denom = 1.0 - others
        guess = target[e] / denom if denom > 0 else 1e6
        acts.append(min(max(guess, 1e-6), 1e6))
    return acts


def fit_activities(
    H: MultiGraph,
    target,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    *,
    damping: float = 0.5,
    trace_every: int = 0,
) -> HardCoreModel:
    """Hard-core model whose marginals match ``target`` to ``tol`` in the max norm.

    The target must satisfy the vertex and odd-set inequalities strictly;
    otherwise no hard-core distribution has these marginals and
    ``NonConvergence`` is raised straight away. Activities start at
    ``t(e) / (1 - sum of targets at the first endpoint other than e)`` clipped to
    ``[1e-6, 1e6]`` and follow the damped multiplicative update
    ``λ <- λ (t/x)^damping``. Edges with zero target get zero activity.
    """
    t = [float(v) for v in _vector(H, target)]
    verdict = in_matching_polytope(H, t, strict=True, atol=0.0)
    if not verdict.inside:
        raise NonConvergence(
            f"target is not strictly inside the matching polytope ({verdict.describe()})",
            verdict=verdict,
        )
    live = [e for e in range(H.m) if t[e] > 0]
    acts = _initial_activities(H, t)
    for e in range(H.m):
        if t[e] == 0:
            acts[e] = 0.0
    trace = []
    err = math.inf
    for it in range(1, max_iter + 1):
        x = make_engine(H, acts).marginals()
        err = max((abs(x[e] - t[e]) for e in live), default=0.0)
        if trace_every and (it == 1 or it % trace_every == 0):
            trace.append((it, err))
        if err <= tol:
            model = HardCoreModel(H, tuple(acts))
            object.__setattr__(model, "fit_trace", tuple(trace + [(it, err)]))
            return model
        for e in live:
            acts[e] *= (t[e] / x[e]) ** damping
    raise NonConvergence(
        f"activity fitting stopped after {max_iter} iterations at error {err:.3g}",
        iterations=max_iter,
        error=err,
        trace=trace,
    )


# --------------------------------------------------------------------------
# Reports on fitted models
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ActivityBoundReport:
    beta_hat: float
    max_ratio: float
    max_ratio_edge: int | None
    max_vertex_sum: float
    max_vertex: int | None


def activity_bound_report(model: HardCoreModel) -> ActivityBoundReport:
    """Empirical constant bounding ``λ(e)/x(e)`` and the per-vertex activity sums."""
    H = model.graph
    x = model.marginals
    ratio, ratio_edge = 0.0, None
    for e in range(H.m):
        if x[e] > 0 and model.activities[e] / x[e] > ratio:
            ratio, ratio_edge = float(model.activities[e] / x[e]), e
    vsum, vmax = 0.0, None
    for v in H.vertices():
        s = float(sum((model.activities[e] for e in H.incident(v)), 0))
        if s > vsum:
            vsum, vmax = s, v
    return ActivityBoundReport(max(ratio, vsum), ratio, ratio_edge, vsum, vmax)


@dataclass(frozen=True)
class ListMarginalVerdict:
    list_size_condition: bool
    odd_set_condition: bool
    polytope: PolytopeVerdict
    failing_edge: int | None = None
    failing_set: frozenset | None = None


def required_list_size(delta, epsilon, d_v: int, d_w: int) -> Fraction:
    """``(3/2 + ε)Δ - (Δ - d(v)) - (Δ - d(w))``; the caller subtracts ``3 sqrt(Δ)``."""
    delta = _rational(delta)
    return (Fraction(3, 2) + _rational(epsilon)) * delta - (delta - d_v) - (delta - d_w)


def list_size_ok(size: int, delta, epsilon, d_v: int, d_w: int) -> bool:
    """``size >= (3/2+ε)Δ - (Δ-d(v)) - (Δ-d(w)) - 3 sqrt(Δ)``, decided exactly."""
    slack = Fraction(size) - required_list_size(delta, epsilon, d_v, d_w)
    # slack >= -3 sqrt(Δ)
    return slack >= 0 or slack * slack <= 9 * _rational(delta)


def odd_set_violation(H: MultiGraph, delta, epsilon, *, odd_only: bool = True, boundary=None):
    """First set ``X`` with ``sum_X (Δ - d(v)) - e(X, V-X) > ε|X|Δ/10``, or ``None``.

    ``boundary`` overrides ``Δ - d(v)`` per vertex when given.
    """
    n = H.n
    if n > polytope_cap():
        raise ValueError(f"set enumeration capped at {polytope_cap()} vertices")
    delta = _rational(delta)
    eps = _rational(epsilon)
    if boundary is None:
        boundary = [delta - H.degree(v) for v in H.vertices()]
    boundary = [_rational(b) for b in boundary]
    denom = math.lcm(delta.denominator * eps.denominator * 10, *(b.denominator for b in boundary))
    masks, sizes = _odd_subset_table(n)
    total = np.zeros(1 << n, dtype=np.int64)
    for v in range(n):
        total += ((masks >> v) & 1) * int(boundary[v] * denom)
    for u, v in H.edges:
        cut = (((masks >> u) ^ (masks >> v)) & 1)
        total -= cut * denom
    rhs = sizes * int(eps * delta / 10 * denom)
    viol = (total > rhs) & (sizes >= 1)
    if odd_only:
        viol &= sizes % 2 == 1
    if viol.any():
        best = int(np.nonzero(viol)[0][0])
        return frozenset(v for v in range(n) if (best >> v) & 1)
    return None


def list_marginal_check(H: MultiGraph, list_sizes: Sequence[int], epsilon, delta_param):
    """``x_e = (1 + ε/2)/|L(e)|`` with separate verdicts on both hypotheses and on membership."""
    if any(s < 1 for s in list_sizes):
        raise ValueError("list sizes must be at least 1")
    eps = _rational(epsilon)
    x = [(1 + eps / 2) / s for s in list_sizes]
    failing_edge = None
    for e, (u, v) in enumerate(H.edges):
        if not list_size_ok(list_sizes[e], delta_param, eps, H.degree(u), H.degree(v)):
            failing_edge = e
            break
    failing_set = odd_set_violation(H, delta_param, eps)
    verdict = ListMarginalVerdict(
        failing_edge is None,
        failing_set is None,
        in_matching_polytope(H, x),
        failing_edge,
        failing_set,
    )
    return x, verdict


# --------------------------------------------------------------------------
# Correlation decay
# --------------------------------------------------------------------------


def edge_distances(H: MultiGraph, e: int) -> list[int]:
    """Distance from edge ``e`` to every edge: least vertex distance between endpoints."""
    u, v = H.edges[e]
    du = H.bfs_distances(u)
    dv = H.bfs_distances(v)
    far = H.n + 1

    def dist(w):
        return min(du.get(w, far), dv.get(w, far))

    return [min(dist(a), dist(b)) for a, b in H.edges]


@dataclass(frozen=True)
class DecayRow:
    t: int
    distant_edges: int
    patterns: int
    max_deviation: object


def correlation_decay_probe(model: HardCoreModel, e: int, max_t: int) -> list[DecayRow]:
    """Exact ``max |Pr(e in M | Q)/Pr(e in M) - 1|`` over events ``Q`` fixed by edges at distance >= t.

    The extreme events are the atoms ``M ∩ D_t = P`` for matchings ``P`` of the
    distant edge set ``D_t``, so each row maximises over those.
    """
    H = model.graph
    engine = model.edge_engine
    closed, _ = edge_masks(H)
    base = model.marginals[e]
    dist = edge_distances(H, e)
    rows = []
    for t in range(1, max_t + 1):
        distant = [f for f in range(H.m) if dist[f] >= t]
        near_mask = engine.full
        for f in distant:
            near_mask &= ~(1 << f)
        sub = MultiGraph(H.n, [H.edges[f] for f in distant])
        worst = 0
        count = 0
        for P in enumerate_matchings(sub):
            real = [distant[i] for i in P]
            if any(model.activities[f] == 0 for f in real):
                continue
            free = near_mask
            for f in real:
                free &= ~closed[f]
            cond = engine.inclusion_probability(e, free)
            dev = abs(cond / base - 1) if base else 0
            worst = max(worst, dev)
            count += 1
        rows.append(DecayRow(t, len(distant), count, worst))
    return rows
