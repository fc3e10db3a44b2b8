import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqcolour.generators import named_graph, random_core_instance, wegner_graph
from sqcolour.graph import MultiGraph, square
from sqcolour.kahn import (
    ConflictGraphs,
    KahnParams,
    RetryExhausted,
    assignment_violation,
    colour_core_extension,
    core_conflicts,
    dependency_bound,
    extension_violation,
    greedy_finish,
    initial_state,
    iterate,
    kahn_colour,
    required_list_length,
    palette_size,
    resolve_multicoloured,
    two_copies,
)
from sqcolour.labelling import exact_list_colouring
from sqcolour.matching import odd_set_violation
from sqcolour.reduction import ReductionCertificate, ReductionParams
from strategies import multigraphs

TRI = named_graph("K3")


def test_params_defaults_and_validation():
    p = KahnParams()
    assert p.delta == pytest.approx(1 - 1 / 1.125) and p.xi == pytest.approx(p.delta / 2)
    with pytest.raises(ValueError):
        KahnParams(delta=0.2, xi=0.3)
    with pytest.raises(ValueError):
        KahnParams(K=0)
    with pytest.raises(ValueError):
        KahnParams(resolve="largest")


def test_resolve_examples():
    assert resolve_multicoloured({3: [0], 7: [0, 1]}) == {0: 3, 1: 7}
    assert resolve_multicoloured({5: [2]}) == {2: 5}
    assert 4 not in resolve_multicoloured({1: [0], 2: [1]})
    picked = resolve_multicoloured({1: [0], 2: [0]}, "uniform", 0)
    assert picked[0] in (1, 2)
    with pytest.raises(ValueError):
        resolve_multicoloured({1: [0]}, "largest")


def test_conflict_forbidden_sets():
    conf = ConflictGraphs.from_pairs(3, [(0, 1)], [(0, 2)], s=2)
    assert conf.forbidden(0, {1: 5, 2: 9}) == {5, 8, 9, 10}
    assert conf.clash(0, 5, 1, 5) and conf.clash(0, 8, 2, 9) and not conf.clash(0, 7, 2, 9)


def test_triangle_with_distinct_singletons():
    state, _ = initial_state(TRI, [{1}, {2}, {3}], KahnParams(retry_limit=50))
    new, report, diag = iterate(state, ConflictGraphs.empty(3), KahnParams(retry_limit=50), seed=1)
    assert new.assigned == {0: 1, 1: 2, 2: 3}
    assert not report.fired and diag.attempts >= 1


def test_path_lists_stay_proper():
    P = named_graph("P3")
    for seed in range(20):
        run = kahn_colour(P, [{1, 2}, {1, 2}], seed=seed)
        assert run.ok and run.assignment[0] != run.assignment[1]


def test_empty_graph_is_a_fixed_point():
    H = MultiGraph(3)
    state, _ = initial_state(H, [], KahnParams())
    new, report, _ = iterate(state, ConflictGraphs.empty(0), KahnParams())
    assert new is state and not report.fired
    assert kahn_colour(H, []).assignment == {}


def test_greedy_finish_examples():
    edge = MultiGraph(2, [(0, 1)])
    assert greedy_finish(edge, [{4, 6}], {}, ConflictGraphs.empty(1)).assignment == {0: 4}
    conf = ConflictGraphs.from_pairs(3, (), [(0, 1)], s=2)
    res = greedy_finish(TRI, [{1, 2, 3}] * 3, {}, conf)
    assert res.assignment is not None and assignment_violation(TRI, res.assignment, [{1, 2, 3}] * 3, conf) is None
    star = named_graph("k_{1,3}")
    res = greedy_finish(star, [{1, 2}] * 3, {}, ConflictGraphs.empty(3))
    assert res.assignment is None and res.path == "unsat"


def test_greedy_finish_falls_back_to_exact():
    # greedy gives edge 0 colour 1, which starves edge 1
    P = named_graph("P3")
    res = greedy_finish(P, [{1, 2}, {1}], {}, ConflictGraphs.empty(2))
    assert res.assignment == {0: 2, 1: 1} and res.path.startswith("exact")


@given(multigraphs(min_n=2, max_n=6, max_m=9), st.integers(0, 10_000), st.data())
@settings(max_examples=25, deadline=None)
def test_iteration_invariants(H, seed, data):
    if H.m == 0:
        return
    lists = [set(data.draw(st.sets(st.integers(0, 7), min_size=1, max_size=6))) for _ in range(H.m)]
    j2 = data.draw(st.sets(st.tuples(st.integers(0, H.m - 1), st.integers(0, H.m - 1)).filter(lambda p: p[0] != p[1]), max_size=3))
    conf = ConflictGraphs.from_pairs(H.m, (), j2, s=2)
    params = KahnParams(retry_limit=3, max_iterations=4)
    state, _ = initial_state(H, lists, params)
    for _ in range(3):
        if not state.uncoloured():
            break
        try:
            new, _, _ = iterate(state, conf, params, seed)
        except RetryExhausted:
            break
        assert assignment_violation(H, new.assigned, lists, conf) is None
        assert set(state.assigned.items()) <= set(new.assigned.items())
        for e in new.uncoloured():
            u, v = H.edges[e]
            assert new.residual[e] <= lists[e]
            for c in new.residual[e]:
                assert u not in new.covered[c] and v not in new.covered[c]
        for c in new.palette:
            for e in new.colour_edges(c):
                assert e not in new.assigned and c in new.residual[e]
        state = new


def test_kahn_colour_is_deterministic_per_seed():
    H = named_graph("petersen")
    lists = [set(range(5))] * H.m
    a = kahn_colour(H, lists, seed=11)
    b = kahn_colour(H, lists, seed=11)
    assert a.assignment == b.assignment and a.ok


def test_dependency_bound_small_cases():
    edge = MultiGraph(2, [(0, 1)])
    assert dependency_bound(edge, ConflictGraphs.empty(1), 1) == 3
    P = named_graph("P5")
    assert dependency_bound(P, ConflictGraphs.empty(4), 1) == 9


def test_list_sizes():
    assert palette_size(16, Fraction(1, 4)) == 28
    assert palette_size(10, 0.2) == 17
    # ceil(1.7*10 - 3*sqrt(10)) = ceil(7.51) = 8
    assert required_list_length(10, Fraction(1, 5), 0, 0) == 8
    assert required_list_length(10, 0.2, 1, 2) == 5


def test_two_copies_construction():
    H = MultiGraph(2, [(0, 1)])
    tc = two_copies(H, [14, 16], 16)
    assert len(tc.bridge_edges[0]) == 2 and len(tc.bridge_edges[1]) == 0
    G2 = tc.graph
    assert G2.degree(0) == G2.degree(2) == 3
    assert tc.copy_edge == [(0, 1)]
    with pytest.raises(ValueError):
        two_copies(H, [17, 1], 16)


@pytest.mark.parametrize("seed", range(8))
def test_two_copies_symmetry_and_boundary_identity(seed):
    G, cert = random_core_instance(seed)
    H, V, delta = cert.H, cert.h_vertices, cert.params.delta
    degG = [G.degree(v) for v in V]
    tc = two_copies(H, degG, delta)
    D = tc.graph
    n = H.n
    for v in range(n):
        assert delta - (D.degree(v) - len(tc.bridge_edges[v])) == delta - H.degree(v)
        assert D.degree(v) == D.degree(v + n)
        # identity in terms of the new degree: Δ - d_new(v) = d_G(v) - d_H(v)
        assert delta - D.degree(v) == degG[v] - H.degree(v)
    for j, (a, b) in enumerate(tc.copy_edge):
        u, w = D.edges[a]
        assert sorted(D.edges[b]) == sorted((u + n, w + n))
    eps = Fraction(1, 4)
    original = odd_set_violation(H, delta, eps, odd_only=False, boundary=[g - h for g, h in zip(degG, H.degrees)])
    if original is None:
        assert odd_set_violation(D, delta, eps, odd_only=False) is None


def _partial(G, core, palette):
    keep = [v for v in G.vertices() if v not in set(core)]
    sub, labels = square(G).induced(keep)
    f = exact_list_colouring(sub, {v: palette for v in sub.vertices()}, limit=None)
    return {labels[v]: c for v, c in f.items()}


def test_core_conflicts_on_wegner():
    G = wegner_graph(3)
    H = MultiGraph(2, [(0, 1), (0, 1)])
    cert = ReductionCertificate("B", ReductionParams(1296), H=H, h_vertices=[0, 1], core=[9, 10])
    conf = core_conflicts(G, cert)
    assert conf.s == 6
    # the two x-y subdivision vertices share endpoints: no J1, not G-adjacent: no J2
    assert conf.J1.m == 0 and conf.J2.m == 0


def test_single_edge_core_extension():
    # palette of size ceil(1.75*2) = 4, colours 0 and 1 taken by the ends
    G = MultiGraph(3, [(0, 2), (2, 1)])
    cert = ReductionCertificate("B", ReductionParams(2), H=MultiGraph(2, [(0, 1)]), h_vertices=[0, 1], core=[2])
    res = colour_core_extension(G, cert, {0: 0, 1: 1}, epsilon=Fraction(1, 4))
    assert res.verified and res.colouring[2] == 2


def test_wegner_extension_instance():
    G = wegner_graph(2)
    cert = ReductionCertificate(
        "B", ReductionParams(16), H=MultiGraph(2, [(0, 1)]), h_vertices=[0, 1], core=[7],
        boundary=[3, 3],
    )
    partial = _partial(G, cert.core, range(28))
    res = colour_core_extension(G, cert, partial, epsilon=Fraction(1, 4), seed=0)
    assert res.status == "sat" and res.verified and res.used_two_copies
    assert extension_violation(G, res.colouring, [7], res.conflicts.s) is None


@pytest.mark.parametrize("seed", range(5))
def test_core_extension_seeds(seed):
    G, cert = random_core_instance(seed)
    partial = _partial(G, cert.core, range(palette_size(cert.params.delta, Fraction(1, 4))))
    res = colour_core_extension(G, cert, partial, epsilon=Fraction(1, 4), seed=seed, list_policy="minimal")
    assert res.status == "sat" and res.verified
    again = colour_core_extension(G, cert, partial, epsilon=Fraction(1, 4), seed=seed, list_policy="minimal")
    assert again.colouring == res.colouring


def test_extension_needs_type_b_and_full_partial():
    G, cert = random_core_instance(0)
    with pytest.raises(ValueError):
        colour_core_extension(G, cert, {})
    cert.kind = "A"
    with pytest.raises(ValueError):
        colour_core_extension(G, cert, {v: 0 for v in G.vertices()})
