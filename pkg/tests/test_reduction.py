from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqcolour.generators import named_graph, random_planar_triangulation, wegner_graph
from sqcolour.graph import MultiGraph, apply_minor_ops_labelled, square
from sqcolour.reduction import (
    ReductionParams,
    find_reduction,
    find_violating_set,
    find_violating_set_exhaustive,
    iroot,
    is_removable,
    remove_and_patch,
    removable_vertices,
    square_containment_violation,
    verify_certificate,
    violation_value,
)
from strategies import multigraphs


def test_iroot_and_thresholds():
    assert [iroot(x, 4) for x in (15, 16, 80, 81)] == [1, 2, 2, 3]
    p = ReductionParams(16)
    assert (p.t_light, p.t_S0, p.t_slack) == (2, 11, 12)
    assert p.heavy(2) and not p.exceeds_quarter(2) and p.exceeds_quarter(3)
    assert p.at_least_half(8) and not p.at_least_half(7)
    assert ReductionParams(8).t_light == 1


def test_params_validation():
    with pytest.raises(ValueError):
        ReductionParams(0)
    with pytest.raises(ValueError):
        ReductionParams(16, Fraction(1, 2))
    with pytest.raises(ValueError):
        ReductionParams(16, 0)


def test_removable_examples():
    p16 = ReductionParams(16)
    assert removable_vertices(named_graph("P4"), p16) == frozenset(range(4))
    star = named_graph("k_{1,5}")
    assert removable_vertices(star, p16) == frozenset(range(1, 6))
    assert removable_vertices(wegner_graph(4), ReductionParams(8)) == frozenset()


def test_patch_path():
    G = MultiGraph(3, [(0, 1), (1, 2)])
    res = remove_and_patch(G, [1], ReductionParams(16))
    assert res.labels == [0, 2] and res.graph.simple_edges() == [(0, 1)]


def test_patch_empty_is_identity():
    G = wegner_graph(2)
    res = remove_and_patch(G, [], ReductionParams(4096))
    assert res.graph == G and len(res.log) == 0


def test_patch_star_contracts_onto_a_leaf():
    G = named_graph("k_{1,3}")
    res = remove_and_patch(G, [0], ReductionParams(256))
    assert len(res.labels) == 3
    assert res.graph.simple_edges() == [(0, 1), (0, 2)]
    assert square_containment_violation(G, [0], res) is None


def test_patch_rejects_non_removable():
    with pytest.raises(ValueError):
        remove_and_patch(named_graph("k_{1,5}"), [0], ReductionParams(16))


@given(st.integers(5, 80), st.integers(0, 10_000), st.sampled_from([256, 625, 1296]), st.randoms(use_true_random=False))
@settings(max_examples=60, deadline=None)
def test_patch_invariants(n, seed, delta, rnd):
    G = random_planar_triangulation(n, seed)
    delta = max(delta, G.max_degree)
    params = ReductionParams(delta)
    R = [v for v in sorted(removable_vertices(G, params)) if rnd.random() < 0.5]
    res = remove_and_patch(G, R, params)
    assert square_containment_violation(G, R, res) is None
    outside = max((G.degree(v) for v in G.vertices() if v not in set(R)), default=0)
    assert res.graph.max_degree <= max(2 * params.t_light, outside)
    # the log replays to the same graph
    again, labels = apply_minor_ops_labelled(G, res.log)
    assert again.simple_edges() == res.graph.simple_edges() and labels == res.labels


def test_violating_set_examples():
    H = MultiGraph(3, [(0, 1)])
    assert find_violating_set(H, [0, 0, 0], 1) is None
    iso = MultiGraph(1)
    assert find_violating_set(iso, [10], 5) == frozenset({0})
    assert violation_value(iso, [10], 5, {0}) == 5


@given(multigraphs(max_n=10, max_m=20), st.data())
@settings(max_examples=150, deadline=None)
def test_violating_set_matches_exhaustive(H, data):
    boundary = data.draw(st.lists(st.integers(0, 9), min_size=H.n, max_size=H.n))
    slack = data.draw(st.fractions(min_value=Fraction(1, 3), max_value=10, max_denominator=4))
    best, minimal = find_violating_set_exhaustive(H, boundary, slack)
    Z = find_violating_set(H, boundary, slack)
    assert Z == minimal
    if Z is not None:
        assert violation_value(H, boundary, slack, Z) == best


def test_tree_gives_kind_a():
    tree = MultiGraph(7, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)])
    cert = find_reduction(tree, ReductionParams(256))
    assert cert.kind == "A" and verify_certificate(tree, cert) == []


@pytest.mark.parametrize("k", [2, 3, 4])
def test_wegner_reduction_certificates(k):
    G = wegner_graph(k)
    cert = find_reduction(G, ReductionParams((2 * k) ** 4))
    assert cert.ok
    assert verify_certificate(G, cert) == []


def test_double_star_gives_kind_b():
    edges = [(0, 2 + i) for i in range(16)] + [(1, 2 + i) for i in range(16)]
    G = MultiGraph(18, edges)
    cert = find_reduction(G, ReductionParams(16))
    assert cert.kind == "B" and cert.h_vertices == [0, 1] and len(cert.core) == 16
    assert cert.boundary == [0, 0]
    assert verify_certificate(G, cert) == []
    H = cert.H
    assert all(sorted(e) == [0, 1] for e in H.edges)
    assert find_violating_set(H, cert.boundary, cert.params.t_slack) is None


def _hub_with_cycle(edges, hub, k, start):
    vs = list(range(start, start + k))
    for i, v in enumerate(vs):
        edges += [(hub, v), (v, vs[(i + 1) % k])]
    return start + k


def test_violating_set_removes_overloaded_hub():
    # hubs 0 and 1 share one degree-2 vertex; hub 1 also meets four degree-2
    # vertices hanging off hub 2, whose many heavy neighbours put it in S0
    edges = []
    nxt = _hub_with_cycle(edges, 0, 10, 3)
    nxt = _hub_with_cycle(edges, 1, 10, nxt)
    nxt = _hub_with_cycle(edges, 2, 12, nxt)
    edges += [(0, nxt), (nxt, 1)]
    nxt += 1
    for _ in range(4):
        edges += [(1, nxt), (nxt, 2)]
        nxt += 1
    G = MultiGraph(nxt, edges)
    cert = find_reduction(G, ReductionParams(16))
    assert cert.stages["S0"] == 1 and cert.stages["R1"] == 1
    assert [(r.V_size, r.Z, r.g) for r in cert.iterations] == [(2, frozenset({1}), 1)]
    assert cert.kind == "diagnostic" and cert.reason


def test_requires_simple_graph_and_large_delta():
    with pytest.raises(ValueError):
        find_reduction(MultiGraph(2, [(0, 1), (0, 1)]), ReductionParams(16))
    with pytest.raises(ValueError):
        find_reduction(named_graph("k_{1,5}"), ReductionParams(4))


def test_small_delta_triangulation_is_diagnostic_or_verified():
    for seed in range(10):
        G = random_planar_triangulation(40, seed)
        cert = find_reduction(G, ReductionParams(G.max_degree))
        if cert.ok:
            assert verify_certificate(G, cert) == []
        else:
            assert cert.reason


def test_verify_rejects_tampered_certificate():
    G = wegner_graph(2)
    cert = find_reduction(G, ReductionParams(256))
    assert cert.kind == "A"
    cert.square_degree += 1
    assert verify_certificate(G, cert)
