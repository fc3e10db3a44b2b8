"""Hard-core matchings on a small graph: marginals, the polytope, and fitting back.

Run: python demos/matching_marginals.py
"""

from fractions import Fraction

from sqcolour.generators import named_graph
from sqcolour.matching import HardCoreModel, fit_activities, in_matching_polytope, sample_matching


if __name__ == "__main__":
    G = named_graph("petersen")
    model = HardCoreModel(G, [Fraction(1, 2)] * G.m)
    marg = model.marginals
    print("Z =", model.Z)
    print("marginal of edge 0 =", marg[0], f"({float(marg[0]):.4f})")
    print("inside polytope:", in_matching_polytope(G, marg).inside)

    fit = fit_activities(G, [float(x) for x in marg], tol=1e-10)
    print("recovered activity of edge 0: %.6f" % fit.activities[0])

    counts = [0] * G.m
    trials = 2000
    for t in range(trials):
        for e in sample_matching(model, t):
            counts[e] += 1
    print("empirical marginal of edge 0: %.4f" % (counts[0] / trials))

    # the triangle with 1/2 on every edge breaks the odd-set constraint
    tri = named_graph("k3")
    print("triangle at 1/2:", in_matching_polytope(tri, [Fraction(1, 2)] * 3).inside)
