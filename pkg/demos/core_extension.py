"""Reduce a graph, colour everything but the core, then extend over the core.

Run: python demos/core_extension.py [seed]
"""

import sys
from fractions import Fraction

from sqcolour.generators import random_core_instance
from sqcolour.graph import square
from sqcolour.kahn import colour_core_extension, extension_violation, palette_size
from sqcolour.labelling import exact_list_colouring
from sqcolour.reduction import verify_certificate


if __name__ == "__main__":
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    G, cert = random_core_instance(seed)
    print(f"G: n={G.n} m={G.m}; H: n={cert.H.n} m={cert.H.m}; core={cert.core}")
    print("certificate problems:", verify_certificate(G, cert) or "none")

    k = palette_size(cert.params.delta, Fraction(1, 4))
    keep = [v for v in G.vertices() if v not in set(cert.core)]
    sub, labels = square(G).induced(keep)
    f = exact_list_colouring(sub, {v: range(k) for v in sub.vertices()}, limit=None)
    partial = {labels[v]: c for v, c in f.items()}
    print(f"coloured {len(partial)} outside vertices from {k} colours")

    res = colour_core_extension(G, cert, partial, epsilon=Fraction(1, 4), seed=seed)
    print("status:", res.status, "verified:", res.verified, "two copies:", res.used_two_copies)
    if res.run is not None:
        print("iterations:", res.run.iterations, "finish:", res.run.finish_path)
        for rep in res.run.reports:
            print("  ", rep)
    if res.colouring is not None:
        print("separation s =", res.conflicts.s, "violation:", extension_violation(G, res.colouring, cert.core, res.conflicts.s))
