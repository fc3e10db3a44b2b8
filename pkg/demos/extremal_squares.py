"""Square chromatic numbers of the extremal families, computed exactly.

Run: python demos/extremal_squares.py
"""

from sqcolour.generators import kkk_free_example, named_graph, wegner_graph
from sqcolour.graph import square
from sqcolour.labelling import chromatic_number, greedy_many_passes, span


def show(name, G):
    chi, _ = chromatic_number(square(G), limit=None)
    greedy = span(greedy_many_passes(G, 1, 1))
    print(f"{name:>14}: n={G.n:3d} max_deg={G.max_degree:2d} chi(G^2)={chi:3d} greedy={greedy:3d}")


if __name__ == "__main__":
    for k in (2, 3, 4):
        show(f"wegner k={k}", wegner_graph(k))
    for m in (2, 3):
        show(f"K44-free m={m}", kkk_free_example(m))
    for name in ("c5", "petersen", "octahedron"):
        show(name, named_graph(name))
    # square of C5 is K5
    print("square(C5) edges:", square(named_graph("c5")).m)
