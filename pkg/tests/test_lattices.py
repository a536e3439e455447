import networkx as nx
import pytest

from tileroute import reseed_graph
from tileroute.circuitlib import available_graphs, builtin_basis_graph
from tileroute.core import graph_from_json, graph_to_json, lattice_max_degree

ONE_D = {"line", "ladder", "J1J2-line", "J1J2-ladder"}

# Vertex configurations of the uniform tilings; degree = number of polygons.
ARCHIMEDEAN = {
    "square": "4.4.4.4", "triangular": "3.3.3.3.3.3", "honeycomb": "6.6.6", "kagome": "3.6.3.6",
    "snub-square": "3.3.4.3.4", "square-octagon": "4.8.8", "trellis": "3.3.3.4.4", "star": "3.12.12",
    "ruby": "3.4.6.4", "cross": "4.6.12", "bridge": "3.3.3.3.6",
}
LAVES = {
    "union-jack": "square-octagon", "prismatic-pentagonal": "trellis", "cairo-pentagonal": "snub-square",
    "dice": "kagome", "tetrille": "ruby", "asanoha": "star", "floret-pentagonal": "bridge",
    "kisrhombille": "cross",
}


def torus(b, size_x: int, size_y: int, shear: int = 0) -> nx.Graph:
    """Finite periodic lattice; wrapping in y shifts x by ``shear``."""
    def reduce(x, y, s):
        k, y2 = divmod(y, size_y)
        return ((x - k * shear) % size_x, y2, s)

    g = nx.Graph()
    for i in range(size_x):
        for j in range(size_y):
            g.add_nodes_from(reduce(i, j, v.s) for v in b.vertices)
            for a, c in b.edges:
                g.add_edge(reduce(i + a.x, j + a.y, a.s), reduce(i + c.x, j + c.y, c.s))
    return g


def some_shear_matches(b, size_x, size_y, reference) -> bool:
    return any(nx.is_isomorphic(torus(b, size_x, size_y, k), reference) for k in range(size_x))


@pytest.mark.parametrize("name", available_graphs())
def test_builtin_invariants(name):
    b = builtin_basis_graph(name)
    b.check()
    assert graph_from_json(graph_to_json(b)) == b
    g = torus(b, 6, 1 if name in ONE_D else 6)
    assert g.number_of_edges() == len(b.edges) * (6 if name in ONE_D else 36)


@pytest.mark.parametrize("name,config", sorted(ARCHIMEDEAN.items()))
def test_archimedean_degrees(name, config):
    b = builtin_basis_graph(name)
    g = torus(b, 5, 5)
    assert set(dict(g.degree).values()) == {len(config.split("."))}
    assert lattice_max_degree(b) == len(config.split("."))


@pytest.mark.parametrize("name,base", sorted(LAVES.items()))
def test_laves_duals_match_face_count(name, base):
    dual, primal = builtin_basis_graph(name), builtin_basis_graph(base)
    # On a torus V - E + F = 0, so the dual has E - V vertices and E edges per cell.
    assert dual.n_seeds == len(primal.edges) - primal.n_seeds
    assert len(dual.edges) == len(primal.edges)
    face_sizes = sorted(int(p) for p in ARCHIMEDEAN[base].split("."))
    assert max(dict(torus(dual, 5, 5).degree).values()) == face_sizes[-1]


def test_standard_lattices_against_networkx():
    assert nx.is_isomorphic(torus(builtin_basis_graph("line"), 7, 1), nx.cycle_graph(7))
    assert nx.is_isomorphic(torus(builtin_basis_graph("ladder"), 7, 1), nx.circular_ladder_graph(7))
    assert nx.is_isomorphic(torus(builtin_basis_graph("J1J2-line"), 9, 1), nx.circulant_graph(9, [1, 2]))
    assert nx.is_isomorphic(torus(builtin_basis_graph("square"), 5, 4), nx.grid_2d_graph(5, 4, periodic=True))
    king = nx.grid_2d_graph(5, 5, periodic=True)
    king.add_edges_from((((i, j), ((i + 1) % 5, (j + dy) % 5)) for i in range(5) for j in range(5) for dy in (1, -1)))
    assert nx.is_isomorphic(torus(builtin_basis_graph("J1J2-square"), 5, 5), king)
    assert some_shear_matches(builtin_basis_graph("triangular"), 6, 6,
                              nx.triangular_lattice_graph(6, 12, periodic=True))
    assert some_shear_matches(builtin_basis_graph("honeycomb"), 4, 6,
                              nx.hexagonal_lattice_graph(4, 6, periodic=True))


def test_line_graph_lattices():
    honeycomb = torus(builtin_basis_graph("honeycomb"), 5, 4)
    assert nx.is_isomorphic(torus(builtin_basis_graph("kagome"), 5, 4), nx.line_graph(honeycomb))
    square_octagon = torus(builtin_basis_graph("square-octagon"), 4, 4)
    assert nx.is_isomorphic(torus(builtin_basis_graph("shuriken"), 4, 4), nx.line_graph(square_octagon))


@pytest.mark.parametrize("name,n,m", [("line", 3, 1), ("ladder", 2, 1), ("square", 2, 2), ("triangular", 2, 2),
                                      ("kagome", 1, 2), ("J1J2-line", 4, 1), ("honeycomb", 2, 1)])
def test_reseeded_lattice_is_isomorphic(name, n, m):
    b = builtin_basis_graph(name)
    r = reseed_graph(b, n, m)
    r.check()
    assert r.n_seeds == n * m * b.n_seeds
    cells = (3, 1) if name in ONE_D else (3, 3)
    assert nx.is_isomorphic(torus(r, *cells), torus(b, cells[0] * n, cells[1] * m))


def test_unknown_graph_lists_names():
    with pytest.raises(KeyError, match="square"):
        builtin_basis_graph("no-such-lattice")
