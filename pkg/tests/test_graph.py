"""Degeneracy ordering and spanning trees."""

import pytest

from genuscert.embedding import euler_genus
from genuscert.fixtures import corpus, k5_torus, k7_torus
from genuscert.graph import Graph, degeneracy_order, spanning_tree, validate_network


def complete_graph(n):
    return Graph.from_edges(
        [(u, v) for u in range(1, n + 1) for v in range(1, n + 1) if u < v]
    )


def path_graph(n):
    return Graph.from_edges([(i, i + 1) for i in range(1, n)])


def test_degeneracy_complete_graphs():
    assert degeneracy_order(complete_graph(7))[1] == 6
    assert degeneracy_order(complete_graph(5))[1] == 4


def test_degeneracy_trees():
    assert degeneracy_order(path_graph(9))[1] == 1
    star = Graph.from_edges([(1, i) for i in range(2, 9)])
    assert degeneracy_order(star)[1] == 1


def test_degeneracy_reinsertion_property():
    for g in (complete_graph(6), path_graph(8), k5_torus().graph):
        order, d = degeneracy_order(g)
        placed = set()
        for v in reversed(order):
            assert len(g.neighbors(v) & placed) <= d
            placed.add(v)


def test_genus_one_corpus_is_six_degenerate():
    # average-degree bound: genus <= 1 implies degeneracy <= 6
    for name, scheme in corpus().items():
        kind = euler_genus(scheme)
        if kind.orientable and kind.genus <= 1:
            _, d = degeneracy_order(scheme.graph)
            assert d <= 6, name


def test_spanning_tree_path():
    g = path_graph(3)
    parent, dist = spanning_tree(g, 1)
    assert parent == {1: None, 2: 1, 3: 2}
    assert dist == {1: 0, 2: 1, 3: 2}


def test_spanning_tree_k4_is_a_star_from_the_root():
    g = complete_graph(4)
    parent, dist = spanning_tree(g, 1)
    assert all(parent[v] == 1 for v in (2, 3, 4))
    assert all(dist[v] == 1 for v in (2, 3, 4))


def test_spanning_tree_covers_corpus():
    for name, scheme in corpus().items():
        g = scheme.graph
        root = min(g.vertices)
        parent, dist = spanning_tree(g, root)
        assert len(parent) == len(g)
        tree_edges = sum(1 for v, p in parent.items() if p is not None)
        assert tree_edges == len(g) - 1
        for v, p in parent.items():
            if p is not None:
                assert dist[v] == dist[p] + 1


def test_validate_network():
    validate_network(complete_graph(5))
    with pytest.raises(ValueError):
        validate_network(Graph.from_edges([(1, 2), (3, 4)]))  # disconnected
    with pytest.raises(ValueError):
        validate_network(Graph.from_edges([(1, 100)]))  # ID out of range
