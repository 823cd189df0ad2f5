import itertools

import numpy as np
import pytest

from conftest import random_cyclic_graph
from treem3n.gadget import (bounded_degree_tree_exists, gadget_build,
                            gadget_check_tree, gadget_separable,
                            gadget_theta, spanning_trees)
from treem3n.graph import EdgeSet, connected_components


def path(n):
    return EdgeSet(n, [(i, i + 1) for i in range(n - 1)])


def star(n):
    return EdgeSet(n, [(0, i) for i in range(1, n)])


def test_path_of_three():
    G = path(3)
    assert gadget_separable(G, 1) is None
    assert gadget_separable(G, 2) == G


def test_star():
    for D in (1, 2):
        assert gadget_separable(star(4), D) is None
    assert gadget_separable(star(4), 3) == star(4)


def test_cycle_admits_a_path():
    C = EdgeSet(5, [(i, (i + 1) % 5) for i in range(5)])
    T = gadget_separable(C, 2)
    assert T is not None and int(T.degrees().max()) <= 2
    assert gadget_separable(C, 1) is None


def test_parameter_value_sets():
    G = EdgeSet.complete(4)
    m = gadget_theta(G, 2)
    for t in m.edge_pot.values():
        assert set(np.unique(t)) <= {-16.0, 0.0, 1.0}
        assert np.count_nonzero(t == 1.0) == 2
    assert set(np.unique(m.node_pot[0])) == {0.0, 2.0}
    for v in range(1, 4):
        assert not m.node_pot[v].any()


def test_training_set_shape():
    G = EdgeSet.complete(4)
    g = gadget_build(G, 2)
    kinds = [s.kind for s in g.trainset]
    assert kinds.count("zero") == 1 and kinds.count("bound") == 2
    assert kinds.count("offdiag") == kinds.count("diag") == 2 * 6
    assert all(len(s.gold) == 4 and len(s.bias) == 4 for s in g.trainset)


def all_connected_graphs(n):
    edges = list(itertools.combinations(range(n), 2))
    for r in range(n - 1, len(edges) + 1):
        for comb in itertools.combinations(edges, r):
            G = EdgeSet(n, comb)
            if connected_components(G)[0] == 1:
                yield G


@pytest.mark.parametrize("n", [2, 3, 4])
def test_exhaustive_agrees_with_tree_inference(n):
    for G in all_connected_graphs(n):
        for D in range(1, n):
            g = gadget_build(G, D)
            for T in spanning_trees(G):
                a = gadget_check_tree(g, T)
                assert a == gadget_check_tree(g, T, exhaustive=True)
                assert a == (int(T.degrees().max()) <= D)
            assert (gadget_separable(G, D) is not None) == bounded_degree_tree_exists(G, D)


def test_random_graphs(rng):
    for _ in range(5):
        G = random_cyclic_graph(5, rng)
        for D in (1, 2, 3):
            assert (gadget_separable(G, D) is not None) == bounded_degree_tree_exists(G, D)


def test_invalid_inputs():
    with pytest.raises(ValueError, match="connected"):
        gadget_build(EdgeSet(4, [(0, 1), (2, 3)]), 2)
    with pytest.raises(ValueError):
        gadget_build(path(3), 0)
    with pytest.raises(ValueError):
        gadget_build(path(3), 3)
    with pytest.raises(ValueError):
        gadget_build(EdgeSet(1), 1)
    g = gadget_build(EdgeSet.complete(4), 2)
    with pytest.raises(ValueError):
        gadget_check_tree(g, EdgeSet(4, [(0, 1), (1, 2), (0, 2)]))
