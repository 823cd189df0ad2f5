"""Hardness gadget: a separability instance that encodes bounded-degree
spanning tree.

Vertices are 0-based and every variable takes states ``0..n``.  State 0 is
the special "zero" state and vertex ``v`` owns state ``v + 1``; vertex 0 is
the one carrying the degree-bound parameter.

Under the gadget parameters a spanning tree ``T`` separates the whole
training set exactly when no vertex of ``T`` has degree above ``D``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graph import EdgeSet, connected_components, is_spanning_tree
from .inference import PairwiseModel, map_exhaustive, map_tree, score

__all__ = ["GadgetSample", "GadgetInstance", "gadget_theta", "gadget_build",
           "gadget_check_tree", "spanning_trees", "bounded_degree_tree_exists",
           "gadget_separable"]


@dataclass(frozen=True)
class GadgetSample:
    """One training pair: bias tables and the gold assignment.

    ``kind`` is ``"zero"``, ``"bound"``, ``"offdiag"`` or ``"diag"``;
    ``edge`` names the realized edge for the last two.
    """

    bias: tuple
    gold: tuple
    kind: str
    edge: tuple | None = None


@dataclass
class GadgetInstance:
    graph: EdgeSet
    D: int
    model: PairwiseModel
    gamma: np.ndarray
    trainset: list

    @property
    def n(self) -> int:
        return self.graph.n


def gadget_theta(G: EdgeSet, D: int) -> PairwiseModel:
    """Node and edge tables of the reduction for every edge of ``G``."""
    n = G.n
    card = [n + 1] * n
    node = [np.zeros(n + 1) for _ in range(n)]
    node[0][0] = D
    edges = {}
    for i, j in G.sorted():
        t = np.full((n + 1, n + 1), -float(n * n))
        np.fill_diagonal(t, 0.0)
        t[i + 1, i + 1] = 1.0
        t[j + 1, j + 1] = 1.0
        edges[(i, j)] = t
    return PairwiseModel(n, card, node, edges)


def _own(n, gamma, k):
    """Bias that pins vertex ``k`` to its own state."""
    t = np.full(n + 1, -gamma[k])
    t[k + 1] = 0.0
    return t


def gadget_build(G: EdgeSet, D: int) -> GadgetInstance:
    """Build the gadget parameters and the training set realizing them.

    The training set holds the all-zero example, the pair fixing the bound
    parameter on vertex 0, and for every edge of ``G`` one pair fixing the
    off-diagonal value and one pair fixing the diagonal value.  Each pair
    consists of two samples whose gold assignments tie in score.
    """
    n = G.n
    if n < 2:
        raise ValueError("gadget needs at least two vertices")
    if connected_components(G)[0] != 1:
        raise ValueError("graph is not connected")
    if not 1 <= D <= n - 1:
        raise ValueError(f"degree bound must lie in 1..{n - 1}")
    model = gadget_theta(G, D)
    deg = G.degrees()
    gamma = 1.0 + deg * (n * n + 1.0)
    gamma[0] += D
    nn = float(n * n)
    samples = [GadgetSample(tuple(np.zeros(n + 1) for _ in range(n)),
                            (0,) * n, "zero")]

    # vertex 0 chooses between states 0 and 1, everyone else sits at 2
    b = [None] * n
    b[0] = np.full(n + 1, -gamma[0])
    b[0][0], b[0][1] = -D, 0.0
    for k in range(1, n):
        b[k] = np.full(n + 1, -gamma[k])
        b[k][2] = 0.0
    rest = (2,) * (n - 1)
    for g0 in (0, 1):
        samples.append(GadgetSample(tuple(b), (g0,) + rest, "bound"))

    for i, j in G.sorted():
        own = [_own(n, gamma, k) for k in range(n)]
        base = [k + 1 for k in range(n)]

        # off-diagonal: i at 0, j at 0 or at i's own state
        b = list(own)
        b[i] = np.full(n + 1, -gamma[i])
        b[i][0] = 0.0
        b[j] = np.full(n + 1, -gamma[j])
        b[j][0], b[j][i + 1] = 0.0, nn
        for yj in (0, i + 1):
            y = list(base)
            y[i], y[j] = 0, yj
            samples.append(GadgetSample(tuple(b), tuple(y), "offdiag", (i, j)))

        # diagonal: i at its own state, j at 0 or at i's own state
        b = list(own)
        b[j] = np.full(n + 1, -gamma[j])
        b[j][0], b[j][i + 1] = nn, -1.0
        for yj in (0, i + 1):
            y = list(base)
            y[j] = yj
            samples.append(GadgetSample(tuple(b), tuple(y), "diag", (i, j)))
    return GadgetInstance(G, D, model, gamma, samples)


def _with_bias(model: PairwiseModel, bias) -> PairwiseModel:
    return PairwiseModel(model.n, model.card, model.node_pot, model.edge_pot,
                         list(bias))


def gadget_check_tree(g: GadgetInstance, T: EdgeSet, exhaustive: bool = False,
                      tol: float = 1e-9) -> bool:
    """Whether every relevant sample's gold attains the max score under ``T``.

    Samples realizing edges outside ``T`` are skipped: with the edge absent
    they constrain nothing.  Maximization uses max-product on ``T`` (exact
    on a tree); ``exhaustive=True`` enumerates instead.
    """
    if T.n != g.n:
        raise ValueError("tree and graph have different vertex counts")
    if any(e not in g.graph for e in T):
        raise ValueError("tree uses edges outside the graph")
    if not is_spanning_tree(T):
        raise ValueError("not a spanning tree")
    ok = True
    for s in g.trainset:
        if s.edge is not None and s.edge not in T:
            continue
        m = _with_bias(g.model, s.bias)
        best = (map_exhaustive if exhaustive else map_tree)(m, T)[1]
        if score(m, s.gold, T) < best - tol:
            ok = False
            break
    if ok != (int(T.degrees().max()) <= g.D):
        raise AssertionError("gadget check disagrees with the degree rule")
    return ok


def spanning_trees(G: EdgeSet):
    """All spanning trees of ``G`` in lexicographic order of edge lists."""
    edges = G.sorted()
    for comb in combinations(edges, G.n - 1):
        T = EdgeSet(G.n, comb)
        if is_spanning_tree(T):
            yield T


def bounded_degree_tree_exists(G: EdgeSet, D: int) -> bool:
    return any(int(T.degrees().max()) <= D for T in spanning_trees(G))


def gadget_separable(G: EdgeSet, D: int, exhaustive: bool = False):
    """First spanning tree of ``G`` that separates the gadget, or None."""
    g = gadget_build(G, D)
    for T in spanning_trees(G):
        if gadget_check_tree(g, T, exhaustive):
            return T
    return None
