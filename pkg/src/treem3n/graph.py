"""Graphs over label indices: union-find, Kruskal trees and the circuit-rank
penalty with its difference-of-envelopes surrogate.

Edges are canonical ``(i, j)`` tuples with ``i < j``.  Functions over the
complete graph on ``n`` vertices index its ``n(n-1)/2`` edges in
lexicographic order (see :func:`complete_edges`).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

__all__ = [
    "EdgeSet", "EdgeWeightMap", "UnionFind", "complete_edges", "edge_index",
    "connected_components", "circuit_rank", "is_forest",
    "is_spanning_tree", "kruskal_max_tree", "f1", "f2", "tree_penalty",
    "f2_subgradient",
]


def canonical(i: int, j: int) -> tuple[int, int]:
    i, j = int(i), int(j)
    if i == j:
        raise ValueError(f"self-loop ({i}, {j}) is not an edge")
    return (i, j) if i < j else (j, i)


@lru_cache(maxsize=64)
def _complete_edges(n: int) -> tuple[tuple[int, int], ...]:
    return tuple((i, j) for i in range(n) for j in range(i + 1, n))


def complete_edges(n: int) -> list[tuple[int, int]]:
    """All edges of the complete graph on ``n`` vertices, lexicographic."""
    return list(_complete_edges(n))


def edge_index(i: int, j: int, n: int) -> int:
    """Position of canonical edge ``(i, j)`` in :func:`complete_edges`."""
    i, j = canonical(i, j)
    return i * n - i * (i + 1) // 2 + (j - i - 1)


@dataclass(frozen=True)
class EdgeSet:
    """An undirected simple graph on vertices ``0..n-1``."""

    n: int
    edges: frozenset

    def __init__(self, n: int, edges: Iterable = ()):
        canon = frozenset(canonical(i, j) for i, j in edges)
        for i, j in canon:
            if i < 0 or j >= n:
                raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", canon)

    def __len__(self):
        return len(self.edges)

    def __iter__(self):
        return iter(sorted(self.edges))

    def __contains__(self, e):
        return canonical(*e) in self.edges

    def sorted(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def mask(self) -> np.ndarray:
        """Boolean indicator over :func:`complete_edges` order."""
        m = np.zeros(self.n * (self.n - 1) // 2, dtype=bool)
        for i, j in self.edges:
            m[edge_index(i, j, self.n)] = True
        return m

    @classmethod
    def from_mask(cls, n: int, mask) -> "EdgeSet":
        edges = _complete_edges(n)
        return cls(n, [edges[k] for k in np.flatnonzero(mask)])

    @classmethod
    def complete(cls, n: int) -> "EdgeSet":
        return cls(n, _complete_edges(n))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def union(self, other: Iterable) -> "EdgeSet":
        return EdgeSet(self.n, set(self.edges) | {canonical(*e) for e in other})


@dataclass(frozen=True)
class EdgeWeightMap:
    """Nonnegative weights on every edge of the complete graph.

    ``weights[k]`` belongs to ``complete_edges(n)[k]``.
    """

    n: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        if w.shape != (self.n * (self.n - 1) // 2,):
            raise ValueError(
                f"expected {self.n * (self.n - 1) // 2} edge weights, "
                f"got shape {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("edge weights must be finite and nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_dict(cls, n: int, d: dict) -> "EdgeWeightMap":
        w = np.zeros(n * (n - 1) // 2)
        for (i, j), v in d.items():
            w[edge_index(i, j, n)] = v
        return cls(n, w)

    def __getitem__(self, e) -> float:
        return float(self.weights[edge_index(e[0], e[1], self.n)])


class UnionFind:
    """Disjoint sets with path compression and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of ``a`` and ``b``; False if already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def connected_components(A: EdgeSet) -> tuple[int, np.ndarray]:
    """Count components of ``(V, A)``; each vertex is labelled by the
    smallest vertex of its component."""
    uf = UnionFind(A.n)
    for i, j in A.edges:
        uf.union(i, j)
    label = np.empty(A.n, dtype=int)
    smallest: dict[int, int] = {}
    for v in range(A.n):
        label[v] = smallest.setdefault(uf.find(v), v)
    return len(smallest), label


def circuit_rank(A: EdgeSet) -> int:
    """``|A| + c(A) - n``: the fewest edge deletions leaving a forest."""
    count, _ = connected_components(A)
    return len(A) + count - A.n


def is_forest(A: EdgeSet) -> bool:
    uf = UnionFind(A.n)
    return all(uf.union(i, j) for i, j in A.edges)


def is_spanning_tree(A: EdgeSet) -> bool:
    return len(A) == A.n - 1 and is_forest(A)


def _kruskal_order(weights: np.ndarray, n: int) -> np.ndarray:
    # Complete-graph order is already lexicographic, so a stable sort on
    # -weight breaks ties by (i, j).
    return np.argsort(-weights, kind="stable")


def kruskal_max_tree(pi: EdgeWeightMap) -> EdgeSet:
    """Maximum-weight spanning tree of the complete graph under ``pi``.

    Equal weights are resolved lexicographically on ``(i, j)``, so the
    result is a deterministic function of ``pi``.
    """
    n = pi.n
    if n == 0:
        raise ValueError("empty graph")
    edges = _complete_edges(n)
    uf = UnionFind(n)
    tree = []
    for k in _kruskal_order(pi.weights, n):
        i, j = edges[k]
        if uf.union(i, j):
            tree.append((i, j))
            if len(tree) == n - 1:
                break
    return EdgeSet(n, tree)


def f1(pi: EdgeWeightMap) -> float:
    """Convex envelope of the support cardinality: the l1 mass of ``pi``."""
    return float(np.sum(pi.weights))


def f2(pi: EdgeWeightMap) -> float:
    """Convex envelope of the graphic-matroid rank: weight of the
    maximum spanning tree."""
    if pi.n < 2:
        return 0.0
    mask = kruskal_max_tree(pi).mask()
    return float(np.sum(pi.weights[mask]))


def tree_penalty(pi: EdgeWeightMap) -> float:
    """``f1 - f2``, i.e. the mass sitting on edges outside the Kruskal tree."""
    if pi.n < 2:
        return 0.0
    mask = kruskal_max_tree(pi).mask()
    return float(np.sum(pi.weights[~mask]))


def f2_subgradient(w) -> np.ndarray:
    """Subgradient of ``f2(pi(w))`` in the flat layout of ``w``.

    ``w`` is a :class:`treem3n.model.WeightVector` (or anything exposing
    ``L``, ``edge_w`` and ``flat()``).  Tree edges get ``sign(w_ij)``; node
    coordinates and off-tree edges get zero.  Under ties in ``pi`` the tree
    follows the lexicographic Kruskal order.
    """
    flat = w.flat()
    v = np.zeros_like(flat)
    L = w.L
    if L < 2:
        return v
    edge_w = np.asarray(w.edge_w, dtype=float)
    pi = EdgeWeightMap(L, np.abs(edge_w))
    mask = kruskal_max_tree(pi).mask()
    offset = flat.size - edge_w.size
    v[offset:] = np.where(mask, np.sign(edge_w), 0.0)
    return v
