"""MAP inference for discrete pairwise models.

Single-model routines (:func:`map_tree`, :func:`map_exhaustive`,
:func:`map_lp`) work with arbitrary state counts.  The ``binary_*`` routines
are batched over examples for binary models whose only pairwise entry is
``theta_ij(1, 1)``; the learners call these in their inner loops.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field


import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog
from scipy.sparse.csgraph import breadth_first_order, maximum_flow

from .graph import EdgeSet, canonical, is_forest
from .lp import LPError, simplex

__all__ = [
    "PairwiseModel", "PseudoMarginals", "score", "map_tree",
    "map_exhaustive", "map_lp", "local_polytope", "loss_augment",
    "round_marginals", "binary_forest_map", "binary_lp_batch",
    "binary_edge_marginals", "LPError",
]

EXHAUSTIVE_LIMIT = 2 ** 22


@dataclass
class PairwiseModel:
    """Node tables ``node_pot[i][y_i]``, edge tables ``edge_pot[(i, j)][y_i, y_j]``
    and optional bias tables that are added to the node tables."""

    n: int
    card: tuple
    node_pot: list
    edge_pot: dict = field(default_factory=dict)
    bias: list | None = None

    def __post_init__(self):
        self.card = tuple(int(k) for k in self.card)
        if len(self.card) != self.n:
            raise ValueError("card must have one entry per variable")
        if any(k < 2 for k in self.card):
            raise ValueError("every variable needs at least two states")
        self.node_pot = [np.asarray(t, dtype=float) for t in self.node_pot]
        for i, t in enumerate(self.node_pot):
            if t.shape != (self.card[i],):
                raise ValueError(f"node table {i} has shape {t.shape}")
        pots = {}
        for (i, j), t in self.edge_pot.items():
            t = np.asarray(t, dtype=float)
            if i > j:
                i, j, t = j, i, t.T
            pots[canonical(i, j)] = t
            if t.shape != (self.card[i], self.card[j]):
                raise ValueError(f"edge table {(i, j)} has shape {t.shape}")
        self.edge_pot = pots
        if self.bias is not None:
            self.bias = [np.asarray(t, dtype=float) for t in self.bias]
            for i, t in enumerate(self.bias):
                if t.shape != (self.card[i],):
                    raise ValueError(f"bias table {i} has shape {t.shape}")
        tables = self.node_pot + list(pots.values()) + (self.bias or [])
        if not all(np.all(np.isfinite(t)) for t in tables):
            raise ValueError("potentials must be finite")

    def unary(self, i: int) -> np.ndarray:
        """Node table plus bias for variable ``i``."""
        if self.bias is None:
            return self.node_pot[i]
        return self.node_pot[i] + self.bias[i]

    def copy(self) -> "PairwiseModel":
        return PairwiseModel(
            self.n, self.card, [t.copy() for t in self.node_pot],
            {e: t.copy() for e, t in self.edge_pot.items()},
            None if self.bias is None else [t.copy() for t in self.bias])


@dataclass
class PseudoMarginals:
    mu_node: list
    mu_edge: dict


def _support_edges(model: PairwiseModel, support) -> list[tuple[int, int]]:
    if support is None:
        return sorted(model.edge_pot)
    edges = sorted(support) if isinstance(support, EdgeSet) else sorted(
        canonical(i, j) for i, j in support)
    missing = [e for e in edges if e not in model.edge_pot]
    if missing:
        raise ValueError(f"support edges without potentials: {missing}")
    return edges


def _as_edgeset(model, support) -> EdgeSet:
    if isinstance(support, EdgeSet):
        return support
    return EdgeSet(model.n, _support_edges(model, support))


def score(model: PairwiseModel, y, support=None) -> float:
    """Total score of assignment ``y`` counting only edges in ``support``."""
    y = [int(v) for v in y]
    if len(y) != model.n:
        raise ValueError(f"assignment has {len(y)} entries, expected {model.n}")
    for i, v in enumerate(y):
        if not 0 <= v < model.card[i]:
            raise ValueError(f"state {v} out of range for variable {i}")
    total = 0.0
    for i in range(model.n):
        total += model.unary(i)[y[i]]
    for i, j in _support_edges(model, support):
        total += model.edge_pot[(i, j)][y[i], y[j]]
    return float(total)


def _edge_table(model, a, b):
    """Table indexed ``[y_a, y_b]`` regardless of orientation."""
    if a < b:
        return model.edge_pot[(a, b)]
    return model.edge_pot[(b, a)].T


def map_tree(model: PairwiseModel, support=None):
    """Exact MAP on a forest by max-product with back-pointers.

    Every argmax picks the smallest state among ties.  Returns the
    assignment and its score.
    """
    edges = _support_edges(model, support)
    if not is_forest(EdgeSet(model.n, edges)):
        raise ValueError("support not a forest")
    adj = [[] for _ in range(model.n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)

    parent = [-1] * model.n
    seen = [False] * model.n
    order = []
    roots = []
    for r in range(model.n):
        if seen[r]:
            continue
        roots.append(r)
        seen[r] = True
        queue = deque([r])
        while queue:
            v = queue.popleft()
            order.append(v)
            for u in sorted(adj[v]):
                if not seen[u]:
                    seen[u] = True
                    parent[u] = v
                    queue.append(u)

    belief = [model.unary(i).copy() for i in range(model.n)]
    back = [None] * model.n
    for v in reversed(order):
        p = parent[v]
        if p < 0:
            continue
        table = belief[v][:, None] + _edge_table(model, v, p)
        back[v] = np.argmax(table, axis=0)
        belief[p] = belief[p] + table.max(axis=0)

    y = np.zeros(model.n, dtype=int)
    for v in order:
        p = parent[v]
        y[v] = np.argmax(belief[v]) if p < 0 else back[v][y[p]]
    return y, score(model, y, edges)


def map_exhaustive(model: PairwiseModel, support=None):
    """MAP by full enumeration; returns the lexicographically smallest
    maximizer.  Intended as a test oracle."""
    edges = _support_edges(model, support)
    size = int(np.prod(model.card, dtype=float))
    if size > EXHAUSTIVE_LIMIT:
        raise ValueError(
            f"state space too large for enumeration ({size} > {EXHAUSTIVE_LIMIT})")
    n = model.n
    total = np.zeros(model.card)
    for i in range(n):
        shape = [1] * n
        shape[i] = model.card[i]
        total = total + model.unary(i).reshape(shape)
    for i, j in edges:
        shape = [1] * n
        shape[i], shape[j] = model.card[i], model.card[j]
        total = total + model.edge_pot[(i, j)].reshape(shape)
    y = np.array(np.unravel_index(int(np.argmax(total)), model.card), dtype=int)
    return y, score(model, y, edges)


@dataclass
class LocalPolytopeLP:
    """``min c @ x  s.t.  A_eq @ x = b_eq, x >= 0`` for a local-polytope MAP
    relaxation (``c`` is the negated potential vector)."""

    c: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    node_slices: list
    edge_slices: dict
    card: tuple

    def unpack(self, x) -> PseudoMarginals:
        mu_node = [x[s].copy() for s in self.node_slices]
        mu_edge = {e: x[s].reshape(self.card[e[0]], self.card[e[1]]).copy()
                   for e, s in self.edge_slices.items()}
        return PseudoMarginals(mu_node, mu_edge)


def local_polytope(model: PairwiseModel, support=None) -> LocalPolytopeLP:
    """Assemble the local-polytope LP over the edges of ``support``."""
    edges = _support_edges(model, support)
    card = model.card
    node_slices, edge_slices = [], {}
    off = 0
    for k in card:
        node_slices.append(slice(off, off + k))
        off += k
    for i, j in edges:
        edge_slices[(i, j)] = slice(off, off + card[i] * card[j])
        off += card[i] * card[j]

    c = np.zeros(off)
    for i in range(model.n):
        c[node_slices[i]] = -model.unary(i)
    for e, s in edge_slices.items():
        c[s] = -model.edge_pot[e].ravel()

    rows, cols, vals, b = [], [], [], []
    r = 0
    for i in range(model.n):
        idx = np.arange(node_slices[i].start, node_slices[i].stop)
        rows += [r] * idx.size
        cols += idx.tolist()
        vals += [1.0] * idx.size
        b.append(1.0)
        r += 1
    for (i, j), s in edge_slices.items():
        block = np.arange(s.start, s.stop).reshape(card[i], card[j])
        for a in range(card[i]):
            rows += [r] * (card[j] + 1)
            cols += block[a].tolist() + [node_slices[i].start + a]
            vals += [1.0] * card[j] + [-1.0]
            b.append(0.0)
            r += 1
        for t in range(card[j]):
            rows += [r] * (card[i] + 1)
            cols += block[:, t].tolist() + [node_slices[j].start + t]
            vals += [1.0] * card[i] + [-1.0]
            b.append(0.0)
            r += 1
    A = sp.csr_matrix((vals, (rows, cols)), shape=(r, off))
    return LocalPolytopeLP(c, A, np.array(b), node_slices, edge_slices, card)


def map_lp(model: PairwiseModel, support=None, method: str = "highs"):
    """Exact optimum of the local-polytope relaxation of MAP.

    ``method`` is ``"highs"`` (scipy's HiGHS) or ``"simplex"`` (the bundled
    dense simplex).  Returns pseudo-marginals and the LP value, which upper
    bounds the integral MAP value and matches it on forests.
    """
    lp = local_polytope(model, support)
    if method == "highs":
        res = linprog(lp.c, A_eq=lp.A_eq, b_eq=lp.b_eq, bounds=(0, None),
                      method="highs",
                      options={"primal_feasibility_tolerance": 1e-10,
                               "dual_feasibility_tolerance": 1e-10})
        if res.status != 0:
            raise LPError(f"HiGHS failed: status={res.status} ({res.message}); "
                          f"{lp.A_eq.shape[0]} rows x {lp.A_eq.shape[1]} cols")
        x = res.x
    elif method == "simplex":
        x = simplex(lp.c, lp.A_eq.toarray(), lp.b_eq).x
    else:
        raise ValueError(f"unknown LP method {method!r}")
    x = np.clip(x, 0.0, 1.0)
    return lp.unpack(x), float(-(lp.c @ x))


def loss_augment(model: PairwiseModel, gold) -> PairwiseModel:
    """Copy of ``model`` with +1 on every node state that disagrees with
    ``gold`` (unnormalized Hamming loss)."""
    out = model.copy()
    for i, g in enumerate(gold):
        g = int(g)
        if not 0 <= g < model.card[i]:
            raise ValueError(f"gold state {g} out of range for variable {i}")
        bump = np.ones(model.card[i])
        bump[g] = 0.0
        out.node_pot[i] = out.node_pot[i] + bump
    return out


def round_marginals(mu: PseudoMarginals) -> np.ndarray:
    """Per-variable argmax of the node marginals (smallest state on ties)."""
    return np.array([int(np.argmax(m)) for m in mu.mu_node], dtype=int)


# ---------------------------------------------------------------------------
# Batched binary inference.  A batch is given by node scores ``s0, s1`` of
# shape (B, L) for states 0/1 and shared edge weights ``w`` on ``theta(1, 1)``.

def _forest_schedule(L, ei, ej):
    adj = [[] for _ in range(L)]
    for k, (i, j) in enumerate(zip(ei, ej)):
        adj[i].append((j, k))
        adj[j].append((i, k))
    parent = np.full(L, -1)
    pedge = np.full(L, -1)
    seen = np.zeros(L, dtype=bool)
    order = []
    for r in range(L):
        if seen[r]:
            continue
        seen[r] = True
        queue = deque([r])
        while queue:
            v = queue.popleft()
            order.append(v)
            for u, k in sorted(adj[v]):
                if not seen[u]:
                    seen[u] = True
                    parent[u], pedge[u] = v, k
                    queue.append(u)
    return order, parent, pedge


def binary_forest_map(s0, s1, ei, ej, w) -> np.ndarray:
    """Batched max-product on a forest; returns ``(B, L)`` 0/1 labels.

    Ties resolve to state 0 at every argmax.
    """
    s0 = np.asarray(s0, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    B, L = s0.shape
    order, parent, pedge = _forest_schedule(L, ei, ej)
    b0, b1 = s0.copy(), s1.copy()
    back0 = np.zeros((B, L), dtype=bool)
    back1 = np.zeros((B, L), dtype=bool)
    for v in reversed(order):
        p = parent[v]
        if p < 0:
            continue
        wv = w[pedge[v]]
        c0 = b1[:, v] > b0[:, v]
        c1 = b1[:, v] + wv > b0[:, v]
        b0[:, p] += np.where(c0, b1[:, v], b0[:, v])
        b1[:, p] += np.where(c1, b1[:, v] + wv, b0[:, v])
        back0[:, v], back1[:, v] = c0, c1
    y = np.zeros((B, L), dtype=bool)
    for v in order:
        p = parent[v]
        if p < 0:
            y[:, v] = b1[:, v] > b0[:, v]
        else:
            y[:, v] = np.where(y[:, p], back1[:, v], back0[:, v])
    return y.astype(np.int8)


_CAP_BUDGET = float(2 ** 30)


def binary_lp_batch(s0, s1, ei, ej, w) -> np.ndarray:
    """Local-polytope relaxation for a batch of binary models via min-cut.

    The relaxation of a binary pairwise model is solved through its
    symmetric doubled graph (one node for each ``mu_i`` and one for
    ``1 - mu_i``); a minimum cut of that graph yields a half-integral
    optimum.  Returns node marginals ``mu_i(1)`` in {0, 1/2, 1}.

    Capacities are rounded to integers after scaling each example to a
    total of 2**30, so the optimum is exact up to ~1e-8 relative.
    """
    s0 = np.asarray(s0, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    B, L = s0.shape
    ei = np.asarray(ei, dtype=int)
    ej = np.asarray(ej, dtype=int)
    w = np.asarray(w, dtype=float)
    nz = w != 0
    ei, ej, w = ei[nz], ej[nz], w[nz]
    pos, neg = w > 0, w < 0

    # unary coefficient of mu_i in the minimisation form
    c = -(s1 - s0)
    np.subtract.at(c, (slice(None), ei[pos]), w[pos])

    # pairwise arcs shared by all examples (local ids: u_i = i, ubar_i = L+i)
    tail = np.concatenate([ei[pos], L + ej[pos], ei[neg], ej[neg]])
    head = np.concatenate([ej[pos], L + ei[pos], L + ej[neg], L + ei[neg]])
    pcap = np.concatenate([w[pos], w[pos], -w[neg], -w[neg]])

    nn = 2 * L
    src, snk = B * nn, B * nn + 1
    total = pcap.sum() + 2 * np.abs(c).sum(axis=1)
    scale = np.where(total > 0, _CAP_BUDGET / np.maximum(total, 1e-300), 0.0)

    offs = (np.arange(B) * nn)[:, None]
    r_pair = (offs + tail).ravel()
    c_pair = (offs + head).ravel()
    v_pair = (scale[:, None] * pcap).ravel()

    ar = np.arange(L)
    cp = np.maximum(c, 0.0) * scale[:, None]
    cn = np.maximum(-c, 0.0) * scale[:, None]
    # c_i > 0: u_i -> t and s -> ubar_i ; c_i < 0: s -> u_i and ubar_i -> t
    r_un = np.concatenate([(offs + ar).ravel(), np.full(B * L, src),
                           np.full(B * L, src), (offs + L + ar).ravel()])
    c_un = np.concatenate([np.full(B * L, snk), (offs + L + ar).ravel(),
                           (offs + ar).ravel(), np.full(B * L, snk)])
    v_un = np.concatenate([cp.ravel(), cp.ravel(), cn.ravel(), cn.ravel()])

    rows = np.concatenate([r_pair, r_un])
    cols = np.concatenate([c_pair, c_un])
    caps = np.rint(np.concatenate([v_pair, v_un])).astype(np.int64)
    keep = caps > 0
    rows, cols, caps = rows[keep], cols[keep], caps[keep]
    N = B * nn + 2
    C = sp.csr_matrix((caps.astype(np.int32), (rows, cols)), shape=(N, N))
    C.sum_duplicates()
    if C.nnz == 0:
        return np.full((B, L), 0.5)
    flow = maximum_flow(C, src, snk, method="dinic").flow
    R = (C - flow).tocsr()
    R.data = (R.data > 0).astype(np.int8)
    R.eliminate_zeros()
    reach = breadth_first_order(R, src, directed=True,
                                return_predecessors=False)
    z = np.zeros(N, dtype=bool)
    z[reach] = True
    z = z[:B * nn].reshape(B, nn)
    return (z[:, :L].astype(float) + 1.0 - z[:, L:].astype(float)) / 2.0


def binary_edge_marginals(mu, ei, ej, w) -> np.ndarray:
    """Optimal ``mu_ij(1, 1)`` given node marginals and edge weights.

    Attractive edges take ``min(mu_i, mu_j)``, repulsive edges
    ``max(0, mu_i + mu_j - 1)``; zero-weight edges take the product, which
    also lies in the feasible interval.
    """
    mi = mu[:, ei]
    mj = mu[:, ej]
    w = np.asarray(w)
    return np.where(w > 0, np.minimum(mi, mj),
                    np.where(w < 0, np.maximum(0.0, mi + mj - 1.0), mi * mj))
