"""Multi-label parameterization: one weight block per label, one scalar per
label pair, and the feature maps that go with them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import EdgeSet, EdgeWeightMap, complete_edges
from .inference import (PairwiseModel, binary_forest_map, map_lp, map_tree,
                        round_marginals)

__all__ = ["WeightVector", "TrainedModel", "augment", "compile_potentials",
           "joint_feature", "feature_expectation", "predict", "predict_batch",
           "STRUCTURES"]

STRUCTURES = ("empty", "tree", "full")


def augment(x) -> np.ndarray:
    """Append the constant bias feature; works on a vector or a row matrix."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return np.append(x, 1.0)
    return np.hstack([x, np.ones((x.shape[0], 1))])


@dataclass
class WeightVector:
    """``node_w`` has shape ``(L, d + 1)`` (last column multiplies the bias
    feature); ``edge_w`` has one scalar per edge in complete-graph order.

    The flat layout is ``node_w.ravel()`` followed by ``edge_w``.
    """

    node_w: np.ndarray
    edge_w: np.ndarray

    def __post_init__(self):
        self.node_w = np.array(self.node_w, dtype=float)
        self.edge_w = np.array(self.edge_w, dtype=float)
        L = self.node_w.shape[0]
        if self.node_w.ndim != 2 or self.edge_w.shape != (L * (L - 1) // 2,):
            raise ValueError(
                f"inconsistent shapes {self.node_w.shape} / {self.edge_w.shape}")
        if not (np.all(np.isfinite(self.node_w))
                and np.all(np.isfinite(self.edge_w))):
            raise ValueError("weights must be finite")

    @property
    def L(self) -> int:
        return self.node_w.shape[0]

    @property
    def d(self) -> int:
        return self.node_w.shape[1] - 1

    @property
    def size(self) -> int:
        return self.node_w.size + self.edge_w.size

    @classmethod
    def zeros(cls, L: int, d: int) -> "WeightVector":
        return cls(np.zeros((L, d + 1)), np.zeros(L * (L - 1) // 2))

    @classmethod
    def from_flat(cls, flat, L: int, d: int) -> "WeightVector":
        flat = np.asarray(flat, dtype=float)
        k = L * (d + 1)
        return cls(flat[:k].reshape(L, d + 1), flat[k:])

    def flat(self) -> np.ndarray:
        return np.concatenate([self.node_w.ravel(), self.edge_w])

    def copy(self) -> "WeightVector":
        return WeightVector(self.node_w.copy(), self.edge_w.copy())

    def pi(self) -> EdgeWeightMap:
        """Edge l1 norms (scalar edge blocks, so just absolute values)."""
        return EdgeWeightMap(self.L, np.abs(self.edge_w))

    def restrict(self, support: EdgeSet) -> "WeightVector":
        """Copy with edge weights outside ``support`` set to zero."""
        return WeightVector(self.node_w.copy(),
                            np.where(support.mask(), self.edge_w, 0.0))

    def __eq__(self, other):
        return (isinstance(other, WeightVector)
                and np.array_equal(self.node_w, other.node_w)
                and np.array_equal(self.edge_w, other.edge_w))


@dataclass
class TrainedModel:
    weights: WeightVector
    structure: str
    edges: EdgeSet | None = None
    config: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}")
        L = self.weights.L
        if self.structure == "tree":
            if self.edges is None:
                raise ValueError("tree structure needs its edge set")
            off = ~self.edges.mask()
            if np.any(self.weights.edge_w[off] != 0):
                raise ValueError("tree model has nonzero off-tree edge weights")
        elif self.structure == "empty":
            self.edges = EdgeSet(L)
            if np.any(self.weights.edge_w != 0):
                raise ValueError("empty model has nonzero edge weights")
        else:
            self.edges = EdgeSet.complete(L)

    @property
    def L(self) -> int:
        return self.weights.L

    @property
    def d(self) -> int:
        return self.weights.d

    def __eq__(self, other):
        return (isinstance(other, TrainedModel)
                and self.structure == other.structure
                and self.edges == other.edges
                and self.weights == other.weights
                and self.config == other.config
                and self.metadata == other.metadata)


def _check_dims(w: WeightVector, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != w.d:
        raise ValueError(f"feature dimension {x.shape[-1]} != model d={w.d}")
    return x


def compile_potentials(w: WeightVector, x, support: EdgeSet) -> PairwiseModel:
    """Binary pairwise model for input ``x``: ``theta_i(1) = w_i . [x; 1]`` and
    ``theta_ij(1, 1) = w_ij`` on the support, zeros elsewhere."""
    x = _check_dims(w, x)
    if support.n != w.L:
        raise ValueError(f"support over {support.n} labels, model has {w.L}")
    a = w.node_w @ augment(x)
    node = [np.array([0.0, ai]) for ai in a]
    edges = complete_edges(w.L)
    mask = support.mask()
    pots = {edges[k]: np.array([[0.0, 0.0], [0.0, w.edge_w[k]]])
            for k in np.flatnonzero(mask)}
    return PairwiseModel(w.L, [2] * w.L, node, pots)


def joint_feature(x, y, support: EdgeSet) -> np.ndarray:
    """phi(x, y): label block ``i`` is ``y_i [x; 1]``; edge ``ij`` is
    ``y_i y_j`` on the support and 0 elsewhere."""
    xa = augment(x)
    y = np.asarray(y, dtype=float)
    edges = complete_edges(len(y))
    mask = support.mask()
    pair = np.array([y[i] * y[j] for i, j in edges]) * mask
    return np.concatenate([np.outer(y, xa).ravel(), pair])


def feature_expectation(x, mu, support: EdgeSet) -> np.ndarray:
    """Expected joint feature under pseudo-marginals ``mu``."""
    xa = augment(x)
    p1 = np.array([m[1] for m in mu.mu_node])
    L = len(p1)
    pair = np.zeros(L * (L - 1) // 2)
    for k, e in enumerate(complete_edges(L)):
        if e in support and e in mu.mu_edge:
            pair[k] = mu.mu_edge[e][1, 1]
    return np.concatenate([np.outer(p1, xa).ravel(), pair])


def predict(m: TrainedModel, x) -> np.ndarray:
    """argmax_y w . phi(x, y) under the model's structure.

    Empty models threshold each label (``theta_i(1) > 0``), tree models use
    max-product and full models round the LP relaxation.
    """
    x = _check_dims(m.weights, x)
    if m.structure == "empty":
        return (m.weights.node_w @ augment(x) > 0).astype(int)
    model = compile_potentials(m.weights, x, m.edges)
    if m.structure == "tree":
        return map_tree(model, m.edges)[0]
    mu, _ = map_lp(model, m.edges)
    return round_marginals(mu)


def predict_batch(m: TrainedModel, X) -> np.ndarray:
    """Predictions for the rows of ``X``; vectorized except for full models."""
    X = _check_dims(m.weights, np.atleast_2d(X))
    if m.structure == "full":
        return np.array([predict(m, x) for x in X], dtype=int)
    A = augment(X) @ m.weights.node_w.T
    if m.structure == "empty":
        return (A > 0).astype(int)
    edges = m.edges.sorted()
    ei = np.array([e[0] for e in edges], dtype=int)
    ej = np.array([e[1] for e in edges], dtype=int)
    w = m.weights.edge_w[m.edges.mask()]
    return binary_forest_map(np.zeros_like(A), A, ei, ej, w).astype(int)
