"""Comparison trainers: Empty, Full, Greedy, Project and MST.

Every trainer has the signature ``(data, lam=None, cfg=None)``; ``lam``
overrides ``cfg.lam`` when given.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from ._utils import parallel_map
from .graph import (EdgeSet, EdgeWeightMap, UnionFind, complete_edges,
                    kruskal_max_tree)
from .model import TrainedModel
from .training import TrainConfig, _Problem, crank, solve_restricted

__all__ = ["train_empty", "train_full", "train_greedy", "train_project",
           "train_mst", "train_crank", "TRAINERS"]


def _setup(data, lam, cfg):
    cfg = cfg or TrainConfig()
    if lam is not None:
        cfg = replace(cfg, lam=float(lam))
    return cfg, _Problem(data)


def _solve(prob, support, cfg, init=None, state=None):
    return solve_restricted(None, support, cfg.lam, init, cfg,
                            return_info=True, state=state, _prob=prob)


def _model(w, structure, edges, cfg, **meta):
    return TrainedModel(w, structure, edges, cfg.to_dict(), meta)


def train_empty(data, lam=None, cfg=None) -> TrainedModel:
    """Independent per-label hinge classifiers (no edges)."""
    cfg, prob = _setup(data, lam, cfg)
    w, info = _solve(prob, EdgeSet(prob.L), cfg)
    return _model(w, "empty", EdgeSet(prob.L), cfg, method="empty",
                  objective=info.objective)


def train_full(data, lam=None, cfg=None) -> TrainedModel:
    """All pairwise edges, with the LP-relaxed hinge when needed."""
    cfg, prob = _setup(data, lam, cfg)
    support = EdgeSet.complete(prob.L)
    w, info = _solve(prob, support, cfg)
    return _model(w, "full", support, cfg, method="full",
                  objective=info.objective)


def _add_edge_trial(args):
    prob, support, e, cfg, init, state = args
    w, info = _solve(prob, support.union([e]), cfg, init, state)
    return w, info


def train_greedy(data, lam=None, cfg=None) -> TrainedModel:
    """Grow a spanning tree one edge at a time by largest objective decrease.

    Each candidate solve is warm-started from the incumbent weights (new edge
    at zero) and its dual state.
    """
    cfg, prob = _setup(data, lam, cfg)
    L = prob.L
    support = EdgeSet(L)
    w, info = _solve(prob, support, cfg)
    current, state = info.objective, info.state
    uf = UnionFind(L)
    sequence, gains, objectives = [], [], [current]
    n_solves = 1
    for _ in range(L - 1):
        cands = [e for e in complete_edges(L) if uf.find(e[0]) != uf.find(e[1])]
        results = parallel_map(
            _add_edge_trial,
            [(prob, support, e, cfg, w, state) for e in cands], cfg.n_jobs)
        n_solves += len(cands)
        objs = np.array([r[1].objective for r in results])
        k = int(np.argmin(objs))  # first minimum = lexicographic tie-break
        e = cands[k]
        gains.append(current - float(objs[k]))
        w, info = results[k]
        current, state = info.objective, info.state
        support = support.union([e])
        uf.union(*e)
        sequence.append(e)
        objectives.append(current)
    return _model(w, "tree", support, cfg, method="greedy", objective=current,
                  sequence=sequence, gains=gains, objectives=objectives,
                  n_solves=n_solves)


def train_project(data, lam=None, cfg=None) -> TrainedModel:
    """Refit on the maximum spanning tree of the Full model's edge weights."""
    cfg, prob = _setup(data, lam, cfg)
    w_full, info = _solve(prob, EdgeSet.complete(prob.L), cfg)
    tree = kruskal_max_tree(w_full.pi())
    w, info = _solve(prob, tree, cfg, w_full.restrict(tree), info.state)
    return _model(w, "tree", tree, cfg, method="project",
                  objective=info.objective)


def _single_edge_trial(args):
    prob, e, cfg, init, state = args
    return _solve(prob, EdgeSet(prob.L, [e]), cfg, init, state)[1].objective


def train_mst(data, lam=None, cfg=None) -> TrainedModel:
    """Maximum spanning tree over per-edge objective gains, then refit.

    The gain of edge ij is the Empty objective minus the objective of the
    model whose only edge is ij.  Negative gains (solver noise) clamp to 0.
    """
    cfg, prob = _setup(data, lam, cfg)
    L = prob.L
    w0, info0 = _solve(prob, EdgeSet(L), cfg)
    edges = complete_edges(L)
    objs = parallel_map(_single_edge_trial,
                        [(prob, e, cfg, w0, info0.state) for e in edges],
                        cfg.n_jobs)
    raw = info0.objective - np.array(objs, dtype=float)
    tree = kruskal_max_tree(EdgeWeightMap(L, np.maximum(raw, 0.0)))
    w, info = _solve(prob, tree, cfg, w0, info0.state)
    return _model(w, "tree", tree, cfg, method="mst", objective=info.objective,
                  gains={f"{i}-{j}": float(g) for (i, j), g in zip(edges, raw)})


def train_crank(data, lam=None, cfg=None) -> TrainedModel:
    cfg = cfg or TrainConfig()
    if lam is not None:
        cfg = replace(cfg, lam=float(lam))
    return crank(data, cfg)


TRAINERS = {
    "empty": train_empty,
    "full": train_full,
    "greedy": train_greedy,
    "project": train_project,
    "mst": train_mst,
    "crank": train_crank,
}
