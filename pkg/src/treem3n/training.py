"""Regularized structured hinge training and the CRANK tree learner.

All learners minimize

    (lam / 2) ||w||^2 + mean_m h_m(w)  [+ beta ||w_E||_1 - beta v . w_E]

where ``h_m`` is the Hamming-augmented structured hinge.  When the nonzero
edges of ``w`` contain a cycle the inner maximization is replaced by its
local-polytope relaxation.

The convex problems are solved with a one-slack cutting-plane method: each
iteration runs batched loss-augmented inference at the current weights,
adds the resulting linear lower bound on the mean hinge, and re-solves the
small regularized master problem exactly.  The gap between the best primal
value and the master value certifies accuracy.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from ._utils import parallel_map, substream
from .graph import (EdgeSet, complete_edges, f1, f2, f2_subgradient,
                    is_forest, kruskal_max_tree)
from .inference import (PseudoMarginals, binary_edge_marginals,
                        binary_forest_map, binary_lp_batch, loss_augment,
                        map_lp, map_tree, score)
from .model import TrainedModel, WeightVector, augment, compile_potentials

__all__ = [
    "TrainConfig", "ObjectiveReport", "ConvergenceWarning", "SolveInfo", "CutPool",
    "hinge_example", "objective", "objective_report", "crank_objective",
    "solve_restricted", "cccp_inner", "crank", "support_of", "mean_hinge",
]


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by all trainers.

    ``beta0=None`` resolves to ``0.01 * lam * L``.  ``inner_tol`` is the
    relative optimality gap at which a convex solve stops, and
    ``inner_max_epochs`` caps its passes over the data.  ``cut_blocks`` is the
    number of example blocks that get their own cutting-plane model.
    """

    lam: float = 0.01
    beta0: float | None = None
    beta_factor: float = 2.0
    restarts: int = 10
    inner_tol: float = 1e-4
    inner_max_epochs: int = 200
    cccp_max_iters: int = 50
    support_eps: float = 1e-6
    max_beta_steps: int = 60
    cut_blocks: int = 32
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.beta0 is not None and not self.beta0 > 0:
            raise ValueError("beta0 must be positive")
        if not self.beta_factor > 1:
            raise ValueError("beta_factor must exceed 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if not self.support_eps > 0:
            raise ValueError("support_eps must be positive")
        if not self.inner_tol > 0 or self.inner_max_epochs < 1:
            raise ValueError("inner_tol and inner_max_epochs must be positive")

    def resolved_beta0(self, L: int) -> float:
        return self.beta0 if self.beta0 is not None else 0.01 * self.lam * L

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ObjectiveReport:
    total: float
    hinge_avg: float
    l2_term: float
    l1_term: float = 0.0
    f2_term: float = 0.0
    beta: float = 0.0


# ---------------------------------------------------------------------------
# single-example reference path (general inference routines)

def hinge_example(w: WeightVector, inst, support: EdgeSet):
    """Loss-augmented hinge of one labeled instance and its maximizer.

    Forest supports are solved exactly by max-product; anything else goes
    through the local-polytope LP.
    """
    if inst.labels is None:
        raise ValueError("instance has no labels")
    gold = np.asarray(inst.labels, dtype=int)
    model = compile_potentials(w, inst.features, support)
    aug = loss_augment(model, gold)
    if is_forest(support):
        y, value = map_tree(aug, support)
        mu = PseudoMarginals(
            [np.eye(2)[v] for v in y],
            {e: np.outer(np.eye(2)[y[e[0]]], np.eye(2)[y[e[1]]])
             for e in support.sorted()})
    else:
        mu, value = map_lp(aug, support)
    return value - score(model, gold, support), mu


# ---------------------------------------------------------------------------
# batched machinery

class _Problem:
    """Dense arrays for a labeled dataset."""

    def __init__(self, data):
        if data.Y is None:
            raise ValueError("training data must be labeled")
        if len(data) == 0:
            raise ValueError("training data is empty")
        self.L, self.d, self.M = data.L, data.d, len(data)
        self.X = augment(data.X)
        self.Y = data.Y.astype(float)
        edges = complete_edges(self.L)
        self.ei = np.array([e[0] for e in edges], dtype=int)
        self.ej = np.array([e[1] for e in edges], dtype=int)
        self.Yedge = self.Y[:, self.ei] * self.Y[:, self.ej]
        self._forest_cache: dict = {}

    def is_forest(self, mask) -> bool:
        key = mask.tobytes()
        hit = self._forest_cache.get(key)
        if hit is None:
            hit = is_forest(EdgeSet.from_mask(self.L, mask))
            self._forest_cache[key] = hit
        return hit

    def oracle(self, W, we, idx=None):
        """Loss-augmented maximization for rows ``idx`` at weights (W, we).

        ``we`` must already be zero off the support.  Returns node and edge
        marginals, the augmented maximum and the Hamming term.
        """
        X = self.X if idx is None else self.X[idx]
        Y = self.Y if idx is None else self.Y[idx]
        A = X @ W.T
        s0, s1 = Y, A + 1.0 - Y
        eff = we != 0
        ei, ej = self.ei[eff], self.ej[eff]
        if self.is_forest(eff):
            mu = binary_forest_map(s0, s1, ei, ej, we[eff]).astype(float)
        else:
            mu = binary_lp_batch(s0, s1, ei, ej, we[eff])
        mu_e = binary_edge_marginals(mu, self.ei, self.ej, we)
        aug = np.einsum("ij,ij->i", s0, 1.0 - mu) + np.einsum(
            "ij,ij->i", s1, mu) + mu_e @ we
        loss = np.abs(mu - Y).sum(axis=1)
        return mu, mu_e, aug, loss, A

    def hinges(self, W, we) -> np.ndarray:
        _, _, aug, _, A = self.oracle(W, we)
        gold = np.einsum("ij,ij->i", A, self.Y) + self.Yedge @ we
        return aug - gold


def _regularizer(W, we, lam, beta, v_e):
    return (0.5 * lam * (np.sum(W * W) + we @ we)
            + beta * np.abs(we).sum() - beta * (v_e @ we))


@dataclass
class SolveInfo:
    """Diagnostics from one convex solve."""

    objective: float
    gap: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    state: "CutPool | None" = field(default=None, repr=False)


class CutPool:
    """Linear lower bounds on the mean hinge, one family per example block.

    Examples are split into ``n_blocks`` fixed blocks; the cuts of block
    ``b`` bound that block's share of the mean hinge, so the model of the
    whole objective is a sum of per-block maxima.  The mean hinge is the
    same convex function of the full weight vector whatever the support,
    since weights off the support are simply zero.  Cuts therefore stay
    valid across supports, beta levels and CCCP iterations, and a pool can
    be handed from one solve to the next.
    """

    def __init__(self, n_node: int, n_edge: int, n_blocks: int,
                 max_size: int = 600):
        self.n_node, self.n_edge = n_node, n_edge
        self.n_blocks, self.max_size = n_blocks, max_size
        self.c = np.zeros(0)
        self.g = np.zeros((0, n_node + n_edge))
        self.block = np.zeros(0, dtype=int)
        self.idle = np.zeros(0, dtype=int)

    def __len__(self):
        return self.c.size

    def copy(self) -> "CutPool":
        out = CutPool(self.n_node, self.n_edge, self.n_blocks, self.max_size)
        out.c, out.g = self.c.copy(), self.g.copy()
        out.block, out.idle = self.block.copy(), self.idle.copy()
        return out

    def add(self, c, g, block):
        self.c = np.concatenate([self.c, c])
        self.g = np.vstack([self.g, g])
        self.block = np.concatenate([self.block, block])
        self.idle = np.concatenate([self.idle, np.zeros(len(c), dtype=int)])

    def lower(self, w) -> float:
        vals = self.c + self.g @ w
        out = np.full(self.n_blocks, -np.inf)
        np.maximum.at(out, self.block, vals)
        return float(out.sum())

    def prune(self, alpha, keep_idle: int = 30):
        """Forget cuts that carried no weight for ``keep_idle`` solves."""
        self.idle = np.where(alpha > 1e-10, 0, self.idle + 1)
        order = np.lexsort((-np.arange(self.idle.size), self.idle))
        keep = np.zeros(self.idle.size, dtype=bool)
        keep[order[:self.max_size]] = True
        keep &= self.idle < keep_idle
        sel = lambda a: a[keep]
        self.c, self.g = sel(self.c), sel(self.g)
        self.block, self.idle = sel(self.block), sel(self.idle)


def _blocks(M: int, n_blocks: int) -> np.ndarray:
    return np.arange(M) % n_blocks


def _cuts_at(prob: _Problem, W, we, n_blocks: int):
    """Per-block cuts at (W, we) and the mean hinge there."""
    mu, mu_e, aug, loss, A = prob.oracle(W, we)
    M = prob.M
    blk = _blocks(M, n_blocks)
    R = np.zeros((n_blocks, M))
    R[blk, np.arange(M)] = 1.0 / M
    dmu = mu - prob.Y
    g_node = np.einsum("bm,ml,md->bld", R, dmu, prob.X).reshape(n_blocks, -1)
    g = np.hstack([g_node, R @ (mu_e - prob.Yedge)])
    gold = np.einsum("ij,ij->i", A, prob.Y) + prob.Yedge @ we
    return R @ loss, g, float((aug - gold).mean())


_QP_OPTS = {"show_progress": False, "abstol": 1e-12, "reltol": 1e-11,
            "feastol": 1e-11, "maxiters": 200}


def _master(pool: CutPool, lam, beta, v_e, mask):
    """Exact minimizer of the regularized cutting-plane model.

    Returns the primal weights, the model's optimal value and the cut
    multipliers.  The QP is posed in whichever of its primal or dual forms
    has fewer variables.
    """
    nn = pool.n_node
    sel = np.concatenate([np.ones(nn, dtype=bool), mask])
    Gk = pool.g[:, sel]
    K, n = Gk.shape
    Es = int(mask.sum())
    use_u = beta > 0 and Es > 0
    n_primal = n + (Es if use_u else 0) + pool.n_blocks
    n_dual = K + (Es if use_u else 0)
    if n_primal <= n_dual:
        w_sub, alpha = _master_primal(pool, Gk, lam, beta, v_e[mask], use_u)
    else:
        w_sub, alpha = _master_dual(pool, Gk, lam, beta, v_e[mask], use_u)
    w = np.zeros(nn + mask.size)
    w[sel] = w_sub
    W, we = w[:nn], w[nn:]
    if use_u:
        we[np.abs(we) < 1e-12] = 0.0
    value = _regularizer(W, we, lam, beta, v_e) + pool.lower(w)
    return W, we, value, alpha


def _master_primal(pool, Gk, lam, beta, v_s, use_u):
    # variables: w (n), t (Es, only with l1), xi (blocks)
    from cvxopt import matrix, solvers

    K, n = Gk.shape
    Es = v_s.size if use_u else 0
    nb = pool.n_blocks
    nv = n + Es + nb
    P = np.zeros((nv, nv))
    P[np.arange(n), np.arange(n)] = lam
    q = np.zeros(nv)
    q[n + Es:] = 1.0
    cut = np.zeros((K, nv))
    cut[:, :n] = Gk
    cut[np.arange(K), n + Es + pool.block] = -1.0
    G, h = [cut], [-pool.c]
    if use_u:
        q[n - Es:n] = -beta * v_s
        q[n:n + Es] = beta
        ab = np.zeros((2 * Es, nv))
        ab[np.arange(Es), n - Es + np.arange(Es)] = 1.0
        ab[Es + np.arange(Es), n - Es + np.arange(Es)] = -1.0
        ab[np.arange(Es), n + np.arange(Es)] = -1.0
        ab[Es + np.arange(Es), n + np.arange(Es)] = -1.0
        G.append(ab)
        h.append(np.zeros(2 * Es))
    res = solvers.qp(matrix(P), matrix(q), matrix(np.vstack(G)),
                     matrix(np.concatenate(h)), options=_QP_OPTS)
    x = np.array(res["x"]).ravel()
    alpha = np.array(res["z"]).ravel()[:K]
    return x[:n], np.clip(alpha, 0.0, None)


def _master_dual(pool, Gk, lam, beta, v_s, use_u):
    # per-block simplex weights alpha over cuts, box multipliers u for l1
    from cvxopt import matrix, solvers

    K, n = Gk.shape
    Es = v_s.size
    nn = n - Es
    shift = np.concatenate([np.zeros(nn), beta * v_s])
    Z = Gk.T if not use_u else np.hstack(
        [Gk.T, np.vstack([np.zeros((nn, Es)), np.eye(Es)])])
    nz = Z.shape[1]
    # objective scaled by lam: 0.5 ||Z z - shift||^2 - lam c . alpha
    P = Z.T @ Z
    q = -Z.T @ shift
    q[:K] -= lam * pool.c
    G = [-np.eye(K, nz)]
    h = [np.zeros(K)]
    if use_u:
        box = np.zeros((Es, nz))
        box[:, K:] = np.eye(Es)
        G += [box, -box]
        h += [np.full(Es, beta), np.full(Es, beta)]
    present = np.unique(pool.block)
    A = np.zeros((present.size, nz))
    A[np.searchsorted(present, pool.block), np.arange(K)] = 1.0
    scale = max(1.0, float(np.abs(P).max()))
    res = solvers.qp(matrix(P / scale), matrix(q / scale),
                     matrix(np.vstack(G)), matrix(np.concatenate(h)),
                     matrix(A), matrix(np.ones(present.size)), options=_QP_OPTS)
    z = np.array(res["x"]).ravel()
    return -(Z @ z - shift) / lam, np.clip(z[:K], 0.0, None)


def _solve(prob: _Problem, lam, beta, v_e, mask, init: WeightVector,
           pool: CutPool | None, cfg: TrainConfig) -> tuple[WeightVector, SolveInfo]:
    """Minimize the regularized hinge objective restricted to ``mask``."""
    L, d1 = prob.L, prob.d + 1
    nb = min(cfg.cut_blocks, prob.M)
    mask_f = mask.astype(float)
    v_e = v_e * mask_f
    if pool is None or pool.n_blocks != nb:
        pool = CutPool(L * d1, mask.size, nb)
    else:
        pool = pool.copy()
    ids = np.arange(nb)

    W0 = init.node_w.ravel().copy()
    we0 = init.edge_w * mask_f
    c, g, hinge = _cuts_at(prob, W0.reshape(L, d1), we0, nb)
    pool.add(c, g, ids)
    best_P = _regularizer(W0, we0, lam, beta, v_e) + hinge
    best = (W0, we0)
    history = [best_P]
    gap = np.inf
    converged = False
    it = 0
    for it in range(1, cfg.inner_max_epochs + 1):
        W, we, lower, alpha = _master(pool, lam, beta, v_e, mask)
        gap = best_P - lower
        if gap <= cfg.inner_tol * max(abs(best_P), 1e-8):
            converged = True
            break
        pool.prune(alpha)
        c, g, hinge = _cuts_at(prob, W.reshape(L, d1), we, nb)
        pool.add(c, g, ids)
        P = _regularizer(W, we, lam, beta, v_e) + hinge
        history.append(P)
        if P < best_P:
            best_P, best = P, (W, we)
    if not converged:
        warnings.warn(
            f"inner solver stopped after {it} iterations with gap {gap:.3g}",
            ConvergenceWarning, stacklevel=3)
    w_best = WeightVector(best[0].reshape(L, d1).copy(), best[1].copy())
    return w_best, SolveInfo(float(best_P), float(gap), it, converged,
                             history, pool)


def _mask_of(support: EdgeSet, L: int) -> np.ndarray:
    if support.n != L:
        raise ValueError(f"support over {support.n} labels, data has {L}")
    return support.mask()


def objective(w: WeightVector, data, lam: float, support: EdgeSet) -> float:
    """``(lam/2)||w||^2 + mean hinge`` with the hinge over ``support``."""
    return objective_report(w, data, lam, support).total


def objective_report(w: WeightVector, data, lam: float, support: EdgeSet,
                     beta: float = 0.0, _prob=None) -> ObjectiveReport:
    """Objective pieces; the l2 term covers every coordinate of ``w``."""
    prob = _prob or _Problem(data)
    we = w.edge_w * _mask_of(support, prob.L)
    hinge = float(prob.hinges(w.node_w, we).mean())
    l2 = 0.5 * lam * float(np.sum(w.node_w ** 2) + w.edge_w @ w.edge_w)
    pi = w.pi()
    l1 = f1(pi)
    t2 = f2(pi)
    total = hinge + l2 + (beta * (l1 - t2) if beta else 0.0)
    return ObjectiveReport(total, hinge, l2, l1, t2, beta)


def mean_hinge(w: WeightVector, data, support: EdgeSet):
    """Mean hinge over ``support`` and one of its subgradients (flat layout)."""
    prob = _Problem(data)
    we = w.edge_w * _mask_of(support, prob.L)
    c, g, hinge = _cuts_at(prob, w.node_w, we, 1)
    g = g[0].copy()
    g[prob.L * (prob.d + 1):] *= support.mask()
    return hinge, g


def crank_objective(w: WeightVector, data, lam: float, beta: float,
                    _prob=None) -> float:
    """``l(w) + beta (f1 - f2)`` with the relaxed hinge on the full graph."""
    return objective_report(w, data, lam, EdgeSet.complete(w.L), beta,
                            _prob).total


def solve_restricted(data, support: EdgeSet, lam: float,
                     init: WeightVector | None = None,
                     cfg: TrainConfig | None = None, *, return_info=False,
                     state=None, _prob=None):
    """l2-regularized hinge minimization with edges confined to ``support``.

    Never returns something worse than ``init`` (restricted to the support).
    ``state`` is a :class:`CutPool` from an earlier solve on the same data.
    """
    cfg = cfg or TrainConfig(lam=lam)
    prob = _prob or _Problem(data)
    mask = _mask_of(support, prob.L)
    init = init if init is not None else WeightVector.zeros(prob.L, prob.d)
    w, info = _solve(prob, lam, 0.0, np.zeros(mask.size), mask, init, state,
                     cfg)
    return (w, info) if return_info else w


def cccp_inner(data, lam: float, beta: float, v, init: WeightVector,
               cfg: TrainConfig | None = None, *, return_info=False,
               state=None, _prob=None):
    """Minimize ``l(w) + beta ||w_E||_1 - beta v . w`` over all edges.

    ``v`` is in the flat weight layout and must vanish on node blocks.
    """
    cfg = cfg or TrainConfig(lam=lam)
    prob = _prob or _Problem(data)
    v = np.asarray(v, dtype=float)
    k = prob.L * (prob.d + 1)
    if np.any(v[:k] != 0):
        raise ValueError("linearization must be zero on node coordinates")
    mask = np.ones(v.size - k, dtype=bool)
    w, info = _solve(prob, lam, beta, v[k:], mask, init, state, cfg)
    return (w, info) if return_info else w


def support_of(w: WeightVector, eps: float) -> np.ndarray:
    """Edges whose weight is non-negligible relative to the largest one."""
    a = np.abs(w.edge_w)
    if a.size == 0:
        return np.zeros(0, dtype=bool)
    return a > eps * max(1.0, float(a.max()))


def _crank_restart(args):
    prob, cfg, r = args
    L, d = prob.L, prob.d
    rng = substream(cfg.seed, "crank-init", r)
    w = WeightVector(rng.uniform(-0.1, 0.1, size=(L, d + 1)),
                     rng.uniform(-0.1, 0.1, size=L * (L - 1) // 2))
    beta = cfg.resolved_beta0(L)
    full = np.ones(L * (L - 1) // 2, dtype=bool)
    state = None
    trace = []
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        for level in range(cfg.max_beta_steps):
            F = crank_objective(w, None, cfg.lam, beta, _prob=prob)
            trace.append({"beta": beta, "iter": 0, "objective": F})
            supp = support_of(w, cfg.support_eps)
            for t in range(1, cfg.cccp_max_iters + 1):
                v = f2_subgradient(w)
                w_new, info = _solve(prob, cfg.lam, beta, v[L * (d + 1):], full,
                                     w, state, cfg)
                state = info.state
                F_new = crank_objective(w_new, None, cfg.lam, beta, _prob=prob)
                trace.append({"beta": beta, "iter": t, "objective": F_new})
                supp_new = support_of(w_new, cfg.support_eps)
                settled = (np.array_equal(supp, supp_new)
                           and abs(F - F_new) <= cfg.inner_tol * max(1.0, abs(F)))
                w, supp, F = w_new, supp_new, F_new
                if settled:
                    break
            if prob.is_forest(supp):
                break
            beta *= cfg.beta_factor
        else:
            notes.append("beta schedule exhausted before the support became a forest")
        tree = kruskal_max_tree(w.pi())
        w_fit, info = _solve(prob, cfg.lam, 0.0, np.zeros(full.size),
                             tree.mask(), w.restrict(tree), state, cfg)
    notes += [str(c.message) for c in caught]
    return {"weights": w_fit, "tree": tree, "objective": info.objective,
            "final_beta": beta, "trace": trace, "warnings": notes}


def crank(data, cfg: TrainConfig | None = None) -> TrainedModel:
    """Learn a tree-structured predictor with the circuit-rank penalty.

    Each restart starts from small random weights and runs the
    convex-concave procedure, doubling ``beta`` (by ``beta_factor``) until
    the support of the edge weights is a forest.  The Kruskal tree of the
    final weights is then refit without the l1 term, and the restart with the
    lowest refit objective wins.
    """
    cfg = cfg or TrainConfig()
    prob = _Problem(data)
    runs = parallel_map(_crank_restart,
                        [(prob, cfg, r) for r in range(cfg.restarts)],
                        n_jobs=cfg.n_jobs)
    objs = [run["objective"] for run in runs]
    best = int(np.argmin(objs))
    run = runs[best]
    meta = {
        "method": "crank",
        "objective": run["objective"],
        "seed": cfg.seed,
        "best_restart": best,
        "restart_objectives": objs,
        "restart_trees": [run_["tree"].sorted() for run_ in runs],
        "final_beta": run["final_beta"],
        "cccp_iterations": len(run["trace"]),
        "cccp_trace": run["trace"],
        "warnings": run["warnings"],
    }
    return TrainedModel(run["weights"], "tree", run["tree"], cfg.to_dict(), meta)
