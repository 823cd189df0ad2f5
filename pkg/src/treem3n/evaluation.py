"""Accuracy metrics, cross-validation of the regularization weight, and
prediction timing."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from ._utils import parallel_map, substream
from .model import TrainedModel, predict_batch
from .training import TrainConfig

__all__ = ["MetricsReport", "metrics", "evaluate", "cross_validate",
           "kfold_indices", "benchmark", "format_table", "METRICS"]

METRICS = ("hamming", "zero_one", "f1")


@dataclass
class MetricsReport:
    """Example-averaged accuracies in [0, 1]."""

    hamming: float
    zero_one: float
    f1: float
    n: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def metrics(pred, gold) -> MetricsReport:
    """Hamming accuracy, exact-match rate and example-averaged F1.

    F1 of an example with no true and no predicted labels counts as 1.

    Parameters
    ----------
    pred, gold : array_like, shape (n, L)
        0/1 label matrices.
    """
    P = np.asarray(pred, dtype=bool)
    Y = np.asarray(gold, dtype=bool)
    if P.ndim != 2 or P.shape != Y.shape:
        raise ValueError(f"shape mismatch: {P.shape} vs {Y.shape}")
    if P.shape[0] == 0:
        raise ValueError("no examples")
    hamming = float((P == Y).mean(axis=1).mean())
    zero_one = float(np.all(P == Y, axis=1).mean())
    inter = (P & Y).sum(axis=1)
    denom = P.sum(axis=1) + Y.sum(axis=1)
    f1 = np.where(denom == 0, 1.0, 2.0 * inter / np.maximum(denom, 1))
    return MetricsReport(hamming, zero_one, float(f1.mean()), P.shape[0])


def evaluate(model: TrainedModel, data) -> MetricsReport:
    if data.Y is None:
        raise ValueError("evaluation data must be labeled")
    return metrics(predict_batch(model, data.X), data.Y)


def kfold_indices(M: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffled, nearly equal folds."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    if M < k:
        raise ValueError(f"{M} examples cannot fill {k} folds")
    perm = substream(seed, "cv-folds").permutation(M)
    return [np.sort(f) for f in np.array_split(perm, k)]


def _fold_task(args):
    data, method, lam, tr, va, cfg = args
    from .baselines import TRAINERS
    model = TRAINERS[method](data.subset(tr), lam, cfg)
    return evaluate(model, data.subset(va))


def cross_validate(data, method: str, lambda_grid, k: int = 5,
                   cfg: TrainConfig | None = None):
    """Pick the lambda with the best mean validation exact-match rate.

    Ties go to the smaller lambda.

    Returns
    -------
    best_lambda : float
    table : list of dict
        One row per distinct lambda with per-fold and mean metrics.
    """
    from .baselines import TRAINERS
    if method not in TRAINERS:
        raise ValueError(f"unknown method {method!r}")
    grid = sorted({float(v) for v in lambda_grid})
    if not grid:
        raise ValueError("empty lambda grid")
    if any(not v > 0 for v in grid):
        raise ValueError("lambda values must be positive")
    cfg = cfg or TrainConfig()
    folds = kfold_indices(len(data), k, cfg.seed)
    everything = np.arange(len(data))
    tasks = []
    for lam in grid:
        for va in folds:
            tr = np.setdiff1d(everything, va)
            tasks.append((data, method, lam, tr, va, replace(cfg, n_jobs=1)))
    reports = parallel_map(_fold_task, tasks, cfg.n_jobs)
    table = []
    for a, lam in enumerate(grid):
        rows = reports[a * k:(a + 1) * k]
        row = {"lambda": lam, "folds": [r.to_dict() for r in rows]}
        for name in METRICS:
            row[name] = float(np.mean([getattr(r, name) for r in rows]))
        table.append(row)
    scores = np.array([row["zero_one"] for row in table])
    best = grid[int(np.flatnonzero(scores == scores.max())[0])]
    return best, table


def benchmark(model: TrainedModel, data, repeats: int = 1) -> dict:
    """Wall-clock prediction time over ``data`` after one warmup pass."""
    if len(data) == 0:
        raise ValueError("no examples")
    predict_batch(model, data.X[:min(len(data), 8)])
    best = np.inf
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        predict_batch(model, data.X)
        best = min(best, time.perf_counter() - t0)
    return {
        "structure": model.structure,
        "n_examples": len(data),
        "predict_time_total": best,
        "per_example_mean": best / len(data),
        "train_time": model.metadata.get("train_time"),
    }


def _ranks(values, higher_better=True) -> list[int]:
    v = np.asarray(values, dtype=float)
    key = -v if higher_better else v
    return [int(np.sum(key < key[i])) + 1 for i in range(v.size)]


def format_table(results: dict) -> str:
    """Aligned text table of percentages with per-metric ranks in brackets.

    ``results`` maps method name to :class:`MetricsReport`.
    """
    names = list(results)
    cols = {m: [getattr(results[k], m) for k in names] for m in METRICS}
    ranks = {m: _ranks(cols[m]) for m in METRICS}
    head = ["method", "Hamming", "0/1", "F1"]
    rows = [[k] + [f"{100 * cols[m][i]:.1f} [{ranks[m][i]}]" for m in METRICS]
            for i, k in enumerate(names)]
    widths = [max(len(r[c]) for r in [head] + rows) for c in range(4)]
    fmt = lambda r: "  ".join(
        r[0].ljust(widths[0]) if c == 0 else r[c].rjust(widths[c])
        for c in range(4))
    return "\n".join([fmt(head)] + [fmt(r) for r in rows]) + "\n"
