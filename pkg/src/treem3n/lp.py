"""A small dense two-phase simplex solver.

Used as a dependency-free exact LP method for :func:`treem3n.inference.map_lp`
(``method="simplex"``) and as an independent check on the HiGHS route.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LPError", "LPResult", "simplex"]


class LPError(RuntimeError):
    """Raised on infeasible/unbounded problems or when the pivot guard trips."""


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    duals: np.ndarray
    iterations: int


def _pivot(T, basis, r, j):
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    basis[r] = j


def _run(T, basis, ncols, max_iter, tol, it0=0):
    """Pivot until optimal.  Dantzig pricing, falling back to Bland's rule
    after a run of degenerate pivots."""
    it = it0
    degenerate = 0
    bland = False
    while True:
        d = T[-1, :ncols]
        if bland:
            cand = np.flatnonzero(d < -tol)
            if cand.size == 0:
                return it
            j = int(cand[0])
        else:
            j = int(np.argmin(d))
            if d[j] >= -tol:
                return it
        col = T[:-1, j]
        pos = col > tol
        if not np.any(pos):
            raise LPError(f"unbounded direction at column {j}")
        ratios = np.full(col.shape, np.inf)
        ratios[pos] = T[:-1, -1][pos] / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + tol)
        r = int(ties[np.argmin(np.asarray(basis)[ties])])
        degenerate = degenerate + 1 if rmin <= tol else 0
        if degenerate > 50:
            bland = True
        _pivot(T, basis, r, j)
        it += 1
        if it > max_iter:
            raise LPError(
                f"pivot guard exceeded ({max_iter} iterations, "
                f"bland={bland}, objective={-T[-1, -1]:.6g})")


def simplex(c, A_eq, b_eq, max_iter: int = 100000, tol: float = 1e-10) -> LPResult:
    """Minimize ``c @ x`` subject to ``A_eq @ x = b_eq`` and ``x >= 0``.

    Returns the primal optimum together with equality duals ``y`` satisfying
    ``A_eq.T @ y <= c`` (up to ``tol``) and ``b_eq @ y == c @ x``.
    """
    c = np.asarray(c, dtype=float)
    A = np.array(A_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    it = _run(T, basis, n + m, max_iter, tol)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if -T[-1, -1] > 1e-8 * scale:
        raise LPError(f"infeasible (phase-1 residual {-T[-1, -1]:.3g})")

    keep = []
    dropped = []
    for r in range(m):
        if basis[r] >= n:
            nz = np.flatnonzero(np.abs(T[r, :n]) > 1e-9)
            if nz.size == 0:
                # the artificial's own equality is a combination of the others
                dropped.append(basis[r] - n)
                continue
            _pivot(T, basis, r, int(nz[0]))
        keep.append(r)

    T2 = np.zeros((len(keep) + 1, n + 1))
    T2[:-1, :n] = T[keep, :n]
    T2[:-1, -1] = T[keep, -1]
    basis2 = [basis[r] for r in keep]
    T2[-1, :n] = c
    for r, bv in enumerate(basis2):
        T2[-1] -= c[bv] * T2[r]
    it = _run(T2, basis2, n, max_iter, tol, it)

    x = np.zeros(n)
    x[basis2] = T2[:-1, -1]
    rows = [r for r in range(m) if r not in set(dropped)]
    y = np.zeros(m)
    if basis2:
        B = A[np.ix_(rows, basis2)]
        y[rows] = np.linalg.lstsq(B.T, c[basis2], rcond=None)[0]
    y[flip] *= -1
    return LPResult(x=x, value=float(c @ x), duals=y, iterations=it)
