"""Dense revised simplex for ``min c.x  s.t.  A x = b, x >= 0``.

Small, deterministic and dependency-light: the problems solved in this
package have at most a few hundred columns.  Pricing is Dantzig's rule;
after ``bland_after`` consecutive degenerate pivots the solver switches to
Bland's rule until the next non-degenerate pivot, which rules out cycling.
Redundant equality rows are removed up front with a pivoted QR so the
phase-one basis can always be cleared of artificials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LPDimensionError(ValueError):
    pass


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    value: float | None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _independent_rows(A: np.ndarray, b: np.ndarray, tol: float):
    """Drop linearly dependent rows; report inconsistency as None."""
    m = A.shape[0]
    if m == 0:
        return A, b
    _, R, perm = sla.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] <= tol:
        rank = 0
    else:
        rank = int(np.sum(diag > tol * max(1.0, diag[0])))
    keep = np.sort(perm[:rank])
    drop = np.sort(perm[rank:])
    Ak, bk = A[keep], b[keep]
    if drop.size:
        if rank == 0:
            resid = np.abs(b[drop])
        else:
            lam, *_ = np.linalg.lstsq(Ak.T, A[drop].T, rcond=None)
            resid = np.abs(lam.T @ bk - b[drop])
        if np.any(resid > 1e-9 * (1.0 + np.abs(b[drop]))):
            return None
    return Ak, bk


class _Core:
    """Revised simplex iterations with an explicit, periodically refreshed inverse."""

    refactor_every = 32

    def __init__(self, A, b, c, basis, bland_after, max_iter):
        self.A, self.b, self.c = A, b, c
        self.basis = np.array(basis, dtype=np.int64)
        self.bland_after = bland_after
        self.max_iter = max_iter
        self.iterations = 0
        scale = max(1.0, float(np.max(np.abs(c))) if c.size else 1.0)
        self.opt_tol = 1e-10 * scale
        self.piv_tol = 1e-10
        self._refactor()

    def _refactor(self):
        self.Binv = np.linalg.inv(self.A[:, self.basis])
        self.xB = self.Binv @ self.b
        self.xB[self.xB < 0] = np.maximum(self.xB[self.xB < 0], 0.0)
        self.since_refactor = 0

    def reduced_costs(self):
        y = self.c[self.basis] @ self.Binv
        d = self.c - y @ self.A
        d[self.basis] = 0.0
        return d

    def pivot(self, r: int, j: int, u: np.ndarray):
        theta = self.xB[r] / u[r]
        self.xB -= theta * u
        self.xB[r] = theta
        self.xB[self.xB < 0] = 0.0
        prow = self.Binv[r] / u[r]
        self.Binv -= np.outer(u, prow)
        self.Binv[r] = prow
        self.basis[r] = j
        self.since_refactor += 1
        if self.since_refactor >= self.refactor_every:
            self._refactor()
        return theta

    def run(self, allowed: np.ndarray | None = None) -> str:
        degenerate = 0
        fresh = True
        while True:
            if self.iterations >= self.max_iter:
                raise RuntimeError("simplex iteration limit reached")
            d = self.reduced_costs()
            if allowed is not None:
                d = np.where(allowed, d, 0.0)
            cand = np.nonzero(d < -self.opt_tol)[0]
            if cand.size == 0:
                if fresh:
                    return OPTIMAL
                self._refactor()
                fresh = True
                continue
            bland = degenerate >= self.bland_after
            j = int(cand[0]) if bland else int(cand[np.argmin(d[cand])])
            u = self.Binv @ self.A[:, j]
            pos = np.nonzero(u > self.piv_tol)[0]
            if pos.size == 0:
                if not fresh:
                    self._refactor()
                    fresh = True
                    continue
                return UNBOUNDED
            ratios = self.xB[pos] / u[pos]
            tmin = ratios.min()
            ties = pos[ratios <= tmin + 1e-12 * (1.0 + tmin)]
            if bland or ties.size == 1:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                best = np.max(u[ties])
                near = ties[u[ties] >= best * (1 - 1e-12)]
                r = int(near[np.argmin(self.basis[near])])
            theta = self.pivot(r, j, u)
            self.iterations += 1
            fresh = self.since_refactor == 0
            degenerate = degenerate + 1 if theta <= 1e-12 else 0


def lp_solve(c, A_eq=None, b_eq=None, *, bland_after: int = 50,
             max_iter: int | None = None) -> LPResult:
    """Solve ``min c.x`` subject to ``A_eq x = b_eq`` and ``x >= 0``.

    Infeasible and unbounded problems are reported through ``status``.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    if A_eq is None:
        A = np.zeros((0, n))
        b = np.zeros(0)
    else:
        A = np.atleast_2d(np.asarray(A_eq, dtype=float))
        b = np.asarray(b_eq, dtype=float).ravel()
        if A.shape[0] == 0:
            A = np.zeros((0, n))
    if A.shape[1] != n or A.shape[0] != b.size:
        raise LPDimensionError(
            f"A is {A.shape}, c has {n} entries, b has {b.size} entries")
    if n == 0:
        if np.any(np.abs(b) > 1e-9):
            return LPResult(INFEASIBLE, None, None)
        return LPResult(OPTIMAL, np.zeros(0), 0.0)

    red = _independent_rows(A, b, 1e-10)
    if red is None:
        return LPResult(INFEASIBLE, None, None)
    A, b = red
    m = A.shape[0]
    if m == 0:
        if np.any(c < -1e-12):
            return LPResult(UNBOUNDED, None, None)
        return LPResult(OPTIMAL, np.zeros(n), 0.0)

    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign
    if max_iter is None:
        max_iter = 100 * (m + n) + 1000

    # phase one on [A | I]
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    core = _Core(A1, b, c1, np.arange(n, n + m), bland_after, max_iter)
    core.run()
    infeas = float(np.sum(core.xB[core.basis >= n]))
    if infeas > 1e-9 * (1.0 + float(np.max(np.abs(b)))):
        return LPResult(INFEASIBLE, None, None, core.iterations)

    # pivot remaining (zero-level) artificials out of the basis
    for r in range(m):
        if core.basis[r] < n:
            continue
        row = core.Binv[r] @ A
        row[core.basis[core.basis < n]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) <= 1e-9:
            raise RuntimeError("artificial variable stuck in basis despite full row rank")
        u = core.Binv @ A1[:, j]
        core.pivot(r, j, u)
    basis = core.basis.copy()
    iters = core.iterations

    core = _Core(A, b, c, basis, bland_after, max_iter)
    status = core.run()
    iters += core.iterations
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, None, None, iters)
    B = A[:, core.basis]
    xB = np.linalg.solve(B, b)
    xB[xB < 0] = 0.0
    x = np.zeros(n)
    x[core.basis] = xB
    return LPResult(OPTIMAL, x, float(c @ x), iters)
