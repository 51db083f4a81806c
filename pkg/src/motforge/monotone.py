"""Competitors, c-monotonicity of finite sets, and competitorblind functions.

A competitor of a finite measure alpha on the plane is a measure beta with
the same two marginals and, for every x, the same barycenter of the
x-slice.  A set is c-monotone when no finite alpha on it can be improved by
a competitor.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._common import POSITION_TOL, Verdict
from .costs import CostFunction
from .measures import Coupling, SupportSet, _cluster, make_coupling
from .simplex import lp_solve

VIOLATION_TOL = 1e-7


@dataclass(frozen=True)
class CompetitorCertificate:
    alpha: Coupling
    beta: Coupling
    gap: float

    def to_json(self) -> dict:
        return {"alpha": self.alpha.to_json(), "beta": self.beta.to_json(), "gap": self.gap}


@dataclass(frozen=True)
class BlindDecomposition:
    x_grid: np.ndarray
    y_grid: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    k: np.ndarray
    residual: float

    def evaluate(self) -> np.ndarray:
        """Model values phi(x) + psi(y) + k(x) y on the grid."""
        return self.phi[:, None] + self.psi[None, :] + self.k[:, None] * self.y_grid[None, :]

    def as_maps(self) -> dict:
        return {"phi": dict(zip(self.x_grid.tolist(), self.phi.tolist())),
                "psi": dict(zip(self.y_grid.tolist(), self.psi.tolist())),
                "k": dict(zip(self.x_grid.tolist(), self.k.tolist())),
                "residual": self.residual}


# ---------------------------------------------------------------------------
# competitor polytope


def _competitor_system(xg: np.ndarray, yg: np.ndarray):
    """Rows of the competitor constraints for beta on xg x yg (row-major)."""
    n, m = xg.size, yg.size
    A = np.zeros((2 * n + m, n * m))
    for i in range(n):
        A[i, i * m:(i + 1) * m] = 1.0
        A[n + m + i, i * m:(i + 1) * m] = yg - xg[i]
    for j in range(m):
        A[n + j, j::m] = 1.0
    return A


def _grid_masses(alpha: Coupling):
    xg, xl = _cluster(np.asarray(alpha.xs))
    yg, yl = _cluster(np.asarray(alpha.ys))
    M = np.zeros((xg.size, yg.size))
    np.add.at(M, (xl, yl), alpha.masses)
    return xg, yg, M


def min_over_competitors(alpha: Coupling, cost: CostFunction) -> tuple[float, Coupling]:
    """Minimise beta(c) over competitors beta of alpha."""
    if len(alpha) == 0:
        return 0.0, alpha
    xg, yg, M = _grid_masses(alpha)
    A = _competitor_system(xg, yg)
    b = A @ M.ravel()
    X, Y = np.meshgrid(xg, yg, indexing="ij")
    C = np.asarray(cost(X, Y), dtype=float).ravel()
    res = lp_solve(C, A, b)
    if not res.optimal:
        # alpha itself is feasible, so this signals a numerical breakdown
        raise RuntimeError(f"competitor LP returned {res.status}")
    beta = make_coupling(X.ravel(), Y.ravel(), res.x)
    return float(res.value), beta


def verify_C123(alpha: Coupling, beta: Coupling, tol: float = 1e-9) -> Verdict:
    """Check that beta is a competitor of alpha.

    C1: equal x-marginals.  C2: equal y-marginals.  C3: for every x, equal
    sums of (y - x) * mass.  The first failing tag is the witness.
    """
    xs = np.concatenate([alpha.xs, beta.xs])
    ys = np.concatenate([alpha.ys, beta.ys])
    ms = np.concatenate([alpha.masses, -np.asarray(beta.masses)])
    if xs.size == 0:
        return Verdict(True)
    xr, xl = _cluster(xs)
    yr, yl = _cluster(ys)
    d1 = np.bincount(xl, weights=ms, minlength=xr.size)
    d2 = np.bincount(yl, weights=ms, minlength=yr.size)
    d3 = np.bincount(xl, weights=ms * (ys - xr[xl]), minlength=xr.size)
    res = {"C1": float(np.max(np.abs(d1))), "C2": float(np.max(np.abs(d2))),
           "C3": float(np.max(np.abs(d3)))}
    for tag in ("C1", "C2", "C3"):
        if res[tag] > tol:
            return Verdict(False, tag, f"condition {tag} fails", {"residuals": res})
    return Verdict(True, None, "", {"residuals": res})


# ---------------------------------------------------------------------------
# c-monotonicity of finite sets


def canonical_pair(x1: float, x2: float, y1: float, yl: float, y2: float,
                   weight: float = 1.0) -> tuple[Coupling, Coupling]:
    """The three-point competitor pair obtained by swapping the spread.

    alpha = lam d(x1,y1) + (1-lam) d(x1,y2) + d(x2,yl) and beta is the same
    with x1 and x2 exchanged; lam = (y2 - yl)/(y2 - y1) makes yl the
    barycenter of the spread.
    """
    lam = (y2 - yl) / (y2 - y1)
    w = weight
    alpha = make_coupling([x1, x1, x2], [y1, y2, yl], [w * lam, w * (1 - lam), w])
    beta = make_coupling([x2, x2, x1], [y1, y2, yl], [w * lam, w * (1 - lam), w])
    return alpha, beta


def _canonical_scan(points: list[tuple[float, float]], cost: CostFunction):
    cols: dict[float, list[float]] = {}
    for x, y in points:
        cols.setdefault(x, []).append(y)
    xs = sorted(cols)
    for x1 in xs:
        ys1 = sorted(cols[x1])
        for i, k in itertools.combinations(range(len(ys1)), 2):
            y1, y2 = ys1[i], ys1[k]
            lam = None
            for x2 in xs:
                if x2 == x1:
                    continue
                for yl in sorted(cols[x2]):
                    if not (y1 < yl < y2):
                        continue
                    lam = (y2 - yl) / (y2 - y1)
                    a = lam * cost(x1, y1) + (1 - lam) * cost(x1, y2) + cost(x2, yl)
                    b = lam * cost(x2, y1) + (1 - lam) * cost(x2, y2) + cost(x1, yl)
                    gap = float(b - a)
                    if gap < -VIOLATION_TOL:
                        alpha, beta = canonical_pair(x1, x2, y1, yl, y2)
                        return CompetitorCertificate(alpha, beta, gap)
    return None


def _joint_lp(points: list[tuple[float, float]], cost: CostFunction):
    """Most negative beta(c) - alpha(c) over probability measures alpha on
    ``points`` and competitors beta of alpha.  Exact for the given set."""
    P = len(points)
    px = np.array([p[0] for p in points])
    py = np.array([p[1] for p in points])
    xg, xl = _cluster(px)
    yg, yl = _cluster(py)
    n, m = xg.size, yg.size
    A_beta = _competitor_system(xg, yg)
    A_w = np.zeros((2 * n + m, P))
    for p in range(P):
        A_w[xl[p], p] = 1.0
        A_w[n + yl[p], p] = 1.0
        A_w[n + m + xl[p], p] = py[p] - xg[xl[p]]
    A = np.vstack([np.hstack([A_beta, -A_w]),
                   np.concatenate([np.zeros(n * m), np.ones(P)])[None, :]])
    b = np.zeros(A.shape[0])
    b[-1] = 1.0
    X, Y = np.meshgrid(xg, yg, indexing="ij")
    c_beta = np.asarray(cost(X, Y), dtype=float).ravel()
    c_w = np.asarray(cost(px, py), dtype=float)
    res = lp_solve(np.concatenate([c_beta, -c_w]), A, b)
    if not res.optimal:
        raise RuntimeError(f"joint competitor LP returned {res.status}")
    beta = make_coupling(X.ravel(), Y.ravel(), res.x[:n * m])
    alpha = make_coupling(px, py, res.x[n * m:])
    return float(res.value), alpha, beta


def is_finitely_monotone(xi: SupportSet, cost: CostFunction, max_support: int = 4,
                         trials: int = 200, seed: int = 0) -> Verdict:
    """Search for a finite measure on ``xi`` that a competitor improves.

    Three stages, in order: the canonical three-point pairs on every
    admissible triple; ``trials`` random subsets of at most ``max_support``
    points with random positive weights; and one joint LP over all
    probability measures on ``xi``, which decides the question for this
    finite set.  A violation is a gap below -1e-7.  On failure the witness
    is a CompetitorCertificate, shrunk to the smallest subset that still
    violates when one of size at most ``max_support`` exists.
    """
    if max_support < 2:
        raise ValueError("max_support must be at least 2")
    points = list(xi)
    budget = {"points": len(points), "max_support": max_support, "trials": trials,
              "seed": seed, "canonical_triples": True, "joint_lp": True}
    if len(points) < 2:
        return Verdict(True, None, "fewer than two points", {"budget": budget})

    cert = _canonical_scan(points, cost)
    if cert is not None:
        return Verdict(False, cert, "canonical three-point pair", {"budget": budget})

    size_cap = min(max_support, len(points))
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        k = int(rng.integers(2, size_cap + 1))
        idx = np.sort(rng.choice(len(points), size=k, replace=False))
        w = rng.uniform(0.05, 1.0, size=k)
        alpha = make_coupling([points[i][0] for i in idx], [points[i][1] for i in idx], w)
        val, beta = min_over_competitors(alpha, cost)
        gap = val - alpha.integrate(cost)
        if gap < -VIOLATION_TOL * alpha.total_mass:
            return Verdict(False, CompetitorCertificate(alpha, beta, gap),
                           f"random subset, trial {trial}", {"budget": budget})

    gap, alpha, beta = _joint_lp(points, cost)
    if gap >= -VIOLATION_TOL:
        return Verdict(True, None, "no improving competitor", {"budget": budget, "joint_gap": gap})
    cert = _shrink(points, alpha, cost, max_support) or CompetitorCertificate(alpha, beta, gap)
    return Verdict(False, cert, "joint LP over the whole set", {"budget": budget})


def _shrink(points, alpha: Coupling, cost: CostFunction, max_support: int):
    used = [p for p in points
            if any(abs(p[0] - x) <= POSITION_TOL and abs(p[1] - y) <= POSITION_TOL
                   for x, y, _ in alpha.entries)]
    for size in range(2, min(max_support, len(used)) + 1):
        for sub in itertools.combinations(used, size):
            gap, a, b = _joint_lp(list(sub), cost)
            if gap < -VIOLATION_TOL:
                return CompetitorCertificate(a, b, gap)
    return None


# ---------------------------------------------------------------------------
# competitorblind functions


def _check_grids(x_grid, y_grid):
    xg = np.asarray(x_grid, dtype=float)
    yg = np.asarray(y_grid, dtype=float)
    if xg.size < 2 or yg.size < 3:
        raise ValueError("need at least 2 x-points and 3 y-points")
    if np.unique(xg).size != xg.size or np.unique(yg).size != yg.size:
        raise ValueError("grid points must be distinct")
    return np.sort(xg), np.sort(yg)


def is_competitorblind(f: CostFunction, x_grid, y_grid, tol: float = 1e-9) -> Verdict:
    """Is the convexity defect of f(x, .) the same for every x on the grid?

    For y1 < yl < y2 and lam = (y2 - yl)/(y2 - y1) the defect is
    lam f(x,y1) + (1-lam) f(x,y2) - f(x,yl).  The witness on failure is
    (x1, x2, y1, yl, y2).
    """
    xg, yg = _check_grids(x_grid, y_grid)
    X, Y = np.meshgrid(xg, yg, indexing="ij")
    F = np.asarray(f(X, Y), dtype=float)
    for i, j, k in itertools.combinations(range(yg.size), 3):
        lam = (yg[k] - yg[j]) / (yg[k] - yg[i])
        defect = lam * F[:, i] + (1 - lam) * F[:, k] - F[:, j]
        if np.ptp(defect) <= tol:
            continue
        for a, b in itertools.combinations(range(xg.size), 2):
            if abs(defect[a] - defect[b]) > tol:
                w = (float(xg[a]), float(xg[b]), float(yg[i]), float(yg[j]), float(yg[k]))
                return Verdict(False, w, "convexity defect depends on x",
                               {"defects": (float(defect[a]), float(defect[b]))})
    return Verdict(True)


def decompose_competitorblind(f: CostFunction, x_grid, y_grid) -> BlindDecomposition:
    """Least-squares fit of f(x, y) by phi(x) + psi(y) + k(x) y.

    psi is pinned to zero at the two smallest y points, which removes the
    affine-in-y freedom.  ``residual`` is the root-mean-square misfit.
    """
    xg, yg = _check_grids(x_grid, y_grid)
    n, m = xg.size, yg.size
    X, Y = np.meshgrid(xg, yg, indexing="ij")
    F = np.asarray(f(X, Y), dtype=float).ravel()
    # unknowns: phi (n), psi on yg[2:] (m - 2), k (n)
    D = np.zeros((n * m, 2 * n + m - 2))
    for i in range(n):
        for j in range(m):
            r = i * m + j
            D[r, i] = 1.0
            if j >= 2:
                D[r, n + j - 2] = 1.0
            D[r, n + m - 2 + i] = yg[j]
    sol, *_ = np.linalg.lstsq(D, F, rcond=None)
    resid = float(np.sqrt(np.mean((D @ sol - F) ** 2)))
    psi = np.concatenate([[0.0, 0.0], sol[n:n + m - 2]])
    return BlindDecomposition(xg, yg, sol[:n], psi, sol[n + m - 2:], resid)
