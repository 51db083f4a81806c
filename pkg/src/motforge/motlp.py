"""Discrete martingale optimal transport as a linear program, plus structure checks
on optimiser supports (left/right monotonicity, two monotone graphs)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._common import SUPPORT_THRESHOLD, Verdict
from .costs import CostFunction
from .measures import (Coupling, DiscreteMeasure, SupportSet, convex_order_leq,
                       empty_coupling, make_coupling)
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, lp_solve


@dataclass
class MotSolution:
    coupling: Coupling
    value: float | None
    status: str
    detail: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def to_json(self) -> dict:
        return {"status": self.status, "value": self.value,
                "coupling": self.coupling.to_json()}


def martingale_constraints(x: np.ndarray, y: np.ndarray, mu_mass: np.ndarray,
                           nu_mass: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Equality system for q(x_i, y_j) >= 0, variables in row-major order.

    Rows: x-marginal, y-marginal, and one martingale row per x-atom.
    """
    n, m = x.size, y.size
    A = np.zeros((2 * n + m, n * m))
    for i in range(n):
        A[i, i * m:(i + 1) * m] = 1.0
        A[n + m + i, i * m:(i + 1) * m] = y - x[i]
    for j in range(m):
        A[n + j, j::m] = 1.0
    b = np.concatenate([mu_mass, nu_mass, np.zeros(n)])
    return A, b


def solve_mot(mu: DiscreteMeasure, nu: DiscreteMeasure, cost: CostFunction,
              sense: str = "min", *, order_tol: float = 1e-9) -> MotSolution:
    """Optimise E[c(X, Y)] over martingale couplings of (mu, nu)."""
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    verdict = convex_order_leq(mu, nu, order_tol)
    if not verdict:
        return MotSolution(empty_coupling(), None, INFEASIBLE,
                           {"reason": verdict.detail, "witness": verdict.witness})
    x, y = mu.positions, nu.positions
    X, Y = np.meshgrid(x, y, indexing="ij")
    C = np.asarray(cost(X, Y), dtype=float).ravel()
    A, b = martingale_constraints(x, y, mu.masses, nu.masses)
    res = lp_solve(-C if sense == "max" else C, A, b)
    if res.status != OPTIMAL:
        return MotSolution(empty_coupling(), None, res.status, {"iterations": res.iterations})
    value = -res.value if sense == "max" else res.value
    q = make_coupling(X.ravel(), Y.ravel(), res.x)
    return MotSolution(q, float(value), OPTIMAL, {"iterations": res.iterations})


# ---------------------------------------------------------------------------
# structure of supports


def check_left_monotone(s: SupportSet):
    """First triple ((x1,y1),(x1,y2),(x2,y')) with x1 < x2, y1 < y' < y2, or None."""
    cols = s.columns()
    xs = sorted(cols)
    for a, x1 in enumerate(xs):
        ys1 = sorted(cols[x1])
        for i in range(len(ys1)):
            for k in range(i + 1, len(ys1)):
                y1, y2 = ys1[i], ys1[k]
                for x2 in xs[a + 1:]:
                    for yp in sorted(cols[x2]):
                        if y1 < yp < y2:
                            return ((x1, y1), (x1, y2), (x2, yp))
    return None


def check_right_monotone(s: SupportSet):
    """Mirror image of the left-monotone test: the violating x2 lies below x1."""
    flipped = SupportSet.of((-x, y) for x, y in s)
    v = check_left_monotone(flipped)
    if v is None:
        return None
    return tuple((-x, y) for x, y in v)


def _graph_assign(cols: list[tuple[float, list[float]]], sign: float) -> bool:
    # Pareto frontier of (last lower, last upper) in sign-adjusted coordinates
    states = {(-np.inf, -np.inf)}
    for _, ys in cols:
        ys = sorted(sign * v for v in ys)
        options = [(ys[0], ys[-1])] if len(ys) == 2 else [(ys[0], None), (None, ys[0])]
        nxt = set()
        for lo, hi in states:
            for a, b in options:
                na = lo if a is None else a
                nb = hi if b is None else b
                if (a is None or a >= lo) and (b is None or b >= hi):
                    nxt.add((na, nb))
        if not nxt:
            return False
        states = {p for p in nxt
                  if not any(q != p and q[0] <= p[0] and q[1] <= p[1] for q in nxt)}
    return True


def check_monotone_graphs(s: SupportSet, direction: str = "increasing",
                          graphs: int = 2) -> Verdict:
    """Can the support be split into a lower and an upper monotone graph?

    Columns with two points give one point to each graph; a single point may
    go to either graph.  Monotone means weakly monotone in ``direction``.
    """
    if graphs != 2:
        raise ValueError("only the two-graph structure is supported")
    if direction not in ("increasing", "decreasing"):
        raise ValueError(f"unknown direction {direction!r}")
    cols = sorted(s.columns().items())
    for x, ys in cols:
        if len(ys) > 2:
            return Verdict(False, x, f"column x={x!r} carries {len(ys)} values")
    sign = 1.0 if direction == "increasing" else -1.0
    if _graph_assign(cols, sign):
        return Verdict(True)
    # locate the shortest failing prefix for the report
    for k in range(2, len(cols) + 1):
        if not _graph_assign(cols[:k], sign):
            return Verdict(False, cols[k - 1][0], "no monotone assignment up to this column")
    return Verdict(False, None, "no monotone assignment")


def _witness_points(result) -> list[tuple[float, float]] | None:
    if result is None:
        return None
    if isinstance(result, Verdict):
        if result.ok:
            return None
        return result.extra.get("points")
    return list(result)


def violation_mass(q: Coupling, check: Callable[[SupportSet], object],
                   witness_points: Callable[[SupportSet, object], list] | None = None,
                   threshold: float = SUPPORT_THRESHOLD) -> float:
    """Mass removed by greedily deleting the lightest atom involved in a violation
    until ``check`` passes.  Returned as a fraction of total mass."""
    pts = {(float(x), float(y)): float(m) for x, y, m in q.entries if m > threshold}
    total = sum(pts.values())
    removed = 0.0
    while pts:
        s = SupportSet.of(pts)
        res = check(s)
        failed = (res is not None) if not isinstance(res, Verdict) else (not res.ok)
        if not failed:
            break
        involved = witness_points(s, res) if witness_points else _witness_points(res)
        involved = [p for p in involved if p in pts]
        if not involved:
            raise RuntimeError("check failed without identifiable witness points")
        p = min(involved, key=lambda t: (pts[t], t))
        removed += pts.pop(p)
    return removed / total if total else 0.0


def graph_witness(s: SupportSet, verdict: Verdict) -> list[tuple[float, float]]:
    """Points implicated by a failed two-graph check: the reported column, plus
    its left neighbour when the failure is an ordering conflict."""
    cols = s.columns()
    xs = sorted(cols)
    x = verdict.witness
    if x is None:
        return list(s)
    pts = [(x, y) for y in cols[x]]
    if len(cols[x]) <= 2:
        i = xs.index(x)
        if i > 0:
            pts += [(xs[i - 1], y) for y in cols[xs[i - 1]]]
    return pts


def coupling_to_csv(q: Coupling) -> str:
    return q.to_csv()


def random_instance(rng: np.random.Generator, max_mu: int = 8, max_nu: int = 10,
                    lo: float = -2.0, hi: float = 2.0) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Random pair in convex order.

    nu gets up to ``max_nu`` atoms; a random kernel splits its mass into up
    to ``max_mu`` groups whose barycenters become the atoms of mu, so a
    martingale coupling exists by construction.
    """
    from .measures import make_measure

    k = int(rng.integers(3, max_nu + 1))
    m = int(rng.integers(2, max_mu + 1))
    y = np.sort(rng.uniform(lo, hi, size=k))
    nu_w = rng.dirichlet(np.ones(k))
    P = rng.exponential(size=(m, k)) * (rng.uniform(size=(m, k)) < 0.7)
    P[:, P.sum(axis=0) == 0] = 1.0
    P = P / P.sum(axis=0) * nu_w
    keep = P.sum(axis=1) > 0
    P = P[keep]
    mu_w = P.sum(axis=1)
    x = P @ y / mu_w
    return make_measure(x, mu_w), make_measure(y, nu_w)
