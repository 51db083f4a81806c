"""Fitting barriers so that the stopped walk has a prescribed law.

Every level of the target's support gets a small set of integer
parameters describing which starts it stops:

* right: level n stops the starts n0 <= s(n)            (psi = n - s)
* inner: level n stops n0 <= s(n) or n0 >= u(n)         (psi2 = n - s, psi = n - u)
* outer: level n stops lo(n) <= n0 <= hi(n)             (open band); levels
  above every start only use bands reaching the highest start, levels below
  only bands reaching the lowest

Only the starting atoms matter, so the candidate values are the start
indices themselves plus "none".  When mu and nu are both symmetric about a
common centre, two-sided fits tie every coordinate to its reflection so the
fitted band is symmetric too.  The fit is coordinate descent on the exact
1-Wasserstein distance between the embedded law (escape mass included at
the virtual levels just outside the grid) and the target, sweeping levels
outward from the mean and trying every candidate for one coordinate at a
time.  Sweeps repeat until one changes nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..measures import DiscreteMeasure, barycenter, convex_order_leq
from .dp import ruin_kernel
from .lattice import Barrier, Lattice, on_grid_indices

NONE_LO = -math.inf
NONE_HI = math.inf


class BarrierFitError(RuntimeError):
    def __init__(self, message: str, residual: float, barrier: Barrier | None = None):
        super().__init__(f"{message} (residual {residual:.6g})")
        self.residual = residual
        self.barrier = barrier


class PreconditionError(ValueError):
    pass


@dataclass
class FitReport:
    barrier: Barrier
    residual: float
    sweeps: int
    evaluations: int


class _Problem:
    def __init__(self, mu: DiscreteMeasure, nu: DiscreteMeasure, lattice: Lattice,
                 exclude_time_zero: bool):
        self.lat = lattice
        self.n0 = on_grid_indices(mu, lattice)
        self.w = np.asarray(mu.masses)
        nu_n = on_grid_indices(nu, lattice)
        self.nu_vec = np.zeros(lattice.size + 2)
        self.nu_vec[nu_n - lattice.n_lo + 1] = nu.masses
        self.levels = nu_n
        self.exclude = exclude_time_zero
        self.start_pos = self.n0 - lattice.n_lo
        centre = barycenter(nu) / lattice.delta - lattice.origin / lattice.delta
        self.order = sorted(range(nu_n.size), key=lambda i: (abs(nu_n[i] - centre), nu_n[i]))
        self.evaluations = 0

    def objective(self, mask: np.ndarray) -> float:
        self.evaluations += 1
        K = ruin_kernel(mask, self.start_pos, self.exclude)
        diff = np.cumsum(self.w @ K - self.nu_vec)
        return float(np.sum(np.abs(diff[:-1])) * self.lat.delta)


def _descend_from(prob: _Problem, coords, candidates, column, inits, max_sweeps, links=None):
    """Run the descent from each initial state; keep the best converged one."""
    best = None
    failure = None
    for init in inits:
        state = dict(init)
        try:
            val, sweeps = _descend(prob, coords, candidates, column, state, max_sweeps, links)
        except BarrierFitError as exc:
            failure = exc
            continue
        if best is None or val < best[0] - 1e-15:
            best = (val, sweeps, state)
    if best is None:
        raise failure
    return best


def _descend(prob: _Problem, coords, candidates, column, state, max_sweeps, links=None):
    """Generic coordinate descent.  ``column(coord, value)`` returns the mask
    column for that coordinate's level given the full state.

    ``links`` maps a coordinate to (partner, f): setting the coordinate to v
    sets the partner to f(v).  Only coordinates in ``coords`` are swept.
    """
    links = links or {}
    mask = np.zeros((prob.n0.size, prob.lat.size), dtype=bool)
    all_levels = {c[0] for c in state}
    for lvl in all_levels:
        mask[:, prob.levels[lvl] - prob.lat.n_lo] = column(lvl, state)
    best = prob.objective(mask)

    def assign(c, v):
        state[c] = v
        touched = {c[0]}
        if c in links:
            partner, f = links[c]
            state[partner] = f(v)
            touched.add(partner[0])
        for lvl in touched:
            mask[:, prob.levels[lvl] - prob.lat.n_lo] = column(lvl, state)

    for sweep in range(1, max_sweeps + 1):
        changed = False
        for c in coords:
            current = state[c]
            choice, choice_val = current, best
            for v in candidates(c, state):
                if v == current:
                    continue
                assign(c, v)
                val = prob.objective(mask)
                if val < choice_val - 1e-15:
                    choice, choice_val = v, val
            assign(c, choice)
            if choice != current:
                changed = True
                best = choice_val
        if not changed:
            return best, sweep
    raise BarrierFitError(f"no convergence within {max_sweeps} sweeps", best)


def _symmetry_centre(prob: _Problem, mu: DiscreteMeasure, nu: DiscreteMeasure) -> int | None:
    """Twice the common centre of symmetry of mu and nu, in grid steps, or
    None when there is none."""
    n_mu = prob.n0
    n_nu = prob.levels
    c2 = int(n_mu.min() + n_mu.max())
    if int(n_nu.min() + n_nu.max()) != c2:
        return None
    for n, m in ((n_mu, np.asarray(mu.masses)), (n_nu, np.asarray(nu.masses))):
        order = np.argsort(n)
        rev = np.argsort(c2 - n)
        if not (np.array_equal(n[order], (c2 - n)[rev]) and np.allclose(m[order], m[rev], atol=1e-12)):
            return None
    return c2


def _level_position(prob: _Problem) -> dict:
    return {int(n): i for i, n in enumerate(prob.levels)}


def _extremes(prob: _Problem) -> tuple[int, int]:
    """Positions (in prob.levels) of the lowest and highest target levels."""
    return int(np.argmin(prob.levels)), int(np.argmax(prob.levels))


def _check_inputs(mu, nu, lattice):
    verdict = convex_order_leq(mu, nu)
    if not verdict:
        raise PreconditionError(f"marginals are not in convex order ({verdict.detail}, "
                                f"witness {verdict.witness!r})")
    on_grid_indices(mu, lattice)
    on_grid_indices(nu, lattice)


def fit_right_barrier(mu: DiscreteMeasure, nu: DiscreteMeasure, lattice: Lattice, *,
                      exclude_time_zero: bool = True, max_sweeps: int = 200,
                      tol: float | None = None) -> FitReport:
    """Right barrier (stop when B_t - B_0 >= psi(B_t)) embedding ``nu`` from ``mu``."""
    _check_inputs(mu, nu, lattice)
    prob = _Problem(mu, nu, lattice, exclude_time_zero)
    starts = np.unique(prob.n0)
    coords = [(lvl, "s") for lvl in prob.order]
    empty = {c: NONE_LO for c in coords}
    outer = dict(empty)
    for lvl in _extremes(prob):
        outer[(lvl, "s")] = float(starts.max())

    def column(lvl, st):
        return prob.n0 <= st[(lvl, "s")]

    def candidates(c, st):
        return [NONE_LO] + starts.tolist()

    resid, sweeps, state = _descend_from(prob, coords, candidates, column, [empty, outer],
                                         max_sweeps)
    psi = np.full(lattice.size, math.inf)
    for (lvl, _), s in state.items():
        n = prob.levels[lvl]
        psi[n - lattice.n_lo] = n - s
    barrier = Barrier("right", lattice, psi, exclude_time_zero=exclude_time_zero)
    return _finish(barrier, resid, sweeps, prob, tol)


def fit_two_sided(mu: DiscreteMeasure, nu: DiscreteMeasure, lattice: Lattice, kind: str, *,
                  exclude_time_zero: bool = True, max_sweeps: int = 200,
                  tol: float | None = None) -> FitReport:
    """Inner band (stop when d leaves (psi, psi2)) or outer band (stop when
    d enters (psi, psi2)), d = B_t - B_0."""
    if kind not in ("inner", "outer"):
        raise ValueError(f"kind must be 'inner' or 'outer', got {kind!r}")
    _check_inputs(mu, nu, lattice)
    if kind == "outer":
        overlap = np.intersect1d(on_grid_indices(mu, lattice), on_grid_indices(nu, lattice))
        if overlap.size:
            raise PreconditionError("outer barrier needs disjoint supports of mu and nu")
    prob = _Problem(mu, nu, lattice, exclude_time_zero)
    starts = np.unique(prob.n0).tolist()
    c2 = _symmetry_centre(prob, mu, nu)
    links = None

    if kind == "inner":
        coords = [(lvl, slot) for lvl in prob.order for slot in ("s", "u")]
        empty = {c: (NONE_LO if c[1] == "s" else NONE_HI) for c in coords}
        outer = dict(empty)
        lo_lvl, hi_lvl = _extremes(prob)
        outer[(lo_lvl, "u")] = float(min(starts))
        outer[(hi_lvl, "s")] = float(max(starts))

        def column(lvl, st):
            return (prob.n0 <= st[(lvl, "s")]) | (prob.n0 >= st[(lvl, "u")])

        def candidates(c, st):
            n = prob.levels[c[0]]
            # strict psi < 0 < psi2: a level never stops a walk started on it
            if c[1] == "s":
                return [NONE_LO] + [v for v in starts if v < n]
            return [NONE_HI] + [v for v in starts if v > n]

        if c2 is not None:
            # reflection n -> c2 - n turns "stop starts <= s" at n into
            # "stop starts >= c2 - s" at c2 - n
            pos = _level_position(prob)
            links = {}
            for lvl in prob.order:
                partner = (pos[c2 - int(prob.levels[lvl])], "u")
                links[(lvl, "s")] = (partner, lambda v: c2 - v)
            coords = [(lvl, "s") for lvl in prob.order]
    else:
        coords = [(lvl, "band") for lvl in prob.order]
        empty = {c: None for c in coords}
        bands = [None] + [(a, b) for i, a in enumerate(starts) for b in starts[i:]]
        outer = dict(empty)
        for lvl in _extremes(prob):
            outer[(lvl, "band")] = (min(starts), max(starts))

        def column(lvl, st):
            band = st[(lvl, "band")]
            if band is None:
                return np.zeros(prob.n0.size, dtype=bool)
            return (prob.n0 >= band[0]) & (prob.n0 <= band[1])

        lo_start, hi_start = min(starts), max(starts)

        def candidates(c, st):
            n = prob.levels[c[0]]
            # beyond all starts a band only needs to reach the far end of the
            # starts; one-sided bands give the two decreasing graphs
            if n > hi_start:
                out = [None] + [(a, hi_start) for a in starts]
            elif n < lo_start:
                out = [None] + [(lo_start, b) for b in starts]
            else:
                out = bands
            if c2 is not None and 2 * n == c2:
                out = [b for b in out if b is None or b[0] + b[1] == c2]
            return out

        if c2 is not None:
            pos = _level_position(prob)
            links = {}
            reps = []
            for lvl in prob.order:
                n = int(prob.levels[lvl])
                if 2 * n == c2:
                    reps.append((lvl, "band"))
                elif 2 * n < c2:
                    continue
                else:
                    reps.append((lvl, "band"))
                    links[(lvl, "band")] = ((pos[c2 - n], "band"),
                                            lambda b: None if b is None else (c2 - b[1], c2 - b[0]))
            coords = reps

    resid, sweeps, state = _descend_from(prob, coords, candidates, column, [empty, outer],
                                         max_sweeps, links)
    if kind == "inner":
        psi = np.full(lattice.size, -math.inf)
        psi2 = np.full(lattice.size, math.inf)
        for (lvl, slot), v in state.items():
            n = prob.levels[lvl]
            if slot == "s":
                psi2[n - lattice.n_lo] = n - v
            else:
                psi[n - lattice.n_lo] = n - v
        barrier = Barrier("inner", lattice, psi, psi2, exclude_time_zero=exclude_time_zero)
    else:
        psi = np.full(lattice.size, math.inf)
        psi2 = np.full(lattice.size, -math.inf)
        for (lvl, _), band in state.items():
            if band is None:
                continue
            n = prob.levels[lvl]
            psi[n - lattice.n_lo] = n - band[1] - 1
            psi2[n - lattice.n_lo] = n - band[0] + 1
        barrier = Barrier("outer", lattice, psi, psi2, exclude_time_zero=exclude_time_zero,
                          openness="open")
    return _finish(barrier, resid, sweeps, prob, tol)


def _finish(barrier: Barrier, resid: float, sweeps: int, prob: _Problem, tol):
    limit = 2 * prob.lat.delta if tol is None else tol
    if resid > limit:
        raise BarrierFitError("fitted barrier misses the target law", resid, barrier)
    return FitReport(barrier, resid, sweeps, prob.evaluations)
