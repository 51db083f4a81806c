"""Finitely supported measures on the line and on the plane.

Everything here is exact up to binary64 rounding: potentials are evaluated
in closed form, the convex order is decided on the union of atom positions
(where all kinks of the piecewise-linear potentials sit) and the 1-Wasserstein
distance integrates the CDF gap over the merged grid.

Measures have finite support, hence all moments; nothing in this package
handles measures without a first moment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._common import POSITION_TOL, SUPPORT_THRESHOLD, Verdict


class MeasureError(ValueError):
    """Invalid measure or coupling data."""


def _cluster(values: np.ndarray, tol: float = POSITION_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Group sorted-able values that lie within ``tol`` of their predecessor.

    Returns (representatives, label per input value).  Representatives are
    the smallest member of each group, in increasing order.
    """
    if values.size == 0:
        return values.copy(), np.zeros(0, dtype=np.int64)
    order = np.argsort(values, kind="stable")
    sv = values[order]
    new_group = np.empty(sv.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(sv) > tol
    group_of_sorted = np.cumsum(new_group) - 1
    labels = np.empty(values.size, dtype=np.int64)
    labels[order] = group_of_sorted
    reps = sv[new_group]
    return reps, labels


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Atoms on the real line with strictly increasing positions."""

    positions: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        self.positions.setflags(write=False)
        self.masses.setflags(write=False)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return [(float(p), float(m)) for p, m in zip(self.positions, self.masses)]

    def __len__(self) -> int:
        return int(self.positions.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (np.array_equal(self.positions, other.positions)
                and np.array_equal(self.masses, other.masses))

    def __repr__(self) -> str:
        body = ", ".join(f"{p:.6g}:{m:.6g}" for p, m in self.atoms[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"DiscreteMeasure({body}{more})"

    def to_json(self) -> dict:
        return {"atoms": [[float(p), float(m)] for p, m in zip(self.positions, self.masses)]}

    @classmethod
    def from_json(cls, obj: dict) -> "DiscreteMeasure":
        atoms = obj["atoms"]
        if not atoms:
            return empty_measure()
        pts, wts = zip(*atoms)
        return make_measure(pts, wts)

    def shifted(self, offset: float) -> "DiscreteMeasure":
        return make_measure(self.positions + offset, self.masses)

    def normalized(self) -> "DiscreteMeasure":
        return make_measure(self.positions, self.masses / self.total_mass)


def empty_measure() -> DiscreteMeasure:
    return DiscreteMeasure(np.zeros(0), np.zeros(0))


def make_measure(points: Sequence[float], weights: Sequence[float]) -> DiscreteMeasure:
    """Build a canonical measure: sorted, duplicates merged, zero masses dropped."""
    pts = np.asarray(points, dtype=float).ravel()
    wts = np.asarray(weights, dtype=float).ravel()
    if pts.shape != wts.shape:
        raise MeasureError(f"length mismatch: {pts.size} points, {wts.size} weights")
    if np.any(~np.isfinite(pts)) or np.any(~np.isfinite(wts)):
        raise MeasureError("non-finite position or weight")
    if np.any(wts < 0):
        raise MeasureError(f"negative weight at index {int(np.argmax(wts < 0))}")
    if not np.any(wts > 0):
        raise MeasureError("all weights are zero")
    keep = wts > 0
    pts, wts = pts[keep], wts[keep]
    reps, labels = _cluster(pts)
    masses = np.bincount(labels, weights=wts, minlength=reps.size)
    return DiscreteMeasure(reps.astype(float), masses.astype(float))


def dirac(x: float, mass: float = 1.0) -> DiscreteMeasure:
    return make_measure([x], [mass])


def barycenter(m: DiscreteMeasure) -> float:
    total = m.total_mass
    if total <= 0:
        raise MeasureError("barycenter of a measure with zero total mass")
    return float(np.dot(m.positions, m.masses) / total)


def potential(m: DiscreteMeasure, x) -> float | np.ndarray:
    """U_m(x) = sum of mass * |x - position|, evaluated exactly."""
    xs = np.asarray(x, dtype=float)
    vals = np.abs(xs[..., None] - m.positions) @ m.masses
    return float(vals) if vals.ndim == 0 else vals


def _is_probability(m: DiscreteMeasure, tol: float) -> bool:
    return abs(m.total_mass - 1.0) <= max(tol, 1e-12)


def convex_order_leq(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float = 1e-9) -> Verdict:
    """Decide mu <=_c nu for probability measures.

    On failure the witness is the first point (in increasing order) where the
    potential of ``mu`` exceeds that of ``nu``; a mean mismatch is reported
    with ``witness=None`` and ``detail='mean mismatch'``.
    """
    if not (_is_probability(mu, tol) and _is_probability(nu, tol)):
        raise MeasureError("convex order is only decided for probability measures")
    m_mu, m_nu = barycenter(mu), barycenter(nu)
    if abs(m_mu - m_nu) > tol:
        return Verdict(False, None, "mean mismatch", {"mean_mu": m_mu, "mean_nu": m_nu})
    grid = np.union1d(mu.positions, nu.positions)
    gap = potential(mu, grid) - potential(nu, grid)
    bad = np.nonzero(gap > tol)[0]
    if bad.size:
        x = float(grid[bad[0]])
        return Verdict(False, x, "potential domination fails",
                       {"U_mu": float(potential(mu, x)), "U_nu": float(potential(nu, x))})
    return Verdict(True)


def wasserstein1(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Integral of |F_mu - F_nu| over the line."""
    if abs(mu.total_mass - nu.total_mass) > 1e-9:
        raise MeasureError(
            f"mass mismatch: {mu.total_mass!r} vs {nu.total_mass!r}")
    grid = np.union1d(mu.positions, nu.positions)
    if grid.size < 2:
        return 0.0
    F_mu = np.cumsum(np.bincount(np.searchsorted(grid, mu.positions), mu.masses, grid.size))
    F_nu = np.cumsum(np.bincount(np.searchsorted(grid, nu.positions), nu.masses, grid.size))
    return float(np.sum(np.abs(F_mu - F_nu)[:-1] * np.diff(grid)))


@dataclass(frozen=True)
class SupportSet:
    """Finite set of plane points, stored sorted."""

    points: tuple[tuple[float, float], ...]

    @classmethod
    def of(cls, pts: Iterable[tuple[float, float]]) -> "SupportSet":
        uniq = sorted({(float(x), float(y)) for x, y in pts})
        return cls(tuple(uniq))

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, p) -> bool:
        return (float(p[0]), float(p[1])) in set(self.points)

    def xs(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    def ys(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    def columns(self) -> dict[float, list[float]]:
        cols: dict[float, list[float]] = {}
        for x, y in self.points:
            cols.setdefault(x, []).append(y)
        return cols


@dataclass(frozen=True, eq=False)
class Coupling:
    """Finitely supported measure on the plane, sorted by (x, y)."""

    xs: np.ndarray
    ys: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        for a in (self.xs, self.ys, self.masses):
            a.setflags(write=False)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def entries(self) -> list[tuple[float, float, float]]:
        return [(float(x), float(y), float(m)) for x, y, m in zip(self.xs, self.ys, self.masses)]

    def __len__(self) -> int:
        return int(self.masses.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Coupling):
            return NotImplemented
        return (np.array_equal(self.xs, other.xs) and np.array_equal(self.ys, other.ys)
                and np.array_equal(self.masses, other.masses))

    def __repr__(self) -> str:
        body = ", ".join(f"({x:.4g},{y:.4g}):{m:.4g}" for x, y, m in self.entries[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"Coupling({body}{more})"

    def support(self, threshold: float = SUPPORT_THRESHOLD) -> SupportSet:
        keep = self.masses > threshold
        return SupportSet.of(zip(self.xs[keep], self.ys[keep]))

    def integrate(self, f) -> float:
        """Integral of a vectorised function f(x, y)."""
        if len(self) == 0:
            return 0.0
        return float(np.dot(np.asarray(f(self.xs, self.ys), dtype=float), self.masses))

    def scaled(self, factor: float) -> "Coupling":
        return make_coupling(self.xs, self.ys, self.masses * factor)

    def to_json(self) -> dict:
        return {"entries": [list(e) for e in self.entries]}

    @classmethod
    def from_json(cls, obj: dict) -> "Coupling":
        ents = obj["entries"]
        if not ents:
            return empty_coupling()
        xs, ys, ms = zip(*ents)
        return make_coupling(xs, ys, ms)

    def to_csv(self) -> str:
        lines = ["x,y,mass"]
        lines += [f"{x!r},{y!r},{m!r}" for x, y, m in self.entries]
        return "\n".join(lines) + "\n"


def empty_coupling() -> Coupling:
    z = np.zeros(0)
    return Coupling(z, z.copy(), z.copy())


def make_coupling(xs: Sequence[float], ys: Sequence[float], masses: Sequence[float],
                  *, allow_empty: bool = True) -> Coupling:
    """Canonical coupling: duplicate (x, y) merged, zero masses dropped."""
    x = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(ys, dtype=float).ravel()
    m = np.asarray(masses, dtype=float).ravel()
    if not (x.shape == y.shape == m.shape):
        raise MeasureError("coupling arrays differ in length")
    if np.any(~np.isfinite(x)) or np.any(~np.isfinite(y)) or np.any(~np.isfinite(m)):
        raise MeasureError("non-finite coupling entry")
    if np.any(m < 0):
        raise MeasureError(f"negative mass at entry {int(np.argmax(m < 0))}")
    keep = m > 0
    x, y, m = x[keep], y[keep], m[keep]
    if x.size == 0:
        if not allow_empty:
            raise MeasureError("empty coupling")
        return empty_coupling()
    xr, xl = _cluster(x)
    yr, yl = _cluster(y)
    key = xl * yr.size + yl
    ukey, inv = np.unique(key, return_inverse=True)
    mass = np.bincount(inv, weights=m, minlength=ukey.size)
    return Coupling(xr[ukey // yr.size].astype(float), yr[ukey % yr.size].astype(float),
                    mass.astype(float))


def product_coupling(mu: DiscreteMeasure, nu: DiscreteMeasure) -> Coupling:
    X, Y = np.meshgrid(mu.positions, nu.positions, indexing="ij")
    M = np.outer(mu.masses, nu.masses)
    return make_coupling(X.ravel(), Y.ravel(), M.ravel())


def marginals(q: Coupling) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    if len(q) == 0:
        return empty_measure(), empty_measure()
    return make_measure(q.xs, q.masses), make_measure(q.ys, q.masses)


def conditional_means(q: Coupling) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per x-atom: (x values, slice masses, conditional mean of y)."""
    xr, labels = _cluster(q.xs)
    mass = np.bincount(labels, weights=q.masses, minlength=xr.size)
    first = np.bincount(labels, weights=q.masses * q.ys, minlength=xr.size)
    return xr, mass, first / mass


def is_martingale(q: Coupling, tol: float = 1e-9) -> Verdict:
    """|E[Y | X = x] - x| <= tol (1 + |x|) for every x-atom."""
    if len(q) == 0:
        return Verdict(True)
    xr, _, cm = conditional_means(q)
    bad = np.nonzero(np.abs(cm - xr) > tol * (1.0 + np.abs(xr)))[0]
    if bad.size:
        i = bad[0]
        return Verdict(False, float(xr[i]), "conditional mean differs",
                       {"conditional_mean": float(cm[i])})
    return Verdict(True)


def slice_at(q: Coupling, x: float, tol: float = POSITION_TOL) -> DiscreteMeasure:
    """Sub-probability law of y on the x-slice (not normalised)."""
    sel = np.abs(q.xs - x) <= tol
    if not np.any(sel):
        return empty_measure()
    return make_measure(q.ys[sel], q.masses[sel])
