"""Lattice grids and phase-space barriers for the symmetric random walk.

A lattice is the arithmetic grid y_n = origin + n * delta.  Walks move one
grid step per time step of length delta**2.  Barriers are stored with
thresholds in units of delta so that every region test is an exact
comparison of integers with (possibly infinite) floats:

* phase ``d_minus``: d = n - n0, the displacement from the start;
* phase ``d_plus``:  d = n + n0, i.e. (B_t + B_0 - 2 origin) / delta.

Closed regions use non-strict comparisons and open regions strict ones, so
the two differ only where a threshold falls exactly on a grid line.
Thresholds computed in floating point should be rounded (to about 1e-9
steps) before they reach a barrier so that such ties are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..measures import DiscreteMeasure, make_measure

KINDS = ("right", "left", "inner", "outer")
PHASES = ("d_minus", "d_plus")
OPENNESS = ("closed", "open")

# threshold used on levels that carry no barrier
_DEFAULT_PSI = {"right": math.inf, "left": -math.inf, "inner": -math.inf, "outer": math.inf}
_DEFAULT_PSI2 = {"inner": math.inf, "outer": -math.inf}


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class Lattice:
    delta: float
    n_lo: int
    n_hi: int
    origin: float = 0.0
    horizon: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not self.delta > 0:
            raise LatticeError("delta must be positive")
        if self.n_hi < self.n_lo:
            raise LatticeError("empty grid")

    @property
    def size(self) -> int:
        return self.n_hi - self.n_lo + 1

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1)

    @property
    def y_grid(self) -> np.ndarray:
        return self.origin + self.levels * self.delta

    def index(self, y) -> np.ndarray:
        """Nearest grid index.  Ties go to the even index once float noise
        below 1e-9 steps is removed, so exact half-steps snap symmetrically."""
        steps = np.round((np.asarray(y, dtype=float) - self.origin) / self.delta, 9)
        return np.rint(steps).astype(np.int64)

    def value(self, n) -> np.ndarray:
        return self.origin + np.asarray(n, dtype=float) * self.delta


def make_lattice(delta: float, *measures: DiscreteMeasure, margin: int = 10,
                 origin: float = 0.0, horizon: int | None = None, seed: int = 0) -> Lattice:
    """Grid covering the supports of ``measures`` plus ``margin`` steps each side."""
    pts = np.concatenate([m.positions for m in measures]) if measures else np.zeros(1)
    lo = int(np.floor((pts.min() - origin) / delta + 0.5)) - margin
    hi = int(np.ceil((pts.max() - origin) / delta - 0.5)) + margin
    if horizon is None:
        half = (hi - lo) / 2.0
        horizon = int(max(1000, 40 * half * half))
    return Lattice(delta, lo, hi, origin, horizon, seed)


def snap(m: DiscreteMeasure, lattice: Lattice) -> tuple[DiscreteMeasure, float]:
    """Move atoms to the nearest grid point; returns the measure and the
    largest distance moved."""
    n = lattice.index(m.positions)
    if n.size and (n.min() < lattice.n_lo or n.max() > lattice.n_hi):
        raise LatticeError("measure extends beyond the lattice")
    y = lattice.value(n)
    return make_measure(y, m.masses), float(np.max(np.abs(y - m.positions))) if n.size else 0.0


def on_grid_indices(m: DiscreteMeasure, lattice: Lattice, tol: float = 1e-9) -> np.ndarray:
    n = lattice.index(m.positions)
    if np.any(np.abs(lattice.value(n) - m.positions) > tol * max(1.0, lattice.delta)):
        raise LatticeError("measure is not supported on the lattice; snap it first")
    if n.size and (n.min() < lattice.n_lo or n.max() > lattice.n_hi):
        raise LatticeError("measure extends beyond the lattice")
    return n


@dataclass(frozen=True, eq=False)
class Barrier:
    """Stopping region in phase space, one threshold (or two) per grid level.

    ``psi`` and ``psi2`` hold thresholds in units of delta for the levels
    ``lattice.levels``.  Kinds, in the closed reading:

    * right: stop when d >= psi
    * left:  stop when d <= psi
    * inner: stop when d is outside (psi, psi2), i.e. d <= psi or d >= psi2
    * outer: stop when d lies in [psi, psi2]; the open reading uses (psi, psi2)
    """

    kind: str
    lattice: Lattice
    psi: np.ndarray
    psi2: np.ndarray | None = None
    phase: str = "d_minus"
    exclude_time_zero: bool = True
    openness: str = "closed"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise LatticeError(f"unknown barrier kind {self.kind!r}")
        if self.phase not in PHASES:
            raise LatticeError(f"unknown phase {self.phase!r}")
        if self.openness not in OPENNESS:
            raise LatticeError(f"openness must be 'closed' or 'open', got {self.openness!r}")
        psi = np.asarray(self.psi, dtype=float)
        if psi.shape != (self.lattice.size,):
            raise LatticeError("psi must have one entry per lattice level")
        object.__setattr__(self, "psi", psi)
        psi.setflags(write=False)
        two_sided = self.kind in ("inner", "outer")
        if two_sided:
            psi2 = np.asarray(self.psi2, dtype=float) if self.psi2 is not None else \
                np.full(self.lattice.size, _DEFAULT_PSI2[self.kind])
            if psi2.shape != psi.shape:
                raise LatticeError("psi2 must have one entry per lattice level")
            object.__setattr__(self, "psi2", psi2)
            psi2.setflags(write=False)
            if self.kind == "inner" and (np.any(psi > 0) or np.any(psi2 < 0)):
                raise LatticeError("inner barrier needs psi <= 0 <= psi2 on every level")
        elif self.psi2 is not None:
            raise LatticeError(f"{self.kind} barrier takes a single threshold map")

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_levels(cls, kind: str, lattice: Lattice, psi: dict, psi2: dict | None = None,
                    **kw) -> "Barrier":
        """Thresholds given in real units, keyed by grid value; other levels get
        the kind's 'never stop' default."""
        def fill(d, default):
            arr = np.full(lattice.size, default)
            for y, v in (d or {}).items():
                n = int(lattice.index(y))
                if not lattice.n_lo <= n <= lattice.n_hi:
                    raise LatticeError(f"level {y!r} outside the lattice")
                arr[n - lattice.n_lo] = _to_steps(v, lattice, kw.get("phase", "d_minus"))
            return arr
        p1 = fill(psi, _DEFAULT_PSI[kind])
        p2 = fill(psi2, _DEFAULT_PSI2[kind]) if kind in ("inner", "outer") else None
        return cls(kind, lattice, p1, p2, **kw)

    def with_openness(self, openness: str) -> "Barrier":
        return replace(self, openness=openness)

    def with_exclude_time_zero(self, flag: bool) -> "Barrier":
        return replace(self, exclude_time_zero=flag)

    # -- real-unit views -----------------------------------------------------

    def threshold(self, which: int = 1) -> np.ndarray:
        """Thresholds in real units of the phase coordinate."""
        arr = self.psi if which == 1 else self.psi2
        return _from_steps(arr, self.lattice, self.phase)

    def validate(self) -> "Barrier":
        """Require a finite threshold somewhere (fitted and loaded barriers)."""
        finite = np.isfinite(self.psi).any() or (self.psi2 is not None and np.isfinite(self.psi2).any())
        if not finite:
            raise LatticeError("barrier has no finite threshold")
        return self

    def __eq__(self, other) -> bool:
        if not isinstance(other, Barrier):
            return NotImplemented
        same2 = (self.psi2 is None and other.psi2 is None) or (
            self.psi2 is not None and other.psi2 is not None and np.array_equal(self.psi2, other.psi2))
        return (self.kind == other.kind and self.phase == other.phase
                and self.lattice == other.lattice and np.array_equal(self.psi, other.psi) and same2
                and self.exclude_time_zero == other.exclude_time_zero
                and self.openness == other.openness)

    def to_json(self) -> dict:
        ys = self.lattice.y_grid

        def pairs(arr, default):
            vals = _from_steps(arr, self.lattice, self.phase)
            return [[float(y), _json_float(v)] for y, v, s in zip(ys, vals, arr) if s != default]

        out = {"kind": self.kind, "phase": self.phase,
               "psi": pairs(self.psi, _DEFAULT_PSI[self.kind]),
               "exclude_time_zero": self.exclude_time_zero, "openness": self.openness,
               "lattice": {"delta": self.lattice.delta, "n_lo": self.lattice.n_lo,
                           "n_hi": self.lattice.n_hi, "origin": self.lattice.origin}}
        if self.psi2 is not None:
            out["psi2"] = pairs(self.psi2, _DEFAULT_PSI2[self.kind])
        return out

    @classmethod
    def from_json(cls, obj: dict, lattice: Lattice | None = None) -> "Barrier":
        if lattice is None:
            lat = obj["lattice"]
            lattice = Lattice(lat["delta"], lat["n_lo"], lat["n_hi"], lat.get("origin", 0.0))
        psi = {y: _parse_float(v) for y, v in obj.get("psi", [])}
        psi2 = {y: _parse_float(v) for y, v in obj.get("psi2", [])} if "psi2" in obj else None
        return cls.from_levels(obj["kind"], lattice, psi, psi2, phase=obj.get("phase", "d_minus"),
                               exclude_time_zero=obj.get("exclude_time_zero", True),
                               openness=obj.get("openness", "closed")).validate()


def _json_float(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(v)


def _parse_float(v) -> float:
    return float(v) if not isinstance(v, str) else float(v.replace("Infinity", "inf"))


def _to_steps(v: float, lattice: Lattice, phase: str) -> float:
    shift = 2 * lattice.origin if phase == "d_plus" else 0.0
    return (float(v) - shift) / lattice.delta


def _from_steps(arr: np.ndarray, lattice: Lattice, phase: str) -> np.ndarray:
    shift = 2 * lattice.origin if phase == "d_plus" else 0.0
    return shift + np.asarray(arr) * lattice.delta


def stop_mask(barrier: Barrier, starts, openness: str | None = None) -> np.ndarray:
    """Boolean matrix [start, level]: does the walk started at grid index
    ``starts[i]`` stop when it stands on level ``lattice.levels[j]``?

    Whether a level stops a walk depends only on the start, never on the
    time or the path, which is what makes the absorption problem exact.
    Time zero is handled by the caller.
    """
    op = openness or barrier.openness
    n0 = np.asarray(starts, dtype=np.int64)[:, None]
    n = barrier.lattice.levels[None, :]
    d = (n - n0) if barrier.phase == "d_minus" else (n + n0)
    p1 = barrier.psi[None, :]
    closed = op == "closed"
    if barrier.kind == "right":
        return d >= p1 if closed else d > p1
    if barrier.kind == "left":
        return d <= p1 if closed else d < p1
    p2 = barrier.psi2[None, :]
    if barrier.kind == "inner":
        if closed:
            return (d <= p1) | (d >= p2)
        return (d < p1) | (d > p2)
    if closed:
        return (d >= p1) & (d <= p2)
    return (d > p1) & (d < p2)


# ---------------------------------------------------------------------------
# barrier transformations


_FLIP = {"right": "left", "left": "right", "inner": "inner", "outer": "outer"}


def mirror_barrier(barrier: Barrier) -> Barrier:
    """Image under x -> -x of the starting point.

    A right barrier in the d_minus phase becomes the left barrier with
    psi'(y) = 2y - psi(y); two-sided bands map to (2y - psi2, 2y - psi1).
    """
    if barrier.phase != "d_minus":
        raise LatticeError("mirror_barrier expects a d_minus barrier")
    lat = barrier.lattice
    two_y = 2.0 * lat.origin / lat.delta + 2.0 * lat.levels
    if barrier.kind in ("right", "left"):
        return replace(barrier, kind=_FLIP[barrier.kind], psi=two_y - barrier.psi)
    return replace(barrier, psi=two_y - barrier.psi2, psi2=two_y - barrier.psi)


def to_phase(barrier: Barrier, phase: str) -> Barrier:
    """Same stopping rule written in the other phase coordinate.

    With steps relative to the lattice origin, d_plus = 2n - d_minus, so the
    inequality flips: a left d_minus barrier is a right d_plus barrier.
    """
    if phase == barrier.phase:
        return barrier
    two_n = 2.0 * barrier.lattice.levels
    if barrier.kind in ("right", "left"):
        return replace(barrier, kind=_FLIP[barrier.kind], phase=phase, psi=two_n - barrier.psi)
    return replace(barrier, phase=phase, psi=two_n - barrier.psi2, psi2=two_n - barrier.psi)


def affine_barrier(barrier: Barrier, a: float, b: float) -> Barrier:
    """Image under y -> a y + b (a > 0): the grid is rescaled, step-valued
    thresholds are unchanged."""
    if not a > 0:
        raise LatticeError("affine barrier transform needs a > 0")
    lat = barrier.lattice
    new = replace(lat, delta=a * lat.delta, origin=a * lat.origin + b)
    return replace(barrier, lattice=new)


def transform_barrier(spec, barrier: Barrier) -> Barrier:
    """Apply a Mirror(flip_x) or Affine(a > 0, b) transform spec."""
    if spec.variant == "mirror":
        if not spec.params.get("flip_x", True) or spec.params.get("flip_y", False):
            raise LatticeError("only the x-mirror acts on barriers")
        return mirror_barrier(barrier)
    if spec.variant == "affine":
        return affine_barrier(barrier, spec.params["a"], spec.params["b"])
    raise LatticeError(f"unsupported transform variant {spec.variant!r} for barriers")
