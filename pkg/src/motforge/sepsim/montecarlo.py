"""Monte Carlo paths of the symmetric lattice walk.

Each path owns a deterministic substream seeded by ``(seed, path index)``
and draws its increments in fixed blocks, so a path is the same sequence of
steps no matter how many steps a caller asks for or how many other paths
are simulated alongside it.  Leaving the grid does not stop a walk; only
the horizon truncates it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..measures import Coupling, DiscreteMeasure, make_coupling, make_measure
from .lattice import Barrier, Lattice, on_grid_indices, stop_mask

BLOCK = 1024


@dataclass(frozen=True)
class WalkPath:
    lattice: Lattice
    start: int
    seed: int
    index: int

    def generator(self) -> np.random.Generator:
        return np.random.default_rng([self.seed, self.index])

    def increments(self, n_steps: int) -> np.ndarray:
        rng = self.generator()
        blocks = [_block(rng) for _ in range(math.ceil(n_steps / BLOCK))]
        return np.concatenate(blocks)[:n_steps] if blocks else np.zeros(0, dtype=np.int64)

    def positions(self, n_steps: int) -> np.ndarray:
        """Grid indices at times 0..n_steps."""
        return self.start + np.concatenate([[0], np.cumsum(self.increments(n_steps))])


def _block(rng: np.random.Generator) -> np.ndarray:
    return 2 * rng.integers(0, 2, size=BLOCK, dtype=np.int64) - 1


@dataclass(frozen=True)
class PathEnsemble:
    lattice: Lattice
    starts: np.ndarray
    seed: int
    spread_warning: bool = False

    def __len__(self) -> int:
        return int(self.starts.size)

    def path(self, i: int) -> WalkPath:
        return WalkPath(self.lattice, int(self.starts[i]), self.seed, i)

    def terminal(self, n_steps: int) -> np.ndarray:
        """Grid values of every path after ``n_steps`` steps."""
        ends = np.array([self.path(i).positions(n_steps)[-1] for i in range(len(self))])
        return self.lattice.value(ends)


def stratified_counts(masses: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """floor(n * m) paths per atom; the remaining paths go to distinct atoms
    drawn with probability proportional to the fractional parts."""
    raw = n * np.asarray(masses, dtype=float)
    counts = np.floor(raw).astype(np.int64)
    rest = n - int(counts.sum())
    if rest > 0:
        frac = raw - counts
        frac = frac / frac.sum()
        extra = rng.choice(frac.size, size=rest, replace=False, p=frac)
        counts[extra] += 1
    return counts


def simulate_walk(mu: DiscreteMeasure, lattice: Lattice, n_paths: int,
                  seed: int | None = None) -> PathEnsemble:
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    seed = lattice.seed if seed is None else seed
    n0 = on_grid_indices(mu, lattice)
    # the stratification draw uses a stream apart from every path's substream
    counts = stratified_counts(mu.masses, n_paths, np.random.default_rng([seed, 2**32 - 1, 0]))
    starts = np.repeat(n0, counts)
    half = lattice.size / 2.0
    warn = lattice.horizon * lattice.delta ** 2 < (half * lattice.delta) ** 2
    return PathEnsemble(lattice, starts, seed, bool(warn))


@dataclass
class StopResult:
    x0: np.ndarray
    y_final: np.ndarray
    steps: np.ndarray
    stopped: np.ndarray

    @property
    def pairs(self):
        return list(zip(self.x0.tolist(), self.y_final.tolist(), self.steps.tolist(),
                        self.stopped.tolist()))

    @property
    def truncation_fraction(self) -> float:
        return float(1.0 - self.stopped.mean()) if self.stopped.size else 0.0

    def law(self) -> DiscreteMeasure:
        """Empirical law of the stopped positions (truncated paths dropped)."""
        y = self.y_final[self.stopped]
        vals, counts = np.unique(y, return_counts=True)
        return make_measure(vals, counts / max(1, self.x0.size))

    def coupling(self) -> Coupling:
        s = self.stopped
        return make_coupling(self.x0[s], self.y_final[s], np.full(int(s.sum()), 1.0 / self.x0.size))


def _first_hits(paths: list[WalkPath], lattice: Lattice, masks: list[np.ndarray],
                rows: np.ndarray, exclude_time_zero: bool, horizon: int):
    """First stopping step of every path for each mask in ``masks``.

    ``masks[v][rows[i], j]`` says whether path i stops on grid column j
    under variant v.  Returns (steps, final index, stopped) per variant.
    """
    n = len(paths)
    V = len(masks)
    L = lattice.size
    start = np.array([p.start for p in paths], dtype=np.int64)
    steps = np.full((V, n), horizon, dtype=np.int64)
    final = np.zeros((V, n), dtype=np.int64)
    done = np.zeros((V, n), dtype=bool)
    if not exclude_time_zero:
        col = start - lattice.n_lo
        inside = (col >= 0) & (col < L)
        for v, m in enumerate(masks):
            hit = inside & m[rows, np.clip(col, 0, L - 1)]
            steps[v, hit] = 0
            final[v, hit] = start[hit]
            done[v, hit] = True
    gens = [p.generator() for p in paths]
    cur = start.copy()
    t = 0
    active = np.flatnonzero(~done.all(axis=0))
    while active.size and t < horizon:
        width = min(BLOCK, horizon - t)
        inc = np.stack([_block(gens[i]) for i in active])[:, :width]
        pos = cur[active, None] + np.cumsum(inc, axis=1)
        col = pos - lattice.n_lo
        inside = (col >= 0) & (col < L)
        colc = np.clip(col, 0, L - 1)
        for v, m in enumerate(masks):
            todo = ~done[v, active]
            if not np.any(todo):
                continue
            hit = inside & m[rows[active][:, None], colc]
            hit &= todo[:, None]
            any_hit = hit.any(axis=1)
            first = hit.argmax(axis=1)
            idx = active[any_hit]
            steps[v, idx] = t + first[any_hit] + 1
            final[v, idx] = pos[any_hit, first[any_hit]]
            done[v, idx] = True
        cur[active] = pos[:, -1]
        t += width
        # a path whose variants have all stopped needs no more steps; the
        # per-path generators keep the remaining paths' streams unchanged
        active = active[~done[:, active].all(axis=0)]
    for v in range(V):
        final[v, ~done[v]] = cur[~done[v]]
    return steps, final, done


def _run(paths: list[WalkPath], barrier: Barrier, openness_list, horizon: int | None = None):
    lat = barrier.lattice
    for p in paths:
        if p.lattice != lat:
            raise ValueError("path and barrier live on different lattices")
    starts = np.array([p.start for p in paths], dtype=np.int64)
    uniq, rows = np.unique(starts, return_inverse=True)
    masks = [stop_mask(barrier, uniq, op) for op in openness_list]
    h = lat.horizon if horizon is None else horizon
    return _first_hits(paths, lat, masks, rows, barrier.exclude_time_zero, h)


def hit_time(path: WalkPath, barrier: Barrier, openness: str | None = None) -> tuple[int, float, bool]:
    steps, final, done = _run([path], barrier, [openness or barrier.openness])
    return int(steps[0, 0]), float(barrier.lattice.value(final[0, 0])), bool(done[0, 0])


def _result(paths, lattice, steps, final, done) -> StopResult:
    x0 = lattice.value(np.array([p.start for p in paths]))
    return StopResult(x0, lattice.value(final), steps, done)


def stop_ensemble(ens: PathEnsemble, barrier: Barrier, openness: str | None = None) -> StopResult:
    paths = [ens.path(i) for i in range(len(ens))]
    steps, final, done = _run(paths, barrier, [openness or barrier.openness])
    return _result(paths, ens.lattice, steps[0], final[0], done[0])


@dataclass
class OpenClosedComparison:
    fraction: float
    stderr: float
    n_paths: int
    delta: float
    truncated_open: float
    truncated_closed: float
    open: StopResult = field(repr=False)
    closed: StopResult = field(repr=False)


def compare_open_closed(barrier: Barrier, mu: DiscreteMeasure, lattice: Lattice | None = None,
                        n_paths: int = 10_000, epsilon: float | None = None,
                        seed: int | None = None) -> OpenClosedComparison:
    """Fraction of paths whose open and closed stopping positions differ by
    more than ``epsilon`` (default 4 delta).  Both variants run on the same
    paths."""
    lat = barrier.lattice
    if lattice is not None and lattice != lat:
        raise ValueError("barrier lives on a different lattice")
    eps = 4 * lat.delta if epsilon is None else epsilon
    ens = simulate_walk(mu, lat, n_paths, seed)
    paths = [ens.path(i) for i in range(len(ens))]
    steps, final, done = _run(paths, barrier, ["open", "closed"])
    op = _result(paths, lat, steps[0], final[0], done[0])
    cl = _result(paths, lat, steps[1], final[1], done[1])
    diff = np.abs(op.y_final - cl.y_final) > eps
    p = float(diff.mean())
    se = math.sqrt(p * (1 - p) / len(paths))
    return OpenClosedComparison(p, se, len(paths), lat.delta, op.truncation_fraction,
                                cl.truncation_fraction, op, cl)


# ---------------------------------------------------------------------------
# corpus for the open/closed comparison: right barriers d >= y - S(y), i.e. a
# walk started at x0 stops once S(B_t) >= x0


def _profile_quadratic(y):
    return 2.5 * y ** 2 - 1.0


def _profile_double_well(y):
    return 4.0 * (y ** 2 - 0.3) ** 2 - 0.35


def _profile_wavy(y):
    return 1.5 * y ** 2 + 0.5 * np.sin(4.0 * y) - 0.8


def _profile_flat(y):
    y = np.asarray(y, dtype=float)
    out = np.where(y < 0, -0.6 + 1.1 * (y / 1.2) ** 2, -2.0 * (0.3 - y))
    out = np.where((y >= 0.3) & (y <= 0.9), 0.0, out)
    return np.where(y > 0.9, 3.0 * (y - 0.9), out)


CONTINUOUS_PROFILES = {
    "quadratic": _profile_quadratic,
    "double_well": _profile_double_well,
    "wavy": _profile_wavy,
}
FLAT_PROFILE = _profile_flat
CORPUS_HALF_WIDTH = 1.5


def corpus_lattice(delta: float, seed: int = 0, horizon: int = 200_000) -> Lattice:
    half = int(round(CORPUS_HALF_WIDTH / delta))
    return Lattice(delta, -half, half, 0.0, horizon, seed)


def profile_barrier(profile, lattice: Lattice) -> Barrier:
    """Right barrier stopping a walk from x0 once profile(B_t) >= x0, with
    time zero included in the scan."""
    y = lattice.y_grid
    psi = np.round((y - profile(y)) / lattice.delta, 9)
    return Barrier("right", lattice, psi, exclude_time_zero=False)


def corpus_mu(lattice: Lattice) -> DiscreteMeasure:
    """Uniform over the grid points of [-0.5, 0.5]."""
    k = int(round(0.5 / lattice.delta))
    pts = lattice.value(np.arange(-k, k + 1))
    return make_measure(pts, np.full(pts.size, 1.0 / pts.size))


def flat_mu(lattice: Lattice, atom: float = 0.3) -> DiscreteMeasure:
    """``corpus_mu`` with an extra atom of mass ``atom`` at 0, where the flat
    piece of ``FLAT_PROFILE`` sits at height 0."""
    base = corpus_mu(lattice)
    masses = np.asarray(base.masses) * (1 - atom)
    masses[np.argmin(np.abs(base.positions))] += atom
    return make_measure(base.positions, masses)
