"""Exact absorption probabilities for barrier stopping on the lattice.

For a fixed start the set of stopping levels is fixed, so the walk is a
gambler's ruin between the nearest stopping levels below and above.  From
position p between stopping levels a < p < b the walk ends at a with
probability (b - p)/(b - a) and at b otherwise.  Leaving the grid is
recorded as escape ("truncated" mass) at two virtual levels just outside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..measures import Coupling, DiscreteMeasure, empty_measure, make_coupling, make_measure
from .lattice import Barrier, Lattice, on_grid_indices, stop_mask

MAX_STATES = 50_000_000


class StateSpaceError(RuntimeError):
    pass


def ruin_kernel(mask: np.ndarray, start_pos: np.ndarray, exclude_time_zero: bool) -> np.ndarray:
    """Absorption kernel K[i, j] over columns (escape_below, levels..., escape_above).

    ``mask[i]`` marks the stopping levels for start ``i`` and
    ``start_pos[i]`` is the start's column in ``mask``.
    """
    k, L = mask.shape
    if k * (L + 2) > MAX_STATES:
        raise StateSpaceError("state space too large; use a coarser delta")
    idx = np.arange(L)
    below = np.maximum.accumulate(np.where(mask, idx, -1), axis=1)
    above = np.minimum.accumulate(np.where(mask, idx, L)[:, ::-1], axis=1)[:, ::-1]
    K = np.zeros((k, L + 2))
    rows = np.arange(k)

    def spread(r, p, a, b, w):
        # walk at p, absorbed at a <= p <= b; columns shifted by one for escape_below
        span = b - a
        safe = np.where(span == 0, 1, span)
        pa = np.where(span == 0, 1.0, (b - p) / safe)
        np.add.at(K, (r, a + 1), w * pa)
        np.add.at(K, (r, b + 1), w * (1.0 - pa))

    p0 = np.asarray(start_pos, dtype=np.int64)
    on = mask[rows, p0]
    now = on & (not exclude_time_zero)
    if np.any(now):
        K[rows[now], p0[now] + 1] = 1.0
    free = ~on
    if np.any(free):
        r = rows[free]
        spread(r, p0[free], below[r, p0[free]], above[r, p0[free]], 1.0)
    later = on & exclude_time_zero
    if np.any(later):
        r = rows[later]
        q = p0[later]
        # first step down: absorbed below q-1, or back at q
        down = q - 1
        a = np.where(down >= 0, below[r, np.maximum(down, 0)], -1)
        spread(r, np.maximum(down, -1), a, q, 0.5)
        up = q + 1
        b = np.where(up <= L - 1, above[r, np.minimum(up, L - 1)], L)
        spread(r, np.minimum(up, L), q, b, 0.5)
    return K


@dataclass(frozen=True)
class Embedding:
    law: DiscreteMeasure
    coupling: Coupling
    truncated: float
    kernel: np.ndarray
    starts: np.ndarray
    weights: np.ndarray


def embed(barrier: Barrier, mu: DiscreteMeasure, openness: str | None = None) -> Embedding:
    """Law of the stopped walk, and the joint law of (start, stop), for a
    start distributed as ``mu`` (which must sit on the barrier's grid)."""
    lat = barrier.lattice
    n0 = on_grid_indices(mu, lat)
    mask = stop_mask(barrier, n0, openness)
    K = ruin_kernel(mask, n0 - lat.n_lo, barrier.exclude_time_zero)
    w = np.asarray(mu.masses)
    inner = K[:, 1:-1]
    truncated = float(w @ (K[:, 0] + K[:, -1]))
    ys = lat.y_grid
    law_mass = w @ inner
    keep = law_mass > 0
    law = make_measure(ys[keep], law_mass[keep]) if np.any(keep) else empty_measure()
    X = np.repeat(lat.value(n0), lat.size)
    Y = np.tile(ys, n0.size)
    q = make_coupling(X, Y, (w[:, None] * inner).ravel())
    return Embedding(law, q, truncated, K, n0, w)


def embedded_law(barrier: Barrier, mu: DiscreteMeasure, lattice: Lattice | None = None) -> DiscreteMeasure:
    _same_lattice(barrier, lattice)
    return embed(barrier, mu).law


def induced_coupling(barrier: Barrier, mu: DiscreteMeasure, lattice: Lattice | None = None) -> Coupling:
    _same_lattice(barrier, lattice)
    return embed(barrier, mu).coupling


def _same_lattice(barrier: Barrier, lattice: Lattice | None):
    if lattice is not None and (lattice.delta, lattice.n_lo, lattice.n_hi, lattice.origin) != (
            barrier.lattice.delta, barrier.lattice.n_lo, barrier.lattice.n_hi, barrier.lattice.origin):
        raise ValueError("barrier lives on a different lattice")


def iterate_absorption(barrier: Barrier, mu: DiscreteMeasure, horizon: int,
                       openness: str | None = None) -> tuple[np.ndarray, float]:
    """Time-stepped evolution of the walk to ``horizon`` steps.

    Returns absorbed mass per lattice level (plus the two escape columns)
    and the mass still moving at the horizon.  Independent of the closed
    form in ``ruin_kernel`` and used to cross-check it.
    """
    lat = barrier.lattice
    n0 = on_grid_indices(mu, lat)
    mask = stop_mask(barrier, n0, openness)
    L = lat.size
    absorbed = np.zeros(L + 2)
    alive_total = 0.0
    for i, (start, w) in enumerate(zip(n0 - lat.n_lo, mu.masses)):
        cur = np.zeros(L + 2)
        cur[start + 1] = w
        stop = np.concatenate([[True], mask[i], [True]])
        if not barrier.exclude_time_zero and stop[start + 1]:
            absorbed[start + 1] += w
            continue
        for _ in range(horizon):
            nxt = np.zeros_like(cur)
            nxt[:-1] += 0.5 * cur[1:]
            nxt[1:] += 0.5 * cur[:-1]
            hit = nxt * stop
            absorbed += hit
            cur = nxt - hit
            if cur.sum() < 1e-300:
                break
        alive_total += float(cur.sum())
    return absorbed, alive_total
