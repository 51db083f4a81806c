import numpy as np
import pytest

from motforge.measures import dirac, make_measure, wasserstein1
from motforge.sepsim.dp import embed, embedded_law, induced_coupling, iterate_absorption
from motforge.sepsim.lattice import KINDS, Barrier, Lattice, make_lattice, stop_mask

from oracles import absorbing_chain


def _random_barrier(rng, lat, kind, exclude, openness):
    psi = rng.integers(-6, 7, lat.size).astype(float)
    psi2 = None
    if kind == "inner":
        psi = -np.abs(psi)
        psi2 = np.abs(rng.integers(-6, 7, lat.size)).astype(float)
    if kind == "outer":
        psi2 = psi + rng.integers(0, 5, lat.size)
    off = rng.uniform(size=lat.size) < 0.5
    psi[off] = np.inf if kind in ("right", "outer") else -np.inf
    return Barrier(kind, lat, psi, psi2, exclude_time_zero=exclude, openness=openness)


def test_two_point_embedding():
    mu = dirac(0.0)
    lat = make_lattice(0.25, mu, make_measure([-1, 1], [0.5, 0.5]))
    b = Barrier.from_levels("right", lat, {1.0: 1.0, -1.0: -1.0})
    e = embed(b, mu)
    assert e.law == make_measure([-1, 1], [0.5, 0.5])
    assert e.truncated == 0.0


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("exclude", [True, False])
@pytest.mark.parametrize("openness", ["closed", "open"])
def test_kernel_matches_linear_solve(kind, exclude, openness):
    lat = Lattice(0.25, -12, 12)
    rng = np.random.default_rng([hash(kind) % 97, exclude, openness == "open"])
    b = _random_barrier(rng, lat, kind, exclude, openness)
    starts = lat.value(rng.integers(lat.n_lo + 2, lat.n_hi - 2, 4))
    m = make_measure(starts, rng.uniform(0.1, 1, 4))
    e = embed(b, m)
    for i, n0 in enumerate(e.starts):
        mask = stop_mask(b, [n0])[0]
        ref = absorbing_chain(np.flatnonzero(mask), int(n0 - lat.n_lo), lat.size, exclude)
        assert np.max(np.abs(e.kernel[i] - ref)) < 1e-12


@pytest.mark.parametrize("kind", KINDS)
def test_kernel_matches_time_stepping(kind):
    lat = Lattice(0.25, -12, 12)
    rng = np.random.default_rng(1)
    b = _random_barrier(rng, lat, kind, True, "closed")
    m = make_measure(lat.value(rng.integers(-8, 9, 4)), rng.uniform(0.1, 1, 4))
    e = embed(b, m)
    absorbed, alive = iterate_absorption(b, m, 20_000)
    assert np.max(np.abs(absorbed - e.weights @ e.kernel)) < 1e-10 + alive


def test_mass_balance():
    lat = Lattice(0.1, -30, 30)
    b = Barrier("right", lat, np.full(lat.size, -np.inf), exclude_time_zero=False)
    m = make_measure([-0.5, 0.0, 0.3], [0.2, 0.5, 0.3])
    e = embed(b, m)
    assert wasserstein1(e.law, m) < 1e-12
    assert abs(e.law.total_mass + e.truncated - m.total_mass) <= 1e-12


def test_law_and_coupling_helpers_agree():
    mu = make_measure([-0.25, 0.25], [0.5, 0.5])
    lat = Lattice(0.25, -8, 8)
    b = Barrier.from_levels("right", lat, {1.0: 1.25, -1.0: -0.75, 0.5: 0.25})
    law = embedded_law(b, mu)
    q = induced_coupling(b, mu)
    assert wasserstein1(law, embed(b, mu).law) == 0.0
    assert q.total_mass == pytest.approx(law.total_mass)
