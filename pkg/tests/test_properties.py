import json

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from motforge.cli import dumps
from motforge.costs import cost
from motforge.measures import (
    barycenter, convex_order_leq, dirac, is_martingale, make_coupling, make_measure, marginals,
    wasserstein1,
)
from motforge.motlp import solve_mot
from motforge.sepsim.dp import embed
from motforge.sepsim.lattice import Barrier, Lattice, mirror_barrier, stop_mask
from motforge.transforms import affine, inverse_transform_measure, numeraire, transform_measure

from oracles import highs_mot, w1

coord = st.integers(-20, 20).map(lambda k: k / 4)
weight = st.integers(1, 20).map(float)
atoms = st.lists(st.tuples(coord, weight), min_size=1, max_size=6)


def _measure(pairs):
    pts, wts = zip(*pairs)
    w = np.array(wts)
    return make_measure(pts, w / w.sum())


def _spread(mu, pairs, widths):
    """nu obtained by splitting every atom symmetrically, so mu <=_c nu."""
    pts, wts = [], []
    for (x, m), h in zip(mu.atoms, widths):
        pts += [x - h, x + h]
        wts += [m / 2, m / 2]
    return make_measure(pts, wts)


@given(atoms)
def test_canonical_form(pairs):
    m = _measure(pairs)
    assert np.all(np.diff(m.positions) > 0)
    assert abs(m.total_mass - 1.0) < 1e-12


@given(atoms)
def test_dirac_at_mean_is_dominated(pairs):
    m = _measure(pairs)
    assert convex_order_leq(dirac(barycenter(m)), m)
    assert convex_order_leq(m, m)


@given(atoms, st.lists(st.integers(0, 8).map(lambda k: k / 4), min_size=6, max_size=6))
def test_spreads_are_in_convex_order(pairs, widths):
    mu = _measure(pairs)
    nu = _spread(mu, pairs, widths)
    assert convex_order_leq(mu, nu)


@given(atoms, atoms)
def test_w1_symmetric_and_matches_scipy(a, b):
    mu, nu = _measure(a), _measure(b)
    d = wasserstein1(mu, nu)
    assert abs(d - wasserstein1(nu, mu)) < 1e-12
    assert abs(d - w1(mu.positions, mu.masses, nu.positions, nu.masses)) < 1e-10


@given(st.lists(st.tuples(coord, weight), min_size=1, max_size=4),
       st.lists(st.integers(1, 6).map(lambda k: k / 4), min_size=4, max_size=4))
def test_mot_solution_is_feasible_and_optimal(pairs, widths):
    mu = _measure(pairs)
    nu = _spread(mu, pairs, widths)
    lo = solve_mot(mu, nu, cost("sm_neg"), "min")
    hi = solve_mot(mu, nu, cost("sm_neg"), "max")
    assert lo.value <= hi.value + 1e-9
    for s in (lo, hi):
        pm, pn = marginals(s.coupling)
        assert wasserstein1(pm, mu) < 1e-9 and wasserstein1(pn, nu) < 1e-9
        assert is_martingale(s.coupling)
    ref, _ = highs_mot(mu.positions, mu.masses, nu.positions, nu.masses, cost("sm_neg"))
    assert abs(lo.value - ref) < 1e-8


@given(st.floats(0.1, 5), st.floats(-5, 5), atoms, atoms)
def test_affine_round_trip(a, b, xs, ys):
    n = min(len(xs), len(ys))
    q = make_coupling([p for p, _ in xs[:n]], [p for p, _ in ys[:n]], [w for _, w in xs[:n]])
    back = inverse_transform_measure(affine(a, b), transform_measure(affine(a, b), q))
    assert np.allclose(back.masses, q.masses) and np.allclose(back.xs, q.xs)


@given(st.floats(0.5, 3), st.floats(0.2, 3),
       st.lists(st.integers(1, 40).map(lambda k: 0.5 + k / 8), min_size=1, max_size=5))
def test_numeraire_round_trip(a, c, xs):
    spec = numeraire(a, 0.0, c)
    q = make_coupling(xs, xs[::-1], np.ones(len(xs)))
    back = inverse_transform_measure(spec, transform_measure(spec, q))
    assert np.allclose(back.xs, q.xs) and np.allclose(back.ys, q.ys)
    assert np.allclose(back.masses, q.masses)


psi_list = st.lists(st.one_of(st.integers(-6, 6).map(float), st.just(float("inf"))),
                    min_size=13, max_size=13)


@given(psi_list, st.booleans())
def test_mirror_involution_and_closed_contains_open(psi, exclude):
    lat = Lattice(0.5, -6, 6)
    b = Barrier("right", lat, np.array(psi), exclude_time_zero=exclude)
    assert mirror_barrier(mirror_barrier(b)) == b
    starts = np.arange(-3, 4)
    assert np.all(stop_mask(b, starts, "closed") >= stop_mask(b, starts, "open"))


@given(psi_list, st.booleans(), st.lists(st.integers(-4, 4), min_size=1, max_size=4))
def test_embedding_conserves_mass(psi, exclude, starts):
    lat = Lattice(0.5, -6, 6)
    b = Barrier("right", lat, np.array(psi), exclude_time_zero=exclude)
    mu = make_measure(lat.value(np.array(starts)), np.ones(len(starts)) / len(starts))
    e = embed(b, mu)
    assert np.allclose(e.kernel.sum(axis=1), 1.0, atol=1e-12)
    assert abs(e.law.total_mass + e.truncated - 1.0) < 1e-12


@given(st.recursive(
    st.one_of(st.floats(allow_nan=False, allow_infinity=False), st.integers(-10**6, 10**6),
              st.booleans(), st.none(), st.text(max_size=5)),
    lambda inner: st.one_of(st.lists(inner, max_size=4),
                            st.dictionaries(st.text(max_size=4), inner, max_size=4)),
    max_leaves=12))
def test_report_json_round_trip(obj):
    assert json.loads(dumps(obj)) == obj
