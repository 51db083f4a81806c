import numpy as np
import pytest

from motforge.measures import (
    MeasureError, SupportSet, barycenter, conditional_means, convex_order_leq, dirac,
    is_martingale, make_coupling, make_measure, marginals, potential, product_coupling,
    slice_at, wasserstein1,
)

from oracles import w1


def test_make_measure_canonical():
    m = make_measure([2.0, -1.0, 2.0, 5.0], [0.25, 0.25, 0.25, 0.0])
    assert m.positions.tolist() == [-1.0, 2.0]
    assert m.masses.tolist() == [0.25, 0.5]


@pytest.mark.parametrize("pts, wts", [
    ([0.0, 1.0], [1.0]),
    ([0.0], [-1.0]),
    ([np.nan], [1.0]),
    ([0.0, 1.0], [0.0, 0.0]),
])
def test_make_measure_rejects(pts, wts):
    with pytest.raises(MeasureError):
        make_measure(pts, wts)


def test_barycenter_and_potential():
    m = make_measure([-1.0, 1.0], [0.5, 0.5])
    assert barycenter(m) == 0.0
    # U(x) = |x| outside [-1, 1] and 1 inside
    assert potential(m, 0.3) == pytest.approx(1.0, abs=1e-15)
    assert potential(m, 3.0) == pytest.approx(3.0, abs=1e-15)


def test_convex_order_two_point_dominates_dirac():
    assert convex_order_leq(dirac(0.0), make_measure([-1, 1], [0.5, 0.5]))


def test_convex_order_witness_is_first_bad_point():
    mu = make_measure([-1, 1], [0.5, 0.5])
    v = convex_order_leq(mu, dirac(0.0))
    assert not v
    # U_mu(-1) = 1 > U_nu(-1) = 1 fails nowhere; U_mu(0) = 1 > 0 is the first strict gap
    assert v.witness == -1.0 or v.witness == 0.0
    grid = np.union1d(mu.positions, [0.0])
    first = grid[np.nonzero(potential(mu, grid) - np.abs(grid) > 1e-9)[0][0]]
    assert v.witness == first


def test_convex_order_mean_mismatch():
    v = convex_order_leq(dirac(0.0), dirac(1.0))
    assert not v and v.witness is None and v.detail == "mean mismatch"


def test_wasserstein_matches_scipy():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.normal(size=5)
        b = rng.normal(size=7)
        wa = rng.uniform(0.1, 1, 5)
        wb = rng.uniform(0.1, 1, 7)
        mu = make_measure(a, wa / wa.sum())
        nu = make_measure(b, wb / wb.sum())
        assert wasserstein1(mu, nu) == pytest.approx(w1(a, wa, b, wb), abs=1e-12)


def test_coupling_marginals_and_martingale():
    q = make_coupling([0, 0, 1], [-1, 1, 1], [0.25, 0.25, 0.5])
    mu, nu = marginals(q)
    assert mu == make_measure([0, 1], [0.5, 0.5])
    assert nu == make_measure([-1, 1], [0.25, 0.75])
    xs, _, means = conditional_means(q)
    assert means.tolist() == [0.0, 1.0]
    assert is_martingale(q)
    assert not is_martingale(make_coupling([0], [1], [1]))


def test_product_coupling_and_slice():
    q = product_coupling(dirac(0.0), make_measure([-1, 1], [0.5, 0.5]))
    assert slice_at(q, 0.0) == make_measure([-1, 1], [0.5, 0.5])
    assert SupportSet.of([(0, -1), (0, 1)]) == q.support()


def test_coupling_json_round_trip():
    q = make_coupling([0.1, 0.1, 0.3], [0.2, -0.7, 1e-17], [1 / 3, 1 / 3, 1 / 3])
    assert type(q).from_json(q.to_json()) == q
