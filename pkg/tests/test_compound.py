"""Compound-tail engines: Panjer recursion, Monte Carlo, brute force."""

import math

import numpy as np
import pytest

from geomtail.compound import (
    TailTable,
    brute_force_tail,
    delta_from_tails,
    mc_tail,
    panjer_tail,
)
from geomtail.dist import (
    GeometricParams,
    LatticeDistribution,
    ParetoDist,
    discretize,
)
from conftest import random_lattice


def cap_for(q, residual=1e-13):
    return int(math.ceil(math.log(residual) / math.log(q))) + 1


# ---------------------------------------------------------------- exact engines

def test_panjer_unit_severity_is_geometric():
    # X = 1 a.s.: S = count, so P(S > n) = q^n exactly
    lat = LatticeDistribution(bandwidth=1.0, masses=np.array([0.0, 1.0]),
                              truncation_point=1.0, truncated_mass=0.0)
    for p in (0.3, 0.5, 0.8):
        tt = panjer_tail(lat, GeometricParams(p), 20.0)
        expect = (1.0 - p) ** np.arange(21)
        assert np.allclose(tt.tails, expect, rtol=1e-12, atol=1e-15)


def test_panjer_matches_brute_force_three_atoms():
    lat = LatticeDistribution(bandwidth=1.0,
                              masses=np.array([0.0, 0.5, 0.3, 0.2]),
                              truncation_point=3.0, truncated_mass=0.0)
    params = GeometricParams(0.4)
    tt = panjer_tail(lat, params, 30.0)
    bf = brute_force_tail(lat, params, cap_for(params.q))
    n = min(tt.xs.size, bf.xs.size)
    assert np.allclose(tt.tails[:n], bf.tails[:n], rtol=1e-10, atol=1e-13)


def test_panjer_matches_brute_force_random_lattices(rng):
    for _ in range(10):
        lat = random_lattice(rng)
        p = float(rng.uniform(0.1, 0.9))
        params = GeometricParams(p)
        xmax = lat.truncation_point * 4
        lat_ext = LatticeDistribution(
            bandwidth=lat.bandwidth, masses=lat.masses,
            truncation_point=lat.truncation_point, truncated_mass=0.0)
        tt = panjer_tail(lat_ext, params, xmax)
        bf = brute_force_tail(lat_ext, params, cap_for(params.q))
        n = min(tt.xs.size, bf.xs.size)
        assert np.allclose(tt.tails[:n], bf.tails[:n], rtol=0, atol=2e-13)


def test_brute_force_single_term():
    lat = LatticeDistribution(bandwidth=1.0,
                              masses=np.array([0.0, 0.5, 0.3, 0.2]),
                              truncation_point=3.0, truncated_mass=0.0)
    params = GeometricParams(0.4)
    with pytest.warns(UserWarning):
        bf = brute_force_tail(lat, params, 1)
    # one count term: P(S > x) = p * P(X > x)
    tail_x = np.array([1.0, 0.5, 0.2, 0.0])
    assert np.allclose(bf.tails, 0.4 * tail_x, rtol=1e-14)
    assert np.all(bf.stderrs == pytest.approx(0.6))


def test_panjer_tails_non_increasing_and_bounded():
    d = ParetoDist(2.2)
    lat = discretize(d, 0.05, 100.0)
    tt = panjer_tail(lat, GeometricParams(0.5), 50.0)
    assert np.all(np.diff(tt.tails) <= 1e-15)
    assert np.all((tt.tails >= 0.0) & (tt.tails <= 1.0))


def test_panjer_needs_enough_truncation():
    d = ParetoDist(2.2)
    lat = discretize(d, 0.5, 30.0)
    with pytest.raises(ValueError):
        panjer_tail(lat, GeometricParams(0.5), 100.0)


def test_almost_degenerate_count_reduces_to_severity():
    # p close to 1: S is one summand with high probability
    d = ParetoDist(5.0)
    lat = discretize(d, 0.01, 200.0)
    params = GeometricParams(0.999)
    tt = panjer_tail(lat, params, 50.0)
    dd = delta_from_tails(tt, d, params)
    sel = dd.xs >= 10.0
    assert np.max(np.abs(dd.delta[sel])) < 0.02


# ---------------------------------------------------------------- Monte Carlo

def test_mc_matches_panjer_within_error_bars():
    d = ParetoDist(2.2)
    params = GeometricParams(0.5)
    xgrid = [5.0, 10.0, 20.0]
    mc = mc_tail(d, params, 200_000, seed=7, xgrid=xgrid)
    lat = discretize(d, 0.0025, 80.0)
    ex = panjer_tail(lat, params, 40.0)
    for est, x in zip(mc, xgrid):
        j = int(round(x / 0.0025))
        assert abs(est.tail - ex.tails[j]) < 4.0 * est.stderr
        assert est.stderr > 0.0


def test_mc_same_seed_is_deterministic():
    d = ParetoDist(2.2)
    params = GeometricParams(0.5)
    a = mc_tail(d, params, 100_000, seed=42, xgrid=[5.0, 15.0])
    b = mc_tail(d, params, 100_000, seed=42, xgrid=[5.0, 15.0])
    assert np.array_equal(a.tails, b.tails)
    assert np.array_equal(a.stderrs, b.stderrs)


def test_mc_different_seeds_agree_statistically():
    d = ParetoDist(2.2)
    params = GeometricParams(0.5)
    a = mc_tail(d, params, 150_000, seed=1, xgrid=[10.0])
    b = mc_tail(d, params, 150_000, seed=2, xgrid=[10.0])
    assert a.tails[0] != b.tails[0]
    joint = math.hypot(a.stderrs[0], b.stderrs[0])
    assert abs(a.tails[0] - b.tails[0]) < 4.0 * joint


def test_mc_handles_unsorted_grid():
    d = ParetoDist(2.2)
    params = GeometricParams(0.5)
    asc = mc_tail(d, params, 50_000, seed=3, xgrid=[5.0, 10.0, 20.0])
    mixed = mc_tail(d, params, 50_000, seed=3, xgrid=[20.0, 5.0, 10.0])
    # the table comes back in ascending grid order either way
    assert np.array_equal(mixed.xs, asc.xs)
    assert np.array_equal(mixed.tails, asc.tails)
    with pytest.raises(ValueError):
        mc_tail(d, params, 1000, seed=3, xgrid=[5.0, 5.0])


# ---------------------------------------------------------------- delta tables

def test_delta_from_tails_formula():
    d = ParetoDist(2.2)
    params = GeometricParams(0.5)
    xs = np.array([2.0, 4.0, 8.0])
    tails = np.array([0.2, 0.05, 0.01])
    tt = TailTable(xs=xs, tails=tails, stderrs=np.zeros(3), engine="panjer")
    dd = delta_from_tails(tt, d, params)
    expect = 0.5 * tails / d.tail(xs) - 1.0
    assert np.allclose(dd.delta, expect, rtol=1e-14)
    # stderr scales by the same factor as the estimate
    tt2 = TailTable(xs=xs, tails=tails, stderrs=np.full(3, 1e-3), engine="mc")
    dd2 = delta_from_tails(tt2, d, params)
    assert np.allclose(dd2.delta_stderr, 0.5e-3 / d.tail(xs), rtol=1e-14)


def test_delta_from_tails_rejects_vanishing_tail():
    d = ParetoDist(2.2)

    class Dead(ParetoDist):
        def tail(self, x):
            return np.zeros_like(np.asarray(x, dtype=float))

    tt = TailTable(xs=np.array([5.0]), tails=np.array([0.1]),
                   stderrs=np.zeros(1), engine="panjer")
    with pytest.raises(ValueError):
        delta_from_tails(tt, Dead(2.2), GeometricParams(0.5))
    # sane distribution passes
    delta_from_tails(tt, d, GeometricParams(0.5))


def test_brute_force_residual_warning():
    lat = LatticeDistribution(bandwidth=1.0, masses=np.array([0.0, 1.0]),
                              truncation_point=1.0, truncated_mass=0.0)
    with pytest.warns(UserWarning, match="residual"):
        brute_force_tail(lat, GeometricParams(0.5), 10)
