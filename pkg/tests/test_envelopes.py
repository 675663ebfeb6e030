import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convex_closure import fixtures as fx
from convex_closure.envelopes import (EnvelopeError, GridFunction, SlopeGrid, TOL_ENV,
                                      affine_minorant, biconjugate,
                                      convex_hull_fn, default_slope_grid, envelope_on_grid,
                                      envelope_via_measures, fenchel_conjugate,
                                      function_from_dict, function_to_dict, legendre_1d)
from convex_closure.measures import FiniteMeasure, barycenter, integrate
from oracles import conjugate_loop, envelope_by_subsets, lower_hull_1d

S1 = SlopeGrid(np.array([[-1.0], [0.0], [1.0]]))


def test_conjugate_examples():
    dom = fx.interval(8)
    zero = GridFunction(dom, np.zeros(9))
    np.testing.assert_array_equal(fenchel_conjugate(zero, S1), [0.0, 0.0, 1.0])
    c = 2.5
    np.testing.assert_array_equal(fenchel_conjugate(zero.with_values(np.full(9, c)), S1),
                                  [-c, -c, 1.0 - c])
    sq = GridFunction.from_callable(fx.interval(8, -1.0, 1.0), lambda x: x[0] ** 2)
    val, arg = fenchel_conjugate(sq, SlopeGrid(np.array([[-1.0], [0.0], [1.0]])),
                                 return_argmax=True)
    assert val[2] == 0.25
    assert sq.domain.grid[arg[2], 0] == 0.5


def test_conjugate_all_inf_raises():
    dom = fx.interval(4)
    with pytest.raises(EnvelopeError):
        fenchel_conjugate(GridFunction(dom, np.full(5, np.inf), "lsc_lower_bounded"), S1)


def test_inf_only_for_lsc_lower_bounded():
    with pytest.raises(EnvelopeError):
        GridFunction(fx.interval(4), np.array([0, 1, np.inf, 0, 0.0]))


def test_biconjugate_examples():
    dom = fx.interval(64)
    pl = GridFunction.from_callable(dom, lambda x: abs(x[0] - 0.25) + 2 * max(0, x[0] - 0.75))
    S = SlopeGrid.regular(1, 4.0, 0.25)
    np.testing.assert_allclose(biconjugate(pl, S).values, pl.values, atol=1e-12)
    chord = biconjugate(fx.concave_chord(dom))
    assert np.max(np.abs(chord.values)) <= 1e-12
    w = biconjugate(fx.w_shape(dom))
    assert w(np.array([0.5])) == pytest.approx(0.0, abs=1e-12)
    assert w(np.array([0.0])) == pytest.approx(1 / 16, abs=1e-12)


def test_envelope_examples():
    dom = fx.interval(16)
    aff = GridFunction.from_callable(dom, lambda x: 3 * x[0] - 1)
    assert envelope_via_measures(aff, [0.3]).value == pytest.approx(-0.1, abs=1e-12)
    ends = GridFunction(dom, np.r_[0.0, np.ones(15), 0.0])
    res = envelope_via_measures(ends, [0.5])
    assert res.value == 0.0
    assert sorted(res.measure.support[:, 0].tolist()) == [0.0, 1.0]
    np.testing.assert_allclose(res.measure.weights, [0.5, 0.5])
    w = fx.w_shape(fx.interval(64))
    res = envelope_via_measures(w, [0.0])
    assert res.value == pytest.approx(1 / 16, abs=1e-12)
    assert res.measure.support.tolist() == [[0.0]]
    X, v = w.domain.grid, w.values
    assert res.value == pytest.approx(envelope_by_subsets(X, v, [0.0], 2), abs=1e-12)


def test_envelope_outside_finite_hull_is_inf():
    dom = fx.interval(8)
    f = GridFunction(dom, np.r_[np.zeros(4), np.full(5, np.inf)], "lsc_lower_bounded")
    res = envelope_via_measures(f, [0.75])
    assert res.value == np.inf and res.measure is None
    with pytest.raises(EnvelopeError):
        envelope_via_measures(f, [1.5])


def test_hull_examples():
    dom = fx.interval(16)
    cvx = GridFunction.from_callable(dom, lambda x: (x[0] - 0.3) ** 2)
    assert convex_hull_fn(cvx, [0.3]) == pytest.approx(0.0, abs=1e-12)
    assert convex_hull_fn(cvx, [0.41]) == pytest.approx(0.11 ** 2, abs=1e-12)
    cav = GridFunction.from_callable(dom, lambda x: np.sqrt(x[0]))
    assert convex_hull_fn(cav, [0.4]) == pytest.approx(0.4, abs=1e-12)
    sq = fx.square(4)
    on_face = sq.grid[:, 1] == 0
    vals = np.where(on_face, (sq.grid[:, 0] - 0.5) ** 2, np.inf)
    ind = GridFunction(sq, vals, "lsc_lower_bounded")
    # restricted to the bottom face: hull of the grid parabola there
    assert convex_hull_fn(ind, [0.5, 0.0]) == 0.0
    assert convex_hull_fn(ind, [0.25, 0.0]) == 0.0625
    # off the grid, x itself is an atom valued by the lsc rule (min of cell corners)
    assert convex_hull_fn(ind, [0.125, 0.0]) == 0.0625
    assert convex_hull_fn(ind, [0.5, 0.5]) == np.inf


def test_affine_minorant_examples():
    dom = fx.interval(64)
    w = fx.w_shape(dom)
    a = affine_minorant(w, np.array([0.5]), 0.01)
    assert a(np.array([0.5])) == pytest.approx(0.0, abs=1e-12)
    assert np.all(a(dom.grid) <= w.values + TOL_ENV)
    const = GridFunction(dom, np.full(65, 1.5))
    a = affine_minorant(const, np.array([0.2]), 0.1, S1)
    assert a.slope.tolist() == [0.0] and a.intercept == 1.5
    cvx = GridFunction.from_callable(dom, lambda x: abs(x[0] - 0.5) + x[0])
    a = affine_minorant(cvx, np.array([0.75]), 0.01, SlopeGrid.regular(1, 4, 1.0))
    assert a.slope.tolist() == [2.0] and a(np.array([0.75])) == pytest.approx(1.0)


def test_affine_minorant_sparse_grid():
    w = fx.w_shape(fx.interval(64))
    with pytest.raises(EnvelopeError, match="denser"):
        affine_minorant(w, np.array([0.1]), 0.01, S1)
    a = affine_minorant(w, np.array([0.1]), 0.01, S1, dual_fallback=True)
    ref = envelope_via_measures(w, [0.1]).value
    assert a(np.array([0.1])) == pytest.approx(ref, abs=1e-9)
    assert np.all(a(w.domain.grid) <= w.values + TOL_ENV)
    with pytest.raises(EnvelopeError):
        affine_minorant(w, np.array([0.0]), 0.0)


def test_off_grid_rules():
    dom = fx.interval(4)
    v = np.array([0.0, 1.0, 3.0, 1.0, 0.0])
    cont = GridFunction(dom, v)
    lsc = GridFunction(dom, v, "lsc_lower_bounded")
    assert cont(np.array([0.375])) == pytest.approx(2.0)
    assert lsc(np.array([0.375])) == 1.0
    assert lsc(np.array([0.5])) == 3.0


def test_fast_conjugate_matches_loop():
    rng = np.random.default_rng(4)
    f = fx.random_piecewise_linear(fx.interval(64, -1, 2), rng)
    S = default_slope_grid(f)
    fast = fenchel_conjugate(f, S, method="fast")
    slow = [conjugate_loop(f.domain.grid, f.values, s) for s in S.slopes]
    np.testing.assert_allclose(fast, slow, atol=1e-12)
    np.testing.assert_allclose(legendre_1d(f.domain.grid[:, 0], f.values, S.slopes[:, 0]),
                               slow, atol=1e-12)


def test_dict_roundtrip():
    f = fx.indicator_like(fx.interval(8))
    d = function_to_dict(f)
    assert "inf" in d["values"]
    g = function_from_dict(f.domain, d)
    np.testing.assert_array_equal(g.values, f.values)


seeds = st.integers(0, 2**32 - 1)


def random_1d(seed, n=20):
    rng = np.random.default_rng(seed)
    return GridFunction(fx.interval(n), rng.normal(size=n + 1))


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_sandwich(seed):
    f = fx.random_piecewise_linear(fx.triangle(6), np.random.default_rng(seed))
    cl = biconjugate(f).values
    co = envelope_on_grid(f)
    assert np.all(cl <= co + TOL_ENV)
    assert np.all(co <= f.values + TOL_ENV)


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_transform_monotone(seed):
    f = random_1d(seed)
    g = f.with_values(f.values + np.random.default_rng(seed + 1).random(len(f.values)))
    S = default_slope_grid(f, g)
    assert np.all(fenchel_conjugate(f, S) >= fenchel_conjugate(g, S))
    assert np.all(biconjugate(f, S).values <= biconjugate(g, S).values + 1e-12)


@given(st.integers(-8, 8), st.floats(-3, 3))
@settings(max_examples=40, deadline=None)
def test_affine_fixed_point(k, c):
    dom = fx.square(6)
    slope = np.array([k * 0.25, -k * 0.5])
    aff = GridFunction(dom, dom.grid @ slope + c)
    S = SlopeGrid.regular(2, 4.0, 0.25)
    np.testing.assert_allclose(biconjugate(aff, S).values, aff.values, atol=1e-12)


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_feasible_point_bound_and_support(seed):
    rng = np.random.default_rng(seed)
    dom = fx.triangle(6)
    f = fx.random_piecewise_linear(dom, rng)
    idx = rng.choice(len(dom.grid), 4, replace=False)
    mu = FiniteMeasure.from_grid(dom, idx, rng.dirichlet(np.ones(4)))
    res = envelope_via_measures(f, barycenter(mu))
    assert res.value <= integrate(mu, f) + TOL_ENV
    assert len(res.measure) <= 3
    np.testing.assert_allclose(barycenter(res.measure), barycenter(mu), atol=1e-9)


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_biconjugate_midpoint_convex(seed):
    dom = fx.square(8)
    f = fx.random_piecewise_linear(dom, np.random.default_rng(seed))
    b = biconjugate(f).values
    G = dom.grid
    for i in range(len(G)):
        for j in range(i + 1, len(G)):
            m = dom.grid_index(0.5 * (G[i] + G[j]))
            if m is not None:
                assert b[m] <= 0.5 * (b[i] + b[j]) + TOL_ENV


@given(seeds, st.integers(3, 20))
@settings(max_examples=40, deadline=None)
def test_lp_matches_chords_1d(seed, n):
    f = random_1d(seed, n)
    X = f.domain.grid[:, 0]
    x = np.random.default_rng(seed).uniform(0, 1)
    assert envelope_via_measures(f, [x]).value == pytest.approx(
        lower_hull_1d(X, f.values, x), abs=1e-9)
