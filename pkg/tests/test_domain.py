import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dabounds import domain as D
from dabounds.errors import InvalidDistribution, InvalidFunction, NonInvertibleSegment, UndefinedOnSupport


# --- distributions -------------------------------------------------------------


def test_discrete_rejects_bad_masses():
    with pytest.raises(InvalidDistribution):
        D.DiscreteDistribution((0.0, 1.0), (0.5, 0.6))
    with pytest.raises(InvalidDistribution):
        D.DiscreteDistribution((1.0, 0.0), (0.5, 0.5))
    with pytest.raises(InvalidDistribution):
        D.DiscreteDistribution((0.0, 1.0), (-0.1, 1.1))


def test_discrete_renormalizes_rounding():
    d = D.DiscreteDistribution((5.0,), (0.9999999999999999,))
    assert d.masses == (1.0,)


def test_from_pairs_merges_duplicates():
    d = D.DiscreteDistribution.from_pairs([(2, 0.25), (1, 0.5), (2, 0.25)])
    assert d.atoms == (1.0, 2.0) and d.masses == (0.5, 0.5)


def test_piecewise_uniform_validation_and_cdf():
    with pytest.raises(InvalidDistribution):
        D.PiecewiseUniform((0.0, 0.0), (1.0,))
    u = D.PiecewiseUniform((0.0, 1.0, 3.0), (0.5, 0.5))
    assert u.cdf(0.5) == pytest.approx(0.25)
    assert u.cdf(2.0) == pytest.approx(0.75)
    assert u.cdf(-1.0) == 0.0 and u.cdf(9.0) == 1.0


def test_canonical_merges_equal_densities():
    u = D.PiecewiseUniform((-1.0, 0.0, 0.5, 1.0, 2.0), (0.0, 0.5, 0.5, 0.0)).canonical()
    assert u.breakpoints == (0.0, 1.0) and u.segment_masses == (1.0,)


def test_cell_representation_integrates_steps_exactly():
    u = D.PiecewiseUniform.uniform(-1.0, 0.0)
    f = D.PiecewiseFunction.step((-0.5,), (0.0, 1.0), (True,))
    assert D.expectation(u, f) == 0.5


# --- functions -----------------------------------------------------------------


def test_step_point_values_follow_inclusion():
    f = D.PiecewiseFunction.step((0.0,), (0.0, 1.0), (True,))
    assert f.evaluate(np.array([0.0]))[0] == 0.0
    g = D.PiecewiseFunction.step((0.0,), (0.0, 1.0), (False,))
    assert g.evaluate(np.array([0.0]))[0] == 1.0


def test_open_interval_excludes_endpoints():
    h = D.PiecewiseFunction.open_interval(-0.5, 1.5)
    np.testing.assert_array_equal(h.evaluate(np.array([-0.5, 0.0, 1.5, 2.0])), [0.0, 1.0, 0.0, 0.0])


def test_threshold_directions():
    up, dn = D.PiecewiseFunction.threshold(0.3, 1), D.PiecewiseFunction.threshold(0.3, -1)
    x = np.array([0.2, 0.3, 0.4])
    np.testing.assert_array_equal(up.evaluate(x), [0, 0, 1])
    np.testing.assert_array_equal(dn.evaluate(x), [1, 1, 0])


def test_function_values_in_unit_interval():
    with pytest.raises(InvalidFunction):
        D.PiecewiseFunction((0.0,), (0.0, 1.5))
    with pytest.raises(InvalidFunction):
        D.AtomFunction({0.0: -0.2})


def test_nan_input_propagates():
    f = D.PiecewiseFunction.constant(1.0)
    assert math.isnan(f.evaluate(np.array([np.nan]))[0])


def test_domain_requires_labeling_on_support():
    with pytest.raises(UndefinedOnSupport):
        D.Domain(D.DiscreteDistribution((0.0, 1.0), (0.5, 0.5)), D.AtomFunction({0.0: 1.0}))
    # an unweighted atom may be unlabeled
    D.Domain(D.DiscreteDistribution((0.0, 1.0), (1.0, 0.0)), D.AtomFunction({0.0: 1.0}))


def test_simplify_is_extensional():
    f = D.PiecewiseFunction((0.0, 1.0, 2.0), (0.0, 0.0, 1.0, 1.0), (0.0, 1.0, 1.0))
    g = f.simplify()
    assert g.breakpoints == (1.0,)
    x = np.linspace(-1, 3, 41)
    np.testing.assert_array_equal(f.evaluate(x), g.evaluate(x))


# --- maps ------------------------------------------------------------------------


def test_fold_pushes_both_domains_to_unit_uniform(fold):
    for a, b in ((-1.0, 0.0), (1.0, 2.0)):
        z = D.pushforward(D.PiecewiseUniform.uniform(a, b), fold)
        assert z == D.PiecewiseUniform.uniform(0.0, 1.0)


def test_zero_slope_segment_creates_atom():
    g = D.PiecewiseLinearMap((0.5,), (0.0, 1.0), (0.25, 0.0))
    z = D.pushforward(D.PiecewiseUniform.uniform(0.0, 1.0), g)
    assert isinstance(z, D.MixedDistribution)
    assert z.continuous_mass == pytest.approx(0.5)
    assert z.discrete.atoms == (0.25,)


def test_negative_slope_pushforward():
    g = D.PiecewiseLinearMap((), (-2.0,), (1.0,))
    z = D.pushforward(D.PiecewiseUniform((0.0, 1.0, 2.0), (0.25, 0.75)), g)
    assert z.breakpoints == (-3.0, -1.0, 1.0)
    assert z.segment_masses == pytest.approx((0.75, 0.25))


def test_atom_map_pushforward_merges():
    d = D.DiscreteDistribution((0.0, 1.0, 2.0), (0.2, 0.3, 0.5))
    z = D.pushforward(d, D.AtomMap({0.0: 7.0, 1.0: 7.0, 2.0: 8.0}))
    assert z.atoms == (7.0, 8.0) and z.masses == pytest.approx((0.5, 0.5))


def test_channel_pushforward_and_soft_composition():
    d = D.DiscreteDistribution((0.0, 1.0), (0.5, 0.5))
    ch = D.Channel({0.0: D.DiscreteDistribution.bernoulli(0.2), 1.0: D.DiscreteDistribution.bernoulli(0.6)})
    z = D.pushforward(d, ch)
    assert z.masses == pytest.approx((0.6, 0.4))
    h = D.AtomFunction({0.0: 0.0, 1.0: 1.0})
    hg = D.compose(h, ch)
    np.testing.assert_allclose(hg.evaluate(np.array([0.0, 1.0])), [0.2, 0.6])


def test_compose_with_fold_matches_pointwise(fold):
    h = D.PiecewiseFunction.threshold(0.5, 1)
    hg = D.compose(h, fold)
    x = np.linspace(-1.0, 2.0, 601)
    np.testing.assert_array_equal(hg.evaluate(x), h.evaluate(fold.evaluate(x)))


def test_induced_labelings_are_opposite(src_dom, tgt_dom, fold):
    fs = D.induced_labeling(src_dom, fold)
    ft = D.induced_labeling(tgt_dom, fold)
    z = np.linspace(0.005, 0.995, 100)  # the breakpoint at 0.5 is measure zero
    np.testing.assert_array_equal(fs.evaluate(z) + ft.evaluate(z), np.ones_like(z))
    assert D.disagreement(D.PiecewiseUniform.uniform(0.0, 1.0), fs, ft) == 1.0


def test_induced_labeling_conflict_raises():
    dom = D.Domain(D.PiecewiseUniform.uniform(-1.0, 1.0), D.PiecewiseFunction.threshold(0.0, 1))
    with pytest.raises(NonInvertibleSegment):
        D.induced_labeling(dom, D.PiecewiseLinearMap((0.0,), (-1.0, 1.0), (0.0, 0.0)))


# --- expectations ------------------------------------------------------------------


def test_errors_match_monte_carlo(src_dom):
    h = D.PiecewiseFunction.threshold(-0.3, 1)
    exact = D.error(src_dom, h)
    x = D.sample(src_dom.distribution, 200_000, seed=3)
    mc = np.mean(np.abs(h.evaluate(x) - src_dom.labeling.evaluate(x)))
    assert exact == pytest.approx(0.2)
    assert abs(mc - exact) < 0.005


def test_label_marginal_masses():
    d = D.Domain(D.DiscreteDistribution((0.0, 1.0), (0.3, 0.7)), D.AtomFunction({0.0: 0.5, 1.0: 1.0}))
    m = D.label_marginal(d)
    assert m.masses == pytest.approx((0.15, 0.85))


def test_sampling_is_deterministic():
    u = D.PiecewiseUniform((0.0, 1.0, 2.0), (0.3, 0.7))
    np.testing.assert_array_equal(D.sample(u, 50, 9), D.sample(u, 50, 9))
    ls = D.labeled_sample(D.Domain(u, D.PiecewiseFunction.threshold(1.0, 1)), 20, 1)
    assert len(ls) == 20


# --- serialization -------------------------------------------------------------------


@pytest.mark.parametrize(
    "obj",
    [
        D.DiscreteDistribution((0.0, 2.0), (0.25, 0.75)),
        D.PiecewiseUniform((0.0, 1.0, 2.0), (0.5, 0.5)),
        D.PiecewiseFunction.open_interval(-0.5, 1.5),
        D.AtomFunction({0.0: 0.1, 3.0: 1.0}),
        D.AtomMap({0.0: 4.0}),
        D.PiecewiseLinearMap((0.0,), (1.0, 1.0), (1.0, -1.0), (True,)),
        D.Channel({0.0: D.DiscreteDistribution.bernoulli(0.3)}),
    ],
)
def test_json_round_trip(obj):
    doc = json.loads(json.dumps(D.to_dict(obj)))
    assert doc["schema"] == D.SCHEMA
    assert D.from_dict(doc) == obj


def test_from_dict_rejects_other_schema():
    with pytest.raises(InvalidDistribution):
        D.from_dict({"kind": "discrete", "atoms": [0], "masses": [1], "schema": "other/v9"})


# --- properties ------------------------------------------------------------------------

masses = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8).filter(lambda m: sum(m) > 1e-3)


@settings(max_examples=100, deadline=None)
@given(masses, st.lists(st.floats(0.0, 1.0), min_size=8, max_size=8))
def test_expectation_is_finite_sum(ms, vals):
    w = np.array(ms) / sum(ms)
    atoms = np.arange(len(w), dtype=float)
    d = D.DiscreteDistribution.from_arrays(atoms, w)
    f = D.AtomFunction(zip(atoms.tolist(), vals[: len(w)]))
    assert D.expectation(d, f) == pytest.approx(float(np.dot(d.mass_array, vals[: len(w)])), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 5), st.floats(-3, 3).filter(lambda s: abs(s) > 0.05), st.floats(-3, 3))
def test_affine_pushforward_of_uniform(a, width, slope, icpt):
    u = D.PiecewiseUniform.uniform(a, a + width)
    z = D.pushforward(u, D.PiecewiseLinearMap((), (slope,), (icpt,)))
    lo, hi = sorted((slope * a + icpt, slope * (a + width) + icpt))
    assert z.breakpoints == pytest.approx((lo, hi))
    assert sum(z.segment_masses) == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 100_000))
def test_pushforward_preserves_mass(seed):
    rng = np.random.default_rng(seed)
    atoms = np.arange(6, dtype=float)
    d = D.DiscreteDistribution.from_arrays(atoms, rng.dirichlet(np.ones(6)))
    am = D.AtomMap(zip(atoms.tolist(), rng.integers(0, 3, 6).astype(float).tolist()))
    ch = D.Channel({a: D.DiscreteDistribution.from_arrays(np.arange(3.0), rng.dirichlet(np.ones(3))) for a in atoms})
    for m in (am, ch):
        assert abs(sum(D.pushforward(d, m).masses) - 1.0) <= 1e-9
    u = D.PiecewiseUniform(tuple(np.cumsum(rng.uniform(0.1, 1.0, 4))), tuple(rng.dirichlet(np.ones(3))))
    g = D.PiecewiseLinearMap((float(u.breakpoints[1]),), (float(rng.normal()), float(rng.normal())), (0.0, 1.0))
    z = D.pushforward(u, g)
    total = sum(z.segment_masses) if isinstance(z, D.PiecewiseUniform) else z.continuous_mass + sum(z.discrete.masses)
    assert abs(total - 1.0) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 100_000))
def test_complementary_hypotheses_and_label_marginal(seed):
    rng = np.random.default_rng(seed)
    atoms = np.arange(5, dtype=float)
    lab = rng.integers(0, 2, 5).astype(float)
    dom = D.Domain(D.DiscreteDistribution.from_arrays(atoms, rng.dirichlet(np.ones(5))), D.AtomFunction(zip(atoms, lab)))
    hv = rng.integers(0, 2, 5).astype(float)
    h, nh = D.AtomFunction(zip(atoms, hv)), D.AtomFunction(zip(atoms, 1.0 - hv))
    assert D.error(dom, h) + D.error(dom, nh) == pytest.approx(1.0, abs=1e-12)
    soft = D.Domain(dom.distribution, D.AtomFunction(zip(atoms, np.round(rng.random(5), 3))))
    ch = D.Channel({a: D.DiscreteDistribution.bernoulli(v) for a, v in soft.labeling.table})
    via_channel = D.pushforward(soft.distribution, ch)
    np.testing.assert_allclose(D.label_marginal(soft).masses, via_channel.masses, atol=1e-12)
