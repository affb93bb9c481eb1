import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dabounds import bounds as B
from dabounds.domain import (
    AtomFunction,
    AtomMap,
    DiscreteDistribution,
    Domain,
    PiecewiseFunction,
    PiecewiseUniform,
    labeled_sample,
)
from dabounds.errors import InvalidConfidence, NonBinaryFunctions, SampleTooLargeForExact, UnequalSampleSizes
from dabounds.hypotheses import AllBinaryOnFinite, Constants, IntervalGrid, ThresholdGrid, critical_grid


def brute_rademacher(V):
    V = np.asarray(V, dtype=float)
    n = V.shape[1]
    tot = 0.0
    for sig in itertools.product((-1.0, 1.0), repeat=n):
        tot += max(float(np.dot(row, sig)) for row in V) / n
    return tot / 2**n


# --- reports ----------------------------------------------------------------------


def test_verdicts():
    assert B.BoundReport.upper("x", 0.5, [("a", 0.5)]).verdict == B.HOLDS
    assert B.BoundReport.upper("x", 0.5 + 1e-10, [("a", 0.5)]).verdict == B.HOLDS
    assert B.BoundReport.upper("x", 0.6, [("a", 0.5)]).verdict == B.VIOLATED
    assert B.BoundReport.upper("x", 0.6, [("a", 0.5)], precondition=False).verdict == B.VACUOUS
    assert B.BoundReport.upper("x", None, [("a", 0.5)]).verdict == B.VACUOUS


def test_report_serialization():
    r = B.BoundReport.upper("x", 0.25, [("a", 0.5), ("b", 0.25)], notes=["n"])
    d = r.to_dict()
    assert d["right_side"] == 0.75 and d["slack"] == 0.5 and d["terms"][1] == {"name": "b", "value": 0.25}
    assert r.csv_row().startswith("x,0.25,0.75,0.5,holds,a=0.5;b=0.25")
    assert "verdict" in r.table() and r.term("b") == 0.25


# --- Rademacher ---------------------------------------------------------------------


def test_all_binary_rademacher_is_half():
    cls = AllBinaryOnFinite(np.arange(8))
    est = B.rademacher(cls, np.arange(8))
    assert est.mode == "exact_enumeration" and est.value == 0.5


def test_binary_constants_small_sample():
    r = B.rademacher(Constants((0.0, 1.0)), np.zeros(4))
    assert r.value == pytest.approx(0.1875, abs=1e-15)


def test_signed_constants_value():
    est = B.rademacher_matrix(np.array([np.ones(8), -np.ones(8)]))
    assert est.value == pytest.approx(70 / 256, abs=1e-15)  # E|mean sigma| at n = 8


def test_exact_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(10):
        V = rng.integers(0, 2, (rng.integers(1, 6), rng.integers(1, 7)))
        assert B.rademacher_matrix(V, "exact").value == pytest.approx(brute_rademacher(V), abs=1e-12)


def test_exact_refuses_large_samples():
    with pytest.raises(SampleTooLargeForExact):
        B.rademacher_matrix(np.zeros((1, 17)), "exact")


def test_monte_carlo_is_reproducible_and_close():
    V = np.random.default_rng(2).integers(0, 2, (6, 10))
    a = B.rademacher_matrix(V, "monte_carlo", trials=2000, seed=3)
    b = B.rademacher_matrix(V, "monte_carlo", trials=2000, seed=3)
    assert a == b
    exact = B.rademacher_matrix(V).value
    assert abs(a.value - exact) <= 4 * a.std_error


def test_threshold_fast_path_matches_matrix():
    x = np.random.default_rng(4).random(40)
    cls = ThresholdGrid(np.linspace(0, 1, 21))
    fast = B.rademacher(cls, x, "monte_carlo", trials=300, seed=1)
    slow = B.rademacher_matrix(cls.matrix(x), "monte_carlo", trials=300, seed=1)
    assert fast.value == pytest.approx(slow.value, abs=1e-12)


# --- classical and population bounds -------------------------------------------------


def test_vc_term_formula():
    v = B.vc_term(10**6, 3, 0.05)
    assert v == pytest.approx(4 * math.sqrt((3 * math.log(1e6) + math.log(20)) / 1e6))
    assert v == pytest.approx(0.026666, abs=1e-6)
    with pytest.raises(InvalidConfidence):
        B.vc_term(10, 1, 1.5)


def test_concentration_terms():
    s, d = B.concentration_terms(1000, 0.1)
    assert s == pytest.approx(3 * math.sqrt(math.log(40) / 2000))
    assert d == pytest.approx(6 * math.sqrt(math.log(80) / 2000))


def test_population_bound_on_counterexample(src_dom, tgt_dom):
    h = PiecewiseFunction.open_interval(-0.5, 1.5)
    r = B.population_upper_bound(h, IntervalGrid(critical_grid(src_dom, tgt_dom)), src_dom, tgt_dom)
    assert r.left_side == 0.0 and r.verdict == B.HOLDS
    assert r.term("min_cross_domain_error") == 0.5


def test_empirical_bound_terms(src_dom, tgt_dom):
    h = PiecewiseFunction.open_interval(-0.5, 1.5)
    cls = ThresholdGrid(np.linspace(-1, 2, 13))
    s, t = labeled_sample(src_dom, 200, 1), labeled_sample(tgt_dom, 200, 2)
    r = B.empirical_upper_bound(h, cls, s, t, 0.05, seed=0, domains=(src_dom, tgt_dom), trials=50)
    names = [k for k, _ in r.terms]
    assert names == [
        "empirical_source_error",
        "empirical_disagreement_divergence",
        "2_rad_class",
        "4_rad_disagreement",
        "min_cross_domain_error",
        "concentration",
    ]
    assert r.verdict == B.HOLDS
    assert B.empirical_upper_bound(h, cls, s, t, 0.05, trials=50).verdict == B.VACUOUS
    with pytest.raises(UnequalSampleSizes):
        B.empirical_upper_bound(h, cls, s, labeled_sample(tgt_dom, 10, 3), 0.05)


def test_bendavid_notes_constant(src_dom, tgt_dom):
    h = PiecewiseFunction.open_interval(-0.5, 1.5)
    cls = ThresholdGrid([-0.5, 0.5, 1.5])
    s, t = labeled_sample(src_dom, 100, 1), labeled_sample(tgt_dom, 100, 2)
    r = B.bendavid_bound(h, cls, s, t, 0.0, 100, 1, 0.05, target=tgt_dom)
    assert any("C=4" in n for n in r.notes)
    # xor of thresholds at -0.5 and 0.5 catches half the source and none of the target
    assert abs(r.term("half_hdh_divergence") - 0.25) < 0.05


# --- lower bound -------------------------------------------------------------------------


def two_point_world(pt):
    atoms = (0.0, 1.0)
    d_s = Domain(DiscreteDistribution(atoms, (0.5, 0.5)), AtomFunction({0.0: 0.0, 1.0: 1.0}))
    d_t = Domain(DiscreteDistribution(atoms, (1 - pt, pt)), AtomFunction({0.0: 0.0, 1.0: 1.0}))
    return d_s, d_t


def test_lower_bound_with_constant_map():
    d_s, d_t = two_point_world(0.9)
    g = AtomMap({0.0: 0.0, 1.0: 0.0})
    key, thm = B.lower_bound_check(d_s, d_t, g, g, AtomFunction({0.0: 1.0}))
    assert key.term("djs_representation") == 0.0
    assert thm.left_side == pytest.approx(0.073397, abs=1e-6)
    assert thm.right_side == pytest.approx(0.6)
    assert thm.bound_name == "joint_error_lower_bound"


def test_lower_bound_precondition():
    assert B.joint_error_lower_bound(0.1, 0.2) == 0.0
    assert B.joint_error_lower_bound(0.5, 0.1) == pytest.approx(0.08)
    d_s, d_t = two_point_world(0.5)
    g = AtomMap({0.0: 0.0, 1.0: 1.0})
    _, thm = B.lower_bound_check(d_s, d_t, g, AtomMap({0.0: 1.0, 1.0: 0.0}), AtomFunction({0.0: 0.0, 1.0: 1.0}))
    assert thm.bound_name.endswith("two_maps")


def test_prediction_distance_rejects_soft_labels():
    dom = Domain(DiscreteDistribution((0.0,), (1.0,)), AtomFunction({0.0: 0.5}))
    with pytest.raises(NonBinaryFunctions):
        B.prediction_distance_check(dom, None, AtomFunction({0.0: 1.0}))


@settings(max_examples=80, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.sampled_from([0.0, 1.0]))
def test_prediction_distance_lemma(pa, pb, hv):
    atoms = (0.0, 1.0)
    dom = Domain(DiscreteDistribution(atoms, (1 - pa, pa)), AtomFunction({0.0: 0.0, 1.0: 1.0}))
    h = AtomFunction({0.0: hv, 1.0: 1.0 if pb > 0.5 else 0.0})
    assert B.prediction_distance_check(dom, None, h).verdict == B.HOLDS


# --- concentration --------------------------------------------------------------------------


def test_concentration_trial_small():
    freq = B.concentration_trial(ThresholdGrid(np.linspace(0, 1, 11)), PiecewiseUniform.uniform(0, 1), 50, 0.1, 100, 0)
    assert 0.0 <= freq <= B.concentration_allowance(0.1, 100)
    with pytest.raises(ValueError):
        B.concentration_trial(Constants(), PiecewiseUniform.uniform(0, 1), 50, 0.1, 10, 0)


def test_concentration_allowance():
    assert B.concentration_allowance(0.1, 1000) == pytest.approx(0.1 + 3 * math.sqrt(0.09 / 1000))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_contraction(seed):
    rng = np.random.default_rng(seed)
    V = rng.random((rng.integers(1, 5), rng.integers(1, 8)))
    L = float(rng.uniform(0.1, 2.0))
    phi = L * np.abs(np.sin(3 * V))  # Lipschitz constant <= 3L
    lhs = B.rademacher_matrix(phi).value
    assert lhs <= 3 * L * B.rademacher_matrix(V).value + B.TOL


def test_classical_and_population_share_source_error(src_dom, tgt_dom):
    # on a sample, the 'empirical' source error equals the population error of the empirical domain
    s = labeled_sample(src_dom, 300, 4)
    t = labeled_sample(tgt_dom, 300, 5)
    h = PiecewiseFunction.threshold(-0.4, 1)
    cls = ThresholdGrid([-0.5, 0.5, 1.5])
    classic = B.bendavid_bound(h, cls, s, t, 0.0, 300, 1, 0.05)
    emp_src = Domain(DiscreteDistribution.from_sample(s.points), src_dom.labeling)
    emp_tgt = Domain(DiscreteDistribution.from_sample(t.points), tgt_dom.labeling)
    pop = B.population_upper_bound(h, cls, emp_src, emp_tgt)
    assert classic.term("empirical_source_error") == pytest.approx(pop.term("source_error"), abs=1e-12)


def test_lower_bound_is_trivial_on_the_counterexample():
    from dabounds import counterexample as cx

    sc = cx.build()
    key, thm = B.lower_bound_check(sc.source, sc.target, sc.transform, sc.transform, PiecewiseFunction.threshold(0.5, 1))
    assert key.term("djs_representation") == 0.0
    assert thm.left_side == 0.0 and thm.right_side == pytest.approx(1.0)
    assert thm.verdict == B.HOLDS and any("trivial" in n for n in thm.notes)
