import numpy as np
import pytest

from dabounds import counterexample as cx
from dabounds.domain import PiecewiseLinearMap, PiecewiseUniform, error
from dabounds.hypotheses import ThresholdGrid


@pytest.fixture(scope="module")
def scenario():
    return cx.build()


def test_reference_hypothesis_is_perfect(scenario):
    assert error(scenario.source, scenario.reference_hypothesis) == 0.0
    assert error(scenario.target, scenario.reference_hypothesis) == 0.0


def test_pushforwards_are_unit_uniform(scenario):
    u = PiecewiseUniform.uniform(0.0, 1.0)
    assert scenario.z_source == u and scenario.z_target == u


def test_invariance_values_are_zero(scenario):
    vals = cx.invariance_values(scenario, 101)
    assert all(v == 0.0 for v in vals.values())


@pytest.mark.parametrize("name", ["threshold_grid", "interval_grid", "interval_complement_grid", "constants"])
def test_joint_error_is_one_for_every_member(scenario, name):
    cls = cx.builtin_classes(cx.representation_grid(scenario, 101))[name]
    sums = cx.joint_errors(scenario, cls)
    assert np.max(np.abs(sums - 1.0)) <= cx.JOINT_TOL


def test_comparison_numbers(scenario):
    c = cx.compare_bounds(scenario, 101)
    assert c["lambda_star"] == 1.0
    assert c["min_cross_domain_error"] == 0.5
    assert c["induced_labeling_l1"] == 1.0
    assert c["cross_term_tighter"]
    # before the transform the complement class can label the empty gap freely
    assert c["lambda_star_interval_complement_original"] == 0.5
    assert c["lambda_star_interval_original"] == 0.0


def test_classical_bound_is_vacuous_on_representation(scenario):
    r = cx.bendavid_on_representation(scenario, n=200)
    assert r.right_side >= 1.0 and any("vacuous" in n for n in r.notes)


def test_verify_bundle(scenario):
    b = cx.verify(scenario, 101)
    assert b["verified"] and all(b["checks"].values())


def test_identity_map_breaks_invariance():
    sc = cx.build(PiecewiseLinearMap((), (1.0,), (0.0,)))
    b = cx.verify(sc, 101)
    assert not b["verified"] and not b["checks"]["pushforward_uniform"]


def test_threshold_divergence_after_transform(scenario):
    zs, zt = scenario.z_source, scenario.z_target
    cls = ThresholdGrid(np.linspace(0, 1, 11))
    assert np.array_equal(cls.ones_mass(zs), cls.ones_mass(zt))
