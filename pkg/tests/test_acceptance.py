"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (lines appear uncaptured) or
``python3 tests/test_acceptance.py`` for the summary alone.
"""

import math
import sys
import time

import numpy as np
import pytest

from dabounds import adversarial as A
from dabounds import counterexample as cx
from dabounds import properties as P
from dabounds.bounds import concentration_allowance, concentration_trial, rademacher, rademacher_matrix, trial_rng
from dabounds.domain import PiecewiseUniform, error, sample
from dabounds.hypotheses import AllBinaryOnFinite, ThresholdGrid, critical_grid, empirical_h_divergence, h_divergence

SEEDS = (0, 1, 2, 3, 4)


@pytest.fixture
def check(capsys):
    def _check(name: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail

    return _check


def test_counterexample_identity(check):
    t0 = time.perf_counter()
    sc = cx.build()
    grid = cx.representation_grid(sc, cx.GRID_POINTS)
    devs = {}
    for name, cls in cx.builtin_classes(grid).items():
        devs[name] = float(np.max(np.abs(cx.joint_errors(sc, cls) - 1.0)))
    ref = (error(sc.source, sc.reference_hypothesis), error(sc.target, sc.reference_hypothesis))
    u = PiecewiseUniform.uniform(0.0, 1.0)
    push = sc.z_source == u and sc.z_target == u
    secs = time.perf_counter() - t0
    ok = all(d <= 1e-12 for d in devs.values()) and ref == (0.0, 0.0) and push and secs < 5.0
    worst = max(devs.values())
    check("counterexample", ok, f"max|joint-1|={worst:.1e} h*=({ref[0]}, {ref[1]}) pushforward_uniform={push} {secs:.2f}s")


def test_bound_comparison_numbers(check):
    t0 = time.perf_counter()
    c = cx.compare_bounds(cx.build())
    secs = time.perf_counter() - t0
    ok = (
        c["lambda_star"] == 1.0
        and c["min_cross_domain_error"] == 0.5
        and c["induced_labeling_l1"] == 1.0
        and secs < 5.0
    )
    check(
        "bound_comparison",
        ok,
        f"lambda*={c['lambda_star']} min_cross={c['min_cross_domain_error']} L1={c['induced_labeling_l1']} {secs:.2f}s"
        f" (original-space complement lambda*={c['lambda_star_interval_complement_original']})",
    )


def test_property_suites(check):
    t0 = time.perf_counter()
    results = P.run_all(instances=500, seed=42)
    secs = time.perf_counter() - t0
    bad = [r.name for r in results if not r.passed or r.instances < 500]
    ok = not bad and len(results) == 9 and secs < 60.0
    total = sum(r.violations for r in results)
    check("property_suites", ok, f"{len(results)} suites x 500, violations={total} failing={bad} {secs:.1f}s")


def test_rademacher(check):
    exact8 = rademacher(AllBinaryOnFinite(range(8)), np.arange(8)).value
    within, cases = True, 0
    for i in range(12):
        rng = trial_rng(0, 50, i)
        n = int(rng.integers(2, 13))
        V = rng.integers(0, 2, (int(rng.integers(1, 9)), n)).astype(float)
        ex = rademacher_matrix(V, "exact").value
        mc = rademacher_matrix(V, "monte_carlo", trials=2000, seed=i)
        within &= abs(mc.value - ex) <= 4 * mc.std_error + 1e-15
        cases += 1
    contraction = 0
    for i in range(100):
        rng = trial_rng(0, 51, i)
        n = int(rng.integers(1, 11))
        V = rng.integers(0, 2, (int(rng.integers(1, 9)), n)).astype(float)
        f = rng.random(n)
        # |h - f| is 1-Lipschitz in h coordinate-wise
        contraction += rademacher_matrix(np.abs(V - f), "exact").value <= rademacher_matrix(V, "exact").value + 1e-12
    ok = exact8 == 0.5 and within and contraction == 100
    check("rademacher", ok, f"all-binary n=8 -> {exact8}; MC within 4 SE on {cases} cases={within}; contraction {contraction}/100")


def test_concentration(check):
    delta, n, trials = 0.1, 200, 1000
    freq = concentration_trial(ThresholdGrid(np.linspace(0, 1, 51)), PiecewiseUniform.uniform(0, 1), n, delta, trials, seed=0)
    allow = concentration_allowance(delta, trials)
    check("concentration", freq <= allow, f"violation frequency {freq:.3f} <= {allow:.4f}")


def _runs(label_prob):
    spec = A.SyntheticDomainSpec(label_prob=label_prob)
    out = []
    for s in SEEDS:
        t0 = time.perf_counter()
        traj = A.train(A.with_seed(spec, s), A.Hyper())
        out.append((traj, time.perf_counter() - t0))
    return out


@pytest.fixture(scope="module")
def shifted_runs():
    return _runs((0.5, 0.9))


@pytest.fixture(scope="module")
def balanced_runs():
    return _runs((0.5, 0.5))


def test_simulator(check, shifted_runs, balanced_runs):
    falls = sum(A.rise_then_fall(t) for t, _ in shifted_runs)
    consistent = all(t.consistency_holds(0.05) for t, _ in shifted_runs + balanced_runs)
    bal_slopes = [A.post_peak_slope(t) for t, _ in balanced_runs]
    src, tgt, _ = A.make_domains(A.SyntheticDomainSpec(n_train=64))
    grad = max(
        A.gradient_check(A.NetParams.init(A.Hyper().hidden, 1, s), A.Batch(src.x[:32], src.y[:32], tgt.x[:32]))
        for s in range(3)
    )
    slowest = max(sec for _, sec in shifted_runs + balanced_runs)
    ok = falls >= 4 and consistent and min(bal_slopes) >= -0.0005 and grad < 1e-4 and slowest < 300
    check(
        "simulator",
        ok,
        f"rise-then-fall {falls}/5; lower-bound consistent={consistent}; min balanced slope={min(bal_slopes):.2e};"
        f" grad check {grad:.1e}; slowest run {slowest:.1f}s",
    )


def test_empirical_h_divergence(check):
    p, q = PiecewiseUniform.uniform(-1, 0), PiecewiseUniform.uniform(1, 2)
    cls = ThresholdGrid(critical_grid(p, q))
    exact, _ = h_divergence(cls, p, q)
    est = empirical_h_divergence(cls, sample(p, 10000, 1), sample(q, 10000, 2))
    check("empirical_h_divergence", exact == 1.0 and abs(est - exact) <= 0.05, f"estimate {est:.4f} vs exact {exact}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
