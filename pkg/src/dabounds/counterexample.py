"""The aligned-but-unlearnable scenario: two disjoint uniform domains and a folding map.

Source U(-1, 0) labelled 1 on (-1/2, 0]; target U(1, 2) labelled 1 on [1, 3/2).
The map g(x) = x + 1 for x <= 0 and x - 1 otherwise sends both domains onto
U(0, 1) but with opposite labelings, so every hypothesis on the representation
has joint error exactly 1 while h*(x) = 1{x in (-1/2, 3/2)} is perfect before g.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounds import BoundReport, bendavid_bound, population_upper_bound
from .divergences import js_distance, l1_distance, total_variation
from .domain import (
    DiscreteDistribution,
    Domain,
    PiecewiseFunction,
    PiecewiseLinearMap,
    PiecewiseUniform,
    disagreement,
    error,
    induced_domain,
    pushforward,
)
from .errors import DABoundsError
from .hypotheses import (
    Constants,
    HypothesisClass,
    IntervalComplementGrid,
    IntervalGrid,
    ThresholdGrid,
    best_joint_hypothesis,
    critical_grid,
    cross_domain_errors,
    h_divergence,
)

JOINT_TOL = 1e-12
GRID_POINTS = 1001
INVARIANCE_BINS = 64


def default_transform() -> PiecewiseLinearMap:
    return PiecewiseLinearMap((0.0,), (1.0, 1.0), (1.0, -1.0), left_inclusive=(True,))


@dataclass(frozen=True)
class Scenario:
    source: Domain
    target: Domain
    transform: PiecewiseLinearMap
    reference_hypothesis: PiecewiseFunction

    @property
    def z_source(self):
        return pushforward(self.source.distribution, self.transform)

    @property
    def z_target(self):
        return pushforward(self.target.distribution, self.transform)

    def induced(self) -> tuple[Domain, Domain]:
        return induced_domain(self.source, self.transform), induced_domain(self.target, self.transform)


def build(transform: Optional[PiecewiseLinearMap] = None) -> Scenario:
    f_s = PiecewiseFunction.step((-0.5,), (0.0, 1.0), left_inclusive=(True,))
    f_t = PiecewiseFunction.step((1.5,), (1.0, 0.0), left_inclusive=(False,))
    return Scenario(
        source=Domain(PiecewiseUniform.uniform(-1.0, 0.0), f_s),
        target=Domain(PiecewiseUniform.uniform(1.0, 2.0), f_t),
        transform=transform if transform is not None else default_transform(),
        reference_hypothesis=PiecewiseFunction.open_interval(-0.5, 1.5),
    )


def representation_grid(scenario: Scenario, points: int = GRID_POINTS) -> np.ndarray:
    """Evenly spaced parameters on [0, 1] plus the critical points of the induced domains."""
    return np.union1d(np.linspace(0.0, 1.0, points), critical_grid(*scenario.induced()))


def builtin_classes(grid: np.ndarray) -> dict[str, HypothesisClass]:
    return {
        "threshold_grid": ThresholdGrid(grid),
        "interval_grid": IntervalGrid(grid),
        "interval_complement_grid": IntervalComplementGrid(grid),
        "constants": Constants((0.0, 1.0)),
    }


def _binned(dist, bins: int, lo: float, hi: float) -> DiscreteDistribution:
    edges = np.linspace(lo, hi, bins + 1)
    masses = np.diff(np.array([dist.cdf(e) for e in edges]))
    masses = np.clip(masses, 0.0, None)
    return DiscreteDistribution.from_arrays(np.arange(bins), masses / masses.sum())


def invariance_values(scenario: Scenario, points: int = GRID_POINTS) -> dict[str, float]:
    zs, zt = scenario.z_source, scenario.z_target
    grid = np.union1d(np.linspace(0.0, 1.0, points), critical_grid(zs, zt))
    out = {}
    for name, cls in (("threshold_grid", ThresholdGrid(grid)), ("interval_grid", IntervalGrid(grid))):
        out[name] = h_divergence(cls, zs, zt)[0]
    out["js_distance"] = js_distance(zs, zt)
    if hasattr(zs, "cdf") and hasattr(zt, "cdf"):
        lo = min(zs.breakpoints[0], zt.breakpoints[0])
        hi = max(zs.breakpoints[-1], zt.breakpoints[-1])
        # all-binary class on a finite support: the sup over events is the total variation
        out[f"all_binary_{INVARIANCE_BINS}_bins"] = total_variation(
            _binned(zs, INVARIANCE_BINS, lo, hi), _binned(zt, INVARIANCE_BINS, lo, hi)
        )
    else:
        out["total_variation"] = total_variation(zs, zt)
    return out


def verify_invariance(scenario: Scenario) -> BoundReport:
    """Largest divergence between the two pushforwards, checked against 0."""
    vals = invariance_values(scenario)
    return BoundReport.upper(
        "representation_invariance",
        max(vals.values()),
        [("zero", 0.0)],
        notes=[f"{k}={v!r}" for k, v in vals.items()],
    )


def joint_errors(scenario: Scenario, cls: HypothesisClass) -> np.ndarray:
    """eps_S(h o g) + eps_T(h o g) for every member h."""
    ind_s, ind_t = scenario.induced()
    return cls.errors(ind_s) + cls.errors(ind_t)


def verify_joint_error(scenario: Scenario, cls: HypothesisClass) -> BoundReport:
    """Every member must have joint error 1 on the representation space."""
    sums = joint_errors(scenario, cls)
    dev = float(np.max(np.abs(sums - 1.0)))
    return BoundReport.upper(
        f"joint_error_identity[{cls.kind}]",
        dev,
        [("tolerance", JOINT_TOL)],
        notes=[f"members={len(cls)}", f"min={sums.min()!r}", f"max={sums.max()!r}"],
    )


def compare_bounds(scenario: Scenario, points: int = GRID_POINTS) -> dict:
    """Numbers behind the comparison of the λ* term with the cross-domain term."""
    ind_s, ind_t = scenario.induced()
    x_grid = np.union1d(np.linspace(-1.0, 2.0, 3 * (points - 1) + 1), critical_grid(scenario.source, scenario.target))
    z_grid = representation_grid(scenario, points)
    comp_x = IntervalComplementGrid(x_grid)
    comp_z = IntervalComplementGrid(z_grid)
    h_x, lam_x = best_joint_hypothesis(comp_x, scenario.source, scenario.target)
    h_z, lam_z = best_joint_hypothesis(comp_z, ind_s, ind_t)
    _, lam_ref = best_joint_hypothesis(IntervalGrid(x_grid), scenario.source, scenario.target)
    cross = cross_domain_errors(scenario.source, scenario.target)
    l1 = disagreement(ind_s.distribution, ind_s.labeling, ind_t.labeling)
    h = scenario.reference_hypothesis
    pop = population_upper_bound(h, IntervalGrid(critical_grid(scenario.source, scenario.target)), scenario.source, scenario.target)
    return {
        "lambda_star": lam_z,
        "lambda_star_interval_complement_original": lam_x,
        "lambda_star_interval_original": lam_ref,
        "cross_domain_errors": list(cross),
        "min_cross_domain_error": min(cross),
        "induced_labeling_l1": l1,
        "cross_term_tighter": bool(min(cross) < lam_z),
        "population_upper_bound": pop.to_dict(),
        "witness_original": h_x.to_dict() if hasattr(h_x, "to_dict") else None,
    }


def verify(scenario: Optional[Scenario] = None, points: int = GRID_POINTS) -> dict:
    """Run every check and collect a JSON-ready bundle with an overall verdict."""
    scenario = scenario or build()
    checks: list[tuple[str, bool]] = []
    bundle: dict = {}
    try:
        src, tgt = scenario.source, scenario.target
        h = scenario.reference_hypothesis
        e_ref = (error(src, h), error(tgt, h))
        bundle["reference_errors"] = list(e_ref)
        checks.append(("reference_perfect", e_ref == (0.0, 0.0)))

        zs, zt = scenario.z_source, scenario.z_target
        u01 = PiecewiseUniform.uniform(0.0, 1.0)
        bundle["pushforward_source"] = _dist_summary(zs)
        bundle["pushforward_target"] = _dist_summary(zt)
        checks.append(("pushforward_uniform", _same(zs, u01) and _same(zt, u01)))

        inv = verify_invariance(scenario)
        bundle["invariance"] = inv.to_dict()
        checks.append(("invariance", inv.left_side == 0.0))

        bundle["joint_error"] = {}
        for name, cls in builtin_classes(representation_grid(scenario, points)).items():
            r = verify_joint_error(scenario, cls)
            bundle["joint_error"][name] = r.to_dict()
            checks.append((f"joint_error_{name}", r.verdict == "holds"))

        cmp_ = compare_bounds(scenario, points)
        bundle["comparison"] = cmp_
        checks.append(("lambda_star_transformed", cmp_["lambda_star"] == 1.0))
        checks.append(("min_cross_term", cmp_["min_cross_domain_error"] == 0.5))
        checks.append(("induced_l1", cmp_["induced_labeling_l1"] == 1.0))
        checks.append(("cross_term_tighter", cmp_["cross_term_tighter"]))
    except DABoundsError as exc:
        checks.append((f"error:{type(exc).__name__}", False))
        bundle["error"] = str(exc)
    bundle["checks"] = {k: v for k, v in checks}
    bundle["verified"] = all(v for _, v in checks)
    return bundle


def _same(p, q) -> bool:
    return l1_distance(p, q) == 0.0


def _dist_summary(d) -> dict:
    from .domain import to_dict

    return to_dict(d)


def bendavid_on_representation(scenario: Scenario, n: int = 1000, seed: int = 0, delta: float = 0.05) -> BoundReport:
    """Classical bound on the representation space; λ* = 1 makes it vacuous."""
    from .domain import labeled_sample

    ind_s, ind_t = scenario.induced()
    cls = IntervalComplementGrid(representation_grid(scenario, 101))
    _, lam = best_joint_hypothesis(cls, ind_s, ind_t)
    errs = cls.errors(ind_s)
    h = cls.member(int(np.argmin(errs)))
    emp_s = labeled_sample(ind_s, n, seed)
    emp_t = labeled_sample(ind_t, n, seed + 1)
    return bendavid_bound(h, cls, emp_s, emp_t, lam, n, vc_dim=2, delta=delta, target=ind_t)
