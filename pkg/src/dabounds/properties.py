"""Randomized suites for the inequalities that must hold on every valid input.

Instances are small discrete worlds: supports of at most 8 atoms, classes of at
most 64 members. Each suite counts instances where the reported left side
exceeds the right side by more than the tolerance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bounds import (
    TOL,
    VACUOUS,
    VIOLATED,
    BoundReport,
    lower_bound_check,
    population_upper_bound,
    prediction_distance_check,
    trial_rng,
)
from .divergences import check_dpi, check_lin
from .domain import AtomFunction, AtomMap, Channel, DiscreteDistribution, Domain, disagreement, error
from .hypotheses import ExplicitClass, disagreement_divergence

MAX_ATOMS = 8
MAX_MEMBERS = 64
DEFAULT_INSTANCES = 500


@dataclass(frozen=True)
class SuiteResult:
    name: str
    instances: int
    violations: int
    vacuous: int
    max_excess: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "instances": self.instances,
            "violations": self.violations,
            "vacuous": self.vacuous,
            "max_excess": self.max_excess,
            "passed": self.passed,
        }


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def _masses(rng, k: int, sparse: bool = True) -> np.ndarray:
    w = rng.dirichlet(np.full(k, rng.choice([0.3, 1.0, 3.0])))
    if sparse and k > 1 and rng.random() < 0.3:
        w[rng.integers(k)] = 0.0
        w = w / w.sum() if w.sum() > 0 else np.full(k, 1.0 / k)
    return w


def random_atoms(rng, k: int | None = None) -> np.ndarray:
    k = k or int(rng.integers(1, MAX_ATOMS + 1))
    return np.sort(rng.choice(np.arange(-10, 11), size=k, replace=False)).astype(float)


def random_distribution(rng, atoms: np.ndarray) -> DiscreteDistribution:
    return DiscreteDistribution.from_arrays(atoms, _masses(rng, atoms.size))


def random_function(rng, atoms: np.ndarray, binary: bool) -> AtomFunction:
    v = rng.integers(0, 2, atoms.size).astype(float) if binary else np.round(rng.random(atoms.size), 3)
    return AtomFunction(zip(atoms.tolist(), v.tolist()))


def random_class(rng, atoms: np.ndarray, binary: bool, size: int | None = None) -> ExplicitClass:
    size = size or int(rng.integers(1, 9))
    return ExplicitClass([random_function(rng, atoms, binary) for _ in range(min(size, MAX_MEMBERS))])


def random_pair(rng, binary_labels: bool):
    """Two domains on a shared atom set (each may leave some atoms unweighted)."""
    atoms = random_atoms(rng)
    ds = Domain(random_distribution(rng, atoms), random_function(rng, atoms, binary_labels))
    dt = Domain(random_distribution(rng, atoms), random_function(rng, atoms, binary_labels))
    return atoms, ds, dt


def random_map(rng, atoms: np.ndarray, out_atoms: np.ndarray, stochastic: bool):
    if not stochastic:
        return AtomMap(zip(atoms.tolist(), rng.choice(out_atoms, atoms.size).tolist()))
    rows = {a: DiscreteDistribution.from_arrays(out_atoms, _masses(rng, out_atoms.size)) for a in atoms.tolist()}
    return Channel(rows)


def _z_atoms(rng) -> np.ndarray:
    return np.arange(int(rng.integers(1, MAX_ATOMS + 1)), dtype=float)


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def _run(name: str, instances: int, seed: int, stream: int, one: Callable, decisive: bool = False) -> SuiteResult:
    """Run ``instances`` draws; with ``decisive`` keep drawing until that many reports are non-vacuous."""
    violations = vacuous = counted = 0
    worst = -np.inf
    i = 0
    while counted < instances:
        rng = trial_rng(seed, stream, i)
        i += 1
        reports = one(rng)
        if decisive and any(r.verdict == VACUOUS for r in reports):
            vacuous += 1
            continue
        counted += 1
        for r in reports:
            if r.verdict == VACUOUS:
                vacuous += 1
                continue
            worst = max(worst, r.left_side - r.right_side)
            violations += r.verdict == VIOLATED
    return SuiteResult(name, counted, violations, vacuous, float(worst))


def _population(rng):
    binary = rng.random() < 0.5
    atoms, ds, dt = random_pair(rng, binary)
    cls = random_class(rng, atoms, binary or rng.random() < 0.5, int(rng.integers(1, 17)))
    h = cls.member(int(rng.integers(len(cls)))) if rng.random() < 0.5 else random_function(rng, atoms, binary)
    return [population_upper_bound(h, cls, ds, dt)]


def _htilde(rng):
    atoms = random_atoms(rng)
    p, q = random_distribution(rng, atoms), random_distribution(rng, atoms)
    cls = random_class(rng, atoms, rng.random() < 0.5, int(rng.integers(1, 9)))
    fns = cls.members()
    d, _ = disagreement_divergence(fns, p, q)
    out = []
    for a, b in itertools.product(fns, repeat=2):
        gap = abs(disagreement(p, a, b) - disagreement(q, a, b))
        out.append(BoundReport.upper("disagreement_lemma", gap, [("d_tilde", d)]))
    return out


def _triangle(rng):
    atoms = random_atoms(rng)
    dist = random_distribution(rng, atoms)
    f1, f2, f3 = (random_function(rng, atoms, rng.random() < 0.3) for _ in range(3))
    return [
        BoundReport.upper(
            "error_triangle",
            disagreement(dist, f1, f3),
            [("d12", disagreement(dist, f1, f2)), ("d23", disagreement(dist, f2, f3))],
        )
    ]


def _lin(rng):
    atoms = random_atoms(rng)
    return [check_lin(random_distribution(rng, atoms), random_distribution(rng, atoms))]


def _dpi(rng):
    atoms = random_atoms(rng)
    p, q = random_distribution(rng, atoms), random_distribution(rng, atoms)
    return [check_dpi(p, q, random_map(rng, atoms, _z_atoms(rng), stochastic=True))]


def _prediction(rng):
    atoms = random_atoms(rng)
    dom = Domain(random_distribution(rng, atoms), random_function(rng, atoms, True))
    z = _z_atoms(rng)
    g = random_map(rng, atoms, z, stochastic=False)
    return [prediction_distance_check(dom, g, random_function(rng, z, True))]


def _lower(rng, shared: bool, which: int):
    atoms, ds, dt = random_pair(rng, True)
    z = _z_atoms(rng)
    stochastic = rng.random() < 0.5
    gs = random_map(rng, atoms, z, stochastic)
    gt = gs if shared else random_map(rng, atoms, z, stochastic)
    return [lower_bound_check(ds, dt, gs, gt, random_function(rng, z, True))[which]]


# name -> (instance generator, rng stream, count only non-vacuous instances)
SUITES = {
    "population_upper_bound": (_population, 1, False),
    "disagreement_lemma": (_htilde, 2, False),
    "error_triangle": (_triangle, 3, False),
    "lin_js_l1": (_lin, 4, False),
    "js_data_processing": (_dpi, 5, False),
    "prediction_distance": (_prediction, 6, False),
    "key_lemma": (lambda r: _lower(r, True, 0), 7, False),
    "lower_bound_theorem": (lambda r: _lower(r, True, 1), 8, True),
    "corollary_two_maps": (lambda r: _lower(r, False, 1), 9, True),
}


def run_suite(name: str, instances: int = DEFAULT_INSTANCES, seed: int = 42) -> SuiteResult:
    fn, stream, decisive = SUITES[name]
    return _run(name, instances, seed, stream, fn, decisive)


def run_all(instances: int = DEFAULT_INSTANCES, seed: int = 42) -> list[SuiteResult]:
    return [run_suite(name, instances, seed) for name in SUITES]


def random_population_report(rng) -> BoundReport:
    """One randomized population-bound report (used by the CLI)."""
    return _population(rng)[0]


__all__ = ["SuiteResult", "SUITES", "run_suite", "run_all", "TOL", "error"]
