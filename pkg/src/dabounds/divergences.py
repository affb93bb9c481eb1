"""Distances between distributions (base-2 logarithms throughout).

Continuous or mixed inputs are mapped onto a common finite outcome space first:
the cells of the joint breakpoint refinement plus the atoms of either side.
For piecewise-uniform densities the likelihood ratio is constant on each cell,
so the result is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import (
    Channel,
    Distribution,
    DiscreteDistribution,
    parts,
    pushforward,
    refine_cells,
)
from .errors import AbsoluteContinuityViolation

TOL = 1e-9


@dataclass(frozen=True)
class DivergenceReport:
    name: str
    value: float
    log_base: int = 2

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "log_base": self.log_base}


def common_outcomes(p: Distribution, q: Distribution) -> tuple[np.ndarray, np.ndarray]:
    """Probability vectors of p and q over a shared finite outcome space."""
    pp, qp = parts(p), parts(q)
    grid = np.unique(np.concatenate([pp.breaks, qp.breaks]))

    def cells(part):
        if part.breaks.size == 0 or grid.size < 2:
            return np.zeros(max(grid.size - 1, 0))
        edges, masses = refine_cells(part.breaks, part.seg_w, grid)
        out = np.zeros(grid.size - 1)
        idx = np.searchsorted(grid, edges[:-1])
        np.add.at(out, idx, masses)
        return out

    atoms = np.unique(np.concatenate([pp.atoms, qp.atoms]))

    def atom_vec(part):
        out = np.zeros(atoms.size)
        if part.atoms.size:
            np.add.at(out, np.searchsorted(atoms, part.atoms), part.atom_w)
        return out

    return (
        np.concatenate([cells(pp), atom_vec(pp)]),
        np.concatenate([cells(qp), atom_vec(qp)]),
    )


def _kl_vec(p: np.ndarray, q: np.ndarray) -> float:
    pos = p > 0
    if np.any(q[pos] <= 0):
        raise AbsoluteContinuityViolation("p puts mass where q has none")
    return float(np.sum(p[pos] * np.log2(p[pos] / q[pos])))


def l1_distance(p: Distribution, q: Distribution) -> float:
    a, b = common_outcomes(p, q)
    return float(np.sum(np.abs(a - b)))


def total_variation(p: Distribution, q: Distribution) -> float:
    """sup over events |P(A) - Q(A)|, i.e. half the L1 distance."""
    a, b = common_outcomes(p, q)
    return float(np.sum(np.clip(a - b, 0.0, None)))


def kl_divergence(p: Distribution, q: Distribution) -> float:
    a, b = common_outcomes(p, q)
    return _kl_vec(a, b)


def _js_vec(a: np.ndarray, b: np.ndarray) -> float:
    # per outcome: m [(1+d) log(1+d) + (1-d) log(1-d)] / 2 with m = (a+b)/2, d = (a-b)/(a+b);
    # each cell is non-negative and stays accurate when a and b nearly agree
    s = a + b
    pos = s > 0
    m, d = 0.5 * s[pos], (a[pos] - b[pos]) / s[pos]
    up, dn = np.zeros_like(d), np.zeros_like(d)
    i, j = d > -1.0, d < 1.0
    up[i] = (1.0 + d[i]) * np.log1p(d[i])
    dn[j] = (1.0 - d[j]) * np.log1p(-d[j])
    cell = np.maximum(m * (up + dn), 0.0)
    val = 0.5 * float(np.sum(cell)) / math.log(2.0)
    return min(max(val, 0.0), 1.0)


def js_divergence(p: Distribution, q: Distribution) -> float:
    a, b = common_outcomes(p, q)
    return _js_vec(a, b)


def js_distance(p: Distribution, q: Distribution) -> float:
    return math.sqrt(js_divergence(p, q))


def bernoulli_js_distance(a: float, b: float) -> float:
    return math.sqrt(_js_vec(np.array([1 - a, a]), np.array([1 - b, b])))


def report(name: str, p: Distribution, q: Distribution) -> DivergenceReport:
    fn = {"L1": l1_distance, "KL": kl_divergence, "JS_divergence": js_divergence, "JS_distance": js_distance}[name]
    return DivergenceReport(name, fn(p, q))


def check_lin(p: Distribution, q: Distribution):
    """JS divergence against half the L1 distance."""
    from .bounds import BoundReport

    return BoundReport.upper(
        "lin_js_l1",
        js_divergence(p, q),
        [("half_l1", 0.5 * l1_distance(p, q))],
    )


def check_dpi(p: DiscreteDistribution, q: DiscreteDistribution, channel: Channel):
    """JS distance after a channel against JS distance before it."""
    from .bounds import BoundReport

    py, qy = pushforward(p, channel), pushforward(q, channel)
    return BoundReport.upper(
        "js_data_processing",
        js_distance(py, qy),
        [("js_distance_input", js_distance(p, q))],
    )
