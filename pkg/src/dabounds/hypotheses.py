"""Finite hypothesis classes, XOR / disagreement closures, and exact H-divergence.

Grid classes (thresholds, intervals, interval complements) evaluate masses and
errors through cumulative sums, so grids of a thousand points (half a million
intervals) stay cheap. All other classes go through the generic cell
representation of :mod:`dabounds.domain`.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .domain import (
    SCHEMA,
    AtomFunction,
    DiscreteDistribution,
    Distribution,
    Domain,
    PiecewiseFunction,
    cell_representation,
    disagreement,
    empirical,
    error,
    from_dict,
    parts,
    pointwise,
    refine_cells,
)
from .errors import ClassTooLarge, InvalidFunction, NonBinaryClass, UndefinedOnSupport

MAX_FINITE_ATOMS = 20


def _breaks_of(fns) -> np.ndarray:
    bs = [np.asarray(getattr(f, "breakpoints", ()), dtype=float) for f in fns]
    return np.unique(np.concatenate(bs + [np.zeros(0)]))


def critical_grid(*objects, margin: float = 1.0) -> np.ndarray:
    """Breakpoints and atoms of the given objects, their midpoints, and two outer points.

    A threshold or interval objective is constant between consecutive critical
    points, so a grid class over this set attains the supremum over all
    thresholds or intervals on the real line.
    """
    pts = []
    for obj in objects:
        if hasattr(obj, "breakpoints") and not hasattr(obj, "segment_masses"):
            pts.append(np.asarray(obj.breakpoints, dtype=float))
            if hasattr(obj, "_keys"):
                pts.append(obj._keys)
            continue
        if isinstance(obj, Domain):
            pts.append(critical_grid(obj.distribution, obj.labeling, margin=0.0))
            continue
        try:
            p = parts(obj)
        except TypeError:
            pts.append(np.asarray(obj, dtype=float).ravel())
            continue
        pts.extend([p.breaks, p.atoms])
    u = np.unique(np.concatenate(pts + [np.zeros(0)]))
    if u.size == 0:
        return np.zeros(1)
    mids = 0.5 * (u[:-1] + u[1:])
    outer = [u[0] - margin, u[-1] + margin] if margin > 0 else []
    return np.unique(np.concatenate([u, mids, outer]))


class _SignedCDF:
    """Cumulative mass of w(x) dD(x) for a weight w constant between ``breaks``."""

    def __init__(self, dist: Distribution, weight=None, breaks=()):
        p = parts(dist)
        edges, cm = refine_cells(p.breaks, p.seg_w, np.asarray(breaks, dtype=float))
        atom_w = p.atom_w
        if weight is not None:
            if edges.size:
                wv = weight(0.5 * (edges[:-1] + edges[1:]))
                if np.any(np.isnan(wv) & (cm > 0)):
                    raise UndefinedOnSupport("labeling undefined on part of the support")
                cm = np.where(cm > 0, cm * np.nan_to_num(wv), 0.0)
            if atom_w.size:
                aw = weight(p.atoms)
                if np.any(np.isnan(aw) & (atom_w > 0)):
                    raise UndefinedOnSupport("labeling undefined at a support atom")
                atom_w = np.where(atom_w > 0, atom_w * np.nan_to_num(aw), 0.0)
        self.edges = edges
        self.cum_c = np.concatenate([[0.0], np.cumsum(cm)]) if edges.size else np.zeros(1)
        self.atoms = p.atoms
        self.cum_a = np.concatenate([[0.0], np.cumsum(atom_w)])
        self.total = float(self.cum_c[-1] + self.cum_a[-1])

    def __call__(self, t, inclusive: bool = True) -> np.ndarray:
        """Mass of (-inf, t] if inclusive else (-inf, t)."""
        t = np.asarray(t, dtype=float)
        if self.edges.size:
            c = np.interp(t, self.edges, self.cum_c, left=0.0, right=self.cum_c[-1])
        else:
            c = np.zeros(t.shape)
        side = "right" if inclusive else "left"
        a = self.cum_a[np.searchsorted(self.atoms, t, side=side)] if self.atoms.size else 0.0
        return c + a


class HypothesisClass:
    """Finite, enumerable family of [0,1]-valued functions on the real line."""

    kind = "explicit_list"

    def __len__(self) -> int:
        raise NotImplementedError

    def member(self, i: int):
        raise NotImplementedError

    def __iter__(self) -> Iterator:
        for i in range(len(self)):
            yield self.member(i)

    def members(self) -> list:
        return list(self)

    @property
    def is_binary(self) -> bool:
        return all(h.is_binary for h in self)

    @property
    def breakpoints(self) -> np.ndarray:
        return _breaks_of(self)

    def matrix(self, points) -> np.ndarray:
        """Member values at ``points``: shape (len(self), len(points))."""
        points = np.asarray(points, dtype=float)
        return np.array([h.evaluate(points) for h in self]).reshape(len(self), points.size)

    def _weighted(self, dist: Distribution, extra=()):
        reps, w = cell_representation(dist, np.concatenate([self.breakpoints, np.asarray(extra, dtype=float)]))
        keep = w > 0
        reps, w = reps[keep], w[keep]
        V = self.matrix(reps)
        if np.any(np.isnan(V)):
            raise UndefinedOnSupport("a member is undefined on part of the support")
        return reps, w, V

    def ones_mass(self, dist: Distribution) -> np.ndarray:
        """E[h] per member; for binary members this is Pr(h = 1)."""
        _, w, V = self._weighted(dist)
        return V @ w

    def errors(self, domain: Domain) -> np.ndarray:
        """E|h - f| per member under the domain."""
        f = domain.labeling
        reps, w, V = self._weighted(domain.distribution, getattr(f, "breakpoints", ()))
        fv = f.evaluate(reps)
        if np.any(np.isnan(fv)):
            raise UndefinedOnSupport("labeling undefined on part of the support")
        return np.abs(V - fv) @ w

    def to_dict(self) -> dict:
        raise NotImplementedError


class ExplicitClass(HypothesisClass):
    kind = "explicit_list"

    def __init__(self, members: Iterable, dedupe: bool = False):
        ms = []
        seen = set()
        for h in members:
            if isinstance(h, dict):
                h = AtomFunction(h)
            if dedupe:
                h = h.simplify()
                if h in seen:
                    continue
                seen.add(h)
            ms.append(h)
        if not ms:
            raise InvalidFunction("a hypothesis class needs at least one member")
        self._members = ms

    def __len__(self) -> int:
        return len(self._members)

    def member(self, i: int):
        return self._members[i]

    def __iter__(self):
        return iter(self._members)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "members": [h.to_dict() for h in self._members]}


class Constants(HypothesisClass):
    kind = "constants"

    def __init__(self, values: Sequence[float] = (0.0, 1.0)):
        self.values = tuple(float(v) for v in values)

    def __len__(self):
        return len(self.values)

    def member(self, i):
        return PiecewiseFunction.constant(self.values[i])

    @property
    def breakpoints(self):
        return np.zeros(0)

    def matrix(self, points):
        points = np.asarray(points, dtype=float)
        return np.repeat(np.array(self.values)[:, None], points.size, axis=1)

    def ones_mass(self, dist):
        return np.array(self.values)

    def to_dict(self):
        return {"kind": self.kind, "values": list(self.values)}


class _GridClass(HypothesisClass):
    """Binary class parametrised by points of a grid, evaluated with cumulative sums."""

    def __init__(self, breakpoints: Sequence[float]):
        grid = np.unique(np.asarray(breakpoints, dtype=float))
        if grid.size == 0:
            raise InvalidFunction("grid must be non-empty")
        self.grid = grid

    @property
    def breakpoints(self):
        return self.grid

    @property
    def is_binary(self) -> bool:
        return True

    def _ones(self, F: _SignedCDF) -> np.ndarray:
        raise NotImplementedError

    def ones_mass(self, dist):
        return self._ones(_SignedCDF(dist))

    def errors(self, domain):
        # binary h: |h - f| = f + h (1 - 2f)
        f = domain.labeling
        base = _SignedCDF(domain.distribution, f.evaluate, f.breakpoints).total
        signed = _SignedCDF(domain.distribution, lambda x: 1.0 - 2.0 * f.evaluate(x), f.breakpoints)
        return base + self._ones(signed)

    def to_dict(self):
        return {"kind": self.kind, "breakpoints": self.grid.tolist()}


class ThresholdGrid(_GridClass):
    """``1{x > t}`` (direction +1) and ``1{x <= t}`` (direction -1) for t on the grid."""

    kind = "threshold_grid"

    def __init__(self, breakpoints, directions: Sequence[int] = (1, -1)):
        super().__init__(breakpoints)
        self.directions = tuple(int(d) for d in directions)

    def __len__(self):
        return self.grid.size * len(self.directions)

    def _param(self, i):
        return self.directions[i // self.grid.size], float(self.grid[i % self.grid.size])

    def member(self, i):
        d, t = self._param(i)
        return PiecewiseFunction.threshold(t, d)

    def matrix(self, points):
        x = np.asarray(points, dtype=float)[None, :]
        t = self.grid[:, None]
        blocks = [(x > t) if d > 0 else (x <= t) for d in self.directions]
        return np.concatenate(blocks).astype(float)

    def _ones(self, F):
        up = F.total - F(self.grid, inclusive=True)
        down = F(self.grid, inclusive=True)
        return np.concatenate([up if d > 0 else down for d in self.directions])

    def to_dict(self):
        return {"kind": self.kind, "breakpoints": self.grid.tolist(), "directions": list(self.directions)}


class IntervalGrid(_GridClass):
    """Indicators of open intervals (a, b) with a < b both on the grid."""

    kind = "interval_grid"

    def __init__(self, breakpoints):
        super().__init__(breakpoints)
        if self.grid.size < 2:
            raise InvalidFunction("interval grid needs at least two points")
        self._i, self._j = np.triu_indices(self.grid.size, 1)

    def __len__(self):
        return self._i.size

    def bounds(self, i):
        return float(self.grid[self._i[i]]), float(self.grid[self._j[i]])

    def member(self, i):
        return PiecewiseFunction.open_interval(*self.bounds(i))

    def matrix(self, points):
        x = np.asarray(points, dtype=float)[None, :]
        a, b = self.grid[self._i][:, None], self.grid[self._j][:, None]
        return ((x > a) & (x < b)).astype(float)

    def _ones(self, F):
        right = F(self.grid, inclusive=False)[self._j]
        left = F(self.grid, inclusive=True)[self._i]
        return right - left


class IntervalComplementGrid(IntervalGrid):
    """h(x) = 0 iff a <= x <= b, for a < b on the grid."""

    kind = "interval_complement_grid"

    def member(self, i):
        a, b = self.bounds(i)
        return PiecewiseFunction((a, b), (1.0, 0.0, 1.0), (0.0, 0.0))

    def matrix(self, points):
        x = np.asarray(points, dtype=float)[None, :]
        a, b = self.grid[self._i][:, None], self.grid[self._j][:, None]
        return ((x < a) | (x > b)).astype(float)

    def _ones(self, F):
        inside = F(self.grid, inclusive=True)[self._j] - F(self.grid, inclusive=False)[self._i]
        return F.total - inside


class AllBinaryOnFinite(HypothesisClass):
    """Every {0,1}-valued function on a finite set of atoms (2^k members)."""

    kind = "all_binary_on_finite"

    def __init__(self, atoms: Iterable[float]):
        atoms = np.unique(np.asarray(list(atoms), dtype=float))
        if atoms.size > MAX_FINITE_ATOMS:
            raise ClassTooLarge(f"{atoms.size} atoms exceed the limit of {MAX_FINITE_ATOMS} (2^k members)")
        if atoms.size == 0:
            raise InvalidFunction("need at least one atom")
        self.atoms = atoms

    def __len__(self):
        return 1 << self.atoms.size

    def _bits(self, idx) -> np.ndarray:
        return ((np.asarray(idx)[:, None] >> np.arange(self.atoms.size)[None, :]) & 1).astype(float)

    def member(self, i):
        bits = self._bits([i])[0]
        return AtomFunction(zip(self.atoms.tolist(), bits.tolist()))

    @property
    def breakpoints(self):
        return np.zeros(0)

    @property
    def is_binary(self):
        return True

    def matrix(self, points):
        x = np.asarray(points, dtype=float)
        pos = np.searchsorted(self.atoms, x)
        safe = np.minimum(pos, self.atoms.size - 1)
        hit = (pos < self.atoms.size) & (self.atoms[safe] == x)
        bits = self._bits(np.arange(len(self)))
        out = bits[:, safe]
        out[:, ~hit] = np.nan
        return out

    def to_dict(self):
        return {"kind": self.kind, "atoms": self.atoms.tolist()}


_KINDS = {
    "constants": lambda d: Constants(d.get("values", (0.0, 1.0))),
    "threshold_grid": lambda d: ThresholdGrid(d["breakpoints"], d.get("directions", (1, -1))),
    "interval_grid": lambda d: IntervalGrid(d["breakpoints"]),
    "interval_complement_grid": lambda d: IntervalComplementGrid(d["breakpoints"]),
    "all_binary_on_finite": lambda d: AllBinaryOnFinite(d["atoms"]),
    "explicit_list": lambda d: ExplicitClass([from_dict(m) for m in d["members"]]),
}


def class_from_dict(d: dict) -> HypothesisClass:
    if d.get("kind") not in _KINDS:
        raise InvalidFunction(f"unknown class kind {d.get('kind')!r}")
    return _KINDS[d["kind"]](d)


def class_to_dict(cls: HypothesisClass) -> dict:
    d = cls.to_dict()
    d["schema"] = SCHEMA
    return d


# ---------------------------------------------------------------------------
# divergences over classes
# ---------------------------------------------------------------------------


def _require_binary(cls: HypothesisClass) -> None:
    if not cls.is_binary:
        raise NonBinaryClass("H-divergence is defined through supports h^-1(1); members must be binary")


def h_divergence(cls: HypothesisClass, p: Distribution, q: Distribution):
    """max over members of |Pr_p(h=1) - Pr_q(h=1)| with the first maximiser as witness."""
    _require_binary(cls)
    diff = np.abs(cls.ones_mass(p) - cls.ones_mass(q))
    i = int(np.argmax(diff))
    return float(diff[i]), cls.member(i)


def empirical_h_divergence(cls: HypothesisClass, sample_p, sample_q) -> float:
    return h_divergence(cls, empirical(sample_p), empirical(sample_q))[0]


def xor_class(cls: HypothesisClass) -> ExplicitClass:
    """{h xor h'} over all ordered pairs, extensional duplicates removed."""
    _require_binary(cls)
    ms = cls.members()
    return ExplicitClass(
        (pointwise(lambda a, b: np.abs(a - b), h, g) for h in ms for g in ms),
        dedupe=True,
    )


def _values_of(fn) -> set:
    vals = fn.values + fn.point_values if isinstance(fn, PiecewiseFunction) else tuple(v for _, v in fn.table)
    return {v for v in vals if v is not None}


def default_t_grid(cls: HypothesisClass) -> tuple:
    """Thresholds for the disagreement class.

    Binary classes only need one t in (0, 1). Otherwise every distinct gap value
    |h - h'| (plus 0) is used; since Pr(|h - h'| > t) only changes at those
    values, this attains the supremum over t in [0, 1] exactly.
    """
    if cls.is_binary:
        return (0.5,)
    ms = cls.members()
    gaps = {0.0}
    for i, h in enumerate(ms):
        for g in ms[i:]:
            gaps |= _values_of(pointwise(lambda a, b: np.abs(a - b), h, g))
    return tuple(sorted(t for t in gaps if t < 1.0))


UNIFORM_T_GRID = tuple(np.linspace(0.0, 1.0, 33).tolist())


def disagreement_class(cls: HypothesisClass, t_grid: Optional[Sequence[float]] = None) -> ExplicitClass:
    """{1[|h - h'| > t]} over member pairs and thresholds t (binary-valued)."""
    ts = default_t_grid(cls) if t_grid is None else tuple(t_grid)
    if not ts:
        raise InvalidFunction("t_grid must be non-empty")
    ms = cls.members()
    return ExplicitClass(
        (
            pointwise(lambda a, b, t=t: (np.abs(a - b) > t).astype(float), h, g)
            for h in ms
            for g in ms
            for t in ts
        ),
        dedupe=True,
    )


def _pair_reps(fns, p: Distribution, q: Distribution):
    breaks = _breaks_of(fns)
    rp, wp = cell_representation(p, breaks)
    rq, wq = cell_representation(q, breaks)
    reps = np.concatenate([rp, rq])
    d = np.concatenate([wp, -wq])
    keep = np.concatenate([wp, wq]) > 0
    reps, d = reps[keep], d[keep]
    V = np.array([f.evaluate(reps) for f in fns]).reshape(len(fns), reps.size)
    if np.any(np.isnan(V)):
        raise UndefinedOnSupport("a function is undefined on part of the support")
    return reps, d, V


def disagreement_divergence(fns, p: Distribution, q: Distribution, t_grid=None) -> tuple[float, tuple]:
    """d over the disagreement class of ``fns`` without materialising it.

    Returns (value, (i, j, t)) identifying a maximiser. With ``t_grid=None`` the
    supremum over t in [0, 1] is exact.
    """
    fns = list(fns.members() if isinstance(fns, HypothesisClass) else fns)
    _, d, V = _pair_reps(fns, p, q)
    binary = np.all((V == 0) | (V == 1))
    if binary and t_grid is None:
        a = V @ d
        C = V @ (V * d).T
        S = np.abs(a[:, None] + a[None, :] - 2.0 * C)
        k = int(np.argmax(S))
        i, j = divmod(k, S.shape[1])
        return float(S[i, j]), (i, j, 0.5)
    best, arg = 0.0, (0, 0, 0.0)
    m = len(fns)
    for i in range(m):
        G = np.abs(V[i][None, :] - V[i:])  # pairs (i, j>=i)
        if t_grid is None:
            ts = np.unique(np.concatenate([[0.0], G.ravel()]))
            ts = ts[ts < 1.0]
        else:
            ts = np.asarray(t_grid, dtype=float)
        ind = G[:, None, :] > ts[None, :, None]
        S = np.abs(ind @ d)
        k = int(np.argmax(S))
        jj, tt = divmod(k, S.shape[1])
        if S[jj, tt] > best:
            best, arg = float(S[jj, tt]), (i, i + jj, float(ts[tt]))
    return best, arg


def disagreement_matrix(fns, points, t_grid=None) -> np.ndarray:
    """Rows of the disagreement class evaluated at ``points`` (duplicates removed)."""
    fns = list(fns.members() if isinstance(fns, HypothesisClass) else fns)
    points = np.asarray(points, dtype=float)
    V = np.array([f.evaluate(points) for f in fns]).reshape(len(fns), points.size)
    if np.any(np.isnan(V)):
        raise UndefinedOnSupport("a function is undefined at a sample point")
    binary = np.all((V == 0) | (V == 1))
    rows = []
    for i in range(len(fns)):
        G = np.abs(V[i][None, :] - V[i:])
        if t_grid is None:
            ts = np.array([0.5]) if binary else np.unique(np.concatenate([[0.0], G.ravel()]))
            ts = ts[ts < 1.0]
        else:
            ts = np.asarray(t_grid, dtype=float)
        rows.append((G[:, None, :] > ts[None, :, None]).reshape(-1, points.size))
    return np.unique(np.concatenate(rows).astype(float), axis=0)


# ---------------------------------------------------------------------------
# joint risk
# ---------------------------------------------------------------------------


def best_joint_hypothesis(cls: HypothesisClass, dom_s: Domain, dom_t: Domain):
    """(argmin, min) of source error + target error; first minimiser wins ties."""
    joint = cls.errors(dom_s) + cls.errors(dom_t)
    i = int(np.argmin(joint))
    return cls.member(i), float(joint[i])


def cross_domain_errors(dom_s: Domain, dom_t: Domain) -> tuple[float, float]:
    """(E_S|f_S - f_T|, E_T|f_S - f_T|)."""
    return (
        disagreement(dom_s.distribution, dom_s.labeling, dom_t.labeling),
        disagreement(dom_t.distribution, dom_s.labeling, dom_t.labeling),
    )
