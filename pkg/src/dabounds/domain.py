"""Exact distributions, labeling functions, maps, and domains on the real line.

Continuous mass is restricted to piecewise-uniform densities and every function
is piecewise constant (or piecewise linear, for maps), so any expectation is a
finite sum over the common refinement of the breakpoints involved.

Points of a discrete distribution are real numbers; integer atom ids are just
reals that happen to be integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .errors import (
    InvalidDistribution,
    InvalidFunction,
    NonInvertibleSegment,
    UndefinedOnSupport,
)

SCHEMA = "da-bounds/v1"
ATOL = 1e-9


def _opt(v) -> Optional[float]:
    if v is None:
        return None
    v = float(v)
    return None if math.isnan(v) else v


def _nan_array(values: Sequence[Optional[float]]) -> np.ndarray:
    return np.array([np.nan if v is None else v for v in values], dtype=float)


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely many atoms with probability masses."""

    atoms: tuple
    masses: tuple

    def __post_init__(self):
        atoms = tuple(float(a) for a in self.atoms)
        masses = tuple(float(m) for m in self.masses)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "masses", masses)
        if len(atoms) != len(masses) or not atoms:
            raise InvalidDistribution("atoms and masses must be non-empty and of equal length")
        if any(b <= a for a, b in zip(atoms, atoms[1:])):
            raise InvalidDistribution("atoms must be unique and sorted")
        if any(m < 0 or not math.isfinite(m) for m in masses):
            raise InvalidDistribution("masses must be finite and non-negative")
        total = sum(masses)
        if abs(total - 1.0) > ATOL:
            raise InvalidDistribution(f"masses sum to {total!r}, not 1")
        if total != 1.0:
            object.__setattr__(self, "masses", tuple(m / total for m in masses))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "DiscreteDistribution":
        """Build from (atom, mass) pairs, merging duplicate atoms."""
        acc: dict[float, float] = {}
        for a, m in pairs:
            acc[float(a)] = acc.get(float(a), 0.0) + float(m)
        keys = sorted(acc)
        return cls(tuple(keys), tuple(acc[k] for k in keys))

    @classmethod
    def from_arrays(cls, atoms, masses) -> "DiscreteDistribution":
        atoms = np.asarray(atoms, dtype=float)
        masses = np.asarray(masses, dtype=float)
        uniq, inv = np.unique(atoms, return_inverse=True)
        merged = np.bincount(inv, weights=masses, minlength=len(uniq))
        return cls(tuple(uniq.tolist()), tuple(merged.tolist()))

    @classmethod
    def point_mass(cls, atom: float) -> "DiscreteDistribution":
        return cls((atom,), (1.0,))

    @classmethod
    def bernoulli(cls, p: float) -> "DiscreteDistribution":
        p = min(max(float(p), 0.0), 1.0)
        return cls((0.0, 1.0), (1.0 - p, p))

    @classmethod
    def uniform_on(cls, atoms: Iterable[float]) -> "DiscreteDistribution":
        atoms = sorted({float(a) for a in atoms})
        return cls(tuple(atoms), tuple([1.0 / len(atoms)] * len(atoms)))

    @classmethod
    def from_sample(cls, draws) -> "DiscreteDistribution":
        """Empirical distribution: mass 1/n per draw, duplicates merged."""
        draws = np.asarray(draws, dtype=float).ravel()
        if draws.size == 0:
            raise InvalidDistribution("empty sample")
        uniq, counts = np.unique(draws, return_counts=True)
        return cls(tuple(uniq.tolist()), tuple((counts / draws.size).tolist()))

    @cached_property
    def atom_array(self) -> np.ndarray:
        return np.array(self.atoms, dtype=float)

    @cached_property
    def mass_array(self) -> np.ndarray:
        return np.array(self.masses, dtype=float)

    def mass_of(self, atom: float) -> float:
        i = np.searchsorted(self.atom_array, atom)
        if i < len(self.atoms) and self.atoms[i] == atom:
            return self.masses[i]
        return 0.0

    @property
    def support(self) -> tuple:
        return tuple(a for a, m in zip(self.atoms, self.masses) if m > 0)


@dataclass(frozen=True)
class PiecewiseUniform:
    """Density that is constant on each interval between consecutive breakpoints."""

    breakpoints: tuple
    segment_masses: tuple

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        ms = tuple(float(m) for m in self.segment_masses)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "segment_masses", ms)
        if len(bp) < 2 or len(ms) != len(bp) - 1:
            raise InvalidDistribution("need >= 2 breakpoints and one mass per interval")
        if any(not math.isfinite(b) for b in bp) or any(b <= a for a, b in zip(bp, bp[1:])):
            raise InvalidDistribution("breakpoints must be finite and strictly ascending")
        if any(m < 0 or not math.isfinite(m) for m in ms):
            raise InvalidDistribution("segment masses must be finite and non-negative")
        if abs(sum(ms) - 1.0) > ATOL:
            raise InvalidDistribution(f"segment masses sum to {sum(ms)!r}, not 1")

    @classmethod
    def uniform(cls, a: float, b: float) -> "PiecewiseUniform":
        return cls((a, b), (1.0,))

    @cached_property
    def break_array(self) -> np.ndarray:
        return np.array(self.breakpoints, dtype=float)

    @cached_property
    def mass_array(self) -> np.ndarray:
        return np.array(self.segment_masses, dtype=float)

    def cdf(self, t) -> np.ndarray:
        cum = np.concatenate([[0.0], np.cumsum(self.mass_array)])
        return np.interp(t, self.break_array, cum, left=0.0, right=1.0)

    def canonical(self) -> "PiecewiseUniform":
        """Drop zero-mass end segments and merge neighbours of equal density."""
        bp = list(self.breakpoints)
        ms = list(self.segment_masses)
        while len(ms) > 1 and ms[0] == 0.0:
            bp.pop(0)
            ms.pop(0)
        while len(ms) > 1 and ms[-1] == 0.0:
            bp.pop()
            ms.pop()
        out_b, out_m = [bp[0]], []
        for i, m in enumerate(ms):
            if out_m:
                a0 = out_b[-2]
                d_prev = out_m[-1] / (out_b[-1] - a0)
                d_cur = m / (bp[i + 1] - bp[i])
                if abs(d_prev - d_cur) <= 1e-12 * max(d_prev, d_cur, 1.0):
                    out_m[-1] += m
                    out_b[-1] = bp[i + 1]
                    continue
            out_m.append(m)
            out_b.append(bp[i + 1])
        return PiecewiseUniform(tuple(out_b), tuple(out_m))


@dataclass(frozen=True)
class MixedDistribution:
    """Convex combination of a piecewise-uniform part and a discrete part.

    Produced by pushforward through maps with zero-slope segments.
    """

    continuous: PiecewiseUniform
    discrete: DiscreteDistribution
    continuous_mass: float

    def __post_init__(self):
        if not 0.0 < self.continuous_mass < 1.0:
            raise InvalidDistribution("continuous_mass must lie strictly in (0, 1)")

    is_mixed = True


Distribution = Union[DiscreteDistribution, PiecewiseUniform, MixedDistribution]


@dataclass(frozen=True)
class _Parts:
    atoms: np.ndarray
    atom_w: np.ndarray
    breaks: np.ndarray
    seg_w: np.ndarray


def parts(dist: Distribution) -> _Parts:
    """Split a distribution into absolute atom masses and absolute segment masses."""
    empty = np.zeros(0)
    if isinstance(dist, DiscreteDistribution):
        return _Parts(dist.atom_array, dist.mass_array, empty, empty)
    if isinstance(dist, PiecewiseUniform):
        return _Parts(empty, empty, dist.break_array, dist.mass_array)
    if isinstance(dist, MixedDistribution):
        c = dist.continuous_mass
        return _Parts(
            dist.discrete.atom_array,
            (1.0 - c) * dist.discrete.mass_array,
            dist.continuous.break_array,
            c * dist.continuous.mass_array,
        )
    raise TypeError(f"not a distribution: {type(dist).__name__}")


def refine_cells(breaks: np.ndarray, seg_w: np.ndarray, extra) -> tuple[np.ndarray, np.ndarray]:
    """Refine a piecewise-uniform part by extra breakpoints.

    Returns (edges, cell masses); masses are split in proportion to length.
    """
    if breaks.size == 0:
        return breaks, seg_w
    extra = np.asarray(extra, dtype=float)
    inside = extra[(extra > breaks[0]) & (extra < breaks[-1])]
    edges = np.unique(np.concatenate([breaks, inside]))
    seg = np.searchsorted(breaks, edges[:-1], side="right") - 1
    seg_len = breaks[seg + 1] - breaks[seg]
    masses = seg_w[seg] * (np.diff(edges) / seg_len)
    return edges, masses


def cell_representation(dist: Distribution, extra_breaks=()) -> tuple[np.ndarray, np.ndarray]:
    """Representative points and masses such that every piecewise-constant
    function with breakpoints in ``extra_breaks`` integrates exactly as a sum."""
    p = parts(dist)
    edges, cm = refine_cells(p.breaks, p.seg_w, extra_breaks)
    mids = 0.5 * (edges[:-1] + edges[1:]) if edges.size else edges
    return np.concatenate([mids, p.atoms]), np.concatenate([cm, p.atom_w])


# ---------------------------------------------------------------------------
# functions and maps
# ---------------------------------------------------------------------------


def _locate(breaks: np.ndarray, x: np.ndarray):
    """Segment index under right-hand convention, plus exact-breakpoint hits."""
    idx = np.searchsorted(breaks, x, side="right")
    pos = np.searchsorted(breaks, x, side="left")
    safe = np.minimum(pos, max(len(breaks) - 1, 0))
    hit = (pos < len(breaks)) & (breaks[safe] == x) if len(breaks) else np.zeros(x.shape, bool)
    return idx, safe, hit


@dataclass(frozen=True)
class PiecewiseFunction:
    """Piecewise-constant function on the real line.

    ``values`` has one entry per interval, tails included (``len(breakpoints) + 1``).
    ``point_values`` optionally gives the value exactly at each breakpoint; by default
    a breakpoint takes the value of the interval to its right. ``None`` marks a
    region where the function is undefined.
    """

    breakpoints: tuple = ()
    values: tuple = (0.0,)
    point_values: Optional[tuple] = None

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(_opt(v) for v in self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if len(vals) != len(bp) + 1:
            raise InvalidFunction("need len(breakpoints) + 1 values")
        if any(b <= a for a, b in zip(bp, bp[1:])) or any(not math.isfinite(b) for b in bp):
            raise InvalidFunction("breakpoints must be finite and strictly ascending")
        pts = self.point_values
        if pts is None:
            pts = vals[1:]
        pts = tuple(_opt(v) for v in pts)
        if len(pts) != len(bp):
            raise InvalidFunction("need one point value per breakpoint")
        object.__setattr__(self, "point_values", pts)
        for v in vals + pts:
            if v is not None and not 0.0 <= v <= 1.0:
                raise InvalidFunction(f"value {v} outside [0, 1]")

    # constructors -----------------------------------------------------------
    @classmethod
    def constant(cls, c: float) -> "PiecewiseFunction":
        return cls((), (c,))

    @classmethod
    def step(cls, breakpoints, values, left_inclusive=None) -> "PiecewiseFunction":
        """Step function where ``left_inclusive[i]`` assigns breakpoint i to the interval on its left."""
        breakpoints = tuple(breakpoints)
        values = tuple(values)
        if left_inclusive is None:
            left_inclusive = (False,) * len(breakpoints)
        pts = tuple(values[i] if left_inclusive[i] else values[i + 1] for i in range(len(breakpoints)))
        return cls(breakpoints, values, pts)

    @classmethod
    def open_interval(cls, a: float, b: float) -> "PiecewiseFunction":
        """Indicator of (a, b)."""
        return cls((a, b), (0.0, 1.0, 0.0), (0.0, 0.0))

    @classmethod
    def threshold(cls, t: float, direction: int = 1) -> "PiecewiseFunction":
        """``1{x > t}`` for direction +1, ``1{x <= t}`` for direction -1."""
        if direction > 0:
            return cls((t,), (0.0, 1.0), (0.0,))
        return cls((t,), (1.0, 0.0), (1.0,))

    # evaluation ---------------------------------------------------------------
    @cached_property
    def _val_arr(self) -> np.ndarray:
        return _nan_array(self.values)

    @cached_property
    def _pt_arr(self) -> np.ndarray:
        return _nan_array(self.point_values)

    @cached_property
    def _break_arr(self) -> np.ndarray:
        return np.array(self.breakpoints, dtype=float)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx, pos, hit = _locate(self._break_arr, x)
        out = self._val_arr[idx]
        if len(self.breakpoints):
            out = np.where(hit, self._pt_arr[pos], out)
        return np.where(np.isnan(x), np.nan, out)

    def __call__(self, x):
        return self.evaluate(x)

    @property
    def is_binary(self) -> bool:
        return all(v in (0.0, 1.0) for v in self.values + self.point_values if v is not None)

    def simplify(self) -> "PiecewiseFunction":
        """Canonical form: drop breakpoints across which nothing changes."""
        bp, vals, pts = [], [self.values[0]], []
        for i, b in enumerate(self.breakpoints):
            nxt = self.values[i + 1]
            if vals[-1] == nxt == self.point_values[i]:
                continue
            bp.append(b)
            pts.append(self.point_values[i])
            vals.append(nxt)
        return PiecewiseFunction(tuple(bp), tuple(vals), tuple(pts))

    def to_dict(self) -> dict:
        return {
            "kind": "piecewise_function",
            "breakpoints": list(self.breakpoints),
            "values": list(self.values),
            "point_values": list(self.point_values),
        }


@dataclass(frozen=True)
class AtomMap:
    """Deterministic map defined on finitely many points."""

    table: tuple

    def __post_init__(self):
        items = self.table.items() if isinstance(self.table, dict) else self.table
        acc = {}
        for k, v in items:
            acc[float(k)] = _opt(v)
        object.__setattr__(self, "table", tuple(sorted(acc.items())))
        self._check()

    def _check(self):
        pass

    @cached_property
    def _keys(self) -> np.ndarray:
        return np.array([k for k, _ in self.table], dtype=float)

    @cached_property
    def _vals(self) -> np.ndarray:
        return _nan_array([v for _, v in self.table])

    @property
    def breakpoints(self) -> tuple:
        return ()

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.table:
            return np.full(x.shape, np.nan)
        pos = np.searchsorted(self._keys, x)
        safe = np.minimum(pos, len(self._keys) - 1)
        hit = (pos < len(self._keys)) & (self._keys[safe] == x)
        return np.where(hit, self._vals[safe], np.nan)

    def __call__(self, x):
        return self.evaluate(x)

    def as_dict(self) -> dict:
        return dict(self.table)

    def to_dict(self) -> dict:
        return {"kind": "atom_map", "keys": [k for k, _ in self.table], "values": [v for _, v in self.table]}


class AtomFunction(AtomMap):
    """[0,1]-valued function on finitely many points (labelings, hypotheses)."""

    def _check(self):
        for _, v in self.table:
            if v is not None and not 0.0 <= v <= 1.0:
                raise InvalidFunction(f"value {v} outside [0, 1]")

    @property
    def is_binary(self) -> bool:
        return all(v in (0.0, 1.0) for _, v in self.table if v is not None)

    def simplify(self) -> "AtomFunction":
        return self

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["kind"] = "atom_function"
        return d


Function = Union[PiecewiseFunction, AtomFunction]


@dataclass(frozen=True)
class PiecewiseLinearMap:
    """Map that is affine on each interval; ``slopes``/``intercepts`` include both tails."""

    breakpoints: tuple
    slopes: tuple
    intercepts: tuple
    left_inclusive: Optional[tuple] = None

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        sl = tuple(_opt(s) for s in self.slopes)
        ic = tuple(_opt(c) for c in self.intercepts)
        li = self.left_inclusive
        li = (False,) * len(bp) if li is None else tuple(bool(v) for v in li)
        for name, val in (("breakpoints", bp), ("slopes", sl), ("intercepts", ic), ("left_inclusive", li)):
            object.__setattr__(self, name, val)
        if len(sl) != len(bp) + 1 or len(ic) != len(bp) + 1 or len(li) != len(bp):
            raise InvalidFunction("need len(breakpoints)+1 slopes/intercepts and one flag per breakpoint")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise InvalidFunction("breakpoints must be strictly ascending")
        for s, c in zip(sl, ic):
            if (s is None) != (c is None):
                raise InvalidFunction("slope and intercept must be both defined or both None")
            if s is not None and not (math.isfinite(s) and math.isfinite(c)):
                raise InvalidFunction("slopes and intercepts must be finite")

    @classmethod
    def identity(cls) -> "PiecewiseLinearMap":
        return cls((), (1.0,), (0.0,))

    @cached_property
    def _arrays(self):
        return (
            np.array(self.breakpoints, dtype=float),
            _nan_array(self.slopes),
            _nan_array(self.intercepts),
            np.array(self.left_inclusive, dtype=bool),
        )

    def segment_of(self, x) -> np.ndarray:
        b, _, _, li = self._arrays
        x = np.asarray(x, dtype=float)
        idx, pos, hit = _locate(b, x)
        if len(b):
            idx = np.where(hit & li[pos], idx - 1, idx)
        return idx

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        _, s, c, _ = self._arrays
        seg = self.segment_of(x)
        return s[seg] * x + c[seg]

    def __call__(self, x):
        return self.evaluate(x)

    def to_dict(self) -> dict:
        return {
            "kind": "piecewise_linear_map",
            "breakpoints": list(self.breakpoints),
            "slopes": list(self.slopes),
            "intercepts": list(self.intercepts),
            "left_inclusive": list(self.left_inclusive),
        }


@dataclass(frozen=True)
class Channel:
    """Stochastic map: each input atom has a distribution over output atoms."""

    rows: tuple

    def __post_init__(self):
        items = self.rows.items() if isinstance(self.rows, dict) else self.rows
        rows = {}
        for k, v in items:
            if not isinstance(v, DiscreteDistribution):
                raise InvalidDistribution("channel rows must be DiscreteDistribution")
            rows[float(k)] = v
        object.__setattr__(self, "rows", tuple(sorted(rows.items(), key=lambda kv: kv[0])))

    @classmethod
    def identity(cls, atoms: Iterable[float]) -> "Channel":
        return cls({a: DiscreteDistribution.point_mass(a) for a in atoms})

    @classmethod
    def deterministic(cls, mapping: dict) -> "Channel":
        return cls({a: DiscreteDistribution.point_mass(z) for a, z in mapping.items()})

    def row(self, atom: float) -> Optional[DiscreteDistribution]:
        for k, v in self.rows:
            if k == atom:
                return v
        return None

    def to_dict(self) -> dict:
        return {
            "kind": "channel",
            "rows": [{"input": k, "atoms": list(v.atoms), "masses": list(v.masses)} for k, v in self.rows],
        }


Map = Union[PiecewiseLinearMap, AtomMap, Channel]


@dataclass(frozen=True)
class Domain:
    """A distribution over inputs together with a labeling function into [0, 1]."""

    distribution: Distribution
    labeling: Function

    def __post_init__(self):
        if isinstance(self.labeling, dict):
            object.__setattr__(self, "labeling", AtomFunction(self.labeling))
        _check_defined(self.distribution, self.labeling)


def _check_defined(dist: Distribution, fn) -> None:
    reps, w = cell_representation(dist, getattr(fn, "breakpoints", ()))
    vals = fn.evaluate(reps)
    if np.any(np.isnan(vals) & (w > 0)):
        raise UndefinedOnSupport(f"{type(fn).__name__} is undefined on part of the support")


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def integrate(dist: Distribution, fn: Callable[[np.ndarray], np.ndarray], breakpoints=()) -> float:
    """Exact integral of a function that is constant between ``breakpoints``."""
    reps, w = cell_representation(dist, breakpoints)
    keep = w > 0
    vals = np.asarray(fn(reps[keep]), dtype=float)
    if np.any(np.isnan(vals)):
        raise UndefinedOnSupport("function undefined on part of the support")
    return float(np.dot(vals, w[keep]))


def expectation(obj: Union[Domain, Distribution], fn=None) -> float:
    """E[fn] under a distribution; for a Domain with no fn, E[labeling]."""
    if isinstance(obj, Domain):
        dist = obj.distribution
        fn = obj.labeling if fn is None else fn
    else:
        dist = obj
    if isinstance(fn, dict):
        fn = AtomMap(fn)
    return integrate(dist, fn.evaluate, getattr(fn, "breakpoints", ()))


def disagreement(dist: Distribution, h, h2) -> float:
    """E|h - h2| under ``dist``."""
    breaks = tuple(getattr(h, "breakpoints", ())) + tuple(getattr(h2, "breakpoints", ()))
    return integrate(dist, lambda x: np.abs(h.evaluate(x) - h2.evaluate(x)), breaks)


def error(domain: Domain, h) -> float:
    """E|h - f| under the domain's distribution."""
    return disagreement(domain.distribution, h, domain.labeling)


def _bernoulli_of(dist: Distribution, fn) -> DiscreteDistribution:
    # both masses are integrated so rounding in the total cannot leak onto the other outcome
    breaks = getattr(fn, "breakpoints", ())
    one = integrate(dist, fn.evaluate, breaks)
    zero = integrate(dist, lambda x: 1.0 - fn.evaluate(x), breaks)
    total = one + zero
    return DiscreteDistribution((0.0, 1.0), (zero / total, one / total))


def label_marginal(domain: Domain) -> DiscreteDistribution:
    return _bernoulli_of(domain.distribution, domain.labeling)


def prediction_marginal(dist: Distribution, h) -> DiscreteDistribution:
    return _bernoulli_of(dist, h)


def pointwise(op: Callable[..., np.ndarray], *fns):
    """Apply ``op`` pointwise; undefined wherever any input is undefined."""
    if any(isinstance(f, AtomMap) for f in fns):
        keys = sorted({k for f in fns if isinstance(f, AtomMap) for k, _ in f.table})
        x = np.array(keys, dtype=float)
        return AtomFunction(zip(keys, _apply(op, fns, x).tolist()))
    u = np.unique(np.concatenate([np.asarray(f.breakpoints, dtype=float) for f in fns] + [np.zeros(0)]))
    reps = _interval_reps(u)
    vals = _apply(op, fns, reps)
    pts = _apply(op, fns, u)
    return PiecewiseFunction(tuple(u.tolist()), tuple(vals.tolist()), tuple(pts.tolist())).simplify()


def _apply(op, fns, x):
    ins = [f.evaluate(x) for f in fns]
    bad = np.zeros(x.shape, bool)
    for a in ins:
        bad |= np.isnan(a)
    with np.errstate(invalid="ignore"):
        out = np.asarray(op(*ins), dtype=float)
    return np.where(bad, np.nan, out)


def _interval_reps(u: np.ndarray) -> np.ndarray:
    if u.size == 0:
        return np.zeros(1)
    return np.concatenate([[u[0] - 1.0], 0.5 * (u[:-1] + u[1:]), [u[-1] + 1.0]])


def compose(h, g):
    """The function x -> h(g(x)), represented exactly."""
    if isinstance(g, Channel):
        table = {}
        for a, row in g.rows:
            vals = h.evaluate(row.atom_array)
            table[a] = min(max(float(np.dot(vals, row.mass_array)), 0.0), 1.0) if not np.any(np.isnan(vals) & (row.mass_array > 0)) else None
        return AtomFunction(table)
    if isinstance(g, AtomMap):
        keys = g._keys
        vals = h.evaluate(g._vals)
        return AtomFunction(zip(keys.tolist(), vals.tolist()))
    if not isinstance(g, PiecewiseLinearMap):
        raise TypeError(f"cannot compose with {type(g).__name__}")
    b, s, c, _ = g._arrays
    lo_hi = np.concatenate([[-np.inf], b, [np.inf]])
    if isinstance(h, AtomMap):
        pre = set()
        for i in range(len(s)):
            if np.isnan(s[i]) or s[i] == 0:
                continue
            xs = (h._keys - c[i]) / s[i]
            for x in xs[(xs >= lo_hi[i]) & (xs <= lo_hi[i + 1])]:
                if g.segment_of(x) == i:
                    pre.add(float(x))
        for i in range(len(s)):
            if s[i] == 0 and np.any(h._keys == c[i]):
                raise NonInvertibleSegment("zero-slope segment onto an atom has no finite preimage")
        xs = np.array(sorted(pre))
        return AtomFunction(zip(xs.tolist(), h.evaluate(g.evaluate(xs)).tolist()))
    hb = np.asarray(h.breakpoints, dtype=float)
    cand = [b]
    for i in range(len(s)):
        if np.isnan(s[i]) or s[i] == 0 or hb.size == 0:
            continue
        xs = (hb - c[i]) / s[i]
        cand.append(xs[(xs > lo_hi[i]) & (xs < lo_hi[i + 1])])
    u = np.unique(np.concatenate(cand))
    comp = lambda x: h.evaluate(g.evaluate(x))  # noqa: E731
    vals = comp(_interval_reps(u))
    pts = comp(u)
    return PiecewiseFunction(tuple(u.tolist()), tuple(vals.tolist()), tuple(pts.tolist())).simplify()


def _merge_uniform_pieces(pieces: list[tuple[float, float, float]]) -> np.ndarray:
    """Sum of uniform pieces (a, b, mass) as (edges, masses) on a common grid."""
    edges = np.unique(np.array([e for a, b, _ in pieces for e in (a, b)], dtype=float))
    masses = np.zeros(len(edges) - 1)
    left, right = edges[:-1], edges[1:]
    for a, b, m in pieces:
        overlap = np.clip(np.minimum(right, b) - np.maximum(left, a), 0.0, None)
        masses += m * overlap / (b - a)
    return edges, masses


def _assemble(atoms: list, atom_w: list, pieces: list) -> Distribution:
    total_c = sum(m for _, _, m in pieces)
    total_d = sum(atom_w)
    if pieces and total_c > 0:
        edges, masses = _merge_uniform_pieces(pieces)
        cont = PiecewiseUniform(tuple(edges.tolist()), tuple((masses / total_c).tolist())).canonical()
    else:
        cont = None
    disc = DiscreteDistribution.from_arrays(atoms, np.asarray(atom_w) / total_d) if atoms and total_d > 0 else None
    if cont is None:
        return _renormalized(disc)
    if disc is None:
        return cont
    return MixedDistribution(cont, disc, total_c / (total_c + total_d))


def _renormalized(d: DiscreteDistribution) -> DiscreteDistribution:
    m = d.mass_array
    return DiscreteDistribution(d.atoms, tuple((m / m.sum()).tolist()))


def pushforward(dist: Distribution, mapping) -> Distribution:
    """Distribution of g(X) for X ~ dist, computed exactly."""
    if isinstance(mapping, dict):
        mapping = AtomMap(mapping)
    p = parts(dist)
    atoms, atom_w, pieces = [], [], []
    has_cont = p.seg_w.size and np.any(p.seg_w > 0)
    if isinstance(mapping, Channel):
        if has_cont:
            raise UndefinedOnSupport("a channel is only defined on atoms")
        for a, w in zip(p.atoms, p.atom_w):
            if w <= 0:
                continue
            row = mapping.row(a)
            if row is None:
                raise UndefinedOnSupport(f"channel has no row for atom {a}")
            atoms.extend(row.atoms)
            atom_w.extend((w * row.mass_array).tolist())
        return _assemble(atoms, atom_w, pieces)
    if isinstance(mapping, AtomMap):
        if has_cont:
            raise UndefinedOnSupport("an atom map is only defined on atoms")
        z = mapping.evaluate(p.atoms)
        if np.any(np.isnan(z) & (p.atom_w > 0)):
            raise UndefinedOnSupport("atom map misses a support atom")
        keep = p.atom_w > 0
        return _assemble(z[keep].tolist(), p.atom_w[keep].tolist(), pieces)
    if not isinstance(mapping, PiecewiseLinearMap):
        raise TypeError(f"cannot push forward through {type(mapping).__name__}")
    b, s, c, _ = mapping._arrays
    if p.atoms.size:
        z = mapping.evaluate(p.atoms)
        keep = p.atom_w > 0
        if np.any(np.isnan(z[keep])):
            raise UndefinedOnSupport("map undefined at a support atom")
        atoms.extend(z[keep].tolist())
        atom_w.extend(p.atom_w[keep].tolist())
    if p.breaks.size:
        edges, cm = refine_cells(p.breaks, p.seg_w, b)
        mids = 0.5 * (edges[:-1] + edges[1:])
        seg = mapping.segment_of(mids)
        for lo, hi, m, k in zip(edges[:-1], edges[1:], cm, seg):
            if m <= 0:
                continue
            if np.isnan(s[k]):
                raise UndefinedOnSupport("map undefined on part of the support")
            if s[k] == 0:
                atoms.append(float(c[k]))
                atom_w.append(float(m))
                continue
            za, zb = sorted((s[k] * lo + c[k], s[k] * hi + c[k]))
            pieces.append((float(za), float(zb), float(m)))
    return _assemble(atoms, atom_w, pieces)


def induced_labeling(domain: Domain, mapping):
    """Labeling on representation space: f composed with the per-segment inverse of the map.

    Raises NonInvertibleSegment when positive mass from preimages with
    different labels lands on the same region.
    """
    f = domain.labeling
    p = parts(domain.distribution)
    if isinstance(mapping, dict):
        mapping = AtomMap(mapping)
    if isinstance(mapping, Channel):
        raise TypeError("induced labeling needs a deterministic map")
    point_labels: dict[float, float] = {}
    for a, w in zip(p.atoms, p.atom_w):
        if w <= 0:
            continue
        z = float(mapping.evaluate(np.array([a]))[0])
        v = float(f.evaluate(np.array([a]))[0])
        if math.isnan(z) or math.isnan(v):
            raise UndefinedOnSupport(f"map or labeling undefined at atom {a}")
        if z in point_labels and abs(point_labels[z] - v) > ATOL:
            raise NonInvertibleSegment(f"atoms with labels {point_labels[z]} and {v} collide at {z}")
        point_labels[z] = v
    pieces = []
    if p.breaks.size:
        if not isinstance(mapping, PiecewiseLinearMap):
            raise UndefinedOnSupport("an atom map is only defined on atoms")
        b, s, c, _ = mapping._arrays
        extra = np.concatenate([b, np.asarray(getattr(f, "breakpoints", ()), dtype=float)])
        edges, cm = refine_cells(p.breaks, p.seg_w, extra)
        mids = 0.5 * (edges[:-1] + edges[1:])
        seg = mapping.segment_of(mids)
        labels = f.evaluate(mids)
        for lo, hi, m, k, v in zip(edges[:-1], edges[1:], cm, seg, labels):
            if m <= 0:
                continue
            if np.isnan(s[k]) or np.isnan(v):
                raise UndefinedOnSupport("map or labeling undefined on part of the support")
            if s[k] == 0:
                z = float(c[k])
                if z in point_labels and abs(point_labels[z] - v) > ATOL:
                    raise NonInvertibleSegment(f"collapsed segment with conflicting labels at {z}")
                point_labels[z] = float(v)
                continue
            za, zb = sorted((s[k] * lo + c[k], s[k] * hi + c[k]))
            pieces.append((za, zb, float(v), float(lo), float(hi), int(k)))
    if not pieces:
        return AtomFunction(point_labels)
    u = np.unique(np.array([e for pc in pieces for e in pc[:2]] + list(point_labels), dtype=float))
    reps = _interval_reps(u)
    vals = []
    for r in reps:
        cover = {pc[2] for pc in pieces if pc[0] < r < pc[1]}
        if len(cover) > 1 and max(cover) - min(cover) > ATOL:
            raise NonInvertibleSegment(f"labels {sorted(cover)} collide near z={r}")
        vals.append(cover.pop() if cover else None)
    pts = []
    for i, z in enumerate(u):
        if z in point_labels:
            pts.append(point_labels[z])
            continue
        found = None
        for za, zb, v, lo, hi, k in pieces:
            if za <= z <= zb:
                x = (z - float(mapping._arrays[2][k])) / float(mapping._arrays[1][k])
                if lo <= x <= hi and mapping.segment_of(x) == k:
                    found = float(f.evaluate(np.array([x]))[0])
                    break
        pts.append(found if found is not None else (vals[i + 1] if vals[i + 1] is not None else vals[i]))
    return PiecewiseFunction(tuple(u.tolist()), tuple(vals), tuple(pts)).simplify()


def induced_domain(domain: Domain, mapping) -> Domain:
    return Domain(pushforward(domain.distribution, mapping), induced_labeling(domain, mapping))


def sample(dist: Distribution, n: int, seed: int) -> np.ndarray:
    """n i.i.d. draws; deterministic given the seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return _draw(dist, n, rng)


def _draw(dist: Distribution, n: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(dist, DiscreteDistribution):
        m = dist.mass_array
        idx = rng.choice(len(m), size=n, p=m / m.sum())
        return dist.atom_array[idx]
    if isinstance(dist, PiecewiseUniform):
        m = dist.mass_array
        seg = rng.choice(len(m), size=n, p=m / m.sum())
        u = rng.random(n)
        b = dist.break_array
        return b[seg] + u * (b[seg + 1] - b[seg])
    if isinstance(dist, MixedDistribution):
        is_c = rng.random(n) < dist.continuous_mass
        out = np.empty(n)
        out[is_c] = _draw(dist.continuous, int(is_c.sum()), rng) if is_c.any() else out[is_c]
        out[~is_c] = _draw(dist.discrete, int((~is_c).sum()), rng) if (~is_c).any() else out[~is_c]
        return out
    raise TypeError(f"not a distribution: {type(dist).__name__}")


empirical = DiscreteDistribution.from_sample


@dataclass(frozen=True)
class LabeledSample:
    """Points with their (possibly soft) labels f(x)."""

    points: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def distribution(self) -> DiscreteDistribution:
        return empirical(self.points)

    def empirical_error(self, h) -> float:
        vals = h.evaluate(self.points)
        if np.any(np.isnan(vals)):
            raise UndefinedOnSupport("hypothesis undefined at a sample point")
        return float(np.mean(np.abs(vals - self.labels)))


def labeled_sample(domain: Domain, n: int, seed: int) -> LabeledSample:
    pts = sample(domain.distribution, n, seed)
    return LabeledSample(pts, domain.labeling.evaluate(pts))


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def to_dict(obj) -> dict:
    """Serialize a distribution, function, map, or domain into a da-bounds/v1 document."""
    if isinstance(obj, DiscreteDistribution):
        d = {"kind": "discrete", "atoms": list(obj.atoms), "masses": list(obj.masses)}
    elif isinstance(obj, PiecewiseUniform):
        d = {"kind": "piecewise_uniform", "breakpoints": list(obj.breakpoints), "segment_masses": list(obj.segment_masses)}
    elif isinstance(obj, MixedDistribution):
        d = {
            "kind": "mixed",
            "continuous": to_dict(obj.continuous),
            "discrete": to_dict(obj.discrete),
            "continuous_mass": obj.continuous_mass,
        }
    elif isinstance(obj, Domain):
        d = {"kind": "domain", "distribution": to_dict(obj.distribution), "labeling": to_dict(obj.labeling)}
    elif hasattr(obj, "to_dict"):
        d = obj.to_dict()
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    d["schema"] = SCHEMA
    return d


def from_dict(d: dict):
    """Inverse of :func:`to_dict`; the schema field is optional on nested objects."""
    if not isinstance(d, dict) or "kind" not in d:
        raise InvalidDistribution("expected an object with a 'kind' field")
    schema = d.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise InvalidDistribution(f"unsupported schema {schema!r}")
    kind = d["kind"]
    if kind == "discrete":
        return DiscreteDistribution(tuple(d["atoms"]), tuple(d["masses"]))
    if kind == "piecewise_uniform":
        return PiecewiseUniform(tuple(d["breakpoints"]), tuple(d["segment_masses"]))
    if kind == "mixed":
        return MixedDistribution(from_dict(d["continuous"]), from_dict(d["discrete"]), d["continuous_mass"])
    if kind == "piecewise_function":
        pts = d.get("point_values")
        if pts is None and "left_inclusive" in d:
            return PiecewiseFunction.step(d["breakpoints"], d["values"], d["left_inclusive"])
        return PiecewiseFunction(tuple(d["breakpoints"]), tuple(d["values"]), None if pts is None else tuple(pts))
    if kind in ("atom_function", "atom_map"):
        cls = AtomFunction if kind == "atom_function" else AtomMap
        return cls(tuple(zip(d["keys"], d["values"])))
    if kind == "piecewise_linear_map":
        return PiecewiseLinearMap(
            tuple(d["breakpoints"]), tuple(d["slopes"]), tuple(d["intercepts"]), d.get("left_inclusive")
        )
    if kind == "channel":
        return Channel(
            {r["input"]: DiscreteDistribution(tuple(r["atoms"]), tuple(r["masses"])) for r in d["rows"]}
        )
    if kind == "domain":
        return Domain(from_dict(d["distribution"]), from_dict(d["labeling"]))
    raise InvalidDistribution(f"unknown kind {kind!r}")
