"""Minimal SVG line charts written by hand (no rendering dependency)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    color: str = COLORS[0]
    dashed: bool = False
    width: float = 2.0


@dataclass
class Marker:
    x: float
    y: float
    label: str = ""
    color: str = "#000000"


@dataclass
class Panel:
    title: str
    xlim: tuple
    ylim: tuple
    series: list = field(default_factory=list)
    markers: list = field(default_factory=list)
    xlabel: str = ""
    ylabel: str = ""


def step_points(breaks: Sequence[float], values: Sequence[float], lo: float, hi: float):
    """Vertices of a piecewise-constant curve on [lo, hi]; ``values`` has len(breaks)+1 entries (None = gap)."""
    edges = [lo] + [b for b in breaks if lo < b < hi] + [hi]
    inner = [v for b, v in zip(breaks, values[1:]) if lo < b < hi]
    first = values[sum(1 for b in breaks if b <= lo)]
    vals = [first] + inner
    xs, ys = [], []
    for a, b, v in zip(edges, edges[1:], vals):
        v = np.nan if v is None else float(v)
        xs += [a, b]
        ys += [v, v]
    return xs, ys


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def _panel(p: Panel, ox: float, oy: float, w: float, h: float) -> list[str]:
    m = 45.0
    pw, ph = w - 1.5 * m, h - 2 * m
    (x0, x1), (y0, y1) = p.xlim, p.ylim

    def tx(x):
        return ox + m + (x - x0) / (x1 - x0) * pw

    def ty(y):
        return oy + m + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<rect x="{_fmt(ox + m)}" y="{_fmt(oy + m)}" width="{_fmt(pw)}" height="{_fmt(ph)}" fill="none" stroke="#444"/>',
        f'<text x="{_fmt(ox + m + pw / 2)}" y="{_fmt(oy + m - 12)}" text-anchor="middle" font-size="14">{escape(p.title)}</text>',
    ]
    for v in np.linspace(x0, x1, 5):
        out.append(f'<text x="{_fmt(tx(v))}" y="{_fmt(oy + m + ph + 16)}" text-anchor="middle" font-size="10">{_fmt(v)}</text>')
    for v in np.linspace(y0, y1, 5):
        out.append(f'<text x="{_fmt(ox + m - 6)}" y="{_fmt(ty(v) + 3)}" text-anchor="end" font-size="10">{_fmt(v)}</text>')
    if p.xlabel:
        out.append(f'<text x="{_fmt(ox + m + pw / 2)}" y="{_fmt(oy + h - 8)}" text-anchor="middle" font-size="11">{escape(p.xlabel)}</text>')
    if p.ylabel:
        out.append(
            f'<text x="{_fmt(ox + 12)}" y="{_fmt(oy + m + ph / 2)}" font-size="11" text-anchor="middle" '
            f'transform="rotate(-90 {_fmt(ox + 12)} {_fmt(oy + m + ph / 2)})">{escape(p.ylabel)}</text>'
        )
    for k, s in enumerate(p.series):
        pieces, cur = [], []
        for x, y in zip(s.x, s.y):
            if y is None or not np.isfinite(y):
                if cur:
                    pieces.append(cur)
                cur = []
                continue
            cur.append(f"{_fmt(tx(x))},{_fmt(ty(y))}")
        if cur:
            pieces.append(cur)
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        for pc in pieces:
            d = "M" + " L".join(pc)
            out.append(f'<path d="{d}" fill="none" stroke="{s.color}" stroke-width="{s.width}"{dash}/>')
        ly = oy + m + 14 + 14 * k
        out.append(f'<line x1="{_fmt(ox + m + pw - 110)}" y1="{_fmt(ly - 4)}" x2="{_fmt(ox + m + pw - 92)}" y2="{_fmt(ly - 4)}" stroke="{s.color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{_fmt(ox + m + pw - 88)}" y="{_fmt(ly)}" font-size="10">{escape(s.label)}</text>')
    for mk in p.markers:
        out.append(f'<circle cx="{_fmt(tx(mk.x))}" cy="{_fmt(ty(mk.y))}" r="4" fill="{mk.color}"/>')
        if mk.label:
            out.append(f'<text x="{_fmt(tx(mk.x) + 6)}" y="{_fmt(ty(mk.y) - 6)}" font-size="10">{escape(mk.label)}</text>')
    return out


def render(panels: Sequence[Panel], width: float = 460.0, height: float = 320.0) -> str:
    total_w = width * len(panels)
    body = []
    for i, p in enumerate(panels):
        body += _panel(p, i * width, 0.0, width, height)
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(total_w)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(total_w)} {_fmt(height)}" font-family="sans-serif">'
    )
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>'] + body + ["</svg>"]) + "\n"


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------


def _density_points(dist, lo, hi):
    bp = list(dist.breakpoints)
    dens = [None] + [m / (b - a) for a, b, m in zip(bp, bp[1:], dist.segment_masses)] + [None]
    xs, ys = step_points(bp, [0.0] + [d for d in dens[1:-1]] + [0.0], lo, hi)
    return xs, ys


def _label_points(fn, lo, hi):
    return step_points(list(fn.breakpoints), list(fn.values), lo, hi)


def counterexample_figure(scenario) -> str:
    """Densities and labelings before (left) and after (right) the transform."""
    ind_s, ind_t = scenario.induced()
    left = Panel("input space", (-1.5, 2.5), (-0.05, 1.25), xlabel="x")
    right = Panel("representation space", (-0.25, 1.25), (-0.05, 1.25), xlabel="z")
    for panel, (ds, dt), (lo, hi) in (
        (left, (scenario.source, scenario.target), left.xlim),
        (right, (ind_s, ind_t), right.xlim),
    ):
        for dom, name, color, shift in ((ds, "source", COLORS[0], 0.0), (dt, "target", COLORS[1], 0.02)):
            xs, ys = _density_points(dom.distribution, lo, hi)
            panel.series.append(Series(f"{name} density", xs, ys, color, width=1.5))
            xs, ys = _label_points(dom.labeling, lo, hi)
            # labelings are only meaningful on the support
            dist = dom.distribution
            a, b = dist.breakpoints[0], dist.breakpoints[-1]
            ys = [y if a <= x <= b else np.nan for x, y in zip(xs, ys)]
            panel.series.append(Series(f"{name} label", xs, [y + shift for y in ys], color, dashed=True))
    return render([left, right])


def trajectory_figure(traj, peak_epoch: Optional[int] = None, slope: Optional[float] = None) -> str:
    """Target accuracy, source accuracy and representation JS distance with peak and post-peak fit."""
    ep = traj.epochs
    acc = traj.column("target_acc")
    p = Panel("adversarial training", (float(ep[0]), float(ep[-1])), (0.0, 1.05), xlabel="epoch")
    p.series.append(Series("target acc", ep, acc, COLORS[1]))
    p.series.append(Series("source acc", ep, 1.0 - traj.column("source_err"), COLORS[0]))
    p.series.append(Series("djs z", ep, traj.column("djs_z"), COLORS[2], width=1.2))
    if peak_epoch is not None:
        i = int(np.nonzero(ep == peak_epoch)[0][0])
        p.markers.append(Marker(float(peak_epoch), float(acc[i]), "peak", COLORS[1]))
        if slope is not None:
            xs = ep[i:]
            fit = acc[i:].mean() + slope * (xs - xs.mean())
            p.series.append(Series("post-peak fit", xs, fit, "#000000", dashed=True, width=1.5))
    return render([p], width=640.0, height=360.0)
