"""Self-contained SVG plots of pole trajectories and width profiles."""

from __future__ import annotations

import math
from html import escape

import numpy as np

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=84, right=24, top=40, bottom=56)
GAMMA_FLOOR = 1e-16


def _nice_ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class _Canvas:
    def __init__(self, xlim, ylim, title, xlabel, ylabel, ylog=False):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.ylog = ylog
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">'
            f'{escape(title)}</text>',
        ]
        self._axes(xlabel, ylabel)

    def px(self, x):
        span = self.x1 - self.x0 or 1.0
        return MARGIN["left"] + (x - self.x0) / span * (WIDTH - MARGIN["left"] - MARGIN["right"])

    def py(self, y):
        if self.ylog:
            y = math.log10(y)
        span = self.y1 - self.y0 or 1.0
        inner = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        return HEIGHT - MARGIN["bottom"] - (y - self.y0) / span * inner

    def _axes(self, xlabel, ylabel):
        left, right = MARGIN["left"], WIDTH - MARGIN["right"]
        top, bottom = MARGIN["top"], HEIGHT - MARGIN["bottom"]
        p = self.parts
        p.append(f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
                 f'fill="none" stroke="black"/>')
        for t in _nice_ticks(self.x0, self.x1):
            x = self.px(t)
            p.append(f'<line x1="{x:.2f}" y1="{bottom}" x2="{x:.2f}" y2="{bottom + 5}" stroke="black"/>')
            p.append(f'<text x="{x:.2f}" y="{bottom + 18}" text-anchor="middle">{_fmt(t)}</text>')
        if self.ylog:
            yticks = [10.0 ** k for k in range(math.ceil(self.y0), math.floor(self.y1) + 1)]
            labels = [f"1e{int(round(math.log10(t)))}" for t in yticks]
        else:
            yticks = _nice_ticks(self.y0, self.y1)
            labels = [_fmt(t) for t in yticks]
        for t, label in zip(yticks, labels):
            y = self.py(t)
            p.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
            p.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{label}</text>')
        p.append(f'<text x="{(left + right) / 2:.1f}" y="{HEIGHT - 14}" '
                 f'text-anchor="middle">{escape(xlabel)}</text>')
        p.append(f'<text x="18" y="{(top + bottom) / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {(top + bottom) / 2:.1f})">{escape(ylabel)}</text>')

    def polyline(self, xs, ys, color="#1f4e9c"):
        pts = " ".join(f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')

    def markers(self, xs, ys, color="#c0392b", radius=4, label=None):
        for x, y in zip(xs, ys):
            self.parts.append(f'<circle cx="{self.px(x):.2f}" cy="{self.py(y):.2f}" r="{radius}" '
                              f'fill="none" stroke="{color}" stroke-width="1.5"/>')
        if label and len(xs):
            self.parts.append(f'<text x="{WIDTH - MARGIN["right"] - 6}" y="{MARGIN["top"] + 16}" '
                              f'text-anchor="end" fill="{color}">{escape(label)}</text>')

    def hline(self, y, color="#888888"):
        self.parts.append(f'<line x1="{MARGIN["left"]}" y1="{self.py(y):.2f}" '
                          f'x2="{WIDTH - MARGIN["right"]}" y2="{self.py(y):.2f}" '
                          f'stroke="{color}" stroke-dasharray="4 3"/>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _padded(lo, hi, frac=0.05):
    if hi == lo:
        return lo - 0.5, hi + 0.5
    pad = frac * (hi - lo)
    return lo - pad, hi + pad


def trajectory_svg(traj, bics=(), title: str = "Pole trajectory") -> str:
    """Complex-plane trajectory, Re E horizontal and Im E vertical."""
    pts = [p for p in traj.points if math.isfinite(p.energy.real)]
    re = np.array([p.energy.real for p in pts])
    im = np.array([p.energy.imag for p in pts])
    if not len(pts):
        re = im = np.zeros(1)
    canvas = _Canvas(_padded(re.min(), re.max()), _padded(min(im.min(), 0.0), max(im.max(), 0.0)),
                     title, "Re E", "Im E")
    canvas.hline(0.0)
    canvas.polyline(re, im)
    canvas.markers([b.energy.real for b in bics], [b.energy.imag for b in bics],
                   label="width minima" if bics else None)
    return canvas.render()


def width_svg(traj, bics=(), parameter: str | None = None,
              title: str = "Decay width") -> str:
    """Width profile on a log scale; values below 1e-16 are clamped for display."""
    from .trace import width_profile
    prof = width_profile(traj, floor=GAMMA_FLOOR)
    xs = np.array([x for x, _ in prof]) if prof else np.zeros(1)
    gs = np.array([g for _, g in prof]) if prof else np.ones(1)
    order = np.argsort(xs)
    xs, gs = xs[order], gs[order]
    marks = [max(b.gamma_min, GAMMA_FLOOR) for b in bics]
    lg = np.log10(np.concatenate([gs, marks]))
    ylim = (math.floor(lg.min()), math.ceil(lg.max()) if lg.max() > lg.min() else lg.min() + 1)
    canvas = _Canvas(_padded(xs.min(), xs.max(), 0.02), ylim, title,
                     parameter or traj.parameter, "Gamma = -2 Im E", ylog=True)
    canvas.polyline(xs, gs)
    canvas.markers([b.param for b in bics], marks, label="refined minima" if bics else None)
    return canvas.render()
