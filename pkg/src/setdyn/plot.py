"""Hand-written SVG output for covers and bifurcation diagrams.

The markup is assembled from formatted strings with fixed precision, so equal
inputs give byte-identical files.
"""

from __future__ import annotations

from html import escape

import numpy as np

from .geometry import merged_intervals
from .serialize import COVERS, REPORT, UnknownSchema, covers_from_dict, report_from_dict, schema_of

WIDTH, HEIGHT = 640, 400
MARGIN = 48
FORWARD_COLOR = "#1f5fa8"
DUAL_COLOR = "#c0392b"
SET_COLORS = ("#1f5fa8", "#2e8b57", "#8e44ad", "#d35400", "#7f8c8d")
EVENT_COLORS = {
    "explosion": "#d35400",
    "appearance": "#2e8b57",
    "disappearance": "#7f8c8d",
    "merge_candidate": "#8e44ad",
    "continuous": "#999999",
}


def _f(x: float) -> str:
    return f"{x:.3f}"


class _Canvas:
    def __init__(self, xlim, ylim, title):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<text x="{MARGIN}" y="{MARGIN // 2}" font-family="sans-serif" font-size="13">{escape(title)}</text>',
        ]
        self._axes()

    def sx(self, x):
        return MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * MARGIN)

    def sy(self, y):
        return HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2 * MARGIN)

    def _axes(self):
        left, right = MARGIN, WIDTH - MARGIN
        top, bottom = MARGIN, HEIGHT - MARGIN
        self.parts.append(
            f'<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="#333" stroke-width="1"/>'
        )
        for x in np.linspace(self.x0, self.x1, 5):
            self.parts.append(
                f'<text x="{_f(self.sx(x))}" y="{bottom + 16}" font-family="sans-serif" font-size="10" '
                f'text-anchor="middle">{x:.4g}</text>'
            )
        for y in np.linspace(self.y0, self.y1, 5):
            self.parts.append(
                f'<text x="{left - 6}" y="{_f(self.sy(y) + 3)}" font-family="sans-serif" font-size="10" '
                f'text-anchor="end">{y:.4g}</text>'
            )

    def rect(self, x0, y0, x1, y1, color, opacity=0.8):
        ax, bx = sorted((self.sx(x0), self.sx(x1)))
        ay, by = sorted((self.sy(y0), self.sy(y1)))
        self.parts.append(
            f'<rect x="{_f(ax)}" y="{_f(ay)}" width="{_f(max(bx - ax, 0.5))}" height="{_f(max(by - ay, 0.5))}" '
            f'fill="{color}" fill-opacity="{opacity}"/>'
        )

    def vline(self, x, y0, y1, color, width=2.0, dash=None, title=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        body = f"<title>{escape(title)}</title>" if title else ""
        self.parts.append(
            f'<line x1="{_f(self.sx(x))}" y1="{_f(self.sy(y0))}" x2="{_f(self.sx(x))}" y2="{_f(self.sy(y1))}" '
            f'stroke="{color}" stroke-width="{width}"{extra}>{body}</line>'
        )

    def label(self, x, y, text, color="#333"):
        self.parts.append(
            f'<text x="{_f(self.sx(x))}" y="{_f(self.sy(y))}" font-family="sans-serif" font-size="10" '
            f'fill="{color}">{escape(text)}</text>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def covers_svg(approxs, title="minimal set covers") -> str:
    """1-D covers as interval bars (one row per set), 2-D covers as filled boxes."""
    if not approxs:
        return _Canvas((0, 1), (0, 1), title + " (none)").render()
    dim = approxs[0].cover.dimension
    dom = approxs[0].cover.domain
    if dim == 1:
        lo = min(float(a.cover.hull()[0][0]) for a in approxs)
        hi = max(float(a.cover.hull()[1][0]) for a in approxs)
        pad = 0.05 * (hi - lo) or 1.0
        canvas = _Canvas((lo - pad, hi + pad), (0, len(approxs)), title)
        for i, a in enumerate(approxs):
            los, his = merged_intervals(a.cover)
            color = DUAL_COLOR if a.side == "dual" else SET_COLORS[i % len(SET_COLORS)]
            for x0, x1 in zip(los, his):
                canvas.rect(float(x0), i + 0.3, float(x1), i + 0.7, color)
        return canvas.render()
    canvas = _Canvas((dom.lo[0], dom.hi[0]), (dom.lo[1], dom.hi[1]), title)
    for i, a in enumerate(approxs):
        color = DUAL_COLOR if a.side == "dual" else SET_COLORS[i % len(SET_COLORS)]
        for blo, bhi in zip(a.cover.lo, a.cover.hi):
            canvas.rect(float(blo[0]), float(blo[1]), float(bhi[0]), float(bhi[1]), color, 0.6)
    return canvas.render()


def _extent(cover):
    if cover.dimension == 1:
        return merged_intervals(cover)
    lo, hi = cover.hull()
    return np.array([lo[0]]), np.array([hi[0]])


def report_svg(report, title=None) -> str:
    """Parameter against cover extent, with markers at every non-continuous step."""
    title = title or f"{report.model}: minimal sets against {report.param_name}"
    params = [s.param for s in report.samples + report.dual_samples] or [0.0, 1.0]
    segs = []
    for samples, color in ((report.samples, FORWARD_COLOR), (report.dual_samples, DUAL_COLOR)):
        for s in samples:
            for a in s.sets:
                los, his = _extent(a.cover)
                segs.extend((s.param, float(x0), float(x1), color) for x0, x1 in zip(los, his))
    if segs:
        ylo = min(s[1] for s in segs)
        yhi = max(s[2] for s in segs)
    else:
        ylo, yhi = report.domain.lo[0], report.domain.hi[0]
    pad = 0.05 * (yhi - ylo) or 1.0
    canvas = _Canvas((min(params), max(params)), (ylo - pad, yhi + pad), title)
    for p, y0, y1, color in segs:
        canvas.vline(p, y0, y1, color)
    for e in report.transitions():
        mid = 0.5 * (e.param_lo + e.param_hi)
        color = EVENT_COLORS.get(e.kind, "#333")
        canvas.vline(mid, ylo - pad, yhi + pad, color, 1.0, "4 3", f"{e.kind} in [{e.param_lo}, {e.param_hi}]")
        canvas.label(mid, yhi + 0.5 * pad, e.kind, color)
    for b in report.brackets:
        canvas.vline(b.lo, ylo - pad, yhi + pad, "#000", 0.8, "1 2", f"bracket lo {b.lo}")
        canvas.vline(b.hi, ylo - pad, yhi + pad, "#000", 0.8, "1 2", f"bracket hi {b.hi}")
    return canvas.render()


def render(doc: dict) -> str:
    """SVG for a parsed covers or report document."""
    schema = schema_of(doc)
    if schema == COVERS:
        return covers_svg(covers_from_dict(doc))
    if schema == REPORT:
        return report_svg(report_from_dict(doc))
    raise UnknownSchema(f"cannot plot schema {schema!r}")
