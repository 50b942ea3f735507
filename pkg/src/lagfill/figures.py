"""Deterministic CSV and SVG output for fronts and the determinant path.

SVG is written by hand so that the bytes depend only on the data: no
timestamps, no library version strings, fixed number formatting.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .legendrian import FrontDiagram

CSV_FLOAT = "%.17g"
SVG_SIZE = (480, 360)
SVG_PAD = 30


def format_row(row) -> list:
    return [CSV_FLOAT % v if isinstance(v, (float, np.floating)) else str(v) for v in row]


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(format_row(row))
    return buf.getvalue()


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


class _Canvas:
    """Affine map from data coordinates to SVG pixels, y axis pointing up."""

    def __init__(self, xs, ys, size=SVG_SIZE, pad=SVG_PAD):
        self.w, self.h = size
        x0, x1 = float(np.min(xs)), float(np.max(xs))
        y0, y1 = float(np.min(ys)), float(np.max(ys))
        span = max(x1 - x0, y1 - y0, 1e-12)
        self.scale = min((self.w - 2 * pad) / max(x1 - x0, 1e-12 * span),
                         (self.h - 2 * pad) / max(y1 - y0, 1e-12 * span))
        self.cx, self.cy = (x0 + x1) / 2, (y0 + y1) / 2
        self.items = []

    def px(self, x, y):
        return (self.w / 2 + (x - self.cx) * self.scale, self.h / 2 - (y - self.cy) * self.scale)

    def polyline(self, xs, ys, closed=False, stroke="#1f3b73"):
        pts = [self.px(x, y) for x, y in zip(xs, ys)]
        if closed:
            pts.append(pts[0])
        coords = " ".join(f"{a:.3f},{b:.3f}" for a, b in pts)
        self.items.append(f'<polyline class="curve" fill="none" stroke="{stroke}" '
                          f'stroke-width="1.5" points="{coords}"/>')

    def line(self, x0, y0, x1, y1, stroke="#999999"):
        (a, b), (c, d) = self.px(x0, y0), self.px(x1, y1)
        self.items.append(f'<line x1="{a:.3f}" y1="{b:.3f}" x2="{c:.3f}" y2="{d:.3f}" '
                          f'stroke="{stroke}" stroke-width="0.75"/>')

    def marker(self, x, y, cls, fill="#c0392b", r=4):
        a, b = self.px(x, y)
        self.items.append(f'<circle class="{cls}" cx="{a:.3f}" cy="{b:.3f}" r="{r}" fill="{fill}"/>')

    def label(self, x, y, text, dx=6, dy=-6):
        a, b = self.px(x, y)
        self.items.append(f'<text x="{a + dx:.3f}" y="{b + dy:.3f}" font-size="12" '
                          f'font-family="sans-serif">{text}</text>')

    def render(self, title: str) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" '
                f'viewBox="0 0 {self.w} {self.h}">')
        body = "\n".join([f"<title>{title}</title>", *self.items])
        return f"{head}\n{body}\n</svg>\n"


def front_svg(front: FrontDiagram) -> str:
    """The closed front polyline in the (x, z) plane with one marker per cusp."""
    c = _Canvas(front.x, front.z)
    c.line(float(np.min(front.x)), 0.0, float(np.max(front.x)), 0.0)
    c.polyline(front.x, front.z, closed=True)
    for cusp in front.cusps:
        c.marker(cusp.x, cusp.z, "cusp")
    return c.render(f"front of {front.name}")


def front_rows(front: FrontDiagram):
    return [(front.name, float(t), float(x), float(z)) for t, x, z in zip(front.theta, front.x, front.z)]


def detpath_rows(s, values, unwrapped):
    return [(float(a), float(v.real), float(v.imag), float(u)) for a, v, u in zip(s, values, unwrapped)]


def detpath_svg(s, values) -> str:
    """The det path in C with both endpoints marked and the s = 1/2 crossing annotated."""
    values = np.asarray(values, dtype=complex)
    re, im = values.real, values.imag
    c = _Canvas(np.append(re, 0.0), np.append(im, 0.0))
    c.line(float(min(re.min(), 0.0)), 0.0, float(max(re.max(), 0.0)), 0.0)
    c.line(0.0, float(min(im.min(), 0.0)), 0.0, float(im.max()))
    c.polyline(re, im)
    c.marker(re[0], im[0], "endpoint start", fill="#2c7a2c")
    c.marker(re[-1], im[-1], "endpoint end", fill="#2c7a2c")
    mid = int(np.argmin(np.abs(np.asarray(s) - 0.5)))
    c.marker(re[mid], im[mid], "midpoint")
    c.label(re[mid], im[mid], "s = 1/2: 22i/7")
    c.label(re[0], im[0], "s = 0", dy=14)
    c.label(re[-1], im[-1], "s = 1", dx=-40, dy=14)
    return c.render("det(X(s) + iY(s))")
