"""Minimal deterministic SVG writer for scene figures.

Coordinates are plane units; the viewport is the bounding box of everything
drawn plus a 10% margin, with the y axis pointing up.
"""

from __future__ import annotations

import numpy as np

from .billiard import propagate
from .magnetic import magnetic_propagate

MARGIN = 0.10


def _fmt(v: float) -> str:
    return f"{v:.6f}"


class Figure:
    """Collects polylines and markers, then renders a fixed-viewport SVG."""

    def __init__(self, width=800, title=None, clip=None):
        self.width = int(width)
        self.title = title
        self.clip = clip  # optional (xmin, ymin, xmax, ymax) limiting the viewport
        self._items = []
        self._bbox = None

    def _grow(self, pts):
        pts = np.asarray(pts, float).reshape(-1, 2)
        pts = pts[np.isfinite(pts).all(axis=1)]
        if pts.size == 0:
            return
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        if self._bbox is None:
            self._bbox = (lo, hi)
        else:
            self._bbox = (np.minimum(self._bbox[0], lo), np.maximum(self._bbox[1], hi))

    def polyline(self, pts, stroke="black", width=1.0, closed=False, dash=None, fit=True):
        """Add a polyline; non-finite points split it into separate pieces."""
        pts = np.asarray(pts, float).reshape(-1, 2)
        if fit:
            self._grow(pts)
        self._items.append(("poly", pts, stroke, width, closed, dash))

    def marker(self, xy, r=4.0, fill="red"):
        self._grow(xy)
        self._items.append(("dot", np.asarray(xy, float), fill, r))

    def _viewport(self):
        if self.clip is not None:
            lo, hi = np.array(self.clip[:2], float), np.array(self.clip[2:], float)
        elif self._bbox is None:
            lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
        else:
            lo, hi = self._bbox
        span = np.maximum(hi - lo, 1e-9)
        return lo - MARGIN * span, hi + MARGIN * span

    def render(self) -> str:
        lo, hi = self._viewport()
        span = hi - lo
        scale = self.width / span[0]
        height = int(round(span[1] * scale))

        def tx(p):
            return (p[..., 0] - lo[0]) * scale, (hi[1] - p[..., 1]) * scale

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
               f'height="{height}" viewBox="0 0 {self.width} {height}">']
        if self.title:
            out.append(f"<title>{self.title}</title>")
        out.append(f'<rect width="{self.width}" height="{height}" fill="white"/>')
        for item in self._items:
            if item[0] == "poly":
                _, pts, stroke, width, closed, dash = item
                finite = np.isfinite(pts).all(axis=1)
                # split at non-finite points and at huge jumps (lines through infinity)
                breaks = np.flatnonzero(~finite)
                pieces = np.split(np.arange(len(pts)), breaks)
                for piece in pieces:
                    piece = piece[finite[piece]]
                    if piece.size < 2:
                        continue
                    x, y = tx(pts[piece])
                    coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(x, y))
                    tag = "polygon" if closed and piece.size == len(pts) else "polyline"
                    extra = f' stroke-dasharray="{dash}"' if dash else ""
                    out.append(f'<{tag} points="{coords}" fill="none" stroke="{stroke}" '
                               f'stroke-width="{width}"{extra}/>')
            else:
                _, xy, fill, r = item
                x, y = tx(xy)
                out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{r}" fill="{fill}"/>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.render())


def clip_outliers(pts, center, radius):
    """Replace points farther than ``radius`` from ``center`` by NaN (breaks the polyline)."""
    pts = np.array(pts, float)
    far = np.linalg.norm(pts - np.asarray(center, float), axis=-1) > radius
    pts[far] = np.nan
    return pts


def caustic_figure(table, O, n, report, rays=12):
    """Table, sample trajectories, envelope and cusp markers of a caustic report."""
    diam = table.boundary.diameter()
    center = table.boundary.center
    fig = Figure(title=f"caustic by reflection, n = {n}")
    fig.polyline(table.boundary.sample(512), stroke="black", width=1.5, closed=True)
    for phi in 2 * np.pi * (np.arange(rays) + 0.5) / rays:
        traj = propagate(table, O, phi, n)
        end = traj.points[-1] + 0.5 * diam * traj.final_line.direction
        pts = np.vstack([O, traj.points, end])
        fig.polyline(pts, stroke="#9999cc", width=0.6, fit=False)
    env = clip_outliers(report.envelope, center, 1.5 * diam)
    fig.polyline(env, stroke="crimson", width=1.2)
    for cusp in report.cusps():
        if np.hypot(cusp["x"] - center[0], cusp["y"] - center[1]) <= 1.5 * diam:
            fig.marker((cusp["x"], cusp["y"]), r=4, fill="navy")
    fig.marker(O, r=3, fill="black")
    return fig


def magnetic_figure(mb, O, n, report, rays=12):
    """Table, Larmor arcs, center curve and both envelope components."""
    oval = mb.table
    diam = oval.diameter()
    center = oval.center
    fig = Figure(title=f"magnetic caustic, n = {n}, R = {mb.R}")
    fig.polyline(oval.sample(512), stroke="black", width=1.5, closed=True)
    for phi in 2 * np.pi * (np.arange(rays) + 0.5) / rays:
        traj = magnetic_propagate(mb, O, phi, n)
        for c, th0, sweep in traj.arcs:
            ang = th0 + np.linspace(0.0, sweep, 64)
            pts = c + mb.R * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
            fig.polyline(pts, stroke="#9999cc", width=0.6, fit=False)
    reach = 2.5 * (diam + mb.R)
    fig.polyline(clip_outliers(report.curve.c, center, reach), stroke="green", width=1.0)
    env = report.envelope
    fig.polyline(clip_outliers(env.inner, center, reach), stroke="crimson", width=1.2)
    if env.outer is not None:
        fig.polyline(clip_outliers(env.outer, center, reach), stroke="darkorange", width=1.2)
    for row in report.to_dict()["cusps"]:
        fig.marker((row["x"], row["y"]), r=4, fill="navy")
    fig.marker(O, r=3, fill="black")
    return fig
