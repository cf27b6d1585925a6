"""Billiards in a constant magnetic field.

Between bounces a unit-speed charge runs counterclockwise along a Larmor
circle of radius ``R``; at the boundary it reflects specularly.  The family
of final Larmor circles of a point-source pencil is encoded by the curve of
their centers, whose offsets ``c +- R nu`` form the two-component caustic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCenterCurve, NoProgress, TangentArc, WeakFieldViolation
from .geom2d import TWO_PI, Oval, angle_of, direction, dot, rot90
from .linespace import (DEGENERATE_FRACTION, DEGENERATE_REL, SPECTRAL_FLOOR, TrigInterpolant,
                        _refine_zeros, _sign_change_brackets)
from ._roots import bracketed_root

ARC_STEP = np.pi / 64
ARC_GUARD = 1e-9
NONGENERIC_REL = 1e-6


class MagneticBilliard:
    """An oval table in a constant field with Larmor radius ``R`` (weak field only)."""

    def __init__(self, table: Oval, R: float):
        if not R > 0:
            raise ValueError("Larmor radius must be positive")
        kmin = table.min_curvature()
        if not kmin > 1.0 / R:
            raise WeakFieldViolation(
                f"minimal curvature {kmin:.6g} does not exceed 1/R = {1.0 / R:.6g}")
        self.table = table
        self.R = float(R)

    def __repr__(self):
        return f"MagneticBilliard({self.table!r}, R={self.R})"


def _advance(mb: MagneticBilliard, x, v):
    """Vectorized Larmor step: hit parameters, hit points and incoming directions."""
    oval, R = mb.table, mb.R
    x, v = np.atleast_2d(np.asarray(x, float)), np.atleast_2d(np.asarray(v, float))
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    c = x + R * rot90(v)
    th0 = angle_of(x - c)

    def arc_point(psi, idx):
        # chord form x + 2R sin(psi/2) e(th0 + (psi + pi)/2) stays accurate for huge R
        return x[idx] + (2.0 * R * np.sin(0.5 * psi))[..., None] * direction(
            th0[idx] + 0.5 * (psi + np.pi))

    def level(psi, idx):
        return oval.level(arc_point(psi, idx))

    idx = np.arange(x.shape[0])
    n_steps = int(np.ceil(TWO_PI / ARC_STEP))
    psis = ARC_GUARD + ARC_STEP * np.arange(n_steps + 1)
    psis[-1] = TWO_PI - ARC_GUARD
    vals = np.stack([level(np.full(idx.size, s), idx) for s in psis], axis=1)
    outside = vals > 0
    if not outside.any(axis=1).all():
        raise NoProgress("Larmor circle never leaves the table")
    k = np.argmax(outside, axis=1)
    if np.any(k == 0):
        raise NoProgress("trajectory starts outside the table")
    # refine in arc length so the tolerance is a distance, whatever R is
    arc_level = lambda sig, i: level(sig / R, i)
    sig = bracketed_root(arc_level, R * psis[k - 1], R * psis[k], xtol=1e-15)
    psi = sig / R
    hit = arc_point(psi, idx)
    resid = np.abs(level(psi, idx))
    if np.any(resid > 1e-12):
        raise TangentArc(f"arc meets the table with residual {resid.max():.3g}")
    u = rot90(direction(th0 + psi))
    return oval.param_of(hit), hit, u, c, th0, psi


def larmor_advance(mb: MagneticBilliard, x, v):
    """Next boundary hit along the counterclockwise Larmor circle from ``x`` with velocity ``v``.

    Returns ``(t_hit, incoming unit direction at the hit)``.
    """
    t, _, u, _, _, _ = _advance(mb, np.asarray(x, float)[None], np.asarray(v, float)[None])
    return float(t[0]), u[0]


def specular(u, N):
    """Mirror ``u`` in the line with unit normal ``N``."""
    return u - 2.0 * dot(u, N)[..., None] * N


@dataclass
class MagneticTrajectory:
    source: np.ndarray
    phi: float
    params: np.ndarray
    points: np.ndarray
    incoming: np.ndarray
    outgoing: np.ndarray
    arcs: list  # (center, start angle, sweep) per arc, including the final exit arc
    final_center: np.ndarray


def _propagate_batch(mb: MagneticBilliard, O, phis, n):
    phis = np.atleast_1d(np.asarray(phis, float))
    m = phis.size
    x = np.broadcast_to(np.asarray(O, float), (m, 2)).copy()
    v = direction(phis)
    params = np.empty((m, n))
    points = np.empty((m, n, 2))
    incoming = np.empty((m, n, 2))
    outgoing = np.empty((m, n, 2))
    arcs = []
    for k in range(n):
        t, hit, u, c, th0, psi = _advance(mb, x, v)
        N = mb.table.normal(t)
        w = specular(u, N)
        params[:, k], points[:, k], incoming[:, k], outgoing[:, k] = t, hit, u, w
        arcs.append((c, th0, psi))
        x, v = hit, w
    return params, points, incoming, outgoing, arcs, x + mb.R * rot90(v)


def magnetic_propagate(mb: MagneticBilliard, O, phi, n) -> MagneticTrajectory:
    """``n`` Larmor arcs from ``O`` with specular reflections; the final circle's center."""
    O = np.asarray(O, float)
    if not mb.table.contains(O):
        raise ValueError("source must lie strictly inside the table")
    params, points, incoming, outgoing, arcs, centers = _propagate_batch(mb, O, [phi], n)
    arc_list = [(a[0][0], float(a[1][0]), float(a[2][0])) for a in arcs]
    if n:
        _, _, _, c, th0, psi = _advance(mb, points[:, -1], outgoing[:, -1])
        arc_list.append((c[0], float(th0[0]), float(psi[0])))
    return MagneticTrajectory(O, float(phi), params[0], points[0], incoming[0], outgoing[0],
                              arc_list, centers[0])


def final_centers(mb: MagneticBilliard, O, phis, n, chunk=512):
    """Final Larmor centers for a pencil, computed in fixed-size chunks."""
    phis = np.asarray(phis, float)
    out = [_propagate_batch(mb, O, phis[k:k + chunk], n)[-1] for k in range(0, phis.size, chunk)]
    return np.concatenate(out)


@dataclass
class CenterCurve:
    """Closed curve of Larmor-circle centers sampled uniformly in ``s``."""

    s: np.ndarray
    c: np.ndarray
    period: float = TWO_PI
    _fits: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.s = np.asarray(self.s, float)
        self.c = np.asarray(self.c, float)

    def _interp(self):
        if self._fits is None:
            self._fits = tuple(TrigInterpolant(self.c[:, i], self.period, self.s[0],
                                               SPECTRAL_FLOOR) for i in range(2))
        return self._fits

    @property
    def resolved(self) -> bool:
        return all(f.resolved for f in self._interp())

    @property
    def step(self) -> float:
        return self.period / self.s.size

    def derivs(self, s=None):
        fx, fy = self._interp()
        if s is None:
            d1 = np.stack([fx.on_grid(1), fy.on_grid(1)], axis=-1)
            d2 = np.stack([fx.on_grid(2), fy.on_grid(2)], axis=-1)
            return self.c, d1, d2
        s = np.asarray(s, float)
        return tuple(np.stack([fx(s, k), fy(s, k)], axis=-1) for k in range(3))

    def curvature(self, s=None):
        _, d1, d2 = self.derivs(s)
        speed = np.linalg.norm(d1, axis=-1)
        return (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]) / speed**3

    def normal(self, s=None):
        """Left unit normal ``J c' / |c'|``."""
        _, d1, _ = self.derivs(s)
        return rot90(d1) / np.linalg.norm(d1, axis=-1, keepdims=True)

    def diameter(self) -> float:
        lo, hi = self.c.min(axis=0), self.c.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    def winding(self) -> int:
        """Turns of the tangent direction along the curve."""
        _, d1, _ = self.derivs()
        a = np.unwrap(angle_of(d1))
        return int(np.rint((a[-1] - a[0] + _wrap(a[0] - a[-1])) / TWO_PI))


def _wrap(a):
    return (a + np.pi) % TWO_PI - np.pi


def center_curve(mb: MagneticBilliard, O, n, m=4096, offset=0.0) -> CenterCurve:
    s = offset + TWO_PI * np.arange(m) / m
    return CenterCurve(s, final_centers(mb, O, s, n))


def _area(poly) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


@dataclass
class CircleEnvelope:
    """The two offset components ``c + sign * R * nu``; ``inner`` encloses less area."""

    inner: np.ndarray
    outer: np.ndarray | None
    inner_sign: int
    degenerate: bool = False


def circle_family_envelope(cc: CenterCurve, R: float, rel=1e-9) -> CircleEnvelope:
    """Envelope of the circles of radius ``R`` centered on ``cc``.

    A center curve collapsed to a point gives the single circle of radius
    ``R`` with ``degenerate=True``; a center curve with a stationary point
    raises DegenerateCenterCurve.
    """
    if cc.diameter() < rel * R:
        ring = cc.c.mean(axis=0) + R * direction(cc.s)
        return CircleEnvelope(ring, None, 0, degenerate=True)
    _, d1, _ = cc.derivs()
    speed = np.linalg.norm(d1, axis=-1)
    if speed.min() < rel * max(float(np.median(speed)), 1e-300):
        raise DegenerateCenterCurve("center curve has a stationary point")
    nu = cc.normal()
    plus, minus = cc.c + R * nu, cc.c - R * nu
    if _area(plus) <= _area(minus):
        return CircleEnvelope(plus, minus, +1)
    return CircleEnvelope(minus, plus, -1)


@dataclass
class OffsetCusps:
    sign: int
    params: np.ndarray
    nongeneric: np.ndarray
    collapsed: bool = False  # the component is a single point (1 - sign R kappa == 0)

    @property
    def count(self) -> int:
        return int(self.params.size)


def offset_cusps(cc: CenterCurve, R: float, sign: int) -> OffsetCusps:
    """Cusps of ``c + sign R nu``: transversal sign changes of ``1 - sign R kappa_c``.

    When ``1 - sign R kappa`` vanishes on more than 10% of the samples the
    component has collapsed to a point and is reported with ``collapsed=True``.
    """
    g = 1.0 - sign * R * cc.curvature()
    if np.mean(np.abs(g) < DEGENERATE_REL) > DEGENERATE_FRACTION:
        return OffsetCusps(sign, np.empty(0), np.empty(0), collapsed=True)
    idx = _sign_change_brackets(g)
    params = _refine_zeros(cc, lambda x: 1.0 - sign * R * cc.curvature(x), idx)
    a = np.abs(g)
    local_min = (a <= np.roll(a, 1)) & (a <= np.roll(a, -1))
    touching = local_min & (a < NONGENERIC_REL * float(np.max(a)))
    touching &= ~np.isin(np.arange(a.size), np.concatenate([idx, (idx + 1) % a.size]))
    return OffsetCusps(sign, params, cc.s[touching])


def offset_speed(cc: CenterCurve, R, sign, s=None):
    """``|d/ds (c + sign R nu)| = |1 - sign R kappa| |c'|``."""
    _, d1, _ = cc.derivs(s)
    return np.abs(1.0 - sign * R * cc.curvature(s)) * np.linalg.norm(d1, axis=-1)


@dataclass
class MagneticReport:
    n: int
    R: float
    m: int
    curve: CenterCurve = field(repr=False)
    envelope: CircleEnvelope = field(repr=False)
    inner: OffsetCusps | None
    outer: OffsetCusps | None
    winding: int

    @property
    def degenerate(self) -> bool:
        """The centre curve is a point or one envelope component is a point."""
        return self.envelope.degenerate or any(
            c is not None and c.collapsed for c in (self.inner, self.outer))

    @property
    def inner_count(self) -> int:
        return self.inner.count if self.inner is not None else 0

    @property
    def outer_count(self) -> int:
        return self.outer.count if self.outer is not None else 0

    def _cusp_rows(self, cusps: OffsetCusps, component):
        if cusps is None or cusps.count == 0:
            return []
        c, _, _ = self.curve.derivs(cusps.params)
        pts = c + cusps.sign * self.R * self.curve.normal(cusps.params)
        return [{"component": component, "s": float(s), "x": float(p[0]), "y": float(p[1])}
                for s, p in zip(cusps.params, pts)]

    def to_dict(self, envelope_csv=None, **extra):
        d = {"n": self.n, "R": self.R, "samples": self.m, "winding": self.winding,
             "degenerate": self.degenerate,
             "components": 1 if self.envelope.outer is None else 2,
             "cusp_count": {"inner": self.inner_count, "outer": self.outer_count},
             "collapsed": {"inner": bool(self.inner is not None and self.inner.collapsed),
                           "outer": bool(self.outer is not None and self.outer.collapsed)},
             "cusps": self._cusp_rows(self.inner, "inner") + self._cusp_rows(self.outer, "outer"),
             "nongeneric": {
                 "inner": [] if self.inner is None else [float(s) for s in self.inner.nongeneric],
                 "outer": [] if self.outer is None else [float(s) for s in self.outer.nongeneric]},
             "envelope_csv": envelope_csv}
        d.update(extra)
        return d

    def to_json(self, path=None, envelope_csv=None, **extra) -> str:
        text = json.dumps(self.to_dict(envelope_csv, **extra), indent=2, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def envelope_to_csv(self, path):
        env = self.envelope
        outer = env.outer if env.outer is not None else np.full_like(env.inner, np.nan)
        with open(path, "w") as fh:
            fh.write("s,cx,cy,inner_x,inner_y,outer_x,outer_y\n")
            for s, c, a, b in zip(self.curve.s, self.curve.c, env.inner, outer):
                vals = (s, c[0], c[1], a[0], a[1], b[0], b[1])
                fh.write(",".join(repr(float(v)) for v in vals) + "\n")


def magnetic_caustic(mb: MagneticBilliard, O, n, m=4096, offset=0.0) -> MagneticReport:
    """Center curve, two-component envelope and per-component cusps for a pencil from ``O``.

    The sample count doubles (up to 65536) while the spectral fit of the
    center curve is unresolved.
    """
    while True:
        cc = center_curve(mb, O, n, m, offset)
        if cc.resolved or m >= 65536 or cc.diameter() < 1e-9 * mb.R:
            break
        m *= 2
    env = circle_family_envelope(cc, mb.R)
    if env.degenerate:
        return MagneticReport(n, mb.R, m, cc, env, None, None, 0)
    inner = offset_cusps(cc, mb.R, env.inner_sign)
    outer = offset_cusps(cc, mb.R, -env.inner_sign)
    return MagneticReport(n, mb.R, m, cc, env, inner, outer, cc.winding())
