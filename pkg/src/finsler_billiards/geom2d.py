"""Planar primitives: oriented lines, segments and analytic ovals.

Frame convention used everywhere in the package: an oriented line with
direction angle ``alpha`` has direction ``d(alpha) = (cos alpha, sin alpha)``
and normal ``n(alpha) = (sin alpha, -cos alpha)``; its points satisfy
``<P, n(alpha)> = p``.  With this choice the lines through a point ``(a, b)``
form the sine curve ``p = a sin(alpha) - b cos(alpha)``.

All functions accept scalars or numpy arrays and broadcast.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from ._roots import bracketed_root
from .errors import ConfigError, GrazingHit, NoIntersection, NotConvex

TWO_PI = 2.0 * np.pi
PARAM_TOL = 1e-14
GRAZING_TOL = 1e-8


def direction(alpha):
    alpha = np.asarray(alpha, dtype=float)
    return np.stack([np.cos(alpha), np.sin(alpha)], axis=-1)


def normal(alpha):
    alpha = np.asarray(alpha, dtype=float)
    return np.stack([np.sin(alpha), -np.cos(alpha)], axis=-1)


def rot90(v):
    """Rotate vectors by +pi/2 (the complex structure J)."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def cross(u, v):
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def dot(u, v):
    return np.sum(np.asarray(u, dtype=float) * np.asarray(v, dtype=float), axis=-1)


def angle_of(v):
    v = np.asarray(v, dtype=float)
    return np.arctan2(v[..., 1], v[..., 0])


def wrap_angle(a):
    """Map angles to [0, 2pi)."""
    a = np.mod(np.asarray(a, dtype=float), TWO_PI)
    return np.where(a >= TWO_PI, 0.0, a)


def wrap_pi(a):
    """Map angles to [-pi, pi)."""
    return np.mod(np.asarray(a, dtype=float) + np.pi, TWO_PI) - np.pi


def rotate(v, phi):
    c, s = np.cos(phi), np.sin(phi)
    v = np.asarray(v, dtype=float)
    return np.stack([c * v[..., 0] - s * v[..., 1], s * v[..., 0] + c * v[..., 1]], axis=-1)


@dataclass(frozen=True)
class OrientedLine:
    """A point of the space of oriented lines, in (alpha, p) coordinates."""

    alpha: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(wrap_angle(self.alpha)))
        object.__setattr__(self, "p", float(self.p))

    @property
    def direction(self):
        return direction(self.alpha)

    @property
    def normal(self):
        return normal(self.alpha)

    @property
    def foot(self):
        """Point of the line closest to the origin."""
        return self.p * self.normal

    def residual(self, point) -> float:
        return float(dot(point, self.normal) - self.p)

    def reversed(self) -> "OrientedLine":
        return OrientedLine(self.alpha + np.pi, -self.p)

    def distance_to(self, other: "OrientedLine") -> float:
        """Coordinate distance on the cylinder (angle difference wrapped)."""
        return float(np.hypot(wrap_pi(self.alpha - other.alpha), self.p - other.p))


def line_from_point_dir(P, alpha) -> OrientedLine:
    P = np.asarray(P, dtype=float)
    return OrientedLine(alpha, P[0] * np.sin(alpha) - P[1] * np.cos(alpha))


def line_p(P, alpha):
    """Vectorized signed distance of the line through ``P`` with direction ``alpha``."""
    P = np.asarray(P, dtype=float)
    return P[..., 0] * np.sin(alpha) - P[..., 1] * np.cos(alpha)


@dataclass(frozen=True)
class Segment:
    start: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "end", np.asarray(self.end, dtype=float))

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.end - self.start)))

    def crossings(self, alpha, p):
        """Number of intersection points (0 or 1) with the lines (alpha, p)."""
        n = normal(alpha)
        a = dot(self.start, n) - p
        b = dot(self.end, n) - p
        return ((a > 0) != (b > 0)).astype(float)

    def support(self, theta):
        N = direction(theta)
        return np.maximum(dot(self.start, N), dot(self.end, N))


class Oval(abc.ABC):
    """Smooth strictly convex closed curve, counterclockwise, parameter t in [0, 2pi)."""

    @abc.abstractmethod
    def point(self, t): ...

    @abc.abstractmethod
    def dpoint(self, t):
        """Derivative of ``point`` with respect to the parameter."""

    @abc.abstractmethod
    def curvature(self, t): ...

    @abc.abstractmethod
    def support(self, theta):
        """Support function of the enclosed body in the outward direction ``theta``."""

    @abc.abstractmethod
    def level(self, q):
        """Negative strictly inside, zero on the curve, positive outside."""

    @abc.abstractmethod
    def chord(self, alpha, p):
        """Parameters ``(t_in, t_out, hit)`` where the oriented lines enter and leave.

        Missed lines get NaN parameters and ``hit = False``.
        """

    @abc.abstractmethod
    def rotated(self, phi) -> "Oval": ...

    @property
    @abc.abstractmethod
    def center(self): ...

    @abc.abstractmethod
    def param_of(self, q):
        """Parameter of the boundary point nearest to the on-curve point ``q``."""

    def tangent(self, t):
        d = self.dpoint(t)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def normal(self, t):
        T = self.tangent(t)
        return np.stack([T[..., 1], -T[..., 0]], axis=-1)

    def sample(self, m=512):
        return self.point(np.linspace(0.0, TWO_PI, m, endpoint=False))

    def min_curvature(self, m=4096) -> float:
        return float(np.min(self.curvature(np.linspace(0.0, TWO_PI, m, endpoint=False))))

    def diameter(self, m=4096) -> float:
        th = np.linspace(0.0, np.pi, m // 2, endpoint=False)
        return float(np.max(self.support(th) + self.support(th + np.pi)))

    def contains(self, q) -> bool:
        return bool(np.all(self.level(q) < 0))

    def crossings(self, alpha, p):
        """Number of intersection points (0 or 2) with the lines (alpha, p)."""
        th = np.asarray(alpha) - 0.5 * np.pi
        upper = self.support(th)
        lower = -self.support(th + np.pi)
        return np.where((p > lower) & (p < upper), 2.0, 0.0)


def _fourier_eval(coeffs, theta, deriv=0):
    """Evaluate c0 + sum a_k cos k th + b_k sin k th (or its derivative)."""
    theta = np.asarray(theta, dtype=float)
    c0 = coeffs[0]
    out = np.full(theta.shape, c0 if deriv == 0 else 0.0)
    for k in range(1, (len(coeffs) - 1) // 2 + 1):
        a, b = coeffs[2 * k - 1], coeffs[2 * k]
        c, s = np.cos(k * theta), np.sin(k * theta)
        # d/dth (a cos + b sin) = k (-a sin + b cos); pattern repeats every 4.
        r = deriv % 4
        if r == 0:
            term = a * c + b * s
        elif r == 1:
            term = -a * s + b * c
        elif r == 2:
            term = -a * c - b * s
        else:
            term = a * s - b * c
        out = out + k**deriv * term
    return out


class SupportOval(Oval):
    """Oval given by a trigonometric support function.

    ``coeffs = (c0, a1, b1, a2, b2, ...)`` so that
    ``h(theta) = c0 + sum_k a_k cos(k theta) + b_k sin(k theta)``.
    The parameter ``t`` is the outward normal angle.
    """

    def __init__(self, coeffs, validate=True):
        coeffs = [float(c) for c in coeffs]
        if len(coeffs) % 2 == 0:
            coeffs.append(0.0)
        self.coeffs = tuple(coeffs)
        if validate:
            th = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
            radius = self.h(th) + self.h(th, 2)
            if np.min(radius) <= 0:
                raise NotConvex(f"h + h'' reaches {np.min(radius):.3g}")

    def __repr__(self):
        return f"SupportOval({list(self.coeffs)})"

    def h(self, theta, deriv=0):
        return _fourier_eval(self.coeffs, theta, deriv)

    @property
    def center(self):
        # Steiner point of the body
        if len(self.coeffs) < 3:
            return np.zeros(2)
        return np.array([self.coeffs[1], self.coeffs[2]])

    def point(self, t):
        N, T = direction(t), rot90(direction(t))
        return self.h(t)[..., None] * N + self.h(t, 1)[..., None] * T

    def dpoint(self, t):
        return (self.h(t) + self.h(t, 2))[..., None] * rot90(direction(t))

    def tangent(self, t):
        return rot90(direction(t))

    def normal(self, t):
        return direction(t)

    def curvature(self, t):
        return 1.0 / (self.h(t) + self.h(t, 2))

    def support(self, theta):
        return self.h(theta)

    def level(self, q):
        return self._level_theta(q)[0]

    def param_of(self, q):
        return wrap_angle(self._level_theta(q)[1])

    def _level_theta(self, q):
        """Support-type level ``max_th <q, N(th)> - h(th)`` and its maximizer."""
        q = np.asarray(q, dtype=float)
        flat = q.reshape(-1, 2)
        grid = np.linspace(0.0, TWO_PI, 512, endpoint=False)
        vals = flat @ direction(grid).T - self.h(grid)[None, :]
        th = grid[np.argmax(vals, axis=1)]
        step = TWO_PI / 512
        for _ in range(8):
            N, T = direction(th), rot90(direction(th))
            g1 = dot(flat, T) - self.h(th, 1)
            g2 = -dot(flat, N) - self.h(th, 2)
            dth = np.where(g2 < 0, -g1 / np.where(g2 < 0, g2, -1.0), 0.0)
            th = th + np.clip(dth, -step, step)
        out = dot(flat, direction(th)) - self.h(th)
        return out.reshape(q.shape[:-1]), th.reshape(q.shape[:-1])

    def chord(self, alpha, p):
        alpha, p = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(p, float))
        shape = alpha.shape
        alpha, p = alpha.ravel(), p.ravel()
        nvec = normal(alpha)
        hit = (self.h(alpha - 0.5 * np.pi) - p > 0) & (-self.h(alpha + 0.5 * np.pi) - p < 0)
        t_in = np.full(alpha.shape, np.nan)
        t_out = np.full(alpha.shape, np.nan)
        if hit.any():
            k = np.flatnonzero(hit)
            a, pk, nk = alpha[k], p[k], nvec[k]

            def gk(th, i):
                return dot(self.point(th), nk[i]) - pk[i]

            t_out[k] = bracketed_root(gk, a - 0.5 * np.pi, a + 0.5 * np.pi, xtol=PARAM_TOL)
            t_in[k] = bracketed_root(gk, a + 0.5 * np.pi, a + 1.5 * np.pi, xtol=PARAM_TOL)
        return wrap_angle(t_in).reshape(shape), wrap_angle(t_out).reshape(shape), hit.reshape(shape)

    def rotated(self, phi):
        c = list(self.coeffs)
        for k in range(1, (len(c) - 1) // 2 + 1):
            a, b = c[2 * k - 1], c[2 * k]
            ck, sk = np.cos(k * phi), np.sin(k * phi)
            c[2 * k - 1], c[2 * k] = a * ck - b * sk, a * sk + b * ck
        return SupportOval(c, validate=False)


class CircleOval(SupportOval):
    def __init__(self, r, center=(0.0, 0.0)):
        if r <= 0:
            raise NotConvex("radius must be positive")
        self.r = float(r)
        self._center = np.asarray(center, dtype=float)
        super().__init__([self.r, self._center[0], self._center[1]], validate=False)

    def __repr__(self):
        return f"CircleOval(r={self.r}, center={self._center.tolist()})"

    @property
    def center(self):
        return self._center

    def point(self, t):
        return self._center + self.r * direction(t)

    def dpoint(self, t):
        return self.r * rot90(direction(t))

    def curvature(self, t):
        return np.full(np.shape(t), 1.0 / self.r)

    def level(self, q):
        return np.linalg.norm(np.asarray(q, float) - self._center, axis=-1) - self.r

    def param_of(self, q):
        return wrap_angle(angle_of(np.asarray(q, float) - self._center))

    def chord(self, alpha, p):
        alpha, p = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(p, float))
        d, nv = direction(alpha), normal(alpha)
        rel = p[..., None] * nv - self._center
        B = dot(rel, d)
        C = dot(rel, rel) - self.r**2
        disc = B * B - C
        hit = disc > 0
        root = np.sqrt(np.where(hit, disc, np.nan))
        pin = rel + (-B - root)[..., None] * d
        pout = rel + (-B + root)[..., None] * d
        return wrap_angle(angle_of(pin)), wrap_angle(angle_of(pout)), hit

    def rotated(self, phi):
        return CircleOval(self.r, rotate(self._center, phi))


class EllipseOval(Oval):
    """Ellipse with semi-axes ``a`` (along the rotated x axis) and ``b``."""

    def __init__(self, a, b, center=(0.0, 0.0), angle=0.0):
        if a <= 0 or b <= 0:
            raise NotConvex("semi-axes must be positive")
        self.a, self.b = float(a), float(b)
        self._center = np.asarray(center, dtype=float)
        self.angle = float(angle)

    def __repr__(self):
        return f"EllipseOval(a={self.a}, b={self.b}, center={self._center.tolist()}, angle={self.angle})"

    @property
    def center(self):
        return self._center

    @property
    def foci(self):
        c = np.sqrt(abs(self.a**2 - self.b**2))
        axis = direction(self.angle) if self.a >= self.b else rot90(direction(self.angle))
        return self._center + c * axis, self._center - c * axis

    def _to_local(self, q):
        return rotate(np.asarray(q, float) - self._center, -self.angle)

    def point(self, t):
        t = np.asarray(t, dtype=float)
        loc = np.stack([self.a * np.cos(t), self.b * np.sin(t)], axis=-1)
        return self._center + rotate(loc, self.angle)

    def dpoint(self, t):
        t = np.asarray(t, dtype=float)
        return rotate(np.stack([-self.a * np.sin(t), self.b * np.cos(t)], axis=-1), self.angle)

    def curvature(self, t):
        t = np.asarray(t, dtype=float)
        return self.a * self.b / (self.a**2 * np.sin(t) ** 2 + self.b**2 * np.cos(t) ** 2) ** 1.5

    def support(self, theta):
        theta = np.asarray(theta, dtype=float)
        loc = theta - self.angle
        return dot(self._center, direction(theta)) + np.sqrt(
            self.a**2 * np.cos(loc) ** 2 + self.b**2 * np.sin(loc) ** 2)

    def param_of(self, q):
        loc = self._to_local(q)
        return wrap_angle(np.arctan2(loc[..., 1] / self.b, loc[..., 0] / self.a))

    def level(self, q):
        loc = self._to_local(q)
        return (loc[..., 0] / self.a) ** 2 + (loc[..., 1] / self.b) ** 2 - 1.0

    def chord(self, alpha, p):
        alpha, p = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(p, float))
        P0 = self._to_local(p[..., None] * normal(alpha))
        d = rotate(direction(alpha), -self.angle)
        scale = np.array([self.a, self.b])
        A, B = P0 / scale, d / scale
        qa, qb, qc = dot(B, B), dot(A, B), dot(A, A) - 1.0
        disc = qb * qb - qa * qc
        hit = disc > 0
        root = np.sqrt(np.where(hit, disc, np.nan))
        s_in, s_out = (-qb - root) / qa, (-qb + root) / qa
        u_in, u_out = A + s_in[..., None] * B, A + s_out[..., None] * B
        return wrap_angle(angle_of(u_in)), wrap_angle(angle_of(u_out)), hit

    def rotated(self, phi):
        return EllipseOval(self.a, self.b, rotate(self._center, phi), self.angle + phi)


def support_oval_point(h, theta):
    """Point of the oval with support function ``h`` where the outward normal has angle ``theta``."""
    oval = h if isinstance(h, SupportOval) else SupportOval(h)
    return oval.point(theta)


def support_oval_curvature(h, theta):
    oval = h if isinstance(h, SupportOval) else SupportOval(h)
    return oval.curvature(theta)


def ray_oval_hits(origin, alpha, oval: Oval):
    """Vectorized first boundary hit of rays from points inside (or on) the oval.

    Returns ``(t, grazing, hit)``.  The exit parameter of the chord is the
    first hit for interior origins and for boundary origins moving inward.
    """
    origin = np.asarray(origin, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    _, t_out, hit = oval.chord(alpha, line_p(origin, alpha))
    tt = np.where(hit, t_out, 0.0)
    grazing = hit & (np.abs(dot(direction(alpha), oval.normal(tt))) < GRAZING_TOL)
    return t_out, grazing, hit


def ray_oval_first_hit(origin, alpha, oval: Oval, t_exclude=None) -> float:
    """Boundary parameter where the ray from ``origin`` along ``alpha`` first meets the oval."""
    t, grazing, hit = ray_oval_hits(origin, float(alpha), oval)
    if not bool(hit):
        raise NoIntersection(f"ray from {origin} at angle {alpha} misses the oval")
    if bool(grazing):
        raise GrazingHit(f"ray at angle {alpha} is tangent at t={float(t)}")
    t = float(t)
    if t_exclude is not None and abs(wrap_pi(t - t_exclude)) < 1e-10:
        raise NoIntersection("ray leaves the oval at its own start point (outward direction)")
    return t


def parse_oval(spec: str) -> Oval:
    """Parse ``circle:r``, ``ellipse:a,b`` or ``support:c0,a1,b1,...``."""
    try:
        kind, _, args = spec.partition(":")
        values = [float(x) for x in args.split(",")] if args else []
        if kind == "circle" and len(values) == 1:
            return CircleOval(values[0])
        if kind == "ellipse" and len(values) == 2:
            return EllipseOval(values[0], values[1])
        if kind == "support" and values:
            return SupportOval(values)
    except ValueError as exc:
        raise ConfigError(f"bad oval spec {spec!r}: {exc}") from exc
    raise ConfigError(f"bad oval spec {spec!r}")


def oval_spec(oval: Oval) -> str:
    """Inverse of :func:`parse_oval` for ovals centered at the origin."""
    if isinstance(oval, CircleOval):
        return f"circle:{oval.r!r}"
    if isinstance(oval, EllipseOval):
        return f"ellipse:{oval.a!r},{oval.b!r}"
    if isinstance(oval, SupportOval):
        return "support:" + ",".join(repr(c) for c in oval.coeffs)
    raise ConfigError(f"no spec for {oval!r}")
