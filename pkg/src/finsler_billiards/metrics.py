"""Projective Finsler metrics in the plane.

Every metric exposes a positively 1-homogeneous norm ``F(x, v)`` together with
its fibre gradient ``dF/dv``.  The gradient is 0-homogeneous in ``v``; at a
unit vector it is the Legendre dual covector (it vanishes on the indicatrix
tangent and takes the value 1 on the vector).  Everything broadcasts over
leading array dimensions, with points and vectors in the last axis.
"""

from __future__ import annotations

import abc
import functools

import numpy as np
from scipy import integrate

from .errors import (CoincidentPoints, ConfigError, DomainEscape, FieldTooStrong,
                     ImageNotConvex, NotConvex)
from .geom2d import (TWO_PI, CircleOval, Oval, _fourier_eval, angle_of, cross, direction, dot,
                     normal, parse_oval, ray_oval_first_hit, rot90)

FD_STEP = 1e-6


def _asvec(v):
    return np.asarray(v, dtype=float)


class FinslerMetric(abc.ABC):
    """Base class.  Subclasses implement ``norm`` and usually ``grad``."""

    reversible = False
    analytic_grad = False

    @abc.abstractmethod
    def norm(self, x, v): ...

    def in_domain(self, x):
        x = _asvec(x)
        return np.ones(x.shape[:-1], dtype=bool)

    def indicatrix_point(self, x, phi):
        """Unit vector (``F = 1``) pointing in the direction angle ``phi``."""
        e = direction(phi)
        return e / self.norm(x, e)[..., None]

    def indicatrix_tangent(self, x, phi):
        """Unit direction of the indicatrix tangent at ``indicatrix_point(x, phi)``."""
        if self.analytic_grad:
            T = rot90(self.grad(x, direction(phi)))
        else:
            phi = np.asarray(phi, dtype=float)
            T = (self.indicatrix_point(x, phi + FD_STEP)
                 - self.indicatrix_point(x, phi - FD_STEP))
        return T / np.linalg.norm(T, axis=-1, keepdims=True)

    def grad(self, x, v):
        """Fibre gradient ``dF/dv`` (default: from the indicatrix tangent)."""
        v = _asvec(v)
        T = self.indicatrix_tangent(x, angle_of(v))
        N = np.stack([T[..., 1], -T[..., 0]], axis=-1)
        return N * (self.norm(x, v) / dot(N, v))[..., None]

    def legendre_dual(self, x, v):
        return legendre_dual(self, x, v)

    def check_domain(self, *points):
        for q in points:
            if not np.all(self.in_domain(q)):
                raise DomainEscape(f"point {np.asarray(q).tolist()} outside the metric's domain")


class EuclideanMetric(FinslerMetric):
    reversible = True
    analytic_grad = True

    def __repr__(self):
        return "EuclideanMetric()"

    def norm(self, x, v):
        v = _asvec(v)
        x = _asvec(x)
        return np.broadcast_to(np.linalg.norm(v, axis=-1),
                               np.broadcast_shapes(x.shape[:-1], v.shape[:-1])).copy()

    def grad(self, x, v):
        v = _asvec(v)
        g = v / np.linalg.norm(v, axis=-1, keepdims=True)
        return np.broadcast_to(g, np.broadcast_shapes(_asvec(x).shape, v.shape)).copy()


class MinkowskiMetric(FinslerMetric):
    """Position-independent metric with indicatrix ``r = rho(theta)``.

    ``rho = c0 + sum_k a_k cos(k theta) + b_k sin(k theta)`` with
    coefficients given as ``(c0, a1, b1, ...)``.
    """

    analytic_grad = True

    def __init__(self, rho):
        rho = [float(c) for c in rho]
        if len(rho) % 2 == 0:
            rho.append(0.0)
        self.rho_coeffs = tuple(rho)
        th = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
        r, r1, r2 = self._eval(th), self._eval(th, 1), self._eval(th, 2)
        if np.min(r) <= 0:
            raise NotConvex("indicatrix radius must be positive")
        if np.min(r**2 + 2 * r1**2 - r * r2) <= 0:
            raise NotConvex("indicatrix is not strictly convex")
        odd = self.rho_coeffs[1::4] + self.rho_coeffs[2::4]
        self.reversible = all(c == 0 for c in odd)

    def __repr__(self):
        return f"MinkowskiMetric({list(self.rho_coeffs)})"

    def _eval(self, theta, deriv=0):
        return _fourier_eval(self.rho_coeffs, theta, deriv)

    def rho(self, theta, deriv=0):
        return self._eval(theta, deriv)

    def norm(self, x, v):
        v = _asvec(v)
        F = np.linalg.norm(v, axis=-1) / self.rho(angle_of(v))
        return np.broadcast_to(F, np.broadcast_shapes(_asvec(x).shape[:-1], v.shape[:-1])).copy()

    def grad(self, x, v):
        v = _asvec(v)
        th = angle_of(v)
        r, r1 = self.rho(th), self.rho(th, 1)
        e_r, e_t = direction(th), rot90(direction(th))
        g = e_r / r[..., None] - (r1 / r**2)[..., None] * e_t
        return np.broadcast_to(g, np.broadcast_shapes(_asvec(x).shape, v.shape)).copy()


class QuadraticMinkowski(FinslerMetric):
    """Minkowski metric with an origin-centred ellipse indicatrix ``v^T Q v = 1``."""

    reversible = True
    analytic_grad = True

    def __init__(self, Q):
        Q = np.asarray(Q, dtype=float)
        if Q.shape != (2, 2) or not np.allclose(Q, Q.T) or np.min(np.linalg.eigvalsh(Q)) <= 0:
            raise NotConvex("Q must be symmetric positive definite")
        self.Q = Q

    def __repr__(self):
        return f"QuadraticMinkowski({self.Q.tolist()})"

    def norm(self, x, v):
        v = _asvec(v)
        F = np.sqrt(np.einsum("...i,ij,...j->...", v, self.Q, v))
        return np.broadcast_to(F, np.broadcast_shapes(_asvec(x).shape[:-1], v.shape[:-1])).copy()

    def grad(self, x, v):
        v = _asvec(v)
        Qv = v @ self.Q
        g = Qv / np.sqrt(dot(Qv, v))[..., None]
        return np.broadcast_to(g, np.broadcast_shapes(_asvec(x).shape, v.shape)).copy()


class ProjectiveImageMinkowski(FinslerMetric):
    """Minkowski metric whose indicatrix is the image of another one's under
    ``y -> t y / (1 + ell(y))``.

    The image curve is built point by point from the source indicatrix and
    the differential of the map; no algebraic shortcut for the new norm is used.
    """

    analytic_grad = True

    def __init__(self, base: FinslerMetric, ell, t=1.0, check_samples=4096):
        if t <= 0:
            raise ValueError("t must be positive")
        self.base, self.ell, self.t = base, np.asarray(ell, dtype=float), float(t)
        self._origin = np.zeros(2)
        phi = np.linspace(0.0, TWO_PI, check_samples, endpoint=False)
        k = base.indicatrix_point(self._origin, phi)
        denom = 1.0 + k @ self.ell
        if np.min(denom) <= 0:
            raise ImageNotConvex("1 + ell must stay positive on the indicatrix")
        img = self.image_point(phi)
        edges = np.roll(img, -1, axis=0) - img
        if np.min(cross(edges, np.roll(edges, -1, axis=0))) <= 0:
            raise ImageNotConvex("projective image of the indicatrix is not convex")

    def image_point(self, phi):
        k = self.base.indicatrix_point(self._origin, phi)
        return self.t * k / (1.0 + k @ self.ell)[..., None]

    def image_tangent(self, phi):
        k = self.base.indicatrix_point(self._origin, phi)
        xi = self.base.indicatrix_tangent(self._origin, phi)
        lk = (1.0 + k @ self.ell)[..., None]
        return self.t * (xi * lk - k * (xi @ self.ell)[..., None]) / lk**2

    def norm(self, x, v):
        v = _asvec(v)
        c = self.image_point(angle_of(v))
        F = np.linalg.norm(v, axis=-1) / np.linalg.norm(c, axis=-1)
        return np.broadcast_to(F, np.broadcast_shapes(_asvec(x).shape[:-1], v.shape[:-1])).copy()

    def grad(self, x, v):
        v = _asvec(v)
        phi = angle_of(v)
        c, dc = self.image_point(phi), self.image_tangent(phi)
        N = np.stack([dc[..., 1], -dc[..., 0]], axis=-1)
        g = N / dot(N, c)[..., None]
        return np.broadcast_to(g, np.broadcast_shapes(_asvec(x).shape, v.shape)).copy()


class FunkMetric(FinslerMetric):
    """Funk metric of a convex domain: ``x + v / F(x, v)`` lies on the boundary."""

    analytic_grad = True

    def __init__(self, domain: Oval):
        self.domain = domain

    def __repr__(self):
        return f"FunkMetric({self.domain!r})"

    def in_domain(self, x):
        return self.domain.level(x) < 0

    def _exit(self, x, v):
        """Norm and outward boundary normal at the exit point of the ray."""
        x, v = np.broadcast_arrays(_asvec(x), _asvec(v))
        if isinstance(self.domain, CircleOval):
            rel = x - self.domain.center
            B = dot(rel, v)
            C = dot(rel, rel) - self.domain.r**2
            F = (B + np.sqrt(B * B - dot(v, v) * C)) / (-C)
            b = rel + v / F[..., None]
            return F, b / self.domain.r
        a = angle_of(v)
        _, t_out, _ = self.domain.chord(a, x[..., 0] * np.sin(a) - x[..., 1] * np.cos(a))
        b = self.domain.point(t_out)
        F = np.linalg.norm(v, axis=-1) / np.linalg.norm(b - x, axis=-1)
        return F, self.domain.normal(t_out)

    def norm(self, x, v):
        return self._exit(x, v)[0]

    def grad(self, x, v):
        v = _asvec(v)
        F, N = self._exit(x, v)
        return N * (F / dot(N, v))[..., None]


class HilbertMetric(FinslerMetric):
    """Symmetrization of the Funk metric of a convex domain."""

    reversible = True
    analytic_grad = True

    def __init__(self, domain: Oval):
        self.domain = domain
        self.funk = FunkMetric(domain)

    def __repr__(self):
        return f"HilbertMetric({self.domain!r})"

    def in_domain(self, x):
        return self.domain.level(x) < 0

    def norm(self, x, v):
        v = _asvec(v)
        return 0.5 * (self.funk.norm(x, v) + self.funk.norm(x, -v))

    def grad(self, x, v):
        v = _asvec(v)
        return 0.5 * (self.funk.grad(x, v) - self.funk.grad(x, -v))


def _constant_field_form(inv, x):
    return inv * np.stack([x[..., 1], -x[..., 0]], axis=-1)


def _zero_form(x):
    return np.zeros_like(np.asarray(x, dtype=float))


class MagneticMetric(FinslerMetric):
    """``F(x, v) = |v| + form(x)(v)``; the constant field uses ``det(v, x) / 2R``."""

    analytic_grad = True

    def __init__(self, R=None, form=None):
        if form is None and R is None:
            raise ValueError("give a Larmor radius or a one-form")
        self.R = None if R is None else float(R)
        self.form = form if form is not None else functools.partial(_constant_field_form, 0.5 / self.R)

    def __repr__(self):
        return f"MagneticMetric(R={self.R})"

    @classmethod
    def zero(cls):
        return cls(form=_zero_form)

    def covector(self, x):
        return self.form(_asvec(x))

    def in_domain(self, x):
        return np.linalg.norm(self.covector(x), axis=-1) < 1.0

    def norm(self, x, v):
        v = _asvec(v)
        return np.linalg.norm(v, axis=-1) + dot(self.covector(x), v)

    def grad(self, x, v):
        v = _asvec(v)
        return v / np.linalg.norm(v, axis=-1, keepdims=True) + self.covector(x)


def _density_one(alpha, p):
    return np.ones(np.broadcast_shapes(np.shape(alpha), np.shape(p)))


def _density_quadratic(alpha, p):
    return 1.0 + 0.5 * np.asarray(p) ** 2 + 0.0 * np.asarray(alpha)


def _density_aniso(alpha, p):
    return 1.0 + 0.25 * np.cos(2.0 * np.asarray(alpha)) + 0.0 * np.asarray(p)


DENSITIES = {
    "one": _density_one,
    "quadratic": _density_quadratic,
    "aniso": _density_aniso,
}


class BusemannMetric(FinslerMetric):
    """Symmetric projective metric from a positive density on oriented lines.

    ``F(x, v) = 1/4 int f(a, <x, n(a)>) |<v, n(a)>| da``, integrated with
    Gauss-Legendre on the two half-turns where ``<v, n(a)>`` keeps its sign.
    """

    reversible = True
    analytic_grad = True

    def __init__(self, density="one", nodes=1024):
        if isinstance(density, str):
            if density not in DENSITIES:
                raise ConfigError(f"unknown density {density!r}; known: {sorted(DENSITIES)}")
            self.density_id, density = density, DENSITIES[density]
        else:
            self.density_id = getattr(density, "__name__", "custom")
        self.density = density
        half = nodes // 2
        u, w = np.polynomial.legendre.leggauss(half)
        self._u = 0.5 * np.pi * (u + 1.0)
        self._w = 0.5 * np.pi * w

    def __repr__(self):
        return f"BusemannMetric({self.density_id!r})"

    def _integrals(self, x, v):
        x, v = np.broadcast_arrays(_asvec(x), _asvec(v))
        th = angle_of(v)[..., None]
        out_F = 0.0
        out_g = 0.0
        for shift, sign in ((0.0, 1.0), (np.pi, -1.0)):
            a = th + shift + self._u
            nv = normal(a)
            f = self.density(a, dot(x[..., None, :], nv))
            s = dot(v[..., None, :], nv)
            out_F = out_F + np.sum(self._w * f * sign * s, axis=-1)
            out_g = out_g + np.sum((self._w * f * sign)[..., None] * nv, axis=-2)
        return 0.25 * out_F, 0.25 * out_g

    def norm(self, x, v):
        return self._integrals(x, v)[0]

    def grad(self, x, v):
        return self._integrals(x, v)[1]


def segment_length(metric: FinslerMetric, x, y, rtol=1e-10) -> float:
    """Finsler length of the straight segment from ``x`` to ``y`` (adaptive Gauss-Kronrod)."""
    x, y = _asvec(x), _asvec(y)
    metric.check_domain(x, y)
    if isinstance(metric, MagneticMetric) and metric.R is None:
        ts = np.linspace(0.0, 1.0, 65)
        metric.check_domain(x + ts[:, None] * (y - x))
    d = y - x
    if not np.any(d):
        return 0.0
    val, _ = integrate.quad(lambda s: float(metric.norm(x + s * d, d)), 0.0, 1.0,
                            epsabs=0.0, epsrel=rtol, limit=200)
    return float(val)


def _boundary_hit(domain: Oval, start, end):
    d = end - start
    t = ray_oval_first_hit(start, float(np.arctan2(d[1], d[0])), domain)
    return domain.point(t)


def funk_distance(domain: Oval, x, y) -> float:
    """Closed-form Funk distance; ``b`` is where the ray from x through y leaves the domain."""
    x, y = _asvec(x), _asvec(y)
    _check_pair(domain, x, y)
    b = _boundary_hit(domain, x, y)
    return float(np.log(np.linalg.norm(x - b) / np.linalg.norm(y - b)))


def hilbert_distance(domain: Oval, x, y) -> float:
    x, y = _asvec(x), _asvec(y)
    _check_pair(domain, x, y)
    b = _boundary_hit(domain, x, y)
    a = _boundary_hit(domain, y, x)
    ratio = (np.linalg.norm(y - a) * np.linalg.norm(x - b)) / (
        np.linalg.norm(y - b) * np.linalg.norm(x - a))
    return float(0.5 * np.log(ratio))


def _check_pair(domain, x, y):
    if np.array_equal(x, y):
        raise CoincidentPoints("distance needs two distinct points")
    if domain.level(x) >= 0 or domain.level(y) >= 0:
        raise DomainEscape("points must lie strictly inside the domain")


def kepler_params(t):
    """Semi-axes ``a, b`` and focal offset ``c`` of the indicatrix ``|v| + t v1 = 1``."""
    t = float(t)
    if abs(t) >= 1.0:
        raise FieldTooStrong(f"|t| = {abs(t)} must be below 1")
    s = 1.0 - t * t
    return 1.0 / s, float(1.0 / np.sqrt(s)), t / s


def verify_kepler_indicatrix(metric: MagneticMetric, x, samples=512) -> float:
    """Max deviation of the indicatrix at ``x`` from the focus-centred ellipse equation."""
    x = _asvec(x)
    k = metric.covector(x)
    t = float(np.linalg.norm(k))
    a, b, c = kepler_params(t)
    phi = TWO_PI * np.arange(samples) / samples
    v = metric.indicatrix_point(x, phi)
    turn = -float(np.arctan2(k[1], k[0])) if t > 0 else 0.0
    cs, sn = np.cos(turn), np.sin(turn)
    v1 = cs * v[:, 0] - sn * v[:, 1]
    v2 = sn * v[:, 0] + cs * v[:, 1]
    return float(np.max(np.abs((v1 + c) ** 2 / a**2 + v2**2 / b**2 - 1.0)))


def legendre_dual(metric: FinslerMetric, x, v, tol=1e-8):
    """Covector ``w`` with ``w(v) = 1`` whose kernel is the indicatrix tangent at ``v``."""
    x, v = _asvec(x), _asvec(v)
    F = metric.norm(x, v)
    if np.any(np.abs(F - 1.0) > tol):
        raise ValueError(f"v is not on the indicatrix (F = {F})")
    return metric.grad(x, v)


def parse_metric(spec: str) -> FinslerMetric:
    """Parse ``euclid``, ``minkowski:rho=...``, ``quadratic:q11,q12,q22``,
    ``funk:<oval>``, ``hilbert:<oval>``, ``magnetic:R`` or ``busemann:<id>``."""
    kind, _, rest = spec.partition(":")
    try:
        if kind == "euclid" and not rest:
            return EuclideanMetric()
        if kind == "minkowski" and rest.startswith("rho="):
            return MinkowskiMetric([float(c) for c in rest[4:].split(",")])
        if kind == "quadratic":
            q11, q12, q22 = (float(c) for c in rest.split(","))
            return QuadraticMinkowski([[q11, q12], [q12, q22]])
        if kind == "funk":
            return FunkMetric(parse_oval(rest))
        if kind == "hilbert":
            return HilbertMetric(parse_oval(rest))
        if kind == "magnetic":
            return MagneticMetric(float(rest))
        if kind == "busemann":
            return BusemannMetric(rest or "one")
    except (ValueError, NotConvex) as exc:
        raise ConfigError(f"bad metric spec {spec!r}: {exc}") from exc
    raise ConfigError(f"bad metric spec {spec!r}")
