"""Finsler billiard reflection, the billiard map and trajectory searches.

Reflection at a boundary point uses the covector form of the concurrency
law: with ``w = dF/dv`` and ``tau`` the boundary tangent, the outgoing unit
vector ``v`` is the second solution of ``w_v(tau) = w_u(tau)``.  On the arc of
directions pointing into the table ``phi -> w(phi)(tau)`` is strictly
monotone, so the solution is bracketed by the two tangent directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.spatial import cKDTree

from ._roots import bracketed_root
from .errors import (DomainEscape, GrazingIncidence, NoConvergence, NoIntersection,
                     NotConvex)
from .geom2d import (TWO_PI, CircleOval, Oval, OrientedLine, angle_of, direction, dot,
                     line_from_point_dir, line_p, ray_oval_hits, wrap_pi)
from .metrics import FinslerMetric, FunkMetric, HilbertMetric, ProjectiveImageMinkowski

INCIDENCE_TOL = 1e-6
DOMAIN_MARGIN = 0.05


class BilliardTable:
    """An oval inside the domain of a Finsler metric."""

    def __init__(self, boundary: Oval, metric: FinslerMetric, margin=DOMAIN_MARGIN):
        if boundary.min_curvature() <= 0:
            raise NotConvex("table boundary must be strictly convex")
        self.boundary = boundary
        self.metric = metric
        pts = boundary.sample(4096)
        if not np.all(metric.in_domain(pts)):
            raise DomainEscape("table leaves the metric's domain")
        if isinstance(metric, (FunkMetric, HilbertMetric)):
            gap = self._gap_to(metric.domain, pts)
            if gap < margin:
                raise DomainEscape(f"table is {gap:.3g} from the domain boundary (< {margin})")

    @staticmethod
    def _gap_to(domain: Oval, pts):
        if isinstance(domain, CircleOval):
            return float(np.min(domain.r - np.linalg.norm(pts - domain.center, axis=1)))
        dist, _ = cKDTree(domain.sample(16384)).query(pts)
        return float(np.min(dist))

    def __repr__(self):
        return f"BilliardTable({self.boundary!r}, {self.metric!r})"

    def point(self, t):
        return self.boundary.point(t)

    def tangent(self, t):
        return self.boundary.tangent(t)

    def contains(self, q) -> bool:
        return self.boundary.contains(q)


@dataclass(frozen=True)
class RayState:
    """Reflection parameter ``t`` and outgoing unit velocity ``v`` (pointing inward)."""

    t: float
    v: np.ndarray


@dataclass
class Trajectory:
    source: np.ndarray
    params: np.ndarray
    points: np.ndarray
    incoming: np.ndarray
    outgoing: np.ndarray
    final_line: OrientedLine
    phi: float = float("nan")
    target: np.ndarray | None = None

    @property
    def n(self) -> int:
        return int(self.params.size)

    def rows(self):
        """Rows ``bounce_index, t, x, y, vx, vy``; row 0 is the source."""
        first = self.points[0] - self.source if self.n else direction(self.phi)
        first = first / np.linalg.norm(first)
        out = [(0, float("nan"), *map(float, self.source), *map(float, first))]
        for i in range(self.n):
            out.append((i + 1, float(self.params[i]), *map(float, self.points[i]),
                        *map(float, self.outgoing[i])))
        return out


def reflect_velocity(metric: FinslerMetric, x, tau, u, strict=True):
    """Outgoing unit velocity for incoming ``u`` at a mirror with unit tangent ``tau``.

    ``tau`` is oriented so that ``rot90(tau)`` points into the table.  With
    ``strict=False`` failures give NaN instead of raising.
    """
    x, tau, u = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, tau, u)))
    shape = x.shape[:-1]
    x, tau, u = (a.reshape(-1, 2) for a in (x, tau, u))
    n_out = np.stack([tau[:, 1], -tau[:, 0]], axis=-1)
    incidence = dot(u, n_out) / np.linalg.norm(u, axis=-1)
    ok = incidence > INCIDENCE_TOL
    if strict and not ok.all():
        raise GrazingIncidence(f"incidence sine {incidence[~ok].min():.3g} below {INCIDENCE_TOL}")
    v = np.full_like(u, np.nan)
    if ok.any():
        k = np.flatnonzero(ok)
        xk, tk = x[k], tau[k]
        level = dot(metric.grad(xk, u[k]), tk)
        th = angle_of(tk)

        def g(phi, i):
            return dot(metric.grad(xk[i], direction(phi)), tk[i]) - level[i]

        phi = bracketed_root(g, th, th + np.pi, xtol=1e-14)
        e = direction(phi)
        v[k] = e / metric.norm(xk, e)[:, None]
    return v.reshape(*shape, 2)


def concurrency_defect(metric: FinslerMetric, x, tau, u, v):
    """``(w_v - w_u)(tau)``: zero iff the three tangent lines are concurrent or parallel."""
    return dot(metric.grad(x, v) - metric.grad(x, u), tau)


def reflect_geometric(table: BilliardTable, t, u):
    t = np.asarray(t, dtype=float)
    return reflect_velocity(table.metric, table.point(t), table.tangent(t), u)


def _length_derivative(metric, a, x, xdot, b, nodes):
    """d/dt of len(a -> x(t)) + len(x(t) -> b) by differentiating under the integral.

    Only norm evaluations are used; partial derivatives are central differences.
    """
    u, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * (u + 1.0)
    w = 0.5 * w
    speed = float(np.linalg.norm(xdot))
    e = xdot / speed
    h = 1e-6
    F = metric.norm

    d1 = x - a
    z1 = a + s[:, None] * d1
    dx1 = (F(z1 + h * e, d1) - F(z1 - h * e, d1)) / (2 * h)
    dv1 = (F(z1, d1 + h * e) - F(z1, d1 - h * e)) / (2 * h)
    part1 = np.sum(w * (s * dx1 + dv1))

    d2 = b - x
    z2 = x + s[:, None] * d2
    dx2 = (F(z2 + h * e, d2) - F(z2 - h * e, d2)) / (2 * h)
    dv2 = (F(z2, d2 + h * e) - F(z2, d2 - h * e)) / (2 * h)
    part2 = np.sum(w * ((1.0 - s) * dx2 - dv2))
    return speed * (part1 + part2)


def variational_derivative(table: BilliardTable, a, b, t):
    """Derivative of the broken-path length through ``point(t)``, converged in quadrature order."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    x, xdot = table.point(t), table.boundary.dpoint(t)
    prev = _length_derivative(table.metric, a, x, xdot, b, 24)
    for nodes in (48, 96, 192):
        cur = _length_derivative(table.metric, a, x, xdot, b, nodes)
        if abs(cur - prev) < 1e-11 * max(1.0, abs(cur)):
            return float(cur)
        prev = cur
    return float(prev)


def reflect_variational(table: BilliardTable, a, b, t_guess, max_width=1.0, deriv_tol=1e-8):
    """Boundary parameter near ``t_guess`` where a -> x -> b has critical Finsler length.

    The derivative is sampled outward from the guess on both sides with
    geometrically growing steps; the first sign change met is refined with
    Brent's method, so the critical point nearest the guess is returned.  A
    guess whose derivative is already below ``deriv_tol`` is accepted as is
    (this also covers degenerate critical points, which cannot be bracketed).
    """
    f = lambda t: variational_derivative(table, a, b, t)
    f0 = f(t_guess)
    if abs(f0) < deriv_tol:
        return float(t_guess)
    left = right = (t_guess, f0)
    step = 1e-5
    while step <= max_width:
        for side in (-1.0, 1.0):
            prev = left if side < 0 else right
            x = prev[0] + side * step
            fx = f(x)
            if np.sign(fx) != np.sign(prev[1]):
                lo, hi = sorted((prev[0], x))
                return float(optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))
            if side < 0:
                left = (x, fx)
            else:
                right = (x, fx)
        step *= 1.6
    raise NoConvergence(f"no critical point bracketed within {max_width} of t={t_guess}")


def _bounce(table: BilliardTable, x, d, n, strict=True):
    """Vectorized n reflections of rays leaving ``x`` (interior or boundary) along ``d``."""
    oval, metric = table.boundary, table.metric
    x = np.array(x, dtype=float)
    d = np.array(d, dtype=float)
    x, d = np.broadcast_arrays(x, d)
    x, d = x.copy(), d.copy()
    m = x.shape[0]
    ok = np.ones(m, dtype=bool)
    params = np.full((m, n), np.nan)
    points = np.full((m, n, 2), np.nan)
    incoming = np.full((m, n, 2), np.nan)
    outgoing = np.full((m, n, 2), np.nan)
    for k in range(n):
        t, grazing, hit = ray_oval_hits(x, angle_of(d), oval)
        good = ok & hit & ~grazing
        if strict and not good.all():
            raise NoIntersection("a ray missed the boundary or grazed it")
        ok = good
        tt = np.where(ok, t, 0.0)
        xk = oval.point(tt)
        dd = np.where(ok[:, None], d, [1.0, 0.0])
        u = dd / metric.norm(xk, dd)[:, None]
        v = reflect_velocity(metric, xk, oval.tangent(tt), u, strict=strict)
        ok &= np.isfinite(v).all(axis=1)
        params[:, k] = np.where(ok, t, np.nan)
        points[:, k] = np.where(ok[:, None], xk, np.nan)
        incoming[:, k] = np.where(ok[:, None], u, np.nan)
        outgoing[:, k] = np.where(ok[:, None], v, np.nan)
        x, d = np.where(ok[:, None], xk, x), np.where(ok[:, None], v, d)
    return params, points, incoming, outgoing, ok


def propagate_pencil(table: BilliardTable, O, phis, n):
    """Final lines ``(alpha, p)`` of the pencil from ``O`` after ``n`` reflections.

    Returns ``alpha, p, ok`` with ``alpha`` wrapped; failed rays are NaN.
    """
    phis = np.asarray(phis, dtype=float)
    O = np.asarray(O, dtype=float)
    if n == 0:
        return phis.copy(), line_p(O, phis), np.ones(phis.shape, dtype=bool)
    x0 = np.broadcast_to(O, phis.shape + (2,))
    _, points, _, outgoing, ok = _bounce(table, x0, direction(phis), n, strict=False)
    v, x = outgoing[:, -1], points[:, -1]
    alpha = angle_of(v)
    return alpha, line_p(x, alpha), ok


def propagate(table: BilliardTable, O, phi, n) -> Trajectory:
    O = np.asarray(O, dtype=float)
    if not table.contains(O):
        raise ValueError("source must lie strictly inside the table")
    if n < 1:
        raise ValueError("need at least one reflection")
    params, points, incoming, outgoing, _ = _bounce(table, O[None], direction(phi)[None], n)
    v, x = outgoing[0, -1], points[0, -1]
    return Trajectory(O, params[0], points[0], incoming[0], outgoing[0],
                      line_from_point_dir(x, float(angle_of(v))), phi=float(phi))


def billiard_map(table: BilliardTable, state: RayState) -> RayState:
    x = table.point(state.t)
    params, _, _, outgoing, _ = _bounce(table, x[None], np.asarray(state.v, float)[None], 1)
    return RayState(float(params[0, 0]), outgoing[0, 0])


def line_map(table: BilliardTable, line: OrientedLine) -> OrientedLine:
    """Billiard map on oriented lines: reflect at the point where the line leaves the table."""
    _, t_out, hit = table.boundary.chord(line.alpha, line.p)
    if not bool(hit):
        raise NoIntersection("line misses the table")
    t_out = float(t_out)
    x = table.point(t_out)
    d = direction(line.alpha)
    u = d / table.metric.norm(x, d)
    v = reflect_geometric(table, t_out, u)
    return line_from_point_dir(x, float(angle_of(v)))


def reversibility_test(table: BilliardTable, traj: Trajectory, tol=1e-7):
    """Run the trajectory backwards; returns ``(recovered, defect)``.

    The defect is the distance on the line cylinder between the initial line
    and the reverse of the line obtained by the backward run.
    """
    n = traj.n
    x_last, v_last = traj.points[-1], traj.outgoing[-1]
    t_exit, _, _ = ray_oval_hits(x_last, angle_of(v_last), table.boundary)
    y = table.point(float(t_exit))
    _, points, _, outgoing, _ = _bounce(table, y[None], -v_last[None], n)
    back = line_from_point_dir(points[0, -1], float(angle_of(outgoing[0, -1])))
    initial = line_from_point_dir(traj.source, traj.phi)
    defect = initial.distance_to(back.reversed())
    return defect < tol, defect


def ak_invariance_test(K: FinslerMetric, ell, t=1.0, mirror_angle=0.0, incidence_angle=None):
    """Angle between reflected directions for the norm ``K`` and its projective image.

    The incoming direction is ``incidence_angle`` measured from the mirror
    (towards the outside); default 1 radian.
    """
    K1 = ProjectiveImageMinkowski(K, ell, t)
    origin = np.zeros(2)
    tau = direction(mirror_angle)
    psi = mirror_angle - (1.0 if incidence_angle is None else incidence_angle)
    e = direction(psi)
    out = []
    for metric in (K, K1):
        u = e / metric.norm(origin, e)
        out.append(reflect_velocity(metric, origin, tau, u))
    return float(abs(wrap_pi(angle_of(out[0]) - angle_of(out[1]))))


def shot_gradient(table: BilliardTable, O, A, T):
    """Gradient of the total length of O x_1 ... x_n A in the boundary parameters.

    First variation of a straight (geodesic) segment: the endpoint derivative
    is the fibre gradient of the norm at the segment's direction.
    """
    T = np.asarray(T, dtype=float)
    O, A = np.asarray(O, float), np.asarray(A, float)
    X = table.point(T)
    S, n = T.shape
    prev = np.concatenate([np.broadcast_to(O, (S, 1, 2)), X[:, :-1]], axis=1)
    nxt = np.concatenate([X[:, 1:], np.broadcast_to(A, (S, 1, 2))], axis=1)
    metric = table.metric
    g_in = metric.grad(X, X - prev)
    g_out = metric.grad(X, nxt - X)
    return dot(g_in - g_out, table.boundary.dpoint(T))


def shot_length(table: BilliardTable, O, A, params) -> float:
    from .metrics import segment_length

    pts = [np.asarray(O, float), *table.point(np.asarray(params, float)), np.asarray(A, float)]
    return float(sum(segment_length(table.metric, p, q) for p, q in zip(pts[:-1], pts[1:])))


def _seed_grid(n, multistart):
    if multistart is None:
        if n <= 3:
            g = TWO_PI * (np.arange(8) + 0.5) / 8
            return np.stack(np.meshgrid(*([g] * n), indexing="ij"), axis=-1).reshape(-1, n)
        multistart = 8**3
    rng = np.random.default_rng(12345)
    return rng.uniform(0.0, TWO_PI, size=(multistart, n))


def n_bounce_shots(table: BilliardTable, O, A, n, multistart=None, seeds=None,
                   tol=1e-10, max_iter=80, law_tol=1e-7):
    """Critical points of the Finsler length of O x_1 ... x_n A over the boundary torus.

    Damped Newton from multistart seeds (or the given ``seeds``); all indices
    are kept.  Returned trajectories satisfy the reflection law at each bounce
    and have distinct consecutive bounce points.
    """
    O, A = np.asarray(O, float), np.asarray(A, float)
    T = np.array(_seed_grid(n, multistart) if seeds is None else seeds, dtype=float).reshape(-1, n)
    active = np.ones(T.shape[0], dtype=bool)
    converged = np.zeros(T.shape[0], dtype=bool)
    h = 1e-6
    eye = np.eye(n)
    # seeds that wander onto a diagonal (coincident points) just fail and are dropped
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(max_iter):
            if not active.any():
                break
            idx = np.flatnonzero(active)
            Ta = T[idx]
            G = shot_gradient(table, O, A, Ta)
            H = np.empty((idx.size, n, n))
            for j in range(n):
                H[:, :, j] = (shot_gradient(table, O, A, Ta + h * eye[j])
                              - shot_gradient(table, O, A, Ta - h * eye[j])) / (2 * h)
            H = 0.5 * (H + np.swapaxes(H, 1, 2))
            bad = ~np.isfinite(H).all(axis=(1, 2)) | (np.abs(np.linalg.det(H)) < 1e-14)
            H[bad] = eye
            step = -np.linalg.solve(H, G[..., None])[..., 0]
            step[bad] = np.nan
            size = np.max(np.abs(step), axis=1)
            scale = np.where(size > 0.3, 0.3 / np.where(size > 0, size, 1.0), 1.0)
            T[idx] = Ta + step * scale[:, None]
            done = size < tol
            failed = ~np.isfinite(size)
            converged[idx[done]] = True
            active[idx[done | failed]] = False

    found = []
    for T_c in np.mod(T[converged], TWO_PI):
        if any(np.max(np.abs(wrap_pi(T_c - f))) < 1e-4 for f in found):
            continue
        if n > 1 and np.min(np.abs(wrap_pi(np.diff(T_c)))) <= 1e-3:
            continue
        law = shot_gradient(table, O, A, T_c[None])[0]
        speed = np.linalg.norm(table.boundary.dpoint(T_c), axis=-1)
        if np.max(np.abs(law) / speed) >= law_tol:
            continue
        found.append(T_c)
    found.sort(key=lambda c: tuple(c))
    return [_shot_trajectory(table, O, A, c) for c in found]


def _shot_trajectory(table, O, A, params):
    pts = table.point(params)
    chain = np.vstack([O, pts, A])
    seg = np.diff(chain, axis=0)
    unit = seg / table.metric.norm(chain[:-1], seg)[:, None]
    incoming = seg[:-1] / table.metric.norm(pts, seg[:-1])[:, None]
    outgoing = unit[1:]
    final = line_from_point_dir(pts[-1], float(angle_of(seg[-1])))
    return Trajectory(O, params, pts, incoming, outgoing, final,
                      phi=float(angle_of(seg[0])), target=A)


def jacobian_experiment(table: BilliardTable, state: RayState, h=1e-5) -> float:
    """Determinant of the line-space differential of the billiard map at ``state``.

    Central differences in (alpha, p); the line of ``state`` passes through
    its reflection point with the outgoing direction.
    """
    if not 1e-7 <= h <= 1e-4:
        raise ValueError("step must lie in [1e-7, 1e-4]")
    base = line_from_point_dir(table.point(state.t), float(angle_of(state.v)))

    def image(da, dp):
        out = line_map(table, OrientedLine(base.alpha + da, base.p + dp))
        return np.array([out.alpha, out.p])

    def diff(plus, minus):
        d = plus - minus
        d[0] = wrap_pi(d[0])
        return d / (2 * h)

    col_a = diff(image(h, 0.0), image(-h, 0.0))
    col_p = diff(image(0.0, h), image(0.0, -h))
    return float(col_a[0] * col_p[1] - col_a[1] * col_p[0])


def random_incidence(table: BilliardTable, rng, margin=0.2):
    """Random boundary parameter and outward-pointing unit incoming velocity."""
    t = float(rng.uniform(0.0, TWO_PI))
    th = float(angle_of(table.tangent(t)))
    psi = th - np.pi + margin + rng.uniform(0.0, np.pi - 2 * margin)
    e = direction(psi)
    x = table.point(t)
    return t, e / table.metric.norm(x, e)


def chord_partner(table: BilliardTable, x, d):
    """Other end of the chord through boundary point ``x`` along direction ``d``."""
    t, _, _ = ray_oval_hits(x, angle_of(d), table.boundary)
    return table.point(float(t))
