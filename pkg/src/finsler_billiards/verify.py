"""Invariant suite run by ``finsler-billiards verify``.

Each check returns a :class:`Check`; ``tol_scale`` multiplies every
tolerance (``0.01`` tightens the suite a hundredfold).  Checks marked
``asserted=False`` only report a value.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import caustics
from .billiard import (BilliardTable, RayState, ak_invariance_test, chord_partner,
                       jacobian_experiment, propagate, random_incidence, reflect_geometric,
                       reflect_variational, reflect_velocity, reversibility_test)
from .geom2d import CircleOval, EllipseOval, angle_of, direction, wrap_pi
from .linespace import DualCurve, crofton_length, dual_of_point
from .magnetic import MagneticBilliard, larmor_advance, magnetic_caustic, specular
from .metrics import (BusemannMetric, EuclideanMetric, FunkMetric, HilbertMetric,
                      MagneticMetric, MinkowskiMetric, funk_distance, hilbert_distance,
                      kepler_params, segment_length, verify_kepler_indicatrix)


@dataclass
class Check:
    name: str
    value: float
    tol: float
    asserted: bool = True

    @property
    def ok(self) -> bool:
        return (not self.asserted) or bool(self.value <= self.tol)

    def as_dict(self):
        d = asdict(self)
        d["value"] = float(self.value)
        d["ok"] = self.ok
        return d


def _disc_pairs(rng, count, radius=0.95):
    r = radius * np.sqrt(rng.uniform(size=(count, 2)))
    th = rng.uniform(0, 2 * np.pi, size=(count, 2))
    pts = r[..., None] * direction(th)
    return pts[:, 0], pts[:, 1]


def check_dual_point(s):
    A = np.array([0.4, -0.25])
    C = DualCurve.from_graph(dual_of_point(A), m=1024)
    E = caustics.envelope_points(C)
    return Check("dual point envelope collapses to the point",
                 float(np.max(np.linalg.norm(E - A, axis=1))), 1e-10 * s)


def check_circle_envelope(s):
    C = DualCurve.from_graph(lambda a: np.ones_like(a), m=1024)
    E = caustics.envelope_points(C)
    return Check("p = 1 envelope is the unit circle",
                 float(np.max(np.abs(np.linalg.norm(E, axis=1) - 1.0))), 1e-8 * s)


def check_circle_caustics(s):
    table = BilliardTable(CircleOval(1.0), EuclideanMetric())
    bad = 0
    for n in (1, 2, 3):
        r = caustics.four_cusp_verify(table, (0.3, 0.0), n, m=2048, verify_witnesses=False)
        bad += int(r.cusp_count != 4 or r.winding != 1 or not r.segre_ok)
    return Check("circle caustics have four cusps (n = 1, 2, 3)", bad, 0)


def check_distances(s):
    rng = np.random.default_rng(1)
    disc = CircleOval(1.0)
    funk, hilb = FunkMetric(disc), HilbertMetric(disc)
    X, Y = _disc_pairs(rng, 20)
    err = 0.0
    for x, y in zip(X, Y):
        err = max(err, abs(segment_length(funk, x, y) - funk_distance(disc, x, y)),
                  abs(segment_length(hilb, x, y) - hilbert_distance(disc, x, y)))
    return Check("Funk/Hilbert closed forms match quadrature", err, 1e-9 * s)


def check_hilbert_diameter(s):
    d = hilbert_distance(CircleOval(1.0), [0.0, 0.0], [0.6, 0.0])
    return Check("Hilbert distance 0 -> (0.6, 0) equals ln 2", abs(d - np.log(2.0)), 1e-10 * s)


def check_kepler(s):
    worst = 0.0
    rng = np.random.default_rng(2)
    for R in (2.0, 5.0):
        metric = MagneticMetric(R)
        for x in rng.uniform(-1.5, 1.5, size=(5, 2)):
            worst = max(worst, verify_kepler_indicatrix(metric, x))
    a, b, c = kepler_params(0.7)
    worst = max(worst, abs(a * a - b * b - c * c) / (a * a))
    return Check("magnetic indicatrix is a focus-centred ellipse", worst, 1e-10 * s)


def check_magnetic_reflection(s):
    rng = np.random.default_rng(3)
    metric = MagneticMetric(2.0)
    disc = CircleOval(1.0)
    err = 0.0
    for _ in range(50):
        t = rng.uniform(0, 2 * np.pi)
        x, tau = disc.point(t), disc.tangent(t)
        N = disc.normal(t)
        e = direction(angle_of(tau) - rng.uniform(0.2, np.pi - 0.2))
        v = reflect_velocity(metric, x, tau, e / metric.norm(x, e))
        err = max(err, abs(float(wrap_pi(angle_of(v) - angle_of(specular(e, N))))))
    return Check("magnetic-metric reflection is specular", err, 1e-9 * s)


def check_projective_invariance(s):
    rng = np.random.default_rng(4)
    worst = 0.0
    for K in (EuclideanMetric(), MinkowskiMetric([1.0, 0.2, 0.0])):
        for _ in range(5):
            ell = rng.uniform(-0.4, 0.4, size=2)
            worst = max(worst, ak_invariance_test(K, ell, rng.uniform(0.5, 2.0),
                                                  rng.uniform(0, 2 * np.pi),
                                                  rng.uniform(0.3, np.pi - 0.3)))
    return Check("reflection is invariant under projective images", worst, 1e-9 * s)


def variational_mismatch(table, rng, scenes):
    worst = 0.0
    for _ in range(scenes):
        t, u = random_incidence(table, rng)
        v = reflect_geometric(table, t, u)
        x = table.point(t)
        a = x - rng.uniform(0.15, 0.35) * (x - chord_partner(table, x, -u))
        b = x + rng.uniform(0.15, 0.35) * (chord_partner(table, x, v) - x)
        ts = reflect_variational(table, a, b, t + rng.uniform(-2e-3, 2e-3))
        worst = max(worst, abs(float(wrap_pi(angle_of(b - table.point(ts)) - angle_of(v)))))
    return worst


def check_variational(s):
    rng = np.random.default_rng(5)
    worst = 0.0
    for metric in (EuclideanMetric(), FunkMetric(CircleOval(2.0))):
        worst = max(worst, variational_mismatch(BilliardTable(EllipseOval(1.2, 0.8), metric),
                                                rng, 5))
    return Check("geometric and variational reflection agree", worst, 1e-7 * s)


def check_crofton(s):
    L = crofton_length(CircleOval(1.0), n_alpha=512, n_p=512)
    return Check("Crofton length of the unit circle", abs(L / (2 * np.pi) - 1.0), 5e-3 * s)


def check_busemann(s):
    rng = np.random.default_rng(6)
    x, v = rng.uniform(-0.5, 0.5, size=(20, 2)), rng.normal(size=(20, 2))
    err = np.max(np.abs(BusemannMetric("one").norm(x, v) - np.linalg.norm(v, axis=1)))
    return Check("Busemann density 1 gives the Euclidean norm", float(err), 1e-6 * s)


def check_reversibility(s):
    table = BilliardTable(EllipseOval(1.2, 0.8), EuclideanMetric())
    traj = propagate(table, (0.2, 0.1), 0.7, 3)
    _, defect = reversibility_test(table, traj)
    return Check("Euclidean trajectories are reversible", defect, 1e-7 * s)


def jacobian_values(metric, states=20, seed=7):
    table = BilliardTable(EllipseOval(1.2, 0.8), metric)
    rng = np.random.default_rng(seed)
    dets = []
    for _ in range(states):
        t, u = random_incidence(table, rng, margin=0.4)
        v = reflect_geometric(table, t, u)
        dets.append(jacobian_experiment(table, RayState(t, v)))
    return np.array(dets)


def check_jacobians(s):
    out = [Check("Euclidean billiard map preserves dp dalpha",
                 float(np.max(np.abs(jacobian_values(EuclideanMetric()) - 1.0))), 1e-6 * s)]
    for name, metric in (("Minkowski rho = 1 + 0.2 cos", MinkowskiMetric([1.0, 0.2, 0.0])),
                         ("Funk in disc of radius 2", FunkMetric(CircleOval(2.0)))):
        d = jacobian_values(metric)
        out.append(Check(f"Jacobian range, {name}: max |det - 1|",
                         float(np.max(np.abs(d - 1.0))), 0.0, asserted=False))
    return out


def check_larmor(s):
    mb = MagneticBilliard(CircleOval(1.0), 2.0)
    t, _ = larmor_advance(mb, (0.0, -1.0), (0.0, 1.0))
    err = float(np.linalg.norm(mb.table.point(t) - np.array([-0.8, 0.6])))
    return Check("Larmor arc hits (-0.8, 0.6)", err, 1e-12 * s)


def check_magnetic_caustic(s):
    mb = MagneticBilliard(CircleOval(1.0), 2.0)
    bad = 0
    for n in (1, 2):
        r = magnetic_caustic(mb, (0.2, 0.0), n, m=2048)
        bad += int(r.inner_count != 4 or r.outer_count != 0)
    return Check("magnetic caustic: inner 4 cusps, outer smooth", bad, 0)


CHECKS = (check_dual_point, check_circle_envelope, check_circle_caustics, check_distances,
          check_hilbert_diameter, check_kepler, check_magnetic_reflection,
          check_projective_invariance, check_variational, check_crofton, check_busemann,
          check_reversibility, check_jacobians, check_larmor, check_magnetic_caustic)


def run_suite(tol_scale=1.0):
    results = []
    for fn in CHECKS:
        out = fn(tol_scale)
        results.extend(out if isinstance(out, list) else [out])
    return results


def summary(results, tol_scale=1.0) -> str:
    doc = {"tol_scale": tol_scale, "ok": all(r.ok for r in results),
           "checks": [r.as_dict() for r in results]}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
