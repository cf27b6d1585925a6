import json

import numpy as np
import pytest

from finsler_billiards.errors import DegenerateCenterCurve, WeakFieldViolation
from finsler_billiards.geom2d import CircleOval, EllipseOval, direction
from finsler_billiards.magnetic import (CenterCurve, MagneticBilliard, circle_family_envelope,
                                        larmor_advance, magnetic_caustic, magnetic_propagate,
                                        offset_cusps, offset_speed, specular)

DISC = CircleOval(1.0)


def larmor_hit(x, v, R):
    """Second intersection of the CCW Larmor circle with the unit circle (closed form)."""
    c = x + R * np.array([-v[1], v[0]])
    # |p| = 1, |p - c| = R  =>  <p, c> = (1 + |c|^2 - R^2) / 2
    k = 0.5 * (1 + c @ c - R * R)
    foot = k * c / (c @ c)
    h = np.sqrt(1 - foot @ foot)
    perp = np.array([-c[1], c[0]]) / np.linalg.norm(c)
    cands = [foot + h * perp, foot - h * perp]
    return max(cands, key=lambda p: np.linalg.norm(p - x))


def test_weak_field_required():
    with pytest.raises(WeakFieldViolation):
        MagneticBilliard(DISC, 0.5)
    with pytest.raises(ValueError):
        MagneticBilliard(DISC, -1.0)


def test_larmor_advance_closed_form():
    mb = MagneticBilliard(DISC, 2.0)
    t, u = larmor_advance(mb, (0.0, -1.0), (0.0, 1.0))
    np.testing.assert_allclose(DISC.point(t), [-0.8, 0.6], atol=1e-12)
    # incoming velocity is tangent to the Larmor circle at the hit
    c = np.array([-2.0, -1.0])
    assert abs(np.dot(u, DISC.point(t) - c)) < 1e-12
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = DISC.point(rng.uniform(0, 2 * np.pi))
        v = direction(np.arctan2(-x[1], -x[0]) + rng.uniform(-1.2, 1.2))
        t, _ = larmor_advance(mb, x, v)
        np.testing.assert_allclose(DISC.point(t), larmor_hit(x, v, 2.0), atol=1e-11)


def test_specular():
    N = np.array([0.0, 1.0])
    np.testing.assert_allclose(specular(np.array([1.0, -1.0]), N), [1.0, 1.0])


def test_trajectory_arcs_stay_on_table():
    mb = MagneticBilliard(EllipseOval(1.2, 0.8), 3.0)
    traj = magnetic_propagate(mb, (0.1, 0.2), 0.4, 3)
    assert traj.params.size == 3
    pts = mb.table.point(traj.params)
    np.testing.assert_allclose(mb.table.level(pts), 0.0, atol=1e-12)


def test_offset_cusps_of_elliptic_center_curve():
    # centre curve x = (2 cos s, sin s): curvature equals 1 where sin^2 s = (2^(2/3) - 1) / 3
    s = 2 * np.pi * np.arange(2048) / 2048
    cc = CenterCurve(s, np.stack([2 * np.cos(s), np.sin(s)], axis=1))
    x = np.arcsin(np.sqrt((2 ** (2 / 3) - 1) / 3))
    expected = np.sort(np.mod([x, np.pi - x, np.pi + x, -x], 2 * np.pi))
    np.testing.assert_allclose(offset_cusps(cc, 1.0, +1).params, expected, atol=1e-10)
    assert offset_cusps(cc, 1.0, -1).count == 0
    speed = offset_speed(cc, 1.0, +1, expected)
    assert np.max(speed) < 1e-9


def test_circle_center_curve_offsets_are_circles():
    s = 2 * np.pi * np.arange(512) / 512
    cc = CenterCurve(s, 0.5 * np.stack([np.cos(s), np.sin(s)], axis=1))
    env = circle_family_envelope(cc, 2.0)
    np.testing.assert_allclose(np.linalg.norm(env.inner, axis=1), 1.5, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(env.outer, axis=1), 2.5, atol=1e-12)
    assert not env.degenerate


def test_point_center_curve_is_degenerate_ring():
    s = 2 * np.pi * np.arange(512) / 512
    env = circle_family_envelope(CenterCurve(s, np.tile([0.1, 0.2], (512, 1))), 2.0)
    assert env.degenerate and env.outer is None
    np.testing.assert_allclose(np.linalg.norm(env.inner - [0.1, 0.2], axis=1), 2.0)


def test_stationary_center_curve_raises():
    s = 2 * np.pi * np.arange(512) / 512
    c = np.stack([np.cos(s) ** 3, np.sin(s) ** 3], axis=1)  # astroid: c' = 0 at s = 0
    with pytest.raises(DegenerateCenterCurve):
        circle_family_envelope(CenterCurve(s, c), 2.0)


def test_magnetic_caustic_components(tmp_path):
    mb = MagneticBilliard(DISC, 2.0)
    r = magnetic_caustic(mb, (0.2, 0.0), 1, m=2048)
    assert (r.inner_count, r.outer_count) == (4, 0)
    assert r.envelope.outer is not None
    doc = json.loads(r.to_json(tmp_path / "m.json"))
    assert doc["components"] == 2 and doc["cusp_count"] == {"inner": 4, "outer": 0}
    assert all(c["component"] == "inner" for c in doc["cusps"])
    r.envelope_to_csv(tmp_path / "m.csv")
    assert (tmp_path / "m.csv").read_text().startswith("s,cx,cy,inner_x,inner_y,outer_x,outer_y\n")


def test_magnetic_caustic_center_source_collapses_inner_component():
    # every final Larmor circle passes back through the centre: the inner offset is that point
    r = magnetic_caustic(MagneticBilliard(DISC, 2.0), (0.0, 0.0), 1, m=1024)
    assert r.degenerate and r.inner.collapsed and r.inner_count == 0
    assert np.max(np.linalg.norm(r.envelope.inner, axis=1)) < 1e-12
    np.testing.assert_allclose(np.linalg.norm(r.envelope.outer, axis=1), 4.0, rtol=1e-12)
