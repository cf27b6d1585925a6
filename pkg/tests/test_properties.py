import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from finsler_billiards.billiard import reflect_velocity
from finsler_billiards.geom2d import (CircleOval, EllipseOval, angle_of, direction,
                                      line_from_point_dir, wrap_angle, wrap_pi)
from finsler_billiards.linespace import DualCurve, dual_of_point, inflections
from finsler_billiards.metrics import (EuclideanMetric, MinkowskiMetric, funk_distance,
                                       hilbert_distance)

angles = st.floats(0.0, 2 * np.pi, allow_nan=False)
inside = st.tuples(st.floats(0.05, 0.85), angles).map(lambda ra: ra[0] * direction(ra[1]))


@given(angles, st.floats(0.05, np.pi - 0.05))
def test_euclidean_reflection_preserves_angle_with_mirror(mirror, incidence):
    tau = direction(mirror)
    u = direction(mirror - incidence)
    v = reflect_velocity(EuclideanMetric(), np.zeros(2), tau, u)
    assert abs(wrap_pi(angle_of(v) - (mirror + incidence))) < 1e-10


@given(angles, st.floats(0.1, np.pi - 0.1), st.floats(-0.3, 0.3))
def test_minkowski_reflection_is_unit_and_inward(mirror, incidence, a1):
    K = MinkowskiMetric([1.0, a1, 0.0])
    tau = direction(mirror)
    e = direction(mirror - incidence)
    v = reflect_velocity(K, np.zeros(2), tau, e / K.norm(np.zeros(2), e))
    assert abs(K.norm(np.zeros(2), v) - 1.0) < 1e-12
    assert tau[0] * v[1] - tau[1] * v[0] > 0


@given(inside, inside, inside)
def test_hilbert_triangle_inequality_and_symmetry(x, y, z):
    D = CircleOval(1.0)
    if min(np.linalg.norm(x - y), np.linalg.norm(y - z), np.linalg.norm(x - z)) < 1e-6:
        return
    dxy, dyz, dxz = (hilbert_distance(D, x, y), hilbert_distance(D, y, z),
                     hilbert_distance(D, x, z))
    assert dxz <= dxy + dyz + 1e-12
    assert abs(dxy - hilbert_distance(D, y, x)) < 1e-12


@given(inside, inside)
def test_hilbert_is_mean_of_funk(x, y):
    if np.linalg.norm(x - y) < 1e-6:
        return
    D = EllipseOval(1.0, 0.9)
    h = 0.5 * (funk_distance(D, x, y) + funk_distance(D, y, x))
    assert abs(h - hilbert_distance(D, x, y)) < 1e-11


@given(st.floats(-3, 3), st.floats(-3, 3), angles)
def test_line_through_point_contains_it(px, py, a):
    L = line_from_point_dir([px, py], a)
    assert abs(L.residual([px, py])) < 1e-12
    assert abs(L.reversed().residual([px, py])) < 1e-12
    assert 0 <= L.alpha < 2 * np.pi and abs(wrap_pi(L.alpha - wrap_angle(a))) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.05, 0.3), st.integers(2, 5), angles)
def test_cusp_count_of_translated_trig_curve(ax, ay, eps, k, phase):
    # adding a point's "line" translates the envelope and leaves p + p'' unchanged:
    # p + p'' = 1 - eps (k^2 - 1) cos(k a + phase) has 2k zeros iff eps (k^2 - 1) > 1
    assume(abs(eps * (k * k - 1) - 1.0) > 0.05)
    base = dual_of_point([ax, ay])
    C = DualCurve.from_graph(lambda a: base(a) + 1.0 + eps * np.cos(k * a + phase), m=1024)
    assert inflections(C).count == (2 * k if eps * (k * k - 1) > 1 else 0)
