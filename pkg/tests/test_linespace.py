import numpy as np
import pytest

from finsler_billiards import caustics
from finsler_billiards.errors import DegenerateCurve
from finsler_billiards.geom2d import CircleOval, Segment
from finsler_billiards.linespace import (ConeCurve, DualCurve, TrigInterpolant, crofton_length,
                                         dual_of_point, inflections, line_crossings,
                                         meets_all_lines, winding)


def test_trig_interpolant_derivatives():
    s = 2 * np.pi * np.arange(64) / 64
    f = TrigInterpolant(np.sin(3 * s) + 0.5 * np.cos(s))
    np.testing.assert_allclose(f.on_grid(1), 3 * np.cos(3 * s) - 0.5 * np.sin(s), atol=1e-12)
    np.testing.assert_allclose(f.on_grid(2), -9 * np.sin(3 * s) - 0.5 * np.cos(s), atol=1e-11)
    x = np.array([0.123, 4.5])
    np.testing.assert_allclose(f(x), np.sin(3 * x) + 0.5 * np.cos(x), atol=1e-13)
    assert f.resolved


def test_trig_interpolant_unresolved_flag():
    s = 2 * np.pi * np.arange(64) / 64
    assert not TrigInterpolant(np.sign(np.sin(s))).resolved


def test_dual_of_point_formula():
    A = np.array([0.4, -0.25])
    a = np.linspace(0, 6, 7)
    np.testing.assert_allclose(dual_of_point(A)(a), 0.4 * np.sin(a) + 0.25 * np.cos(a))


def test_dual_point_is_degenerate():
    C = DualCurve.from_graph(dual_of_point([0.4, -0.25]), m=1024)
    with pytest.raises(DegenerateCurve):
        inflections(C)


def test_constant_p_has_no_cusps_and_circle_envelope():
    C = DualCurve.from_graph(lambda a: np.ones_like(a), m=1024)
    assert inflections(C).count == 0
    E = caustics.envelope_points(C)
    np.testing.assert_allclose(np.linalg.norm(E, axis=1), 1.0, atol=1e-12)
    assert winding(C) == 1


def test_cusps_of_trig_support_oracle():
    # p = 1 + c cos(k a): p + p'' = 1 - c (k^2 - 1) cos(k a) vanishes where cos(k a) = 1/(c(k^2-1))
    c, k = 0.2, 3
    C = DualCurve.from_graph(lambda a: 1 + c * np.cos(k * a), m=2048)
    x = np.arccos(1 / (c * (k * k - 1)))
    expected = np.sort(np.mod(np.concatenate([(x + 2 * np.pi * np.arange(k)) / k,
                                              (-x + 2 * np.pi * np.arange(k)) / k]), 2 * np.pi))
    got = inflections(C).params
    np.testing.assert_allclose(got, expected, atol=1e-10)
    assert caustics.envelope_reversals(C) == 2 * k


def test_determinant_formula():
    # det[G, G', G''] = (p + p_aa) alpha'^3 on a graph curve
    C = DualCurve.from_graph(lambda a: 1 + 0.1 * np.sin(2 * a), m=512)
    D = ConeCurve(C).determinant()
    np.testing.assert_allclose(D, 1 - 0.3 * np.sin(2 * C.s), atol=1e-12)


def test_line_crossings_and_meets_all_lines():
    C = DualCurve.from_graph(lambda a: np.ones_like(a), m=512)
    # the "line" of an inside point meets p = 1 nowhere; of an outside point twice
    assert line_crossings(C, [0.2, 0.1]).size == 0
    assert line_crossings(C, [2.0, 0.0]).size == 2
    np.testing.assert_array_equal(meets_all_lines(C, [[0.2, 0.1], [2.0, 0.0]]), [False, True])


def test_winding_of_reversed_orientation():
    s = 2 * np.pi * np.arange(256) / 256
    C = DualCurve.from_lines(s, np.mod(-s, 2 * np.pi), np.ones_like(s))
    assert winding(C) == -1


def test_csv_roundtrip(tmp_path):
    C = DualCurve.from_graph(lambda a: 1 + 0.1 * np.cos(a), m=512)
    C.to_csv(tmp_path / "c.csv")
    D = DualCurve.read_csv(tmp_path / "c.csv")
    np.testing.assert_array_equal(C.p, D.p)
    np.testing.assert_allclose(C.alpha, D.alpha)


def test_crofton_circle_length():
    for r in (0.5, 1.0):
        L = crofton_length(CircleOval(r), n_alpha=512, n_p=512)
        assert L == pytest.approx(2 * np.pi * r, rel=5e-3)


def test_crofton_weighted_density_exact():
    # f = 1 + p^2/2 on the unit circle: (1/4) * 2pi * 2 * int_{-1}^{1} (1 + p^2/2) dp = 7 pi / 3
    f = lambda a, p: 1 + 0.5 * p**2
    L1 = crofton_length(CircleOval(1.0), density=f, n_alpha=256, n_p=256)
    L2 = crofton_length(CircleOval(1.0), density=f, n_alpha=512, n_p=512)
    assert L2 == pytest.approx(7 * np.pi / 3, rel=5e-3)
    # refining the grid moves the estimate towards the exact value
    assert abs(L2 - 7 * np.pi / 3) <= abs(L1 - 7 * np.pi / 3)


def test_crofton_segment():
    S = Segment(np.array([0.1, 0.2]), np.array([0.9, -0.4]))
    assert crofton_length(S, n_alpha=512, n_p=512) == pytest.approx(S.length, rel=5e-3)


def test_crofton_rejects_other_types():
    with pytest.raises(TypeError):
        crofton_length([[0, 0], [1, 1]])
