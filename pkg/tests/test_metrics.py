import pickle

import numpy as np
import pytest

from finsler_billiards.errors import (CoincidentPoints, ConfigError, DomainEscape, FieldTooStrong,
                                      ImageNotConvex, NotConvex)
from finsler_billiards.geom2d import CircleOval, EllipseOval, direction
from finsler_billiards.metrics import (BusemannMetric, EuclideanMetric, FunkMetric, HilbertMetric,
                                       MagneticMetric, MinkowskiMetric, ProjectiveImageMinkowski,
                                       QuadraticMinkowski, funk_distance, hilbert_distance,
                                       kepler_params, legendre_dual, parse_metric, segment_length,
                                       verify_kepler_indicatrix)

METRICS = [EuclideanMetric(), MinkowskiMetric([1.0, 0.2, 0.0]),
           QuadraticMinkowski([[2.0, 0.3], [0.3, 1.0]]), FunkMetric(CircleOval(2.0)),
           HilbertMetric(CircleOval(2.0)), MagneticMetric(3.0), BusemannMetric("quadratic", 256)]


@pytest.mark.parametrize("metric", METRICS, ids=repr)
def test_positive_homogeneity_and_euler(metric):
    rng = np.random.default_rng(0)
    x = rng.uniform(-0.5, 0.5, (10, 2))
    v = rng.normal(size=(10, 2))
    F = metric.norm(x, v)
    np.testing.assert_allclose(metric.norm(x, 2.5 * v), 2.5 * F, rtol=1e-12)
    # Euler: <dF/dv, v> = F
    np.testing.assert_allclose(np.sum(metric.grad(x, v) * v, axis=1), F, rtol=1e-6)


@pytest.mark.parametrize("metric", METRICS, ids=repr)
def test_grad_matches_finite_difference(metric):
    x, v, h = np.array([0.2, -0.1]), np.array([0.7, 0.4]), 1e-6
    fd = [(metric.norm(x, v + h * e) - metric.norm(x, v - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(metric.grad(x, v), np.ravel(fd), atol=1e-6)


def test_minkowski_indicatrix_radius():
    K = MinkowskiMetric([1.0, 0.2, 0.0])
    th = np.linspace(0, 2 * np.pi, 13)
    np.testing.assert_allclose(np.linalg.norm(K.indicatrix_point(np.zeros(2), th), axis=1),
                               1 + 0.2 * np.cos(th), rtol=1e-14)
    assert not K.reversible
    assert MinkowskiMetric([1.0, 0.0, 0.0, 0.1, 0.0]).reversible


def test_minkowski_rejects_nonconvex():
    with pytest.raises(NotConvex):
        MinkowskiMetric([1.0, 0.0, 0.0, 0.5, 0.0])


def test_projective_image_of_circle_is_kepler_norm():
    # the unit circle under y -> y / (1 + <ell, y>) is |z| + <ell, z> = 1
    ell = np.array([0.3, -0.2])
    K1 = ProjectiveImageMinkowski(EuclideanMetric(), ell)
    v = np.random.default_rng(1).normal(size=(20, 2))
    np.testing.assert_allclose(K1.norm(np.zeros(2), v), np.linalg.norm(v, axis=1) + v @ ell,
                               rtol=1e-12)


def test_projective_image_requires_positive_denominator():
    with pytest.raises(ImageNotConvex):
        ProjectiveImageMinkowski(EuclideanMetric(), [1.5, 0.0])


def test_funk_closed_form_matches_quadrature():
    disc = EllipseOval(1.2, 0.8)
    funk, hilb = FunkMetric(disc), HilbertMetric(disc)
    rng = np.random.default_rng(2)
    for _ in range(5):
        x, y = rng.uniform(-0.5, 0.5, (2, 2))
        assert segment_length(funk, x, y) == pytest.approx(funk_distance(disc, x, y), abs=1e-9)
        assert segment_length(hilb, x, y) == pytest.approx(hilbert_distance(disc, x, y), abs=1e-9)


def test_hilbert_diameter_value():
    # cross-ratio on the diameter: d(0, r) = 1/2 ln((1 + r) / (1 - r))
    for r in (0.2, 0.6, 0.9):
        assert hilbert_distance(CircleOval(1.0), [0, 0], [r, 0]) == pytest.approx(np.arctanh(r),
                                                                                  abs=1e-12)
    assert hilbert_distance(CircleOval(1.0), [0, 0], [0.6, 0]) == pytest.approx(np.log(2), abs=1e-12)


def test_funk_is_asymmetric_and_hilbert_symmetric():
    D = CircleOval(1.0)
    x, y = np.array([0.1, 0.0]), np.array([0.7, 0.2])
    assert funk_distance(D, x, y) != pytest.approx(funk_distance(D, y, x))
    assert hilbert_distance(D, x, y) == pytest.approx(hilbert_distance(D, y, x), rel=1e-13)


def test_distance_errors():
    D = CircleOval(1.0)
    with pytest.raises(CoincidentPoints):
        funk_distance(D, np.array([0.1, 0.1]), np.array([0.1, 0.1]))
    with pytest.raises(DomainEscape):
        hilbert_distance(D, [0.0, 0.0], [1.5, 0.0])
    with pytest.raises(DomainEscape):
        segment_length(FunkMetric(D), [0.0, 0.0], [1.5, 0.0])


def test_kepler_params_identity():
    for t in (0.0, 0.3, 0.7, -0.95):
        a, b, c = kepler_params(t)
        assert a * a == pytest.approx(b * b + c * c, rel=1e-14)
    with pytest.raises(FieldTooStrong):
        kepler_params(1.0)


def test_kepler_indicatrix_residual():
    M = MagneticMetric(2.0)
    for x in ([0.0, 0.0], [0.5, -0.3], [1.2, 1.0]):
        assert verify_kepler_indicatrix(M, x) < 1e-12


def test_magnetic_zero_form_is_euclidean():
    Z = MagneticMetric.zero()
    v = np.array([[0.3, 0.4], [1.0, -2.0]])
    np.testing.assert_allclose(Z.norm(np.zeros((2, 2)), v), np.linalg.norm(v, axis=1))


def test_busemann_one_is_euclidean():
    B = BusemannMetric("one")
    v = np.random.default_rng(3).normal(size=(5, 2))
    np.testing.assert_allclose(B.norm(np.zeros((5, 2)), v), np.linalg.norm(v, axis=1), rtol=1e-6)


def test_busemann_unknown_density():
    with pytest.raises(ConfigError):
        BusemannMetric("nope")


def test_legendre_dual_requires_unit_vector():
    K = EuclideanMetric()
    np.testing.assert_allclose(legendre_dual(K, np.zeros(2), direction(0.3)), direction(0.3))
    with pytest.raises(ValueError):
        legendre_dual(K, np.zeros(2), [2.0, 0.0])


@pytest.mark.parametrize("spec,cls", [("euclid", EuclideanMetric),
                                      ("minkowski:rho=1,0.2,0", MinkowskiMetric),
                                      ("funk:circle:2", FunkMetric),
                                      ("hilbert:ellipse:2,1.5", HilbertMetric),
                                      ("magnetic:2", MagneticMetric),
                                      ("busemann:one", BusemannMetric)])
def test_parse_metric(spec, cls):
    assert isinstance(parse_metric(spec), cls)


@pytest.mark.parametrize("spec", ["", "euclid:1", "minkowski:1,2", "funk:blob", "warp:3"])
def test_parse_metric_errors(spec):
    with pytest.raises(ConfigError):
        parse_metric(spec)


@pytest.mark.parametrize("metric", METRICS + [MagneticMetric.zero()], ids=repr)
def test_metrics_pickle_for_worker_processes(metric):
    x, v = np.array([0.1, -0.2]), np.array([0.6, 0.8])
    clone = pickle.loads(pickle.dumps(metric))
    assert clone.norm(x, v) == metric.norm(x, v)
