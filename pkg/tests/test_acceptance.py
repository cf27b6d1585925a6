"""Acceptance criteria 1-14, each run at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line; the lines are repeated in the
terminal summary.  Run with ``pytest tests/test_acceptance.py -s`` or
``python3 tests/test_acceptance.py``.
"""

import json
import time

import numpy as np
import pytest
from scipy.spatial.distance import directed_hausdorff

from conftest import ACCEPTANCE_LINES
from finsler_billiards import caustics, cli
from finsler_billiards.billiard import (BilliardTable, ak_invariance_test, n_bounce_shots,
                                        reflect_velocity, shot_gradient)
from finsler_billiards.geom2d import CircleOval, EllipseOval, angle_of, direction, wrap_pi
from finsler_billiards.linespace import crofton_length
from finsler_billiards.magnetic import MagneticBilliard, magnetic_caustic, specular
from finsler_billiards.metrics import (BusemannMetric, EuclideanMetric, FunkMetric, HilbertMetric,
                                       MagneticMetric, MinkowskiMetric, funk_distance,
                                       hilbert_distance, kepler_params, segment_length,
                                       verify_kepler_indicatrix)
from finsler_billiards.verify import jacobian_values, variational_mismatch

DISC = CircleOval(1.0)
ELLIPSE = EllipseOval(1.2, 0.8)
METRICS = {
    "euclid": EuclideanMetric(),
    "minkowski": MinkowskiMetric([1.0, 0.2, 0.0]),
    "funk": FunkMetric(CircleOval(2.0)),
    "hilbert": HilbertMetric(CircleOval(2.0)),
}
TABLES = {"circle": DISC, "ellipse": ELLIPSE}
SOURCES = [(0.2, 0.15), (-0.3, 0.1), (0.1, -0.35)]


def record(k, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def disc_pairs(rng, count, radius):
    r = radius * np.sqrt(rng.uniform(size=(count, 2)))
    th = rng.uniform(0, 2 * np.pi, size=(count, 2))
    pts = r[..., None] * direction(th)
    return pts[:, 0], pts[:, 1]


@pytest.fixture(scope="module")
def sweep():
    runs = []
    for mname, metric in METRICS.items():
        for tname, oval in TABLES.items():
            table = BilliardTable(oval, metric)
            for O in SOURCES:
                for n in (1, 2, 3):
                    runs.append(((mname, tname, O, n), caustics.four_cusp_verify(table, O, n)))
    return runs


def test_c01_circle_caustics():
    table = BilliardTable(DISC, EuclideanMetric())
    rows, ok = [], True
    for n in (1, 2, 3):
        t0 = time.perf_counter()
        r = caustics.four_cusp_verify(table, (0.3, 0.0), n, m=4096)
        dt = time.perf_counter() - t0
        ok &= r.cusp_count == 4 and r.winding == 1 and r.segre_ok and dt < 10.0
        rows.append(f"n={n}: {r.cusp_count} cusps, winding {r.winding}, "
                    f"segre {r.segre_ok}, {dt:.1f}s")
    record(1, ok, "; ".join(rows))


def test_c02_four_cusp_sweep(sweep):
    bad = [key for key, r in sweep
           if not r.degenerate and (r.cusp_count < 4 or r.cusp_count % 2)]
    counts = sorted({r.cusp_count for _, r in sweep})
    degenerate = sum(r.degenerate for _, r in sweep)
    record(2, len(sweep) == 72 and not bad,
           f"{len(sweep)} runs, {len(bad)} failures, {degenerate} degenerate, "
           f"cusp counts seen {counts}")


def test_c03_degenerate_cases():
    ell = BilliardTable(EllipseOval(1.2, 0.8), EuclideanMetric())
    F1, F2 = ell.boundary.foci
    r = caustics.four_cusp_verify(ell, F1, 1, segre=False)
    focus_err = float(np.max(np.linalg.norm(r.envelope - F2, axis=1)))
    ok = r.degenerate and focus_err < 1e-8
    disc = BilliardTable(DISC, EuclideanMetric())
    diam = []
    for n in (1, 2, 3):
        rc = caustics.four_cusp_verify(disc, (0.0, 0.0), n, segre=False)
        diam.append(caustics._diameter(rc.envelope))
        ok &= rc.degenerate
    ok &= max(diam) < 1e-8
    record(3, ok, f"focus image error {focus_err:.2e}; centre envelope diameters "
                  + ", ".join(f"{d:.1e}" for d in diam))


def test_c04_distance_closed_forms():
    rng = np.random.default_rng(40)
    funk, hilb = FunkMetric(DISC), HilbertMetric(DISC)
    X, Y = disc_pairs(rng, 100, 0.95)
    err = max(max(abs(segment_length(funk, x, y) - funk_distance(DISC, x, y)),
                  abs(segment_length(hilb, x, y) - hilbert_distance(DISC, x, y)))
              for x, y in zip(X, Y))
    dh = hilbert_distance(DISC, [0.0, 0.0], [0.6, 0.0])
    record(4, err < 1e-9 and abs(dh - np.log(2)) < 1e-10,
           f"max |closed - quadrature| {err:.2e} over 100 pairs; "
           f"d_H(0,(0.6,0)) - ln 2 = {dh - np.log(2):.1e}")


def test_c05_kepler_indicatrix():
    rng = np.random.default_rng(50)
    worst = 0.0
    for R in (2.0, 5.0):
        metric = MagneticMetric(R)
        for x in rng.uniform(-0.9, 0.9, size=(20, 2)):
            worst = max(worst, verify_kepler_indicatrix(metric, x, samples=512))
    ident = max(abs(a * a - b * b - c * c) / (a * a)
                for a, b, c in (kepler_params(t) for t in np.linspace(-0.9, 0.9, 19)))
    record(5, worst < 1e-10 and ident < 1e-14,
           f"max ellipse residual {worst:.2e}; a^2 = b^2 + c^2 to {ident:.1e}")


def test_c06_magnetic_reflection_specular():
    rng = np.random.default_rng(60)
    worst = 0.0
    for R in (2.0, 5.0):
        metric = MagneticMetric(R)
        for _ in range(100):
            t = rng.uniform(0, 2 * np.pi)
            x, tau, N = DISC.point(t), DISC.tangent(t), DISC.normal(t)
            e = direction(angle_of(tau) - rng.uniform(0.05, np.pi - 0.05))
            v = reflect_velocity(metric, x, tau, e / metric.norm(x, e))
            worst = max(worst, abs(float(wrap_pi(angle_of(v) - angle_of(specular(e, N))))))
    record(6, worst < 1e-9, f"max angle to specular {worst:.2e} over 200 incidences")


def test_c07_projective_invariance():
    rng = np.random.default_rng(70)
    worst, kepler = 0.0, 0
    for k in range(50):
        # every other scene maps the Euclidean circle to a Kepler ellipse
        base = EuclideanMetric() if k % 2 == 0 else MinkowskiMetric([1.0, 0.2, 0.0])
        kepler += k % 2 == 0
        ell = rng.uniform(-0.4, 0.4, size=2)
        worst = max(worst, ak_invariance_test(base, ell, rng.uniform(0.5, 2.0),
                                              rng.uniform(0, 2 * np.pi),
                                              rng.uniform(0.2, np.pi - 0.2)))
    record(7, worst < 1e-9, f"max reflected-direction difference {worst:.2e} over 50 scenes "
                            f"({kepler} circle -> Kepler ellipse)")


def test_c08_variational_vs_geometric():
    metrics = dict(METRICS, busemann=BusemannMetric("quadratic", nodes=256))
    rows, ok = [], True
    for k, (name, metric) in enumerate(metrics.items()):
        w = variational_mismatch(BilliardTable(ELLIPSE, metric), np.random.default_rng(80 + k), 100)
        ok &= w < 1e-7
        rows.append(f"{name} {w:.1e}")
    record(8, ok, "max mismatch over 100 scenes: " + ", ".join(rows))


def test_c09_crofton_and_busemann():
    errs = [abs(crofton_length(CircleOval(r), n_alpha=1024, n_p=1024) / (2 * np.pi * r) - 1)
            for r in (0.5, 1.0, 2.0)]
    rng = np.random.default_rng(90)
    x, v = rng.uniform(-1, 1, size=(50, 2)), rng.normal(size=(50, 2))
    berr = float(np.max(np.abs(BusemannMetric("one").norm(x, v) - np.linalg.norm(v, axis=1))))
    record(9, max(errs) < 5e-3 and berr < 1e-6,
           "Crofton relative errors " + ", ".join(f"{e:.1e}" for e in errs)
           + f"; Busemann f=1 vs Euclid {berr:.1e}")


def test_c10_segre_checks(sweep):
    bad, witnesses = [], 0
    for key, r in sweep:
        seg = r.segre
        witnesses += len(seg.witnesses)
        if not (r.winding == 1 and seg.meets.all() and seg.witnesses_ok and seg.probes.shape[0] == 400
                and seg.interior.any() and (~seg.interior).any()):
            bad.append(key)
    record(10, not bad, f"{len(sweep)} runs on a 20x20 grid, {len(bad)} failures, "
                        f"{witnesses} interior witnesses verified as shots")


def scan_critical_points(table, O, A, n, N):
    """Count critical points of the shot length by a dense-grid scan (n = 1 or 2)."""
    g = 2 * np.pi * np.arange(N) / N + 1e-3
    if n == 1:
        d = shot_gradient(table, O, A, g[:, None])[:, 0]
        return int(np.count_nonzero(np.sign(d) != np.sign(np.roll(d, -1))))
    T1, T2 = np.meshgrid(g, g, indexing="ij")
    with np.errstate(invalid="ignore"):  # grid points on the diagonal give NaN
        G = shot_gradient(table, O, A, np.stack([T1.ravel(), T2.ravel()], 1)).reshape(N, N, 2)
    ang = np.arctan2(G[..., 1], G[..., 0])
    d = lambda a, b: (b - a + np.pi) % (2 * np.pi) - np.pi
    b = np.roll(ang, -1, 0)
    c = np.roll(b, -1, 1)
    e = np.roll(ang, -1, 1)
    w = (d(ang, b) + d(b, c) + d(c, e) + d(e, ang)) / (2 * np.pi)
    I, J = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    near_diagonal = np.abs(((I - J + N // 2) % N) - N // 2) <= 2
    return int(np.count_nonzero((np.abs(w) > 0.5) & ~near_diagonal))


def test_c11_n_bounce_shot_count():
    table = BilliardTable(DISC, EuclideanMetric())
    rng = np.random.default_rng(0)
    rows, ok = [], True
    for k in range(2):
        r = 0.8 * np.sqrt(rng.uniform(size=2))
        th = rng.uniform(0, 2 * np.pi, 2)
        O, A = r[0] * direction(th[0]), r[1] * direction(th[1])
        counts, scans = [], []
        for n in (1, 2, 3):
            found = len(n_bounce_shots(table, O, A, n))
            counts.append(found)
            ok &= found >= n + 1
            if n <= 2:
                scan = scan_critical_points(table, O, A, n, 20000 if n == 1 else 500)
                scans.append(scan)
                ok &= scan == found
        rows.append(f"pair {k}: shots {counts} (scan n<=2: {scans})")
    record(11, ok, "; ".join(rows))


def test_c12_magnetic_figures():
    mb = MagneticBilliard(DISC, 2.0)
    rows, ok = [], True
    for O in ((0.1, 0.0), (0.2, 0.0)):
        for n in (1, 2):
            r = magnetic_caustic(mb, O, n)
            ok &= r.envelope.outer is not None and r.inner_count == 4 and r.outer_count == 0
            rows.append(f"O={O} n={n}: inner {r.inner_count}, outer {r.outer_count}")
    disc = BilliardTable(DISC, EuclideanMetric())
    haus = 0.0
    for O, n in (((0.2, 0.0), 1), ((0.2, 0.0), 2)):
        Mz = magnetic_caustic(MagneticBilliard(DISC, 1e4), O, n).envelope.inner
        Eu = caustics.four_cusp_verify(disc, O, n, segre=False).envelope
        haus = max(haus, directed_hausdorff(Mz, Eu)[0], directed_hausdorff(Eu, Mz)[0])
    ok &= haus < 1e-3
    record(12, ok, "; ".join(rows) + f"; zero-field Hausdorff {haus:.1e}")


def test_c13_jacobian():
    d = jacobian_values(EuclideanMetric(), states=100, seed=130)
    info = {name: float(np.max(np.abs(jacobian_values(m, states=20) - 1.0)))
            for name, m in (("minkowski", METRICS["minkowski"]), ("funk", METRICS["funk"]))}
    err = float(np.max(np.abs(d - 1.0)))
    record(13, err < 1e-6, f"Euclidean max |det - 1| {err:.1e} over 100 states; reported "
                           + ", ".join(f"{k} {v:.2f}" for k, v in info.items()))


def test_c14_determinism(tmp_path):
    runs = [("caustic", ["--table", "ellipse:1.2,0.8", "--metric", "minkowski:rho=1,0.2,0",
                         "--source", "0.2,0.15", "--bounces", "2", "--probes", "8"]),
            ("magnetic", ["--R", "2", "--source", "0.2,0", "--bounces", "2"]),
            ("shots", ["--source", "0.3,0", "--target=-0.2,0.4", "--bounces", "2"]),
            ("distance", ["--pairs", "10"])]
    diffs = []
    for cmd, args in runs:
        blobs = []
        for k, workers in enumerate((1, 1, 4)):
            folder = tmp_path / f"{cmd}{k}"
            extra = ["--workers", str(workers)] if cmd == "caustic" else []
            assert cli.main([cmd, *args, *extra, "--out", str(folder / "out")]) == 0
            blobs.append({p.name: p.read_bytes() for p in sorted(folder.iterdir())})
        diffs += [f"{cmd}:{name}" for b in blobs[1:] for name in b if b[name] != blobs[0][name]]
        if cmd == "caustic":
            json.loads(blobs[0]["out.json"])
    record(14, not diffs, "repeated runs and worker counts 1/4 byte-identical"
                          if not diffs else f"differences in {diffs}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-s", "-q"]))
