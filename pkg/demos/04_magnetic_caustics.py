"""
Magnetic billiards
==================

In a constant magnetic field a charge moves along Larmor circles of radius R
between specular reflections.  After n reflections the pencil from O gives a
one-parameter family of circles; its envelope has two components, the offsets
c +- R nu of the curve of centres c.  A cusp of an offset sits where the
centre curve's curvature equals the sign-adjusted 1/R.

Run:  python3 demos/04_magnetic_caustics.py [output_dir]
"""

import sys
from pathlib import Path

import numpy as np

from finsler_billiards.billiard import BilliardTable
from finsler_billiards.caustics import four_cusp_verify
from finsler_billiards.geom2d import CircleOval
from finsler_billiards.magnetic import MagneticBilliard, magnetic_caustic
from finsler_billiards.metrics import EuclideanMetric
from finsler_billiards.svg import magnetic_figure

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(exist_ok=True)

disc = CircleOval(1.0)
mb = MagneticBilliard(disc, 2.0)

for O in ((0.1, 0.0), (0.2, 0.0)):
    for n in (1, 2):
        r = magnetic_caustic(mb, O, n)
        print(f"O = {O}, n = {n}: inner cusps {r.inner_count}, outer cusps {r.outer_count}")
        magnetic_figure(mb, O, n, r, rays=10).save(out / f"magnetic_O{O[0]}_n{n}.svg")

# The outer component is not always smooth: with two reflections and the source
# far enough from the centre it picks up cusps too.
for x in (0.2, 0.3, 0.4):
    r = magnetic_caustic(mb, (x, 0.0), 2)
    print(f"O = ({x}, 0), n = 2: inner {r.inner_count}, outer {r.outer_count}")

# From the centre every final Larmor circle passes back through O: the inner
# component collapses to that point.
r = magnetic_caustic(mb, (0.0, 0.0), 1)
print("source at the centre: degenerate =", r.degenerate,
      "| inner component radius", f"{np.max(np.linalg.norm(r.envelope.inner, axis=1)):.1e}")

# Zero-field limit: R -> infinity recovers the straight-line caustic.
weak = magnetic_caustic(MagneticBilliard(disc, 1e4), (0.2, 0.0), 1).envelope.inner
straight = four_cusp_verify(BilliardTable(disc, EuclideanMetric()), (0.2, 0.0), 1,
                            segre=False).envelope
from scipy.spatial.distance import directed_hausdorff  # noqa: E402

gap = max(directed_hausdorff(weak, straight)[0], directed_hausdorff(straight, weak)[0])
print(f"R = 1e4 vs straight caustic: Hausdorff distance {gap:.1e}")
