"""
Degenerate caustics
===================

Two classical sources produce caustics that collapse to a point: the focus
of an ellipse (every ray is sent through the other focus) and the centre of
a circle (every ray comes straight back).  The dual curve is then the "line"
of a single point, the cusp determinant vanishes identically, and the report
says ``degenerate`` instead of counting cusps.

Run:  python3 demos/03_degenerate_caustics.py
"""

import numpy as np

from finsler_billiards.billiard import BilliardTable
from finsler_billiards.caustics import four_cusp_verify
from finsler_billiards.geom2d import CircleOval, EllipseOval
from finsler_billiards.linespace import ConeCurve
from finsler_billiards.metrics import EuclideanMetric

ellipse = BilliardTable(EllipseOval(1.2, 0.8), EuclideanMetric())
F1, F2 = ellipse.boundary.foci
r = four_cusp_verify(ellipse, F1, 1, segre=False)
print("source at a focus:", F1, "-> degenerate:", r.degenerate)
print("   caustic collapses onto the other focus within",
      f"{np.max(np.linalg.norm(r.envelope - F2, axis=1)):.1e}")
D = ConeCurve(r.curve).determinant()
print(f"   max |det[G, G', G'']| = {np.max(np.abs(D)):.1e}")

circle = BilliardTable(CircleOval(1.0), EuclideanMetric())
for n in (1, 2, 3):
    r = four_cusp_verify(circle, (0.0, 0.0), n, segre=False)
    spread = np.ptp(r.envelope, axis=0)
    print(f"circle centre, n = {n}: degenerate = {r.degenerate}, envelope spread {spread.max():.1e}")

# Moving the source slightly off the focus restores four cusps.
r = four_cusp_verify(ellipse, F1 + np.array([0.0, 0.05]), 1, segre=False)
print("source 0.05 off the focus:", r.cusp_count, "cusps")
