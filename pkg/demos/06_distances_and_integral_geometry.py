"""
Funk and Hilbert distances, Crofton lengths
===========================================

Inside a convex domain the Funk metric measures how fast one approaches the
boundary along a ray; the Hilbert metric is its symmetrisation.  Both have
closed forms through the boundary hits of the line, and they agree with
numerical quadrature of the Finsler norm along the segment.  A positive
density on the space of lines defines a projective metric whose length of a
curve is (a quarter of) the measure of the lines that meet it.

Run:  python3 demos/06_distances_and_integral_geometry.py
"""

import numpy as np

from finsler_billiards.geom2d import CircleOval, EllipseOval, Segment
from finsler_billiards.linespace import crofton_length
from finsler_billiards.metrics import (BusemannMetric, FunkMetric, HilbertMetric, funk_distance,
                                       hilbert_distance, segment_length)

disc = CircleOval(1.0)
x, y = np.array([0.1, -0.2]), np.array([0.6, 0.3])
print("Funk   x->y: closed", funk_distance(disc, x, y), " quadrature", segment_length(FunkMetric(disc), x, y))
print("Funk   y->x: closed", funk_distance(disc, y, x), "(asymmetric)")
print("Hilbert:     closed", hilbert_distance(disc, x, y), " quadrature",
      segment_length(HilbertMetric(disc), x, y))
print("Hilbert from the centre to (0.6, 0):", hilbert_distance(disc, [0, 0], [0.6, 0]), "= ln 2")

# Crofton: length = 1/4 * measure of lines meeting the curve (counted with multiplicity)
for r in (0.5, 1.0, 2.0):
    print(f"circle r = {r}: Crofton {crofton_length(CircleOval(r)):.6f} vs 2 pi r {2 * np.pi * r:.6f}")
print("ellipse 1.2 x 0.8 perimeter via Crofton:", crofton_length(EllipseOval(1.2, 0.8)))
seg = Segment(np.array([0.0, 0.0]), np.array([0.3, 0.4]))
print("segment of length 0.5:", crofton_length(seg))

# The density f = 1 gives back the Euclidean norm; f = 1 + p^2/2 a projective non-Euclidean one.
v = np.array([0.6, 0.8])
for density in ("one", "quadratic"):
    B = BusemannMetric(density)
    print(f"Busemann '{density}': F(0, v) = {float(B.norm(np.zeros(2), v)):.8f}, "
          f"F((0.5, 0), v) = {float(B.norm(np.array([0.5, 0.0]), v)):.8f}")
