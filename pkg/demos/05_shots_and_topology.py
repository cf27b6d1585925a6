"""
Shooting from O to A with n reflections
=======================================

A billiard trajectory from O to A with n bounces is a critical point of the
total length of the broken line O x_1 ... x_n A, with x_i on the boundary.
The configuration space is an n-torus with the consecutive diagonals removed.
For the disc, that space deformation retracts to a circle, so topology only
forces two critical points.  This script counts the shots and checks them
against a dense-grid scan of the gradient's winding.

Run:  python3 demos/05_shots_and_topology.py
"""

import numpy as np

from finsler_billiards.billiard import BilliardTable, n_bounce_shots, shot_gradient, shot_length
from finsler_billiards.geom2d import CircleOval, direction, wrap_pi
from finsler_billiards.metrics import EuclideanMetric, MinkowskiMetric

table = BilliardTable(CircleOval(1.0), EuclideanMetric())


def scan_indices(O, A, N=400):
    """Indices of the zeros of the length gradient on an N x N grid (n = 2)."""
    g = 2 * np.pi * np.arange(N) / N + 1e-3
    T1, T2 = np.meshgrid(g, g, indexing="ij")
    with np.errstate(invalid="ignore"):
        G = shot_gradient(table, O, A, np.stack([T1.ravel(), T2.ravel()], 1)).reshape(N, N, 2)
    ang = np.arctan2(G[..., 1], G[..., 0])
    b = np.roll(ang, -1, 0)
    c = np.roll(b, -1, 1)
    e = np.roll(ang, -1, 1)
    w = np.rint((wrap_pi(b - ang) + wrap_pi(c - b) + wrap_pi(e - c) + wrap_pi(ang - e)) / (2 * np.pi))
    I, J = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    w[np.abs(((I - J + N // 2) % N) - N // 2) <= 2] = 0
    return sorted(w[w != 0].astype(int).tolist())


rng = np.random.default_rng(0)
tally = {n: [] for n in (1, 2, 3)}
for k in range(10):
    r = 0.8 * np.sqrt(rng.uniform(size=2))
    th = rng.uniform(0, 2 * np.pi, 2)
    O, A = r[0] * direction(th[0]), r[1] * direction(th[1])
    counts = [len(n_bounce_shots(table, O, A, n)) for n in (1, 2, 3)]
    for n, c in zip((1, 2, 3), counts):
        tally[n].append(c)
    print(f"pair {k}: shots for n = 1, 2, 3: {counts}   scan indices (n = 2): {scan_indices(O, A)}")

for n in (1, 2, 3):
    below = sum(c < n + 1 for c in tally[n])
    print(f"n = {n}: counts {tally[n]}, {below} of 10 pairs below n + 1 = {n + 1}")

# Shots in a Minkowski table: the length is asymmetric, so O -> A and A -> O differ.
skew = BilliardTable(CircleOval(1.0), MinkowskiMetric([1.0, 0.2, 0.0]))
O, A = np.array([0.3, 0.0]), np.array([-0.2, 0.4])
for src, dst in ((O, A), (A, O)):
    shots = n_bounce_shots(skew, src, dst, 1)
    print("Minkowski lengths", src, "->", dst, [round(shot_length(skew, src, dst, s.params), 6)
                                                for s in shots])
