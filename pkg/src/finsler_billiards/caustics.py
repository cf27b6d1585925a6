"""Caustics by reflection from a point source and their cusps.

The pencil of rays from ``O`` is pushed through ``n`` reflections; the final
lines form a closed curve ``C_n`` on the line cylinder parametrized by the
initial direction.  Its envelope is the caustic, and the cusps are the
spherical inflections of the cone lift of ``C_n``.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .billiard import BilliardTable, n_bounce_shots, propagate, propagate_pencil
from .errors import DegenerateCurve, DegenerateEnvelope, PencilBroken
from .geom2d import TWO_PI, direction, normal, wrap_pi
from .linespace import ConeCurve, DualCurve, inflections, line_crossings, meets_all_lines

CHUNK = 512
MAX_FAILED_FRACTION = 0.01
ALPHA_DOT_MIN = 1e-6
ENVELOPE_COLLAPSE = 1e-6
MAX_SAMPLES = 65536


@dataclass(frozen=True)
class Pencil:
    """Rays from ``O`` in the directions ``offset + 2 pi j / m``."""

    O: tuple
    m: int = 4096
    offset: float = 0.0
    n: int = 1

    def __post_init__(self):
        object.__setattr__(self, "O", tuple(float(c) for c in self.O))
        if self.m < 512:
            raise ValueError("a pencil needs at least 512 directions")
        if self.n < 0:
            raise ValueError("bounce count must be non-negative")

    @property
    def phis(self) -> np.ndarray:
        return self.offset + TWO_PI * np.arange(self.m) / self.m

    def with_samples(self, m) -> Pencil:
        return Pencil(self.O, m, self.offset, self.n)


def _propagate_chunk(args):
    table, O, phis, n = args
    return propagate_pencil(table, O, phis, n)


def _propagate_all(table, O, phis, n, workers=1):
    """Propagate in fixed chunks; the worker count never changes the numbers."""
    chunks = [(table, O, phis[k:k + CHUNK], n) for k in range(0, phis.size, CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_propagate_chunk, chunks))
    else:
        parts = [_propagate_chunk(c) for c in chunks]
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def dual_curve(table: BilliardTable, pencil: Pencil, workers=1) -> DualCurve:
    """The closed curve ``C_n`` of final lines, parametrized by the initial direction.

    A pencil with failed rays (grazing chords) is re-sampled with the offset
    shifted by fractions of a step; more than 1% failures, or failures that
    survive re-sampling, raise PencilBroken.
    """
    O = np.asarray(pencil.O, dtype=float)
    if not table.contains(O):
        raise ValueError("source must lie strictly inside the table")
    step = TWO_PI / pencil.m
    for shift in (0.0, 0.5, 0.25, 0.75):
        phis = pencil.phis + shift * step
        alpha, p, ok = _propagate_all(table, O, phis, pencil.n, workers)
        failed = np.count_nonzero(~ok)
        if failed > MAX_FAILED_FRACTION * pencil.m:
            raise PencilBroken(f"{failed} of {pencil.m} rays failed")
        if failed == 0:
            return DualCurve.from_lines(phis, alpha, p)
    raise PencilBroken("grazing rays persist after re-sampling the pencil")


def _line_intersection(a1, p1, a2, p2):
    n1, n2 = normal(a1), normal(a2)
    det = n1[..., 0] * n2[..., 1] - n1[..., 1] * n2[..., 0]
    x = (p1 * n2[..., 1] - p2 * n1[..., 1]) / det
    y = (n1[..., 0] * p2 - n2[..., 0] * p1) / det
    return np.stack([x, y], axis=-1)


def envelope_points(C: DualCurve) -> np.ndarray:
    """Envelope ``E = p n(alpha) + (p'/alpha') d(alpha)`` at every sample.

    Where ``|alpha'| < 1e-6`` the neighbouring sampled lines are intersected
    instead.
    """
    alpha, a1, _ = C.alpha_derivs()
    p, p1, _ = C.p_derivs()
    slow = np.abs(a1) < ALPHA_DOT_MIN
    ratio = p1 / np.where(slow, 1.0, a1)
    E = p[:, None] * normal(alpha) + ratio[:, None] * direction(alpha)
    if slow.any():
        j = np.flatnonzero(slow)
        lo, hi = (j - 1) % alpha.size, (j + 1) % alpha.size
        E[j] = _line_intersection(alpha[lo], p[lo], alpha[hi], p[hi])
    return E


def _diameter(points) -> float:
    pts = np.asarray(points, dtype=float)
    pts = pts[np.isfinite(pts).all(axis=1)]
    if pts.shape[0] < 2:
        return 0.0
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    return float(np.hypot(*(hi - lo)))


def envelope(C: DualCurve, scale=1.0) -> np.ndarray:
    """Envelope polyline; DegenerateEnvelope when it collapses relative to ``scale``."""
    E = envelope_points(C)
    if _diameter(E) < ENVELOPE_COLLAPSE * scale:
        raise DegenerateEnvelope(f"envelope diameter {_diameter(E):.3g} (scale {scale:.3g})")
    return E


def envelope_reversals(C: DualCurve, E=None) -> int:
    """Sign changes of the envelope velocity along the line direction.

    ``E'(s)`` is parallel to ``d(alpha(s))``; its signed length changes sign at
    every cusp.  Counted on the polyline as an independent check.
    """
    E = envelope_points(C) if E is None else E
    dE = np.roll(E, -1, axis=0) - E
    mid = C.alpha + 0.5 * np.diff(np.append(C.alpha, C.alpha[0] + TWO_PI * C.winding))
    sigma = np.einsum("ij,ij->i", dE, direction(mid))
    finite = np.isfinite(sigma)
    sigma = sigma[finite]
    big = np.abs(sigma) > 1e3 * np.median(np.abs(sigma))
    sigma = sigma[~big]
    sgn = np.sign(sigma[sigma != 0])
    return int(np.count_nonzero(sgn != np.roll(sgn, -1)))


def cusp_count(C: DualCurve):
    """``(count, parameters)`` of cusps: transversal zeros of ``det[G, G', G'']``."""
    infl = inflections(C)
    return infl.count, infl.params


@dataclass
class SegreResult:
    ok: bool
    probes: np.ndarray
    meets: np.ndarray
    interior: np.ndarray
    witnesses: list = field(default_factory=list)
    witnesses_ok: bool = True

    @property
    def failures(self) -> int:
        return int(np.count_nonzero(~self.meets))


def probe_grid(table: BilliardTable, size=20, reach=1.5) -> np.ndarray:
    """``size x size`` grid over the square of half-width ``reach * diameter`` around the table."""
    c = np.asarray(table.boundary.center, dtype=float)
    half = reach * table.boundary.diameter()
    g = np.linspace(-half, half, size)
    X, Y = np.meshgrid(g, g, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1) + c


def segre_check(C: DualCurve, table: BilliardTable, O, n, probes=None, verify_witnesses=True):
    """Every probe's "line" meets ``C``; interior witnesses are checked as real shots.

    For an interior probe ``A`` each crossing ``s*`` of ``C`` with the "line"
    of ``A`` is an initial direction whose ``n``-th line passes through ``A``.
    Its bounce points seed :func:`n_bounce_shots`, which must confirm a shot.
    """
    probes = probe_grid(table) if probes is None else np.atleast_2d(np.asarray(probes, float))
    meets = meets_all_lines(C, probes)
    interior = np.array([table.contains(A) for A in probes])
    witnesses = []
    witnesses_ok = True
    if verify_witnesses and n >= 1:
        for A in probes[interior]:
            for s in line_crossings(C, A):
                traj = propagate(table, O, float(s), n)
                shots = n_bounce_shots(table, O, A, n, seeds=traj.params[None])
                good = len(shots) > 0
                witnesses.append((tuple(map(float, A)), float(s), good))
                witnesses_ok &= good
    return SegreResult(bool(meets.all() and witnesses_ok), probes, meets, interior,
                       witnesses, bool(witnesses_ok))


@dataclass
class CausticReport:
    n: int
    m: int
    cusp_params: np.ndarray
    cusp_count: int
    winding: int
    segre_ok: bool
    degenerate: bool
    envelope: np.ndarray
    curve: DualCurve = field(repr=False)
    reversal_count: int = 0
    nongeneric: np.ndarray = field(default_factory=lambda: np.empty(0))
    oriented_lines: int = 0
    unoriented_lines: int = 0
    segre: SegreResult | None = field(default=None, repr=False)

    @property
    def crosscheck_ok(self) -> bool:
        return self.degenerate or self.reversal_count == self.cusp_count

    @property
    def theorem_holds(self) -> bool:
        return self.degenerate or (self.cusp_count >= 4 and self.cusp_count % 2 == 0
                                   and self.winding == 1 and self.segre_ok)

    def cusps(self):
        out = []
        if self.cusp_params.size == 0:
            return out
        a, _, _ = self.curve.alpha_derivs(self.cusp_params)
        p, _, _ = self.curve.p_derivs(self.cusp_params)
        pts = _envelope_at(self.curve, self.cusp_params)
        for s, al, pp, xy in zip(self.cusp_params, a, p, pts):
            out.append({"s": float(s), "alpha": float(np.mod(al, TWO_PI)), "p": float(pp),
                        "x": float(xy[0]), "y": float(xy[1])})
        return out

    def to_dict(self, envelope_csv=None, **extra):
        d = {"n": self.n, "cusp_count": self.cusp_count, "winding": self.winding,
             "segre_ok": self.segre_ok, "degenerate": self.degenerate,
             "cusps": self.cusps(), "envelope_csv": envelope_csv,
             "samples": self.m, "envelope_reversals": self.reversal_count,
             "nongeneric": [float(s) for s in self.nongeneric],
             "oriented_lines_through_source": self.oriented_lines,
             "unoriented_lines_through_source": self.unoriented_lines}
        d.update(extra)
        return d

    def to_json(self, path=None, envelope_csv=None, **extra) -> str:
        text = json.dumps(self.to_dict(envelope_csv, **extra), indent=2, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def envelope_to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("s,x,y\n")
            for s, (x, y) in zip(self.curve.s, self.envelope):
                fh.write(f"{float(s)!r},{float(x)!r},{float(y)!r}\n")


def _envelope_at(C: DualCurve, s):
    a, a1, _ = C.alpha_derivs(s)
    p, p1, _ = C.p_derivs(s)
    return p[:, None] * normal(a) + (p1 / a1)[:, None] * direction(a)


def _distinct(values, period, tol=1e-9) -> int:
    v = np.sort(np.mod(values, period))
    if v.size <= 1:
        return int(v.size)
    gaps = np.diff(np.append(v, v[0] + period))
    return int(np.count_nonzero(gaps > tol))


def _stable(previous, params, C: DualCurve, tol=1e-4) -> bool:
    if previous.size != params.size or params.size == 0:
        return False
    if np.max(np.abs(wrap_pi(previous - params))) > tol:
        return False
    if params.size >= 2:
        gaps = np.diff(np.append(params, params[0] + C.period))
        return bool(gaps.min() >= 4 * C.step)
    return True


def _needs_refinement(C: DualCurve, params) -> bool:
    if not C.resolved:
        return True
    if params.size >= 2:
        gaps = np.diff(np.append(params, params[0] + C.period))
        if gaps.min() < 4 * C.step:
            return True
    return False


def four_cusp_verify(table: BilliardTable, O, n, m=4096, offset=0.0, probes=None,
                     workers=1, segre=True, verify_witnesses=True) -> CausticReport:
    """Caustic, cusps and Segre hypotheses for the pencil from ``O`` after ``n`` reflections.

    The sample count is doubled (up to 65536) while the spectral fit is
    unresolved or two cusps are closer than four samples, unless two
    consecutive sample counts already agree on the cusps (same count,
    parameters within 1e-4).  Degenerate caustics give a report with
    ``degenerate=True`` instead of an error.
    """
    scale = table.boundary.diameter()
    previous = None
    while True:
        pencil = Pencil(tuple(O), m, offset, n)
        C = dual_curve(table, pencil, workers)
        E = envelope_points(C)
        try:
            infl = inflections(C, refine=False)
            degenerate = False
        except DegenerateCurve:
            infl = None
            degenerate = True
        if _diameter(E) < ENVELOPE_COLLAPSE * scale:
            degenerate = True
        if degenerate or m >= MAX_SAMPLES or not _needs_refinement(C, infl.params):
            break
        if previous is not None and _stable(previous, infl.params, C):
            break
        previous = infl.params
        m *= 2

    if not degenerate:
        infl = inflections(C)
    params = np.empty(0) if degenerate else infl.params
    nongeneric = np.empty(0) if degenerate else infl.nongeneric
    seg = segre_check(C, table, O, n, probes, verify_witnesses) if segre else None
    return CausticReport(
        n=n, m=m, cusp_params=params, cusp_count=int(params.size), winding=C.winding,
        segre_ok=bool(seg.ok) if seg is not None else False, degenerate=degenerate,
        envelope=E, curve=C,
        reversal_count=0 if degenerate else envelope_reversals(C, E),
        nongeneric=nongeneric,
        oriented_lines=_distinct(params, TWO_PI), unoriented_lines=_distinct(params, np.pi),
        segre=seg)


def cusp_speed_dips(C: DualCurve, params, rel=1e-3) -> np.ndarray:
    """For each cusp parameter, whether ``|E'|`` there is below ``rel`` of its median."""
    a, a1, _ = C.alpha_derivs()
    D = ConeCurve(C).determinant()
    speed = np.abs(D) / a1**2
    med = float(np.median(speed))
    a_s, a1_s, _ = C.alpha_derivs(params)
    D_s = ConeCurve(C).determinant(params)
    return np.abs(D_s) / a1_s**2 < rel * med
