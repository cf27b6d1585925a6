"""The cylinder of oriented lines.

A closed curve in (alpha, p) coordinates is stored as a :class:`DualCurve`
sampled uniformly in a cyclic parameter ``s``.  Lifting it to the cone
``Gamma(s) = (cos alpha, sin alpha, p)`` turns the sine-curve "lines" into
planes through the origin, so second-order contact with a "line" is a zero of
``det[Gamma, Gamma', Gamma'']``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ._roots import bracketed_root
from .errors import DegenerateCurve
from .geom2d import TWO_PI, Oval, Segment, line_p, wrap_pi

DEGENERATE_REL = 1e-9
DEGENERATE_FRACTION = 0.10
NONGENERIC_REL = 1e-6
SPECTRAL_FLOOR = 1e-13


def dual_of_point(A):
    """The "line" of all oriented lines through ``A``: ``alpha -> p``."""
    a, b = float(A[0]), float(A[1])

    def p_of_alpha(alpha):
        return a * np.sin(alpha) - b * np.cos(alpha)

    return p_of_alpha


class TrigInterpolant:
    """Trigonometric interpolant of uniformly sampled periodic data.

    Fourier modes below ``floor * max|mode|`` are discarded so that rounding
    noise is not amplified by differentiation.
    """

    def __init__(self, values, period=TWO_PI, s0=0.0, floor=SPECTRAL_FLOOR):
        values = np.asarray(values, dtype=float)
        self.m = values.size
        self.period = float(period)
        self.s0 = float(s0)
        coef = np.fft.rfft(values) / self.m
        weights = np.full(coef.size, 2.0)
        weights[0] = 1.0
        if self.m % 2 == 0:
            weights[-1] = 1.0
        coef = coef * weights
        mag = np.abs(coef)
        keep = mag > floor * max(mag.max(), 1e-300)
        self.bandwidth = int(np.flatnonzero(keep).max()) if keep.any() else 0
        coef[self.bandwidth + 1:] = 0.0
        if self.m % 2 == 0 and self.bandwidth == coef.size - 1:
            # Nyquist mode has no well-defined derivative
            coef[-1] = 0.0
        self.coef = coef
        self.omega = TWO_PI / self.period

    @property
    def resolved(self) -> bool:
        """True when the retained spectrum ends well below the Nyquist mode."""
        return self.bandwidth < 0.4 * (self.m // 2)

    def on_grid(self, deriv=0):
        k = np.arange(self.coef.size)
        spec = self.coef * (1j * k * self.omega) ** deriv
        w = np.full(spec.size, 2.0)
        w[0] = 1.0
        if self.m % 2 == 0:
            w[-1] = 1.0
        return np.fft.irfft(spec / w * self.m, n=self.m)

    def __call__(self, s, deriv=0):
        s = np.asarray(s, dtype=float)
        k = np.arange(self.bandwidth + 1)
        phase = np.exp(1j * self.omega * np.multiply.outer(s - self.s0, k))
        spec = self.coef[: self.bandwidth + 1] * (1j * k * self.omega) ** deriv
        return np.real(phase @ spec)


@dataclass
class DualCurve:
    """Closed curve of oriented lines sampled at ``s_i = s0 + i * period / m``.

    ``alpha`` is the continuous (unwrapped) lift of the direction angle.
    """

    s: np.ndarray
    alpha: np.ndarray
    p: np.ndarray
    period: float = TWO_PI
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if not (self.s.shape == self.alpha.shape == self.p.shape):
            raise ValueError("s, alpha and p must have equal length")

    @classmethod
    def from_graph(cls, p_of_alpha, m=2048, offset=0.0):
        s = offset + TWO_PI * np.arange(m) / m
        return cls(s, s.copy(), np.asarray(p_of_alpha(s), dtype=float))

    @classmethod
    def from_lines(cls, s, alpha, p, period=TWO_PI):
        """Build from wrapped angles; the lift is made continuous."""
        return cls(np.asarray(s, float), np.unwrap(np.asarray(alpha, float)), p, period)

    def __len__(self):
        return self.s.size

    @property
    def step(self) -> float:
        return self.period / self.s.size

    @property
    def winding(self) -> int:
        return winding(self)

    def _interp(self, name):
        if name not in self._cache:
            if name == "alpha":
                w = winding(self)
                lin = w * TWO_PI * (self.s - self.s[0]) / self.period
                self._cache[name] = (TrigInterpolant(self.alpha - lin, self.period, self.s[0]), w)
            else:
                self._cache[name] = TrigInterpolant(self.p, self.period, self.s[0])
        return self._cache[name]

    def alpha_derivs(self, s=None):
        """``alpha, alpha', alpha''`` at the samples (or at ``s``)."""
        interp, w = self._interp("alpha")
        rate = w * TWO_PI / self.period
        if s is None:
            base = self.alpha
            return base, interp.on_grid(1) + rate, interp.on_grid(2)
        s = np.asarray(s, float)
        return interp(s) + rate * (s - self.s[0]), interp(s, 1) + rate, interp(s, 2)

    def p_derivs(self, s=None):
        interp = self._interp("p")
        if s is None:
            return self.p, interp.on_grid(1), interp.on_grid(2)
        return interp(s), interp(s, 1), interp(s, 2)

    @property
    def resolved(self) -> bool:
        return self._interp("alpha")[0].resolved and self._interp("p").resolved

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["s", "alpha", "p"])
            for row in zip(self.s, self.alpha, self.p):
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def read_csv(cls, path, period=TWO_PI):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], data[:, 2], period)


class ConeCurve:
    """Lift ``Gamma(s) = (cos alpha, sin alpha, p)`` with derivatives in ``s``."""

    def __init__(self, curve: DualCurve):
        self.curve = curve

    def frames(self, s=None):
        a, a1, a2 = self.curve.alpha_derivs(s)
        p, p1, p2 = self.curve.p_derivs(s)
        c, sn = np.cos(a), np.sin(a)
        g0 = np.stack([c, sn, p], axis=-1)
        g1 = np.stack([-sn * a1, c * a1, p1], axis=-1)
        g2 = np.stack([-c * a1**2 - sn * a2, -sn * a1**2 + c * a2, p2], axis=-1)
        return g0, g1, g2

    def determinant(self, s=None):
        g0, g1, g2 = self.frames(s)
        return np.einsum("...i,...i->...", g0, np.cross(g1, g2))

    def scale(self):
        g0, g1, g2 = self.frames()
        norms = [np.linalg.norm(g, axis=-1) for g in (g0, g1, g2)]
        return float(np.median(norms[0] * norms[1] * norms[2]))


@dataclass(frozen=True)
class Inflections:
    params: np.ndarray
    nongeneric: np.ndarray

    @property
    def count(self) -> int:
        return int(self.params.size)


def _sign_change_brackets(values):
    """Indices i with a sign change between samples i and i+1 (cyclic).

    Exact zeros on the grid are nudged positive so each crossing counts once.
    """
    values = np.where(values == 0, np.finfo(float).tiny, values)
    nxt = np.roll(values, -1)
    return np.flatnonzero(np.sign(values) * np.sign(nxt) < 0)


def _refine_zeros(curve: DualCurve, func, idx):
    if idx.size == 0:
        return np.empty(0)
    lo = curve.s[idx]
    hi = lo + curve.step
    # a zero sitting on a sample may fall just outside its one-step bracket
    # once evaluated off-grid; widen such brackets by a step to the left
    flo, fhi = func(lo), func(hi)
    loose = np.sign(flo) * np.sign(fhi) > 0
    lo = np.where(loose, lo - curve.step, lo)
    flo = np.where(loose, func(lo), flo)
    loose = np.sign(flo) * np.sign(fhi) > 0
    roots = np.where(np.abs(flo) <= np.abs(fhi), lo, hi)
    if (~loose).any():
        k = np.flatnonzero(~loose)
        roots[k] = bracketed_root(lambda x, i: func(x), lo[k], hi[k], xtol=1e-12)
    s0 = curve.s[0]
    return np.sort(s0 + np.mod(roots - s0, curve.period))


def _linear_zeros(curve: DualCurve, values, idx):
    """Zeros located by linear interpolation between samples (cheap preview)."""
    if idx.size == 0:
        return np.empty(0)
    a, b = values[idx], values[(idx + 1) % values.size]
    frac = np.where(a == b, 0.5, a / np.where(a == b, 1.0, a - b))
    roots = curve.s[idx] + np.clip(frac, 0.0, 1.0) * curve.step
    s0 = curve.s[0]
    return np.sort(s0 + np.mod(roots - s0, curve.period))


def inflections(curve: DualCurve, refine=True) -> Inflections:
    """Transversal zeros of ``det[Gamma, Gamma', Gamma'']``.

    Raises DegenerateCurve when the determinant vanishes (relative to the
    curve's own scale) on more than 10% of the samples.  With
    ``refine=False`` zeros are only interpolated linearly between samples.
    """
    cone = ConeCurve(curve)
    D = cone.determinant()
    scale = max(float(np.max(np.abs(D))), cone.scale())
    tiny = np.abs(D) < DEGENERATE_REL * scale
    if np.mean(tiny) > DEGENERATE_FRACTION:
        raise DegenerateCurve(
            f"determinant negligible on {100 * np.mean(tiny):.1f}% of samples")

    idx = _sign_change_brackets(D)
    if refine:
        params = _refine_zeros(curve, lambda x: cone.determinant(x), idx)
    else:
        params = _linear_zeros(curve, D, idx)

    absD = np.abs(D)
    local_min = (absD <= np.roll(absD, 1)) & (absD <= np.roll(absD, -1))
    near_zero = absD < NONGENERIC_REL * scale
    touching = local_min & near_zero
    touching &= ~np.isin(np.arange(D.size), np.concatenate([idx, (idx + 1) % D.size]))
    return Inflections(params, curve.s[touching])


def winding(curve: DualCurve) -> int:
    """Number of turns of the direction angle around the cylinder."""
    a = curve.alpha
    closing = float(wrap_pi(a[0] - a[-1]))
    total = (a[-1] - a[0]) + closing
    return int(np.rint(total / TWO_PI))


def line_gap(curve: DualCurve, A, s=None):
    """``p(s)`` minus the "line" of ``A`` evaluated along the curve."""
    if s is None:
        return curve.p - line_p(np.asarray(A, float), curve.alpha)
    a, _, _ = curve.alpha_derivs(s)
    p, _, _ = curve.p_derivs(s)
    return p - line_p(np.asarray(A, float), a)


def meets_all_lines(curve: DualCurve, probes, zero_tol=1e-10):
    """For each probe point, whether the curve meets the probe's "line"."""
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    g = curve.p[None, :] - (probes[:, :1] * np.sin(curve.alpha) - probes[:, 1:] * np.cos(curve.alpha))
    change = (np.sign(g) * np.sign(np.roll(g, -1, axis=1)) < 0).any(axis=1)
    touch = (np.abs(g) < zero_tol).any(axis=1)
    return change | touch


def line_crossings(curve: DualCurve, A):
    """Parameters where the curve crosses the "line" of ``A``."""
    g = line_gap(curve, A)
    idx = _sign_change_brackets(g)
    return _refine_zeros(curve, lambda x: line_gap(curve, A, x), idx)


def crofton_length(curve, density=None, n_alpha=1024, n_p=1024):
    """Quarter of the ``density``-weighted measure of lines meeting ``curve``.

    ``curve`` is an :class:`Oval` or a :class:`Segment`; ``density`` is a
    vectorized ``f(alpha, p)`` (``None`` means 1).  Midpoint rule in both
    coordinates.
    """
    if not isinstance(curve, (Oval, Segment)):
        raise TypeError("crofton_length needs an Oval or a Segment")
    alpha = (np.arange(n_alpha) + 0.5) * TWO_PI / n_alpha
    upper = curve.support(alpha - 0.5 * np.pi)
    lower = -curve.support(alpha + 0.5 * np.pi)
    p_lo, p_hi = float(np.min(lower)), float(np.max(upper))
    dp = (p_hi - p_lo) / n_p
    p = p_lo + (np.arange(n_p) + 0.5) * dp
    total = 0.0
    for k in range(0, n_alpha, 128):
        a = alpha[k:k + 128, None]
        counts = curve.crossings(a, p[None, :])
        weight = counts if density is None else counts * density(a, p[None, :])
        total += float(np.sum(weight))
    return 0.25 * total * dp * (TWO_PI / n_alpha)
