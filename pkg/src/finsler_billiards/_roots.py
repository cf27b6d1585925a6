"""Vectorized bracketing root solver.

Alternates false-position and bisection steps, so the bracket at least
halves every two iterations while smooth roots converge superlinearly.
Elements that have converged are frozen, which keeps every element's
result independent of the others in the batch.
"""

import numpy as np

from .errors import NoTransversalSolution


def bracketed_root(f, lo, hi, xtol=1e-14, maxiter=200):
    """Solve ``f(x, idx) = 0`` elementwise on brackets ``[lo, hi]``.

    ``f`` receives the candidate abscissae and the integer indices of the
    elements they belong to, so per-element parameters can be looked up.
    Raises NoTransversalSolution if some bracket has no sign change.
    """
    lo = np.array(lo, dtype=float, ndmin=1)
    hi = np.array(hi, dtype=float, ndmin=1)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    idx_all = np.arange(lo.size)
    flo = np.asarray(f(lo, idx_all), dtype=float)
    fhi = np.asarray(f(hi, idx_all), dtype=float)
    if np.any(np.sign(flo) * np.sign(fhi) > 0):
        raise NoTransversalSolution("root not bracketed")

    active = (np.abs(hi - lo) > xtol) & (flo != 0) & (fhi != 0)
    for it in range(maxiter):
        if not active.any():
            break
        i = idx_all[active]
        a, b, fa, fb = lo[i], hi[i], flo[i], fhi[i]
        if it % 2 == 0:
            x = a - fa * (b - a) / (fb - fa)
            w = b - a
            x = np.clip(x, np.minimum(a, b) + 1e-3 * np.abs(w),
                        np.maximum(a, b) - 1e-3 * np.abs(w))
        else:
            x = 0.5 * (a + b)
        fx = np.asarray(f(x, i), dtype=float)
        same_as_lo = np.sign(fx) == np.sign(fa)
        lo[i] = np.where(same_as_lo, x, a)
        flo[i] = np.where(same_as_lo, fx, fa)
        hi[i] = np.where(same_as_lo, b, x)
        fhi[i] = np.where(same_as_lo, fb, fx)
        done = (np.abs(hi[i] - lo[i]) <= xtol) | (fx == 0)
        active[i[done]] = False

    return np.where(np.abs(flo) <= np.abs(fhi), lo, hi)
