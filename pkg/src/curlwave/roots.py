"""Vectorized bracketed root finding for monotone functions.

Both solvers work element-wise on arrays of targets, so a whole batch of
inversions (one per quadrature node, one per grid point, ...) costs a handful
of numpy passes instead of a Python loop per element.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError


def newton_bisect(f, df, target, lo, hi, *, xtol=1e-15, dtol=1e-6, maxiter=200):
    """Solve ``f(x) = target`` for increasing ``f`` on ``[lo, hi]``.

    Safeguarded Newton: a Newton step is taken only when ``|df| > dtol`` and
    the step stays inside the current bracket, otherwise the bracket is
    bisected. ``f`` and ``df`` must accept and return arrays.
    """
    target, lo, hi = np.broadcast_arrays(
        np.asarray(target, float), np.asarray(lo, float), np.asarray(hi, float)
    )
    lo = lo.copy()
    hi = hi.copy()
    flo = f(lo) - target
    fhi = f(hi) - target
    slack = 1e-12 * (1.0 + np.abs(target))
    if np.any(flo > slack) or np.any(fhi < -slack):
        raise DomainError("target outside the bracket image")
    # targets at (or within rounding of) an end of the image
    at_lo = flo >= 0
    at_hi = ~at_lo & (fhi <= 0)
    x = np.where(at_lo, lo, np.where(at_hi, hi, 0.5 * (lo + hi)))
    done = at_lo | at_hi
    for _ in range(maxiter):
        fx = f(x) - target
        below = fx < 0
        lo = np.where(below, x, lo)
        hi = np.where(below, hi, x)
        d = df(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - fx / d
        ok = (np.abs(d) > dtol) & (xn > lo) & (xn < hi) & np.isfinite(xn)
        xn = np.where(ok, xn, 0.5 * (lo + hi))
        step = np.abs(xn - x)
        done = done | (fx == 0) | (step <= xtol * (1.0 + np.abs(x))) | (hi - lo <= xtol * (1.0 + np.abs(x)))
        x = np.where(done, x, xn)
        if done.all():
            break
    return x


def illinois(f, target, lo, hi, *, increasing=True, xtol=1e-15, ftol=0.0, maxiter=200):
    """Modified regula falsi with a bisection fallback, element-wise.

    ``f`` maps an array of abscissae to an array of values; the bracket must
    contain the root. Returns the abscissae with ``|f - target| <= ftol`` or a
    bracket narrower than ``xtol`` (relative).
    """
    target, a, b = np.broadcast_arrays(
        np.asarray(target, float), np.asarray(lo, float), np.asarray(hi, float)
    )
    a = a.copy()
    b = b.copy()
    sgn = 1.0 if increasing else -1.0
    fa = sgn * (f(a) - target)
    fb = sgn * (f(b) - target)
    if np.any(fa > 0) or np.any(fb < 0):
        raise DomainError("target outside the bracket image")
    x = np.where(fa == 0, a, b)
    done = (fa == 0) | (fb == 0)
    side = np.zeros(a.shape, int)
    for it in range(maxiter):
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = b - fb * (b - a) / (fb - fa)
        bad = ~np.isfinite(xs) | (xs <= np.minimum(a, b)) | (xs >= np.maximum(a, b))
        # every fourth pass is a plain bisection so slow sides cannot stall
        if it % 4 == 3:
            bad[:] = True
        xs = np.where(bad, 0.5 * (a + b), xs)
        xs = np.where(done, x, xs)
        fx = sgn * (f(xs) - target)
        x = xs
        left = fx < 0
        # Illinois halving of the retained endpoint value
        fb_new = np.where(left, fb, fx)
        fa_new = np.where(left, fx, fa)
        fb_new = np.where(left & (side == -1), 0.5 * fb_new, fb_new)
        fa_new = np.where(~left & (side == 1), 0.5 * fa_new, fa_new)
        a = np.where(left, xs, a)
        b = np.where(left, b, xs)
        side = np.where(left, -1, 1)
        fa, fb = fa_new, fb_new
        width = np.abs(b - a)
        done = done | (np.abs(fx) <= ftol) | (width <= xtol * (1.0 + np.abs(x)))
        if done.all():
            break
    return x
