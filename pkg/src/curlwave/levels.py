"""Level sets of the first integrals, parametrized for quadrature.

Each bounded orbit is a union of monotone branches between turning points.
On a branch the "potential" part E of the first integral (``k`` for the rogue
equation, ``W`` for the plus/minus equations) runs from its minimum to the
level value, and we parametrize it by an angle::

    E(y(theta)) = E_min + level * sin(theta)**2,   theta in [0, pi/2].

With this substitution the time element ``dy / sqrt(level - E)`` becomes
``2 * w(theta) dtheta`` where ``w = sqrt(E - E_min) / |E'|`` is bounded and
smooth, including at the centre (double zero of ``E - E_min``) and at the
turning point. The functions below compute ``y(theta)`` and ``w(theta)``
without cancellation:

* near the centre ``y = 1 + h`` of the rogue equation we invert
  ``m(h) = h * sqrt(kappa(h))`` with ``kappa(h) = k(1 + h) / h**2``
  (series for small ``|h|``),
* away from it (the lower branch, which reaches down towards the saddle at 0)
  we invert ``n(y) = sqrt(k(0) - k(y))`` whose target
  ``k(0) cos^2 + |c| sin^2`` has no cancellation even when ``c`` is tiny,
* for the plus/minus equations ``n(x) = x sqrt(1 +- 2 x^(p-1)/(p+1))``.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .roots import newton_bisect

SERIES_RADIUS = 0.05
_NTERMS = 40


def rogue_center_level(p):
    """First-integral value (1-p)/(1+p) of the centres (+-1, 0)."""
    return (1.0 - p) / (1.0 + p)


def rogue_top(p):
    """Turning point ((p+1)/2)^(1/(p-1)) of the positive homoclinic."""
    return ((p + 1.0) / 2.0) ** (1.0 / (p - 1.0))


def k_of_y(p, y):
    """k(y) = 1 - y^2 + 2/(p+1) (y^(p+1) - 1)."""
    y = np.asarray(y, float)
    h = y - 1.0
    with np.errstate(divide="ignore"):
        return -h * (2.0 + h) + (2.0 / (p + 1.0)) * np.expm1((p + 1.0) * np.log1p(h))


def dk_of_y(p, y):
    y = np.asarray(y, float)
    return 2.0 * (np.abs(y) ** p - y)


@lru_cache(maxsize=64)
def _binomials(a, n):
    out = np.empty(n)
    c = 1.0
    for j in range(n):
        out[j] = c
        c = c * (a - j) / (j + 1)
    return out


@lru_cache(maxsize=64)
def kappa_series(p):
    """Taylor coefficients of kappa(h) = k(1+h)/h^2 about h = 0."""
    b = _binomials(p + 1.0, _NTERMS + 3)
    coef = (2.0 / (p + 1.0)) * b[2:]  # h^0, h^1, ... from binom(p+1, n), n >= 2
    coef = coef.copy()
    coef[0] = p - 1.0
    return coef[:_NTERMS]


def kappa(p, h):
    h = np.asarray(h, float)
    small = np.abs(h) < SERIES_RADIUS
    hs = np.where(small, h, 0.0)
    series = np.polynomial.polynomial.polyval(hs, kappa_series(p))
    hd = np.where(small, 1.0, h)
    direct = k_of_y(p, 1.0 + hd) / (hd * hd)
    return np.where(small, series, direct)


def kp_over_h(p, h):
    """k'(1+h)/h = 2 (1+h) ((1+h)^(p-1) - 1) / h, finite at h = 0."""
    h = np.asarray(h, float)
    safe = np.where(h == 0.0, 1.0, h)
    with np.errstate(divide="ignore"):
        ratio = np.expm1((p - 1.0) * np.log1p(safe)) / safe
    ratio = np.where(h == 0.0, p - 1.0, ratio)
    return 2.0 * (1.0 + h) * ratio


def _m(p, h):
    return h * np.sqrt(kappa(p, h))


def _dm(p, h):
    return kp_over_h(p, h) / (2.0 * np.sqrt(kappa(p, h)))


def _n_rogue(p, y):
    return y * np.sqrt(1.0 - (2.0 / (p + 1.0)) * y ** (p - 1.0))


def _dn_rogue(p, y):
    yp = y ** (p - 1.0)
    return (1.0 - yp) / np.sqrt(1.0 - (2.0 / (p + 1.0)) * yp)


def _n_pm(sign, p, x):
    return x * np.sqrt(1.0 + sign * (2.0 / (p + 1.0)) * x ** (p - 1.0))


def _dn_pm(sign, p, x):
    xp = x ** (p - 1.0)
    return (1.0 + sign * xp) / np.sqrt(1.0 + sign * (2.0 / (p + 1.0)) * xp)


def _near_one_branch(p, level, below):
    """Solve k(1+h) = level on one side of the centre via m(h) = +-sqrt(level)."""
    t = np.sqrt(level)
    if below:
        h = newton_bisect(lambda x: _m(p, x), lambda x: _dm(p, x), -t,
                          np.full_like(t, -1.0), np.zeros_like(t))
    else:
        h = newton_bisect(lambda x: _m(p, x), lambda x: _dm(p, x), t,
                          np.zeros_like(t), np.full_like(t, rogue_top(p) - 1.0))
    return h


def rogue_branch(p, c, s2, upper, c2=None):
    """Point and weight on a branch of a small positive rogue orbit.

    ``c`` is the first-integral value in [(1-p)/(1+p), 0], ``s2`` is
    ``sin(theta)**2`` and ``c2`` (default ``1 - s2``) is ``cos(theta)**2``,
    passed separately when it is known more accurately; all broadcast.
    ``upper`` selects the branch through N_+(c) >= 1 (else the one through
    N_-(c) <= 1). Returns ``(y, w)`` with ``w = sqrt(k)/|k'|`` at ``y``.
    """
    c, s2 = np.broadcast_arrays(np.asarray(c, float), np.asarray(s2, float))
    c2 = 1.0 - s2 if c2 is None else np.broadcast_to(np.asarray(c2, float), s2.shape)
    k0 = (p - 1.0) / (p + 1.0)
    ct = np.maximum(c + k0, 0.0)
    level = ct * s2
    if upper:
        h = _near_one_branch(p, level, below=False)
        return 1.0 + h, np.sqrt(kappa(p, h)) / np.abs(kp_over_h(p, h))

    near = level <= 0.5 * k0
    y = np.empty_like(level)
    w = np.empty_like(level)
    if near.any():
        h = _near_one_branch(p, level[near], below=True)
        y[near] = 1.0 + h
        w[near] = np.sqrt(kappa(p, h)) / np.abs(kp_over_h(p, h))
    far = ~near
    if far.any():
        # k0 - k(y) = k0 cos^2 + |c| sin^2: no cancellation as c -> 0
        cc = np.minimum(c[far], 0.0)
        t = np.sqrt(k0 * c2[far] - cc * s2[far])
        yf = newton_bisect(lambda x: _n_rogue(p, x), lambda x: _dn_rogue(p, x), t,
                           np.zeros_like(t), np.ones_like(t))
        y[far] = yf
        with np.errstate(divide="ignore"):
            w[far] = np.sqrt(level[far]) / (2.0 * yf * (1.0 - yf ** (p - 1.0)))
    return y, w


def pm_branch(sign, p, c, s2, c2=None, delta=None):
    """Point and weight on the x >= 0 quarter of a plus (+1) / minus (-1) orbit.

    ``W(x) = x^2 + sign * 2/(p+1) x^(p+1)`` equals ``c * s2`` at the returned
    ``x``; ``w = sqrt(W)/W'``. For the minus equation ``W = k(0) - k(x)``, so
    near the maximum of W at x = 1 the centred inversion of ``k`` is used;
    ``delta = (p-1)/(p+1) - c`` may be passed when known more accurately than
    the difference of floats.
    """
    c, s2 = np.broadcast_arrays(np.asarray(c, float), np.asarray(s2, float))
    c = np.maximum(c, 0.0)
    target = np.sqrt(c * s2)
    if sign > 0:
        hi = np.sqrt(c) + 1e-300
        x = newton_bisect(lambda v: _n_pm(1.0, p, v), lambda v: _dn_pm(1.0, p, v), target,
                          np.zeros_like(target), hi)
        xp = x ** (p - 1.0)
        w = np.sqrt(1.0 + (2.0 / (p + 1.0)) * xp) / (2.0 * (1.0 + xp))
        return x, w

    c2 = 1.0 - s2 if c2 is None else np.broadcast_to(np.asarray(c2, float), s2.shape)
    k0 = (p - 1.0) / (p + 1.0)
    d = k0 - c if delta is None else np.broadcast_to(np.asarray(delta, float), s2.shape)
    level = d + c * c2  # k(x) on the level set
    near = level <= 0.5 * k0
    x = np.empty_like(level)
    w = np.empty_like(level)
    if near.any():
        h = _near_one_branch(p, level[near], below=True)
        x[near] = 1.0 + h
        w[near] = target[near] / (-h * kp_over_h(p, h))
    far = ~near
    if far.any():
        xf = newton_bisect(lambda v: _n_rogue(p, v), lambda v: _dn_rogue(p, v), target[far],
                           np.zeros_like(target[far]), np.ones_like(target[far]))
        x[far] = xf
        xp = xf ** (p - 1.0)
        w[far] = np.sqrt(1.0 - (2.0 / (p + 1.0)) * xp) / (2.0 * (1.0 - xp))
    return x, w
