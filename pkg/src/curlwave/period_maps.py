"""Period functions of the three reduced oscillators and their inverses.

For a level ``c`` of the first integral the minimal period is written as a
sum of integrals over monotone branches. With the angle parametrization of
:mod:`curlwave.levels` every branch contributes ``2 * int_0^{pi/2} w dtheta``
with a bounded, smooth ``w``, so plain Gauss-Kronrod quadrature applies and
the equilibrium limits come out of the same formula (``w`` is constant there).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import levels
from .errors import DomainError
from .phase_plane import OdeCase, Variant
from .quadrature import gk_batch
from .roots import illinois

HALF_PI = 0.5 * math.pi
EPSABS = 1e-14
EPSREL = 1e-13
_SNAP = 1e-12
# the direct formula for Phi cancels like h^4 near y = 1, so the series is
# used on a wider neighbourhood than for kappa
PHI_SERIES_RADIUS = 0.2
# inversion stops once the period matches to this relative level (quadrature noise)
_FTOL = 4e-16
# minus levels are parametrized as c = cmax / (1 + e^-u); beyond this u the
# float c equals cmax
_MINUS_UMAX = 36.0


def c_range(case: OdeCase):
    """Closed range of first-integral values carrying small periodic orbits."""
    p = case.p
    if case.variant is Variant.PLUS:
        return 0.0, math.inf
    if case.variant is Variant.MINUS:
        return 0.0, (p - 1.0) / (p + 1.0)
    return levels.rogue_center_level(p), 0.0


def period_limit(case: OdeCase):
    """Period at the equilibrium end of the range (linearized period)."""
    if case.variant is Variant.ROGUE:
        return 2.0 * math.pi / math.sqrt(case.p - 1.0)
    return 2.0 * math.pi


def _check_c(case, c):
    lo, hi = c_range(case)
    c = np.asarray(c, float)
    if np.any(~np.isfinite(c)) or np.any(c < lo) or np.any(c > hi):
        raise DomainError(f"c outside [{lo}, {hi}] for the {case.variant.value} equation")
    return c


def _integrate_theta(func, n, epsabs=EPSABS, epsrel=EPSREL):
    vals, _ = gk_batch(func, np.zeros(n), np.full(n, HALF_PI), epsabs=epsabs, epsrel=epsrel)
    return vals


def _peaked(func, eps, epsabs=EPSABS, epsrel=EPSREL):
    """Integrate ``func(s2, c2, idx)`` over theta in [0, pi/2] for a branch whose
    weight peaks at theta = pi/2 with width ``eps`` (an array, one per integral).

    With ``pi/2 - theta = eps sinh(v)`` a peak like 1/sqrt(eps^2 + phi^2) turns
    into a bounded smooth integrand.
    """
    eps = np.asarray(eps, float)
    vmax = np.arcsinh(HALF_PI / eps)

    def f(v, idx):
        e = eps[idx][:, None]
        phi = e * np.sinh(v)
        return func(np.cos(phi) ** 2, np.sin(phi) ** 2, idx) * e * np.cosh(v)

    vals, _ = gk_batch(f, np.zeros(eps.size), vmax, epsabs=epsabs, epsrel=epsrel)
    return vals


def _rogue_eps(p, c):
    k0 = (p - 1.0) / (p + 1.0)
    return np.minimum(np.sqrt(np.abs(c) / k0), 1.0)


def _rogue_period(p, c, epsrel):
    def upper(th, idx):
        return levels.rogue_branch(p, c[idx][:, None], np.sin(th) ** 2, True)[1]

    def lower(s2, c2, idx):
        return levels.rogue_branch(p, c[idx][:, None], s2, False, c2=c2)[1]

    return 4.0 * (_integrate_theta(upper, c.size, epsrel=epsrel)
                  + _peaked(lower, _rogue_eps(p, c), epsrel=epsrel))


def _minus_period(p, c, delta, epsrel):
    eps = np.minimum(np.sqrt(delta / np.maximum(c, 1e-300)), 1.0)

    def quarter(s2, c2, idx):
        return levels.pm_branch(-1.0, p, c[idx][:, None], s2, c2=c2,
                                delta=delta[idx][:, None])[1]

    return 8.0 * _peaked(quarter, eps, epsrel=epsrel)


def _plus_period(p, c, epsrel):
    def quarter(th, idx):
        return levels.pm_branch(1.0, p, c[idx][:, None], np.sin(th) ** 2)[1]

    return 8.0 * _integrate_theta(quarter, c.size, epsrel=epsrel)


def period(case: OdeCase, c, *, epsrel=EPSREL):
    """Minimal period L(c) of the small orbit on the level ``A = c``.

    Accepts scalars or arrays. The closed range is allowed: the equilibrium
    end returns the linearized period, the homoclinic/heteroclinic end returns
    ``inf``. Plus: ``c >= 0``; minus: ``0 <= c <= (p-1)/(p+1)``; rogue:
    ``(1-p)/(1+p) <= c <= 0`` (the positive orbits inside the homoclinic).
    """
    scalar = np.ndim(c) == 0
    c = np.atleast_1d(_check_c(case, c)).astype(float)
    p = case.p
    out = np.full(c.shape, math.inf)
    if case.variant is Variant.ROGUE:
        todo = np.flatnonzero(c != 0.0)
        out[todo] = _rogue_period(p, c[todo], epsrel)
    elif case.variant is Variant.PLUS:
        out[:] = _plus_period(p, c, epsrel)
    else:
        cmax = (p - 1.0) / (p + 1.0)
        todo = np.flatnonzero(c != cmax)
        out[todo] = _minus_period(p, c[todo], cmax - c[todo], epsrel)
    return float(out[0]) if scalar else out


# --- Phi and the derivative of the rogue period ---------------------------------

def inner_integral(p, y):
    """Closed form of int_1^y t^(p-2) k(t) dt."""
    y = np.asarray(y, float)
    h = y - 1.0
    with np.errstate(divide="ignore"):
        lg = np.log1p(h)
        a = np.expm1((p - 1.0) * lg)
        b = np.expm1((p + 1.0) * lg)
        d = np.expm1(2.0 * p * lg)
    return (a - b + d / p) / (p + 1.0)


def _inner_integral_quad(p, y):
    y = np.atleast_1d(np.asarray(y, float))

    def f(t, idx):
        return t ** (p - 2.0) * levels.k_of_y(p, t)

    vals, _ = gk_batch(f, np.ones_like(y), y, epsabs=1e-16, epsrel=1e-13)
    return vals


def phi_function(p, y, method="quadrature"):
    """Phi(y) = 3 y^(2-p) k''(y) int_1^y t^(p-2) k(t) dt - k(y) k'(y).

    ``method="quadrature"`` evaluates the inner integral by adaptive
    Gauss-Kronrod, ``"closed"`` uses its antiderivative. ``Phi(1) = 0`` is
    returned exactly.
    """
    y = np.asarray(y, float)
    if np.any(y <= 0):
        raise DomainError("Phi is defined for y > 0")
    shape = y.shape
    y = y.ravel()
    if method == "quadrature":
        inner = _inner_integral_quad(p, y)
    elif method == "closed":
        inner = inner_integral(p, y)
    else:
        raise ValueError(f"unknown method {method!r}")
    kpp = 2.0 * (p * y ** (p - 1.0) - 1.0)
    val = 3.0 * y ** (2.0 - p) * kpp * inner - levels.k_of_y(p, y) * levels.dk_of_y(p, y)
    val = np.where(y == 1.0, 0.0, val).reshape(shape)
    return float(val) if val.ndim == 0 else val


def _poly_mul(a, b, n):
    return np.convolve(a, b)[:n]


def phi_series(p, nterms=64):
    """Taylor coefficients of Phi(1+h); orders 0-3 vanish identically."""
    n = nterms + 4
    B = lambda a: levels._binomials(float(a), n).copy()  # noqa: E731
    one = np.zeros(n)
    one[0] = 1.0
    lin = np.zeros(n)
    lin[1] = 1.0
    inner = ((B(p - 1) - one) - (B(p + 1) - one) + (B(2 * p) - one) / p) / (p + 1.0)
    kpp = 2.0 * (p * B(p - 1) - one)
    k = -2.0 * lin - _poly_mul(lin, lin, n) + (2.0 / (p + 1.0)) * (B(p + 1) - one)
    kp = 2.0 * (B(p) - one - lin)
    phi = 3.0 * _poly_mul(_poly_mul(B(2 - p), kpp, n), inner, n) - _poly_mul(k, kp, n)
    phi[:4] = 0.0
    return phi


def phi_over_kp4(p, y):
    """Phi(y) / k'(y)^4, continuous through y = 1 with value (p+3)/(48 (p-1)^2)."""
    y = np.asarray(y, float)
    h = y - 1.0
    small = np.abs(h) <= PHI_SERIES_RADIUS
    hs = np.where(small, h, 0.0)
    coef = _phi_series_cached(p)
    num = np.polynomial.polynomial.polyval(hs, coef[4:])
    den = levels.kp_over_h(p, hs) ** 4
    series = num / den
    yd = np.where(small, 2.0, y)
    kp = levels.dk_of_y(p, yd)
    direct = phi_function(p, yd, method="closed") / kp ** 4
    return np.where(small, series, direct)


_PHI_CACHE: dict = {}


def _phi_series_cached(p):
    coef = _PHI_CACHE.get(p)
    if coef is None:
        coef = phi_series(p)
        _PHI_CACHE[p] = coef
    return coef


def period_derivative_rogue(p, c, *, epsrel=EPSREL):
    """L'(c) of the rogue period function for ``(1-p)/(1+p) <= c < 0``.

    Uses the integrated-by-parts representation with the smooth weight
    ``Phi / k'^4``. At the centre value the formula gives the limit
    ``pi p (p+3) / (12 (p-1)^(3/2))``.
    """
    if p <= 1:
        raise DomainError("p must exceed 1")
    scalar = np.ndim(c) == 0
    c = np.atleast_1d(np.asarray(c, float))
    c0 = levels.rogue_center_level(p)
    if np.any(c < c0) or np.any(c >= 0.0):
        raise DomainError("c outside [(1-p)/(1+p), 0)")

    def g(cc, s2, upper, c2):
        y, w = levels.rogue_branch(p, cc, s2, upper, c2=c2)
        return y ** (p - 2.0) * phi_over_kp4(p, y) * w * c2

    def upper(th, idx):
        s2 = np.sin(th) ** 2
        return g(c[idx][:, None], s2, True, np.cos(th) ** 2)

    def lower(s2, c2, idx):
        return g(c[idx][:, None], s2, False, c2)

    vals = (_integrate_theta(upper, c.size, epsrel=epsrel)
            + _peaked(lower, _rogue_eps(p, c), epsrel=epsrel))
    out = 16.0 * p * (p - 1.0) * vals
    return float(out[0]) if scalar else out


def period_derivative_limit(p):
    return math.pi * p * (p + 3.0) / (12.0 * (p - 1.0) ** 1.5)


# --- inverse ----------------------------------------------------------------------

def invert_period(case: OdeCase, s, *, xtol=1e-15):
    """Return ``c`` with ``period(case, c) = s`` (the inverse M).

    Plus: ``0 < s <= 2 pi``; minus: ``s >= 2 pi``; rogue:
    ``s >= 2 pi / sqrt(p-1)``. The equilibrium end is returned exactly and
    values within a relative 1e-12 of it snap to it.
    """
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, float)).astype(float)
    if np.any(~np.isfinite(s)):
        raise DomainError("period must be finite")
    s0 = period_limit(case)
    p = case.p
    out = np.empty_like(s)
    snap = np.abs(s - s0) <= _SNAP * s0
    lo_c, hi_c = c_range(case)
    out[snap] = lo_c if case.variant is not Variant.ROGUE else levels.rogue_center_level(p)
    rest = np.flatnonzero(~snap)
    if rest.size:
        t = s[rest]
        if case.variant is Variant.PLUS:
            if np.any(t > s0) or np.any(t <= 0):
                raise DomainError("plus periods lie in (0, 2 pi]")
            # c = exp(u): relative accuracy also for the tiny c near s = 2 pi
            hi = np.ones_like(t)
            while True:
                short = period(case, hi) > t
                if not short.any():
                    break
                hi = np.where(short, 4.0 * hi, hi)
                if np.any(hi > 1e300):
                    raise DomainError("period too small to invert")
            u = illinois(lambda v: _period_u(case, v), t, np.full_like(t, -690.0), np.log(hi),
                         increasing=False, xtol=xtol, ftol=_FTOL * t)
            out[rest] = np.exp(u)
        elif case.variant is Variant.MINUS:
            if np.any(t < s0):
                raise DomainError("minus periods lie in [2 pi, inf)")
            top = _period_u(case, np.array([_MINUS_UMAX]))[0]
            if np.any(t >= top):
                raise DomainError("period too large to resolve in double precision")
            u = illinois(lambda v: _period_u(case, v), t, np.full_like(t, -690.0),
                         np.full_like(t, _MINUS_UMAX), increasing=True, xtol=xtol,
                         ftol=_FTOL * t)
            out[rest] = _minus_c(p, u)
        else:
            if np.any(t < s0):
                raise DomainError("rogue periods lie in [2 pi / sqrt(p-1), inf)")
            # c = c0 exp(-u), u in (0, inf)
            hi = np.full_like(t, 8.0)
            while True:
                short = _period_u(case, hi) < t
                if not short.any():
                    break
                hi = np.where(short, 2.0 * hi, hi)
                if np.any(hi > 700.0):
                    raise DomainError("period too large to resolve in double precision")
            u = illinois(lambda v: _period_u(case, v), t, np.zeros_like(t), hi,
                         increasing=True, xtol=xtol, ftol=_FTOL * t)
            out[rest] = levels.rogue_center_level(p) * np.exp(-u)
    return float(out[0]) if scalar else out


def _minus_c(p, u):
    return ((p - 1.0) / (p + 1.0)) / (1.0 + np.exp(-u))


def _period_u(case, u):
    u = np.asarray(u, float)
    p = case.p
    if case.variant is Variant.PLUS:
        return period(case, np.exp(u))
    if case.variant is Variant.MINUS:
        cmax = (p - 1.0) / (p + 1.0)
        return _minus_period(p, _minus_c(p, u), cmax * np.exp(-u) / (1.0 + np.exp(-u)), EPSREL)
    return period(case, levels.rogue_center_level(p) * np.exp(-u))


@dataclass(frozen=True)
class PeriodMap:
    """Period function of one case together with its inverse."""

    case: OdeCase

    @property
    def domain(self):
        return c_range(self.case)

    @property
    def image(self):
        s0 = period_limit(self.case)
        if self.case.variant is Variant.PLUS:
            return 0.0, s0
        return s0, math.inf

    @property
    def increasing(self):
        return self.case.variant is not Variant.PLUS

    def __call__(self, c):
        return period(self.case, c)

    def derivative(self, c):
        if self.case.variant is not Variant.ROGUE:
            raise NotImplementedError("the derivative is provided for the rogue case only")
        return period_derivative_rogue(self.case.p, c)

    def inverse(self, s):
        return invert_period(self.case, s)
