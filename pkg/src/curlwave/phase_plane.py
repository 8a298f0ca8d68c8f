"""Reduced oscillators, first integrals and single-orbit integration.

The three scalar equations obtained from the gradient-field ansatz are

* plus:   y'' = -y - |y|^(p-1) y
* minus:  y'' = -y + |y|^(p-1) y
* rogue:  y'' =  y - |y|^(p-1) y

with first integrals ``A = y'^2 + y^2 +- 2/(p+1) |y|^(p+1)`` (plus/minus) and
``A = y'^2 - y^2 + 2/(p+1) |y|^(p+1)`` (rogue).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from . import levels
from .errors import DomainError, NonConvergence
from .roots import illinois

DEFAULT_TOL = 1e-12


class Variant(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"
    ROGUE = "rogue"


@dataclass(frozen=True)
class OdeCase:
    variant: Variant
    p: float

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not (self.p > 1.0) or not math.isfinite(self.p):
            raise DomainError("p must exceed 1")

    def force(self, y):
        """Right-hand side y'' = F(y); |y|^(p-1) y is written sign(y) |y|^p."""
        y = np.asarray(y, float)
        nl = np.sign(y) * np.abs(y) ** self.p
        if self.variant is Variant.PLUS:
            return -y - nl
        if self.variant is Variant.MINUS:
            return -y + nl
        return y - nl

    def dforce(self, y):
        y = np.asarray(y, float)
        d = self.p * np.abs(y) ** (self.p - 1.0)
        if self.variant is Variant.PLUS:
            return -1.0 - d
        if self.variant is Variant.MINUS:
            return -1.0 + d
        return 1.0 - d


@dataclass(frozen=True)
class PhasePoint:
    xi: float
    eta: float

    def __post_init__(self):
        if not (math.isfinite(self.xi) and math.isfinite(self.eta)):
            raise DomainError("phase point must be finite")


def first_integral_xy(case: OdeCase, xi, eta):
    """Vectorized first integral A(xi, eta)."""
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    pot = (2.0 / (case.p + 1.0)) * np.abs(xi) ** (case.p + 1.0)
    if case.variant is Variant.PLUS:
        return eta * eta + xi * xi + pot
    if case.variant is Variant.MINUS:
        return eta * eta + xi * xi - pot
    return eta * eta - xi * xi + pot


def first_integral(case: OdeCase, pt: PhasePoint) -> float:
    return float(first_integral_xy(case, pt.xi, pt.eta))


@dataclass(frozen=True)
class Orbit:
    """A solution of one reduced equation with a callable evaluator.

    ``evaluator(t)`` returns ``(y, ydot)`` arrays. ``kind`` is one of
    ``"periodic"``, ``"equilibrium"``, ``"homoclinic"`` or ``"open"`` (a
    trajectory known only on ``t_span``). For equilibria ``period`` is the
    linearized period (``inf`` at a saddle).
    """

    case: OdeCase
    c: float
    initial: PhasePoint
    period: float
    kind: str
    t_span: tuple
    evaluator: Callable = field(repr=False, compare=False)
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, t):
        return self.evaluator(np.asarray(t, float))

    def drift(self, t):
        """max |A(y(t), y'(t)) - c| over the given times."""
        y, v = self(t)
        return float(np.max(np.abs(first_integral_xy(self.case, y, v) - self.c)))


def _rhs(case):
    p = case.p
    variant = case.variant

    def f(t, x):
        y = x[0]
        nl = math.copysign(abs(y) ** p, y)
        if variant is Variant.PLUS:
            a = -y - nl
        elif variant is Variant.MINUS:
            a = -y + nl
        else:
            a = y - nl
        return [x[1], a]

    return f


def _constant_orbit(case, pt, c, period):
    xi, eta = pt.xi, pt.eta

    def ev(t):
        t = np.asarray(t, float)
        return np.full(t.shape, xi), np.full(t.shape, eta)

    return Orbit(case, c, pt, period, "equilibrium", (-math.inf, math.inf), ev,
                 {"linearized": True})


def integrate_orbit(case: OdeCase, initial: PhasePoint, t_span=None, tol=DEFAULT_TOL,
                    max_time=1e4) -> Orbit:
    """Integrate from ``initial`` with an embedded 8(5,3) Runge-Kutta pair.

    With ``t_span=None`` the trajectory is followed until it returns to the
    initial point (period detection) and the evaluator extends it
    periodically; if no return happens before ``max_time`` the result is an
    ``"open"`` orbit on the integrated interval. With an explicit ``t_span``
    the evaluator covers exactly that interval and the period, if a return is
    seen inside it, is reported.

    Equilibria give constant orbits carrying the linearized period. A rogue
    initial point on the zero level (other than the saddle) is delegated to
    :func:`homoclinic`, shifted in time.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    p = case.p
    x0 = np.array([initial.xi, initial.eta], float)
    c = first_integral(case, initial)
    f0 = np.array([x0[1], float(case.force(x0[0]))])
    speed = float(np.hypot(*f0))
    if speed == 0.0:
        k = -float(case.dforce(x0[0]))
        per = 2.0 * math.pi / math.sqrt(k) if k > 0 else math.inf
        return _constant_orbit(case, initial, c, per)

    if case.variant is Variant.ROGUE and abs(c) <= 1e-14 and t_span is None:
        return _shifted_homoclinic(case, initial)

    rtol = tol
    atol = tol * 1e-2 * max(1.0, float(np.max(np.abs(x0))))
    scale = 1e-3 * speed

    def section(t, x):
        return (x[0] - x0[0]) * f0[0] + (x[1] - x0[1]) * f0[1]

    section.direction = 1.0
    rhs = _rhs(case)

    if t_span is not None:
        t0, t1 = float(t_span[0]), float(t_span[1])
        sol = solve_ivp(rhs, (t0, t1), x0, method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True, events=section if t0 == 0.0 else None)
        if sol.status < 0:
            raise NonConvergence(sol.message)
        per = math.nan
        if t0 == 0.0:
            per = _first_return(sol, x0, scale, section)
        dense = sol.sol
        lo, hi = min(t0, t1), max(t0, t1)

        def ev(t):
            t = np.asarray(t, float)
            if np.any(t < lo - 1e-12) or np.any(t > hi + 1e-12):
                raise DomainError("time outside the integrated span")
            out = dense(np.clip(t.ravel(), lo, hi))
            return out[0].reshape(t.shape), out[1].reshape(t.shape)

        kind = "periodic" if math.isfinite(per) else "open"
        return Orbit(case, c, initial, per, kind, (t0, t1), ev, {"nfev": sol.nfev})

    # no span: integrate in chunks until the first return
    chunk = 8.0 * math.pi
    t_end = 0.0
    pieces = []
    state = x0
    per = math.nan
    while t_end < max_time:
        sol = solve_ivp(rhs, (t_end, t_end + chunk), state, method="DOP853", rtol=rtol,
                        atol=atol, dense_output=True, events=section)
        if sol.status < 0:
            raise NonConvergence(sol.message)
        if not np.all(np.isfinite(sol.y[:, -1])) or np.max(np.abs(sol.y[:, -1])) > 1e8:
            raise NonConvergence("trajectory is unbounded")
        pieces.append(sol)
        per = _first_return(sol, x0, scale, section)
        if math.isfinite(per):
            break
        t_end += chunk
        state = sol.y[:, -1]
    if not math.isfinite(per):
        return _piecewise_orbit(case, c, initial, pieces, math.nan, "open")
    return _piecewise_orbit(case, c, initial, pieces, per, "periodic")


def _first_return(sol, x0, scale, section):
    times = sol.t_events[0] if sol.t_events else []
    for te in times:
        if te <= 0:
            continue
        x = sol.sol(te)
        if np.hypot(x[0] - x0[0], x[1] - x0[1]) <= scale:
            return _secant(lambda t: section(t, sol.sol(t)), te)
    return math.nan


def _secant(g, t, h=1e-6, iters=8):
    a, b = t - h, t
    ga, gb = g(a), g(b)
    for _ in range(iters):
        if gb == ga:
            break
        a, b = b, b - gb * (b - a) / (gb - ga)
        ga, gb = gb, g(b)
        if abs(b - a) <= 1e-15 * abs(b):
            break
    return b


def _piecewise_orbit(case, c, initial, pieces, per, kind):
    starts = np.array([s.t[0] for s in pieces])
    t_hi = pieces[-1].t[-1]

    def raw(t):
        flat = t.ravel()
        y = np.empty(flat.size)
        v = np.empty(flat.size)
        which = np.clip(np.searchsorted(starts, flat, side="right") - 1, 0, len(pieces) - 1)
        for i in np.unique(which):
            m = which == i
            out = pieces[i].sol(flat[m])
            y[m], v[m] = out[0], out[1]
        return y.reshape(t.shape), v.reshape(t.shape)

    if kind == "periodic":
        def ev(t):
            return raw(np.mod(t, per))
        span = (-math.inf, math.inf)
    else:
        def ev(t):
            if np.any(t < 0) or np.any(t > t_hi):
                raise DomainError("time outside the integrated span")
            return raw(t)
        span = (0.0, t_hi)
    return Orbit(case, c, initial, per, kind, span, ev,
                 {"return_defect": _return_defect(raw, initial, per)})


def _return_defect(raw, initial, per):
    if not math.isfinite(per):
        return math.nan
    y, v = raw(np.array([per]))
    return float(np.hypot(y[0] - initial.xi, v[0] - initial.eta))


# --- homoclinic -------------------------------------------------------------------

class _Homoclinic:
    """Positive homoclinic y0 of the rogue equation, y0(0) = top, y0'(0) = 0.

    Near the top the second-order equation is integrated. Further out the
    saddle makes that route unstable (errors grow like e^t), so the tail
    follows the first-order equation on the zero level in log form,
    u = log y, u' = -sqrt(1 - 2 e^((p-1) u) / (p+1)), which is stable. Past
    ``t_max`` the logarithm is continued linearly.
    """

    def __init__(self, p, t_max, tol):
        self.p = p
        self.t_max = float(t_max)
        top = levels.rogue_top(p)
        self.top = top
        case = OdeCase(Variant.ROGUE, p)
        t1 = min(4.0 / (p - 1.0), 6.0, self.t_max)
        self.t1 = t1
        s1 = solve_ivp(_rhs(case), (0.0, t1), [top, 0.0], method="DOP853", rtol=tol,
                       atol=tol * 1e-2, dense_output=True)
        if s1.status < 0:
            raise NonConvergence(s1.message)
        self.near = s1.sol
        u1 = math.log(s1.y[0, -1])
        q = 2.0 / (p + 1.0)

        def du(t, u):
            return [-math.sqrt(max(0.0, 1.0 - q * math.exp((p - 1.0) * u[0])))]

        if self.t_max > t1:
            s2 = solve_ivp(du, (t1, self.t_max), [u1], method="DOP853", rtol=tol,
                           atol=tol * 1e-2, dense_output=True)
            if s2.status < 0:
                raise NonConvergence(s2.message)
            self.far = s2.sol
            self.u_end = float(s2.y[0, -1])
        else:
            self.far = None
            self.u_end = u1
        self.slope_end = -math.sqrt(1.0 - q * math.exp((p - 1.0) * self.u_end))
        self.q = q

    def _log_tail(self, t):
        u = np.empty_like(t)
        inner = t <= self.t_max
        if self.far is not None and inner.any():
            u[inner] = self.far(t[inner])[0]
        out = ~inner
        u[out] = self.u_end + self.slope_end * (t[out] - self.t_max)
        return u

    def __call__(self, t):
        t = np.asarray(t, float)
        a = np.abs(t).ravel()
        y = np.empty_like(a)
        v = np.empty_like(a)
        near = a <= self.t1
        if near.any():
            out = self.near(a[near])
            y[near], v[near] = out[0], out[1]
        far = ~near
        if far.any():
            u = self._log_tail(a[far])
            yf = np.exp(u)
            y[far] = yf
            v[far] = -yf * np.sqrt(np.maximum(0.0, 1.0 - self.q * yf ** (self.p - 1.0)))
        v = np.where(t.ravel() < 0, -v, v)
        return y.reshape(t.shape), v.reshape(t.shape)


def homoclinic(p: float, t_max: float = 60.0, tol: float = 1e-13) -> Orbit:
    """Positive homoclinic orbit of the rogue equation (first integral 0)."""
    case = OdeCase(Variant.ROGUE, p)
    h = _Homoclinic(p, t_max, tol)
    init = PhasePoint(h.top, 0.0)
    return Orbit(case, 0.0, init, math.inf, "homoclinic", (-math.inf, math.inf), h,
                 {"t_max": float(t_max), "switch_time": h.t1})


def _shifted_homoclinic(case, initial):
    if initial.xi <= 0:
        # the negative homoclinic is the mirror image
        mirrored = _shifted_homoclinic(case, PhasePoint(-initial.xi, -initial.eta))

        def ev(t):
            y, v = mirrored(t)
            return -y, -v

        return Orbit(case, 0.0, initial, math.inf, "homoclinic", mirrored.t_span, ev,
                     dict(mirrored.meta))
    base = homoclinic(case.p)
    # time at which y0 passes through initial.xi, with the sign of the velocity
    top = levels.rogue_top(case.p)
    if initial.xi >= top:
        shift = 0.0
    else:
        t_pass = float(illinois(lambda t: base(t)[0], initial.xi, 0.0, 200.0,
                                increasing=False, xtol=1e-15))
        shift = -t_pass if initial.eta > 0 else t_pass

    def ev(t):
        return base(np.asarray(t, float) + shift)

    return Orbit(case, 0.0, initial, math.inf, "homoclinic", (-math.inf, math.inf), ev,
                 {"shift": shift})


# --- normalized family and amplitudes ---------------------------------------------

def a_inverse(p, c):
    """Inverse of a(xi) = -xi^2 + 2/(p+1) xi^(p+1) on [1, ((p+1)/2)^(1/(p-1))]."""
    c = np.asarray(c, float)
    c0 = levels.rogue_center_level(p)
    if np.any(c < c0) or np.any(c > 0):
        raise DomainError("c outside [(1-p)/(1+p), 0]")
    y, _ = levels.rogue_branch(p, c, np.ones_like(c), upper=True)
    return float(y) if y.ndim == 0 else y


def normalized_small_orbit(p: float, c: float, tol: float = DEFAULT_TOL) -> Orbit:
    """Positive rogue orbit with y(0) = a^(-1)(c), y'(0) = 0."""
    case = OdeCase(Variant.ROGUE, p)
    c0 = levels.rogue_center_level(p)
    if not (c0 <= c <= 0.0):
        raise DomainError("c outside [(1-p)/(1+p), 0]")
    if c == 0.0:
        return homoclinic(p)
    y0 = a_inverse(p, c)
    if c == c0:
        y0 = 1.0
    orbit = integrate_orbit(case, PhasePoint(y0, 0.0), tol=tol)
    return orbit


def amplitude_bounds(case: OdeCase, c: float):
    """Turning points of the small orbit on the level c.

    Plus/minus: ``(0, N(c))`` with ``N(c) = max |y|``. Rogue:
    ``(N_-(c), N_+(c))`` with ``N_- <= 1 <= N_+``.
    """
    p = case.p
    if case.variant is Variant.ROGUE:
        c0 = levels.rogue_center_level(p)
        if not (c0 <= c <= 0.0):
            raise DomainError("c outside [(1-p)/(1+p), 0]")
        hi, _ = levels.rogue_branch(p, c, 1.0, upper=True)
        lo, _ = levels.rogue_branch(p, c, 1.0, upper=False)
        return float(lo), float(hi)
    if case.variant is Variant.PLUS:
        if not c >= 0.0:
            raise DomainError("plus orbits need c >= 0")
        x, _ = levels.pm_branch(1.0, p, c, 1.0)
        return 0.0, float(x)
    cmax = (p - 1.0) / (p + 1.0)
    if not (0.0 <= c < cmax):
        raise DomainError("minus orbits need 0 <= c < (p-1)/(p+1)")
    x, _ = levels.pm_branch(-1.0, p, c, 1.0)
    return 0.0, float(x)
