"""Gradient-field waves U(x, t) = psi(g(x), t) grad g / |grad g|.

Every construction rescales an orbit of a reduced equation,

    psi(zeta, t) = tau(zeta) * y(sigma(zeta) * (t + a(zeta)); c(zeta)),

with ``sigma = sqrt(q/s)``, ``tau = (q/V)^(1/(p-1))``, a phase shift ``a``
and a first-integral value ``c(zeta)`` chosen so that every point oscillates
with the common period ``T`` (``c = M(sigma T)``), or the homoclinic orbit
for rogue waves. Only distinct values of ``c`` are integrated (see
:mod:`curlwave.families`); orbit values are interpolated in time only.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

import numpy as np

from . import levels
from .errors import DomainError, GrowthError, MissingLimit
from .expr import compile_expr
from .families import OrbitCache
from .geometry import CoefficientProfiles, GeometryProfile
from .period_maps import invert_period, period, period_limit
from .phase_plane import OdeCase, Variant, a_inverse, homoclinic


class FieldKind(str, Enum):
    BREATHER_PLUS = "BreatherPlus"
    BREATHER_MINUS = "BreatherMinus"
    DARK_BREATHER = "DarkBreather"
    DARK_CONSTANT = "DarkConstant"
    ROGUE_WAVE = "RogueWave"
    ROGUE_APPROXIMANT = "RogueApproximantT"
    MONOCHROMATIC = "Monochromatic"
    EXPLICIT_ROGUE = "ExplicitRogue"


PERIODIC_KINDS = {FieldKind.BREATHER_PLUS, FieldKind.BREATHER_MINUS, FieldKind.DARK_BREATHER,
                  FieldKind.DARK_CONSTANT, FieldKind.ROGUE_APPROXIMANT, FieldKind.MONOCHROMATIC}


def as_zeta_function(a):
    """Callable of zeta from None (zero), a number, an expression string or a callable."""
    if a is None:
        return None
    if callable(a):
        return a
    if isinstance(a, (int, float)):
        val = float(a)
        return lambda z: np.full(np.shape(z), val)
    e = compile_expr(str(a), {"zeta"})
    return lambda z: e(zeta=np.asarray(z, float))


# --- orbit families by case ------------------------------------------------------

def _pm_curve(c):
    c = np.asarray(c, float)
    return np.zeros_like(c), np.sqrt(np.maximum(c, 0.0))


def _rogue_curve(p):
    c0 = levels.rogue_center_level(p)

    def curve(c):
        c = np.asarray(c, float)
        xi = np.atleast_1d(a_inverse(p, c)).astype(float).reshape(c.shape)
        xi = np.where(c == c0, 1.0, xi)
        return xi, np.zeros_like(c)

    return curve


def orbit_family(case: OdeCase, curve=None, tol=1e-12) -> OrbitCache:
    """Orbit cache of the small periodic orbits of ``case``.

    Default launch curves: ``(0, sqrt(c))`` for plus/minus, ``(a^-1(c), 0)``
    for rogue. A custom ``curve`` disables the reflection shortcut.
    """

    def horizon(c):
        return period(case, c)

    if curve is not None:
        return OrbitCache(case, curve, horizon, None, tol)
    if case.variant is Variant.ROGUE:
        return OrbitCache(case, _rogue_curve(case.p), horizon, "even", tol)
    return OrbitCache(case, _pm_curve, horizon, "odd", tol)


def shifted_curve(family: OrbitCache, b: Callable):
    """Launch curve ``c -> (y(b(c); c), y'(b(c); c))`` along an existing family."""

    def curve(c):
        c = np.asarray(c, float)
        return family.evaluate(c, np.asarray(b(c), float))

    return curve


# --- scalar profiles psi(zeta, t) -----------------------------------------------

class _PeriodicProfile:
    """psi = tau y(sigma t; c(zeta)) with c(zeta) = M(sigma(zeta) T)."""

    def __init__(self, coeffs: CoefficientProfiles, case: OdeCase, T, family: OrbitCache):
        self.coeffs = coeffs
        self.case = case
        self.T = float(T)
        self.family = family
        self._c: dict = {}
        self._lock = threading.Lock()

    def c_of(self, zeta):
        zeta = np.asarray(zeta, float)
        flat = zeta.ravel()
        uniq, inv = np.unique(flat, return_inverse=True)
        missing = [z for z in uniq.tolist() if z not in self._c]
        if missing:
            z = np.array(missing)
            s = self.coeffs.sigma(z) * self.T
            try:
                cs = np.atleast_1d(invert_period(self.case, s))
            except DomainError as err:
                raise DomainError(f"sigma(zeta) T leaves the image of the period map: {err}") from None
            with self._lock:
                self._c.update(zip(missing, cs.tolist()))
        vals = np.array([self._c[z] for z in uniq.tolist()])
        return vals[inv].reshape(zeta.shape)

    def __call__(self, zeta, t):
        zeta, t = np.broadcast_arrays(np.asarray(zeta, float), np.asarray(t, float))
        sig = self.coeffs.sigma(zeta)
        tau = self.coeffs.tau(zeta)
        c = self.c_of(zeta)
        y, v = self.family.evaluate(c, sig * t)
        return tau * y, tau * sig * v, tau * sig ** 2 * self.case.force(y)


class _HomoclinicProfile:
    def __init__(self, coeffs: CoefficientProfiles, t_max=60.0):
        self.coeffs = coeffs
        self.case = OdeCase(Variant.ROGUE, coeffs.p)
        self.orbit = homoclinic(coeffs.p, t_max=t_max)

    def __call__(self, zeta, t):
        zeta, t = np.broadcast_arrays(np.asarray(zeta, float), np.asarray(t, float))
        sig = self.coeffs.sigma(zeta)
        tau = self.coeffs.tau(zeta)
        y, v = self.orbit(sig * t)
        return tau * y, tau * sig * v, tau * sig ** 2 * self.case.force(y)


class _ExplicitRogueProfile:
    """sqrt(2) / (sqrt(V) cosh t) for p = 3 and s = q = 1."""

    def __init__(self, V):
        self.V = V

    def __call__(self, zeta, t):
        zeta, t = np.broadcast_arrays(np.asarray(zeta, float), np.asarray(t, float))
        amp = math.sqrt(2.0) / np.sqrt(self.V(zeta))
        sech = 1.0 / np.cosh(t)
        th = np.tanh(t)
        return amp * sech, -amp * sech * th, amp * sech * (1.0 - 2.0 * sech ** 2)


class _MonochromaticProfile:
    """phi(zeta) e^{i omega t}."""

    def __init__(self, phi, omega):
        self.phi = phi
        self.omega = float(omega)

    def __call__(self, zeta, t):
        zeta, t = np.broadcast_arrays(np.asarray(zeta, float), np.asarray(t, float))
        e = np.exp(1j * self.omega * t)
        ph = self.phi(zeta)
        psi = ph * e
        return psi, 1j * self.omega * psi, -self.omega ** 2 * psi


# --- the field ------------------------------------------------------------------

@dataclass(frozen=True)
class WaveField:
    """A synthesized wave with its construction data.

    ``equation`` names the reduced equation the scalar ``psi`` satisfies:
    ``plus`` (s psi'' + q psi + V|psi|^(p-1) psi = 0), ``minus`` (same with
    ``- V``) or ``rogue`` (s psi'' - q psi + V |psi|^(p-1) psi = 0).
    ``T`` is ``inf`` for non-periodic kinds.
    """

    kind: FieldKind
    p: float
    T: float
    omega: float | None
    geo: GeometryProfile
    coeffs: CoefficientProfiles
    equation: Variant
    profile: Callable = field(repr=False, compare=False)
    shift: Callable | None = field(default=None, repr=False, compare=False)
    reference: "WaveField | None" = field(default=None, repr=False, compare=False)
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def is_complex(self):
        return self.kind is FieldKind.MONOCHROMATIC

    @property
    def periodic(self):
        return self.kind in PERIODIC_KINDS and math.isfinite(self.T)

    def shifted_time(self, zeta, t):
        if self.shift is None:
            return np.asarray(t, float)
        return np.asarray(t, float) + self.shift(np.asarray(zeta, float))

    def psi_all(self, zeta, t):
        """``(psi, psi_t, psi_tt)`` with psi_tt taken from the reduced equation."""
        zeta, t = np.broadcast_arrays(np.asarray(zeta, float), np.asarray(t, float))
        return self.profile(zeta, self.shifted_time(zeta, t))

    def psi(self, zeta, t):
        return self.psi_all(zeta, t)[0]

    def psi_tt(self, zeta, t):
        """Analytic second time derivative (via the orbit equation)."""
        return self.psi_all(zeta, t)[2]

    def c_of_zeta(self, zeta):
        prof = self.profile
        if isinstance(prof, _PeriodicProfile):
            return prof.c_of(zeta)
        if isinstance(prof, _HomoclinicProfile):
            return np.zeros(np.shape(zeta))
        raise DomainError(f"{self.kind.value} fields carry no first-integral value")

    def __call__(self, x, t):
        """U(x, t); ``x`` has a trailing axis of 3, ``t`` broadcasts with ``x[..., 0]``.

        Points on the singular set of the geometry give NaN rows.
        """
        x = np.asarray(x, float)
        t = np.asarray(t, float)
        shape = np.broadcast_shapes(x.shape[:-1], t.shape)
        x = np.broadcast_to(x, shape + (3,))
        t = np.broadcast_to(t, shape)
        zeta = self.geo.g(x)
        d = self.geo.direction(x, strict=False)
        ps = self.psi(zeta, t)
        return ps[..., None] * d

    def on_grid(self, points, times):
        """Field on the product of points (N, 3) and times (M,): shape (N, M, 3)."""
        points = np.asarray(points, float).reshape(-1, 3)
        times = np.asarray(times, float).ravel()
        return self(points[:, None, :], times[None, :])

    def reference_field(self, x, t):
        if self.reference is None:
            raise MissingLimit("this field carries no reference field")
        return self.reference(x, t)

    def residual_terms(self, zeta, psi, psi_tt):
        """s psi_tt + (linear) + (nonlinear) of the reduced equation at zeta."""
        s, q, V = self.coeffs.values(zeta)
        nl = V * np.abs(psi) ** (self.p - 1.0) * psi
        if self.equation is Variant.PLUS:
            return s * psi_tt + q * psi + nl
        if self.equation is Variant.MINUS:
            return s * psi_tt + q * psi - nl
        return s * psi_tt - q * psi + nl


# --- validation helpers ---------------------------------------------------------

def _sample_zeta(geo, sample):
    if sample is None:
        return None
    arr = np.asarray(sample, float)
    if arr.ndim >= 1 and arr.shape[-1] == 3:
        pts = arr.reshape(-1, 3)
        pts = pts[~geo.singular(pts)]
        return geo.g(pts)
    return arr.ravel()


def _sample_points(geo, sample):
    if sample is None:
        return None
    arr = np.asarray(sample, float)
    if arr.ndim >= 1 and arr.shape[-1] == 3:
        pts = arr.reshape(-1, 3)
        return pts[~geo.singular(pts)]
    return None


def growth_constant(geo, a, points):
    """``max |a(g(x))| / (1 + |x|)`` over the points and the fitted growth power.

    The power is the slope of ``log max_shell |a|`` against ``log(1 + |x|)``
    over shells of the outer half of the sample.
    """
    pts = np.asarray(points, float).reshape(-1, 3)
    if a is None or pts.size == 0:
        return 0.0, 0.0
    rad = np.linalg.norm(pts, axis=-1)
    av = np.abs(np.asarray(a(geo.g(pts)), float))
    if not np.all(np.isfinite(av)):
        raise GrowthError("phase shift is not finite on the sample")
    ratio = float(np.max(av / (1.0 + rad)))
    rmax = rad.max()
    edges = np.linspace(0.5 * rmax, rmax, 6)
    xs, ys = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (rad >= lo) & (rad <= hi)
        if m.any() and av[m].max() > 0:
            xs.append(math.log1p(0.5 * (lo + hi)))
            ys.append(math.log(av[m].max()))
    power = float(np.polyfit(xs, ys, 1)[0]) if len(xs) >= 3 else 0.0
    return ratio, power


def _check_growth(geo, a, points, bound=None, max_power=1.25):
    if a is None or points is None:
        return None
    ratio, power = growth_constant(geo, a, points)
    if bound is not None and ratio > bound:
        raise GrowthError(f"|a(g(x))|/(1+|x|) reaches {ratio:.4g} > {bound:.4g}")
    if power > max_power:
        raise GrowthError(f"phase shift grows like |x|^{power:.2f} on the sample")
    return ratio


def _need_sigma_inf(coeffs):
    if coeffs.sigma_inf is None:
        raise MissingLimit("sigma_inf is required for this construction")
    return coeffs.sigma_inf


# --- constructions --------------------------------------------------------------

def synth_breather(sign, p, geo, coeffs, *, sample=None, initial_curve=None, shift=None,
                   tol=1e-12) -> WaveField:
    """Breather of the plus (``sign=+1``) or minus (``sign=-1``) equation, T = 2 pi / sigma_inf.

    ``initial_curve`` replaces the launch curve ``(0, sqrt(c))``; it must
    satisfy ``A(curve(c)) = c``. With ``sample`` (points or zeta values) the
    ordering condition on sigma is checked up front.
    """
    _same_p(p, coeffs)
    sig_inf = _need_sigma_inf(coeffs)
    variant = Variant.PLUS if sign > 0 else Variant.MINUS
    case = OdeCase(variant, p)
    T = 2.0 * math.pi / sig_inf
    family = orbit_family(case, initial_curve, tol)
    prof = _PeriodicProfile(coeffs, case, T, family)
    zs = _sample_zeta(geo, sample)
    if zs is not None:
        coeffs.check_positive(zs)
        if not coeffs.b2(zs, sign=1 if sign > 0 else -1):
            cond = "sigma <= sigma_inf" if sign > 0 else "sigma >= sigma_inf"
            raise DomainError(f"ordering condition {cond} (not identically equal) fails on the sample")
        prof.c_of(zs)
    kind = FieldKind.BREATHER_PLUS if sign > 0 else FieldKind.BREATHER_MINUS
    meta = {"T": T, "omega": sig_inf, "curve": "custom" if initial_curve is not None else "(0,sqrt(c))"}
    return WaveField(kind, p, T, sig_inf, geo, coeffs, variant, prof,
                     as_zeta_function(shift), None, meta)


def synth_dark_breather(p, geo, coeffs, omega, *, sample=None, shift=None, tol=1e-12) -> WaveField:
    """T = 2 pi / omega periodic wave of the rogue equation built on the normalized family.

    Attaches the reference field ``U_inf = tau_inf y(sigma_inf t; M(sigma_inf T)) direction``.
    """
    _same_p(p, coeffs)
    sig_inf = _need_sigma_inf(coeffs)
    if coeffs.tau_inf is None:
        raise MissingLimit("tau_inf is required for the dark breather")
    omega = float(omega)
    top = sig_inf * math.sqrt(p - 1.0)
    if not (0.0 < omega <= top * (1.0 + 1e-12)):
        raise DomainError(f"omega must lie in (0, sigma_inf sqrt(p-1)] = (0, {top:.6g}]")
    case = OdeCase(Variant.ROGUE, p)
    T = 2.0 * math.pi / omega
    family = orbit_family(case, None, tol)
    prof = _PeriodicProfile(coeffs, case, T, family)
    zs = _sample_zeta(geo, sample)
    if zs is not None:
        coeffs.check_positive(zs)
        prof.c_of(zs)
    inf_coeffs = CoefficientProfiles.from_sigma_tau(p, sig_inf, coeffs.tau_inf)
    ref_prof = _PeriodicProfile(inf_coeffs, case, T, family)
    ref = WaveField(FieldKind.DARK_CONSTANT, p, T, omega, geo, inf_coeffs, Variant.ROGUE, ref_prof,
                    None, None, {"T": T, "role": "reference"})
    meta = {"T": T, "omega": omega, "c_inf": float(ref_prof.c_of(np.array([0.0]))[0])}
    return WaveField(FieldKind.DARK_BREATHER, p, T, omega, geo, coeffs, Variant.ROGUE, prof,
                     as_zeta_function(shift), ref, meta)


def synth_dark_constant(p, geo, T, *, tol=1e-12) -> WaveField:
    """``U* = y(t) direction`` with y the positive T-periodic orbit (s = q = V = 1)."""
    T = float(T)
    case = OdeCase(Variant.ROGUE, p)
    if T < period_limit(case) * (1.0 - 1e-12):
        raise DomainError(f"T must be at least 2 pi / sqrt(p-1) = {period_limit(case):.6g}")
    coeffs = CoefficientProfiles.from_expressions(p, 1.0, 1.0, 1.0, sigma_inf=1.0, tau_inf=1.0)
    prof = _PeriodicProfile(coeffs, case, T, orbit_family(case, None, tol))
    c = float(prof.c_of(np.array([0.0]))[0])
    return WaveField(FieldKind.DARK_CONSTANT, p, T, 2.0 * math.pi / T, geo, coeffs, Variant.ROGUE,
                     prof, None, None, {"T": T, "c": c})


def synth_rogue(p, geo, coeffs, a=None, *, sample=None, growth_bound=None, t_max=60.0) -> WaveField:
    """Rogue wave ``tau y0(sigma (t + a(zeta)))`` from the positive homoclinic y0.

    With ``sample`` points, ``inf sigma > 0`` and the linear growth of the
    shift are checked, and the decay rate ``min(delta/2, sigma_*/2,
    delta/(4 C))`` is recorded when ``coeffs.delta`` is known.
    """
    _same_p(p, coeffs)
    af = as_zeta_function(a)
    meta = {"T": math.inf}
    pts = _sample_points(geo, sample)
    zs = _sample_zeta(geo, sample)
    if zs is not None:
        coeffs.check_positive(zs)
        sig_star = float(np.min(coeffs.sigma(zs)))
        if not sig_star > 0:
            raise DomainError("inf sigma must be positive")
        meta["sigma_star"] = sig_star
        C = _check_growth(geo, af, pts, growth_bound)
        if C is not None:
            meta["growth_constant"] = C
        if coeffs.delta is not None:
            d = coeffs.delta
            cands = [d / 2.0, sig_star / 2.0]
            if C:
                cands.append(d / (4.0 * C))
            meta["delta_tilde"] = min(cands)
    prof = _HomoclinicProfile(coeffs, t_max)
    return WaveField(FieldKind.ROGUE_WAVE, p, math.inf, None, geo, coeffs, Variant.ROGUE, prof,
                     af, None, meta)


def synth_rogue_approximant(p, geo, coeffs, T, *, sample=None, shift=None, tol=1e-12) -> WaveField:
    """T-periodic approximant ``tau y(sigma t; M(sigma T))`` of the rogue wave."""
    _same_p(p, coeffs)
    case = OdeCase(Variant.ROGUE, p)
    T = float(T)
    prof = _PeriodicProfile(coeffs, case, T, orbit_family(case, None, tol))
    zs = _sample_zeta(geo, sample)
    meta = {"T": T}
    if zs is not None:
        coeffs.check_positive(zs)
        sig_star = float(np.min(coeffs.sigma(zs)))
        threshold = period_limit(case) / sig_star
        meta["threshold"] = threshold
        if T <= threshold:
            raise DomainError(f"T must exceed 2 pi/(sqrt(p-1) sigma_*) = {threshold:.6g}")
        prof.c_of(zs)
    return WaveField(FieldKind.ROGUE_APPROXIMANT, p, T, 2.0 * math.pi / T, geo, coeffs,
                     Variant.ROGUE, prof, as_zeta_function(shift), None, meta)


def monochromatic_profile(equation, coeffs, omega):
    """Real profile phi with ``phi e^{i omega t}`` solving the reduced equation.

    rogue: ``phi = (omega^2/sigma^2 + 1)^(1/(p-1)) tau``; plus:
    ``(omega^2/sigma^2 - 1)_+^(1/(p-1)) tau``; minus:
    ``(1 - omega^2/sigma^2)_+^(1/(p-1)) tau``. Where the bracket is
    negative the only real profile is 0.
    """
    variant = Variant(equation)
    p = coeffs.p
    w2 = float(omega) ** 2

    def phi(z):
        r = w2 / coeffs.sigma(z) ** 2
        if variant is Variant.ROGUE:
            base = r + 1.0
        elif variant is Variant.PLUS:
            base = np.maximum(r - 1.0, 0.0)
        else:
            base = np.maximum(1.0 - r, 0.0)
        return base ** (1.0 / (p - 1.0)) * coeffs.tau(z)

    return phi


def synth_monochromatic(equation, p, geo, coeffs, omega=None) -> WaveField:
    """Complex time-harmonic field ``phi(g(x)) e^{i omega t} direction``.

    ``omega`` defaults to ``sigma_inf`` for the breather equations.
    """
    _same_p(p, coeffs)
    variant = Variant(equation)
    if omega is None:
        omega = _need_sigma_inf(coeffs)
    omega = float(omega)
    if omega < 0:
        raise DomainError("omega must be non-negative")
    phi = monochromatic_profile(variant, coeffs, omega)
    T = 2.0 * math.pi / omega if omega > 0 else math.inf
    ref = None
    if coeffs.sigma_inf is not None and coeffs.tau_inf is not None:
        inf_coeffs = CoefficientProfiles.from_sigma_tau(p, coeffs.sigma_inf, coeffs.tau_inf)
        ref = WaveField(FieldKind.MONOCHROMATIC, p, T, omega, geo, inf_coeffs, variant,
                        _MonochromaticProfile(monochromatic_profile(variant, inf_coeffs, omega), omega),
                        None, None, {"role": "reference"})
    return WaveField(FieldKind.MONOCHROMATIC, p, T, omega, geo, coeffs, variant,
                     _MonochromaticProfile(phi, omega), None, ref, {"T": T, "omega": omega})


def synth_explicit_rogue(geo, V="exp(zeta)") -> WaveField:
    """Closed-form rogue wave ``sqrt(2) / (sqrt(V) cosh t)`` for p = 3, s = q = 1."""
    Vf = as_zeta_function(V)
    coeffs = CoefficientProfiles(3.0, lambda z: np.ones(np.shape(z)), lambda z: np.ones(np.shape(z)),
                                 Vf, sources={"s": "1", "q": "1", "V": str(V)})
    return WaveField(FieldKind.EXPLICIT_ROGUE, 3.0, math.inf, None, geo, coeffs, Variant.ROGUE,
                     _ExplicitRogueProfile(Vf), None, None, {"T": math.inf})


def apply_phase_shift(fld: WaveField, a, *, sample=None, growth_bound=None) -> WaveField:
    """``U_a(x, t) = U(x, t + a(g(x)))``; shifts compose additively."""
    af = as_zeta_function(a)
    if fld.kind in (FieldKind.ROGUE_WAVE, FieldKind.EXPLICIT_ROGUE):
        _check_growth(fld.geo, af, _sample_points(fld.geo, sample), growth_bound)
    old = fld.shift
    if old is None:
        new = af
    else:
        def new(z, _a=af, _o=old):
            return _o(z) + _a(z)
    meta = dict(fld.meta)
    meta["shifted"] = True
    return replace(fld, shift=new, meta=meta)


def _same_p(p, coeffs):
    if not p > 1:
        raise DomainError("p must exceed 1")
    if abs(coeffs.p - p) > 0:
        raise DomainError(f"coefficient profiles were built for p={coeffs.p}, not {p}")
