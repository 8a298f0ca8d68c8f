"""Level-set geometry g, its gradient direction, and the coefficient profiles.

A field ``U = psi(g(x), t) grad g / |grad g|`` is a gradient (hence curl-free)
whenever ``|grad g| = G(g)``. Built-in families use ``r = sqrt(x1^2 + x2^2)``:

======================  =====================================  ==================
family                  g                                      G
======================  =====================================  ==================
``cone_axial``          ``gamma |r - r0| + x3``                ``sqrt(1+gamma^2)``
``cone_abs_axial``      ``gamma |r - r0| + |x3|``              ``sqrt(1+gamma^2)``
``torus``               ``sqrt((r - r0)^2 + x3^2)``            ``1``
======================  =====================================  ==================

Points where g is not differentiable (kinks of the absolute values, the
axis, the core circle of the torus) form the singular set; a point counts as
singular when it lies within ``tube`` of it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import DomainError, SingularPoint
from .expr import compile_expr

TUBE = 1e-6
FD_STEP = 1e-6


class Family(str, Enum):
    CONE_AXIAL = "cone_axial"
    CONE_ABS_AXIAL = "cone_abs_axial"
    TORUS = "torus"
    CUSTOM = "custom"


def _points(x):
    x = np.asarray(x, float)
    if x.shape[-1:] != (3,):
        raise DomainError("points must have a trailing axis of length 3")
    return x


def _cyl(x):
    r = np.hypot(x[..., 0], x[..., 1])
    safe = np.where(r > 0, r, 1.0)
    ex = np.stack([x[..., 0] / safe, x[..., 1] / safe, np.zeros_like(r)], axis=-1)
    return r, ex


@dataclass(frozen=True)
class GeometryProfile:
    """Scalar field g with gradient, eikonal function G and singular set.

    Use the ``cone_axial``, ``cone_abs_axial``, ``torus`` and ``custom``
    constructors. All methods take arrays of points with a trailing axis of 3.
    """

    family: Family
    gamma: float = 1.0
    r0: float = 0.0
    tube: float = TUBE
    custom_g: Callable | None = field(default=None, repr=False)
    custom_G: Callable | None = field(default=None, repr=False)
    custom_grad: Callable | None = field(default=None, repr=False)
    sources: dict = field(default_factory=dict, compare=False)

    # ---- constructors -------------------------------------------------

    @classmethod
    def cone_axial(cls, gamma=1.0, r0=0.0, tube=TUBE):
        _check_params(gamma, r0, tube)
        return cls(Family.CONE_AXIAL, float(gamma), float(r0), tube)

    @classmethod
    def cone_abs_axial(cls, gamma=1.0, r0=0.0, tube=TUBE):
        _check_params(gamma, r0, tube)
        return cls(Family.CONE_ABS_AXIAL, float(gamma), float(r0), tube)

    @classmethod
    def torus(cls, r0=0.0, tube=TUBE):
        _check_params(1.0, r0, tube)
        return cls(Family.TORUS, 1.0, float(r0), tube)

    @classmethod
    def custom(cls, g: str, G: str, grad=None, tube=TUBE):
        """Profile from expression strings: ``g`` in x1, x2, x3, r; ``G`` in zeta.

        ``grad`` optionally gives the three gradient components as
        expressions; otherwise central differences are used.
        """
        names = {"x1", "x2", "x3", "r"}
        g_expr = compile_expr(g, names)
        G_expr = compile_expr(G, {"zeta"})
        grad_expr = None
        if grad is not None:
            if len(grad) != 3:
                raise DomainError("grad needs exactly three expressions")
            grad_expr = [compile_expr(s, names) for s in grad]
        src = {"g": g, "G": G, "grad": list(grad) if grad is not None else None}
        return cls(Family.CUSTOM, 1.0, 0.0, tube, g_expr, G_expr, grad_expr, src)

    # ---- evaluation ---------------------------------------------------

    @property
    def analytic(self) -> bool:
        return self.family is not Family.CUSTOM or self.custom_grad is not None

    def g(self, x):
        x = _points(x)
        r = np.hypot(x[..., 0], x[..., 1])
        if self.family is Family.CONE_AXIAL:
            return self.gamma * np.abs(r - self.r0) + x[..., 2]
        if self.family is Family.CONE_ABS_AXIAL:
            return self.gamma * np.abs(r - self.r0) + np.abs(x[..., 2])
        if self.family is Family.TORUS:
            return np.hypot(r - self.r0, x[..., 2])
        return self.custom_g(**_env(x))

    def G(self, zeta):
        zeta = np.asarray(zeta, float)
        if self.family is Family.TORUS:
            return np.ones_like(zeta)
        if self.family is Family.CUSTOM:
            return self.custom_G(zeta=zeta)
        return np.full_like(zeta, math.sqrt(1.0 + self.gamma ** 2))

    def grad(self, x):
        """Gradient of g (analytic for built-ins; NaN-free only off the singular set)."""
        x = _points(x)
        if self.family is Family.CUSTOM:
            if self.custom_grad is not None:
                env = _env(x)
                return np.stack([np.broadcast_to(e(**env), x.shape[:-1]) for e in self.custom_grad],
                                axis=-1)
            return self.fd_grad(x)
        r, er = _cyl(x)
        e3 = np.zeros(x.shape)
        e3[..., 2] = 1.0
        if self.family is Family.TORUS:
            d = np.hypot(r - self.r0, x[..., 2])
            safe = np.where(d > 0, d, 1.0)
            out = ((r - self.r0)[..., None] * er + x[..., 2:3] * e3) / safe[..., None]
            if self.r0 == 0.0:
                # radial field, regular on the axis
                out = x / safe[..., None]
            return out
        radial = self.gamma * np.sign(r - self.r0)[..., None] * er
        if self.family is Family.CONE_AXIAL:
            return radial + e3
        return radial + np.sign(x[..., 2])[..., None] * e3

    def fd_grad(self, x):
        """Central differences with step ``FD_STEP * (1 + |x|)``."""
        x = _points(x)
        h = FD_STEP * (1.0 + np.linalg.norm(x, axis=-1))
        out = np.empty(x.shape)
        for i in range(3):
            dx = np.zeros(x.shape)
            dx[..., i] = h
            out[..., i] = (self.g(x + dx) - self.g(x - dx)) / (2.0 * h)
        return out

    def singular(self, x):
        """Boolean mask of points within ``tube`` of the singular set."""
        x = _points(x)
        r = np.hypot(x[..., 0], x[..., 1])
        tube = self.tube
        if self.family is Family.TORUS:
            d = np.hypot(r - self.r0, x[..., 2])
            mask = d <= tube
            if self.r0 > 0:
                mask |= r <= tube
            return mask
        if self.family in (Family.CONE_AXIAL, Family.CONE_ABS_AXIAL):
            mask = (np.abs(r - self.r0) <= tube) | (r <= tube)
            if self.family is Family.CONE_ABS_AXIAL:
                mask |= np.abs(x[..., 2]) <= tube
            return mask
        with np.errstate(all="ignore"):
            gr = self.grad(x)
            n = np.linalg.norm(gr, axis=-1)
            return ~np.isfinite(n) | (n <= tube) | ~np.isfinite(self.g(x))

    def direction(self, x, strict=True):
        """Unit vectors ``grad g / |grad g|``.

        With ``strict`` a singular point raises :class:`SingularPoint`;
        otherwise those rows are NaN.
        """
        x = _points(x)
        bad = self.singular(x)
        if strict and np.any(bad):
            first = np.asarray(x[bad])[0] if np.ndim(bad) else x
            raise SingularPoint(f"point {np.asarray(first).tolist()} lies on the singular set")
        with np.errstate(all="ignore"):
            gr = self.grad(x)
            n = np.linalg.norm(gr, axis=-1, keepdims=True)
            u = gr / n
        u = np.where(bad[..., None], np.nan, u)
        return u

    def support_radius(self, R):
        """Radius rho with ``g(x) >= R`` for all ``|x| >= rho`` (None if g does not grow)."""
        R = float(R)
        if self.family is Family.TORUS:
            return max(R, 0.0) + self.r0
        if self.family is Family.CONE_ABS_AXIAL:
            return max(R, 0.0) / min(self.gamma, 1.0) + self.r0
        return None

    def to_dict(self):
        if self.family is Family.CUSTOM:
            return {"family": self.family.value, **self.sources}
        return {"family": self.family.value, "gamma": self.gamma, "r0": self.r0}


def _check_params(gamma, r0, tube):
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    if not r0 >= 0:
        raise DomainError("r0 must be non-negative")
    if not tube >= 0:
        raise DomainError("tube radius must be non-negative")


def _env(x):
    return {"x1": x[..., 0], "x2": x[..., 1], "x3": x[..., 2], "r": np.hypot(x[..., 0], x[..., 1])}


def eval_direction(geo: GeometryProfile, x):
    """``grad g / |grad g|`` at ``x``; raises SingularPoint on the singular set."""
    return geo.direction(x, strict=True)


@dataclass(frozen=True)
class CompatibilityReport:
    max_defect: float
    threshold: float
    analytic: bool
    n_points: int
    inf_G: float

    @property
    def passed(self):
        return self.max_defect <= self.threshold and self.inf_G > 0


def check_compatibility(geo: GeometryProfile, sample) -> CompatibilityReport:
    """Largest relative defect of ``|grad g| - G(g)`` over the non-singular sample."""
    x = _points(sample).reshape(-1, 3)
    x = x[~geo.singular(x)]
    if x.size == 0:
        raise DomainError("sample has no non-singular points")
    n = np.linalg.norm(geo.grad(x), axis=-1)
    Gv = geo.G(geo.g(x))
    defect = float(np.max(np.abs(n - Gv) / np.abs(Gv)))
    threshold = 1e-8 if geo.analytic else 1e-5
    return CompatibilityReport(defect, threshold, geo.analytic, x.shape[0], float(np.min(Gv)))


def sphere_points(n, radius=1.0):
    """Fibonacci lattice on the sphere, with both poles included."""
    i = np.arange(n, dtype=float)
    z = 1.0 - 2.0 * i / max(n - 1, 1)
    rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return radius * np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)


@dataclass(frozen=True)
class AccumulationReport:
    radii: tuple
    g_min: tuple
    g_max: tuple
    kind: str  # "empty", "bounded", "unbounded" or "all"
    interval: tuple

    @property
    def empty(self):
        return self.kind == "empty"


def accumulation_set_probe(geo: GeometryProfile, radii, n_dirs=4000, slope_tol=0.05):
    """Estimate the set of finite limit values of g along sequences with |x| -> inf.

    The range of g on each large sphere is recorded. An end of that range
    drifting linearly with the radius (fitted slope above ``slope_tol``) is
    treated as escaping to infinity. Because spheres are connected, when
    both ends escape in opposite directions every real value is attained on
    all large spheres and the set is all of R.
    """
    radii = np.asarray(radii, float)
    if radii.size < 2 or np.any(np.diff(radii) <= 0):
        raise DomainError("radii must be increasing with at least two entries")
    base = sphere_points(n_dirs)
    lo, hi = [], []
    for R in radii:
        x = base * R
        x = x[~geo.singular(x)]
        gv = geo.g(x)
        lo.append(float(np.min(gv)))
        hi.append(float(np.max(gv)))
    slo = np.polyfit(radii, lo, 1)[0]
    shi = np.polyfit(radii, hi, 1)[0]
    lo_up, lo_down = slo > slope_tol, slo < -slope_tol
    hi_up, hi_down = shi > slope_tol, shi < -slope_tol
    if lo_up or hi_down:
        kind, interval = "empty", (math.nan, math.nan)
    elif lo_down and hi_up:
        kind, interval = "all", (-math.inf, math.inf)
    elif lo_down or hi_up:
        kind = "unbounded"
        interval = (-math.inf if lo_down else lo[-1], math.inf if hi_up else hi[-1])
    else:
        kind, interval = "bounded", (lo[-1], hi[-1])
    return AccumulationReport(tuple(radii.tolist()), tuple(lo), tuple(hi), kind, interval)


@dataclass(frozen=True)
class CoefficientProfiles:
    """Coefficients ``s~, q~, V~`` as functions of ``zeta = g(x)``.

    ``sigma = sqrt(q/s)``, ``tau = (q/V)^(1/(p-1))``. The limits at spatial
    infinity and the decay rate are optional data used by the constructions.
    """

    p: float
    s: Callable
    q: Callable
    V: Callable
    sigma_inf: float | None = None
    tau_inf: float | None = None
    delta: float | None = None
    sources: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.p > 1:
            raise DomainError("p must exceed 1")
        for name in ("sigma_inf", "tau_inf", "delta"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DomainError(f"{name} must be positive")

    @classmethod
    def from_expressions(cls, p, s="1", q="1", V="1", **kw):
        fs = [_zeta_fn(e) for e in (s, q, V)]
        return cls(p, *fs, sources={"s": str(s), "q": str(q), "V": str(V)}, **kw)

    @classmethod
    def from_sigma_tau(cls, p, sigma, tau, s=None, **kw):
        """Build ``q = s sigma^2`` and ``V = q / tau^(p-1)`` (``s`` defaults to 1)."""
        sig = _zeta_fn(sigma)
        ta = _zeta_fn(tau)
        sf = _zeta_fn(1.0 if s is None else s)

        def q(z):
            return sf(z) * sig(z) ** 2

        def V(z):
            return q(z) / ta(z) ** (p - 1.0)

        src = {"sigma": str(sigma), "tau": str(tau), "s": str(1.0 if s is None else s)}
        return cls(p, sf, q, V, sources=src, **kw)

    def sigma(self, zeta):
        return np.sqrt(self.q(zeta) / self.s(zeta))

    def tau(self, zeta):
        return (self.q(zeta) / self.V(zeta)) ** (1.0 / (self.p - 1.0))

    def values(self, zeta):
        zeta = np.asarray(zeta, float)
        return (np.broadcast_to(self.s(zeta), zeta.shape), np.broadcast_to(self.q(zeta), zeta.shape),
                np.broadcast_to(self.V(zeta), zeta.shape))

    def check_positive(self, zeta):
        s, q, V = self.values(zeta)
        ok = np.isfinite(s) & np.isfinite(q) & np.isfinite(V) & (s > 0) & (q > 0) & (V > 0)
        if not np.all(ok):
            z = np.asarray(zeta, float)[~ok]
            raise DomainError(f"coefficients must be positive and finite; fails at zeta={z.ravel()[0]:.6g}")

    def b2(self, zeta, sign=+1, rtol=1e-12):
        """Ordering predicate: sigma <= sigma_inf (sign=+1) or >= (sign=-1), not identically equal."""
        if self.sigma_inf is None:
            return False
        d = sign * (self.sigma(zeta) - self.sigma_inf)
        tol = rtol * self.sigma_inf
        return bool(np.all(d <= tol) and np.any(d < -tol))

    def sigma_decay_bound(self, x, geo):
        """max |sigma(x) - sigma_inf| e^{delta |x|} on the sample (None if data missing)."""
        if self.sigma_inf is None or self.delta is None:
            return None
        x = _points(x).reshape(-1, 3)
        z = geo.g(x)
        return float(np.max(np.abs(self.sigma(z) - self.sigma_inf)
                            * np.exp(self.delta * np.linalg.norm(x, axis=-1))))


def _zeta_fn(value):
    """A function of zeta from a number, an expression string or a callable."""
    if callable(value):
        return value
    if isinstance(value, (int, float)):
        val = float(value)
        return lambda z: np.full(np.shape(z), val)
    e = compile_expr(str(value), {"zeta"})
    return lambda z: e(zeta=np.asarray(z, float))
