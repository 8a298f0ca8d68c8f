"""Numerical checks on synthesized fields, collected in :class:`Diagnostics`.

The residual test differentiates the evaluator output in time by finite
differences (five-point stencil, step 1e-3 by default), so it does not reuse
the orbit equation that produced the field. Shell statistics are maxima, to
match sup-norm localization statements.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .families import OrbitCache
from .geometry import sphere_points
from .grids import GridSpec, regular_points
from .phase_plane import OdeCase, Variant, a_inverse, homoclinic
from .levels import rogue_center_level
from .synthesis import FieldKind, WaveField, orbit_family, synth_rogue_approximant

RESIDUAL_TOL = 1e-6
PARALLEL_TOL = 1e-10
PERIODIC_TOL = 1e-8


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    stderr: float
    radii: tuple
    maxima: tuple
    insufficient: bool

    @property
    def label(self):
        return "InsufficientDecay" if self.insufficient else f"{self.exponent:.6g} +- {self.stderr:.2g}"


@dataclass
class Diagnostics:
    residual_max: float | None = None
    residual_l2: float | None = None
    parallelism: float | None = None
    curl_defect: float | None = None
    periodicity_defect: float | None = None
    spatial_decay: DecayFit | None = None
    spacetime_decay: DecayFit | None = None
    support_radius: float | None = None
    convergence_table: list = field(default_factory=list)
    holder_ratios: list = field(default_factory=list)
    holder_bound: float | None = None
    pass_flags: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.pass_flags.values())

    def merge(self, other: "Diagnostics") -> "Diagnostics":
        out = replace(self)
        for k, v in asdict(other).items():
            if k in ("pass_flags", "meta"):
                continue
            if k in ("convergence_table", "holder_ratios"):
                if getattr(other, k):
                    setattr(out, k, list(getattr(other, k)))
            elif v is not None:
                setattr(out, k, getattr(other, k))
        out.pass_flags = {**self.pass_flags, **other.pass_flags}
        out.meta = {**self.meta, **other.meta}
        return out

    def to_dict(self):
        d = asdict(self)
        for key in ("spatial_decay", "spacetime_decay"):
            if d[key] is not None:
                d[key]["label"] = getattr(self, key).label
        d["passed"] = self.passed
        return _jsonable(d)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


# --- scalar extraction ----------------------------------------------------------

def projected_psi(fld: WaveField, x, t):
    """psi recovered from the evaluator: U(x, t) . direction(x)."""
    U = fld(x, t)
    d = fld.geo.direction(np.broadcast_to(np.asarray(x, float), U.shape), strict=False)
    return np.sum(U * d, axis=-1)


# integer weights (summing to zero) and a common denominator; differences are
# taken against the centre value so a constant signal gives exactly 0
_STENCILS = {
    3: (np.array([-1, 0, 1]), np.array([1.0, -2.0, 1.0]), 1.0),
    5: (np.array([-2, -1, 0, 1, 2]), np.array([-1.0, 16.0, -30.0, 16.0, -1.0]), 12.0),
}


def fd_second_derivative(func, t, h=1e-3, stencil=5):
    """Central finite difference of ``func(t)`` with the 3- or 5-point stencil."""
    offsets, weights, denom = _STENCILS[stencil]
    vals = [func(t + k * h) for k in offsets]
    center = vals[len(vals) // 2]
    acc = sum(w * (v - center) for w, v in zip(weights, vals))
    return center, acc / (denom * h * h)


def _sample(fld, grid, points=None, times=None):
    pts = regular_points(fld.geo, grid) if points is None else np.asarray(points, float).reshape(-1, 3)
    ts = grid.times() if times is None else np.asarray(times, float).ravel()
    return pts, ts


def ode_residual(fld: WaveField, grid: GridSpec | None = None, *, points=None, times=None,
                 h=1e-3, stencil=5, tol=RESIDUAL_TOL) -> Diagnostics:
    """Residual of the reduced scalar equation with finite-difference psi_tt."""
    pts, ts = _sample(fld, grid or default_grid(fld), points, times)
    X = pts[:, None, :]
    zeta = fld.geo.g(pts)[:, None]
    psi, dd = fd_second_derivative(lambda tt: projected_psi(fld, X, tt), ts[None, :], h, stencil)
    zeta = np.broadcast_to(zeta, psi.shape)
    r = np.abs(fld.residual_terms(zeta, psi, dd))
    rmax = float(np.max(r))
    rl2 = float(np.sqrt(np.mean(r ** 2)))
    return Diagnostics(residual_max=rmax, residual_l2=rl2, pass_flags={"residual": rmax <= tol},
                       meta={"residual_step": h, "stencil": stencil, "n_points": int(pts.shape[0]),
                             "n_times": int(ts.size)})


def residual_order(fld: WaveField, grid=None, *, points=None, times=None, steps=(0.02, 0.01)):
    """Observed convergence order of the 3-point residual under step halving."""
    r = [ode_residual(fld, grid, points=points, times=times, h=h, stencil=3).residual_max
         for h in steps]
    return math.log(r[0] / r[1]) / math.log(steps[0] / steps[1]), r


def parallelism(fld: WaveField, grid=None, *, points=None, times=None, tol=PARALLEL_TOL):
    """max |U x direction| over the sample."""
    pts, ts = _sample(fld, grid or default_grid(fld), points, times)
    U = fld.on_grid(pts, ts)
    d = fld.geo.direction(pts, strict=False)[:, None, :]
    d = np.broadcast_to(d, U.shape)
    if np.iscomplexobj(U):
        cross = np.maximum(np.abs(np.cross(U.real, d)).max(initial=0.0),
                           np.abs(np.cross(U.imag, d)).max(initial=0.0))
    else:
        cross = np.abs(np.cross(U, d)).max(initial=0.0)
    val = float(cross)
    return Diagnostics(parallelism=val, pass_flags={"parallelism": val <= tol})


def periodicity_defect(fld: WaveField, grid=None, *, points=None, times=None, tol=PERIODIC_TOL):
    """max |U(x, t + T) - U(x, t)|."""
    pts, ts = _sample(fld, grid or default_grid(fld), points, times)
    if not fld.periodic:
        return Diagnostics(periodicity_defect=None, meta={"periodic": False})
    a = fld.on_grid(pts, ts)
    b = fld.on_grid(pts, ts + fld.T)
    val = float(np.max(np.abs(a - b)))
    return Diagnostics(periodicity_defect=val, pass_flags={"periodicity": val <= tol})


def discrete_curl_defect(fld, points, times, h=1e-3, scale=None):
    """Central-difference curl of U(., t), max norm over the sample, divided by max |U|.

    ``fld`` is any callable ``(x, t) -> U``; ``scale`` overrides max |U|.
    """
    pts = np.asarray(points, float).reshape(-1, 3)
    ts = np.asarray(times, float).ravel()
    X = pts[:, None, :]
    Tt = ts[None, :]
    jac = np.empty(pts.shape[:1] + ts.shape + (3, 3), dtype=complex if _is_complex(fld) else float)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        jac[..., :, j] = (fld(X + e, Tt) - fld(X - e, Tt)) / (2.0 * h)
    curl = np.stack([jac[..., 2, 1] - jac[..., 1, 2],
                     jac[..., 0, 2] - jac[..., 2, 0],
                     jac[..., 1, 0] - jac[..., 0, 1]], axis=-1)
    if scale is None:
        scale = float(np.nanmax(np.abs(fld(X, Tt))))
    if scale == 0:
        return 0.0
    return float(np.nanmax(np.abs(curl))) / scale


def _is_complex(fld):
    return getattr(fld, "is_complex", False)


def azimuthal_control(x, t):
    """Unit azimuthal field (-x2, x1, 0)/r: not a gradient, curl = e3 / r."""
    x = np.asarray(x, float)
    r = np.hypot(x[..., 0], x[..., 1])
    r = np.where(r > 0, r, np.nan)
    out = np.stack([-x[..., 1] / r, x[..., 0] / r, np.zeros_like(r)], axis=-1)
    return out * np.ones(np.shape(t))[..., None]


def corrupt(fld: WaveField, factor=1.01) -> WaveField:
    """Negative control: psi multiplied by ``factor`` (no longer a solution)."""
    base = fld.profile

    def prof(zeta, t):
        return tuple(factor * v for v in base(zeta, t))

    meta = dict(fld.meta)
    meta["corrupted"] = factor
    return replace(fld, profile=prof, meta=meta)


# --- decay ----------------------------------------------------------------------

def _fit(radii, maxima):
    radii = np.asarray(radii, float)
    m = np.asarray(maxima, float)
    ok = m > 0
    if ok.sum() < 3:
        return math.nan, math.nan, True
    x, y = radii[ok], np.log(m[ok])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope = coef[0]
    dof = max(x.size - 2, 1)
    resid = y - A @ coef
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    se = math.sqrt(max(cov[0, 0], 0.0))
    insufficient = not (-slope > 2.0 * se and -slope > 1e-8)
    return float(-slope), se, insufficient


def default_shells(r_max, n=8):
    """Fit window radii between 0.3 and 0.9 of ``r_max``."""
    return np.linspace(0.3 * r_max, 0.9 * r_max, n)


def decay_fit(fld, mode="spatial", shells=None, *, r_max=10.0, times=None, n_dirs=400,
              n_split=21, relative=True) -> DecayFit:
    """Fit ``log max_shell |U - U_inf|`` against the shell radius.

    ``spatial``: shells ``|x| = R``, maximum also over ``times``
    (default: one period, or [-5, 5] for non-periodic fields).
    ``spacetime``: shells ``|x| + |t| = R``.
    ``relative`` subtracts the field's reference (if any).
    """
    shells = default_shells(r_max) if shells is None else np.asarray(shells, float)
    if shells.size < 4:
        raise ValueError("decay_fit needs at least 4 shells")
    ref = fld.reference if (relative and getattr(fld, "reference", None) is not None) else None
    dirs = sphere_points(n_dirs)

    def diff(x, t):
        u = fld(x, t)
        if ref is not None:
            u = u - ref(x, t)
        return np.linalg.norm(np.nan_to_num(u, nan=0.0), axis=-1)

    if times is None:
        T = getattr(fld, "T", math.inf)
        times = np.linspace(0.0, T, 24) if math.isfinite(T) else np.linspace(-5.0, 5.0, 41)
    times = np.asarray(times, float)
    maxima = []
    for R in shells:
        if mode == "spatial":
            x = dirs * R
            x = x[~_singular(fld, x)]
            maxima.append(float(np.max(diff(x[:, None, :], times[None, :]))))
        elif mode == "spacetime":
            best = 0.0
            for lam in np.linspace(0.0, 1.0, n_split):
                r = lam * R
                tt = (1.0 - lam) * R
                x = dirs * max(r, 1e-3)
                x = x[~_singular(fld, x)]
                tv = np.array([-tt, tt])
                best = max(best, float(np.max(diff(x[:, None, :], tv[None, :]))))
            maxima.append(best)
        else:
            raise ValueError(f"unknown decay mode {mode!r}")
    expo, se, insufficient = _fit(shells, maxima)
    return DecayFit(expo, se, tuple(shells.tolist()), tuple(maxima), insufficient)


def _singular(fld, x):
    geo = getattr(fld, "geo", None)
    return geo.singular(x) if geo is not None else np.zeros(x.shape[0], bool)


# --- convergence of approximants -------------------------------------------------

def convergence_check(rogue: WaveField, T_list, *, points=None, times=None, grid=None):
    """sup-grid |U_T - U_0| for each T, and whether the errors strictly decrease."""
    if grid is None:
        grid = GridSpec(extent=3.0, n=9, t0=-3.0, t1=3.0, nt=13)
    pts, ts = _sample(rogue, grid, points, times)
    U0 = rogue.on_grid(pts, ts)
    rows = []
    for T in T_list:
        UT = synth_rogue_approximant(rogue.p, rogue.geo, rogue.coeffs, T, shift=rogue.shift)
        err = float(np.max(np.abs(UT.on_grid(pts, ts) - U0)))
        rows.append((float(T), err))
    errs = [e for _, e in rows]
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    return Diagnostics(convergence_table=rows, pass_flags={"convergence": decreasing})


def outer_shell_floor(fld: WaveField, radius, times=None, n_dirs=400):
    """min over shell points of max_t |U(x, t)| (a positive floor means no localization)."""
    x = sphere_points(n_dirs) * radius
    x = x[~fld.geo.singular(x)]
    if times is None:
        times = np.linspace(0.0, fld.T, 32)
    U = fld.on_grid(x, times)
    return float(np.min(np.max(np.linalg.norm(U, axis=-1), axis=1)))


# --- Hoelder continuity of the normalized family --------------------------------

def holder_constant(p, n=2001, extra=()):
    """Largest sampled ``|a^-1(c1) - a^-1(c2)| / sqrt|c1 - c2|``.

    Pairs are all consecutive and endpoint pairs of a grid clustered at both
    ends of [(1-p)/(1+p), 0] plus the values in ``extra``.
    """
    c0 = rogue_center_level(p)
    u = 0.5 - 0.5 * np.cos(np.linspace(0.0, math.pi, n))
    c = np.unique(np.concatenate([c0 + (0.0 - c0) * u, np.asarray(extra, float).ravel()]))
    c = np.clip(c, c0, 0.0)
    a = np.asarray(a_inverse(p, c))
    best = 0.0
    for stride in (1, 2, 4, 16, 64, 256):
        d = np.abs(a[stride:] - a[:-stride]) / np.sqrt(np.abs(c[stride:] - c[:-stride]))
        best = max(best, float(np.max(d)))
    for anchor in (0, -1):
        m = np.arange(c.size) != (anchor % c.size)
        d = np.abs(a[m] - a[anchor]) / np.sqrt(np.abs(c[m] - c[anchor]))
        best = max(best, float(np.max(d)))
    return best


def holder_bound(p, T, H):
    return H * math.exp(T * (2.0 + p * (p + 1.0) / 2.0) / 2.0)


def normalized_values(p, c, t, family: OrbitCache | None = None):
    """``y(t; c)`` of the normalized family for arrays ``c`` (rows) and ``t`` (columns)."""
    c = np.asarray(c, float).ravel()
    t = np.asarray(t, float).ravel()
    out = np.empty((c.size, t.size))
    zero = c == 0.0
    if zero.any():
        out[zero] = homoclinic(p)(t)[0][None, :]
    if (~zero).any():
        fam = family or orbit_family(OdeCase(Variant.ROGUE, p))
        cc = np.broadcast_to(c[~zero][:, None], (int((~zero).sum()), t.size))
        out[~zero] = fam.evaluate(cc, np.broadcast_to(t[None, :], cc.shape))[0]
    return out


def holder_check(p, T, c_pairs, *, nt=2001):
    """Ratios ``max_[0,T] |y(.;c1) - y(.;c2)| / sqrt|c1 - c2|`` against ``C_T``."""
    pairs = np.asarray(c_pairs, float).reshape(-1, 2)
    t = np.linspace(0.0, T, nt)
    H = holder_constant(p, extra=pairs)
    bound = holder_bound(p, T, H)
    fam = orbit_family(OdeCase(Variant.ROGUE, p))
    y1 = normalized_values(p, pairs[:, 0], t, fam)
    y2 = normalized_values(p, pairs[:, 1], t, fam)
    gap = np.sqrt(np.abs(pairs[:, 0] - pairs[:, 1]))
    diff = np.max(np.abs(y1 - y2), axis=1)
    ratios = np.where(gap > 0, diff / np.where(gap > 0, gap, 1.0), 0.0)
    ok = bool(np.all(ratios <= bound))
    return Diagnostics(holder_ratios=ratios.tolist(), holder_bound=bound,
                       pass_flags={"holder": ok}, meta={"holder_H": H, "holder_T": T, "p": p})


# --- suites ---------------------------------------------------------------------

def default_grid(fld: WaveField) -> GridSpec:
    """Grid used when none is given: 9^3 points on [-3, 3]^3 and 16 times."""
    T = fld.T
    if math.isfinite(T):
        return GridSpec(extent=3.0, n=9, t0=0.0, t1=T, nt=16)
    return GridSpec(extent=3.0, n=9, t0=-4.0, t1=4.0, nt=16)


def run_suite(fld: WaveField, grid: GridSpec | None = None, *, curl_h=1e-3,
              tolerances=None) -> Diagnostics:
    """Residual, parallelism, periodicity and curl checks on one grid."""
    tol = {"residual": RESIDUAL_TOL, "parallel": PARALLEL_TOL, "periodic": PERIODIC_TOL}
    tol.update(tolerances or {})
    grid = grid or default_grid(fld)
    pts = regular_points(fld.geo, grid)
    ts = grid.times()
    d = ode_residual(fld, points=pts, times=ts, tol=tol["residual"])
    d = d.merge(parallelism(fld, points=pts, times=ts, tol=tol["parallel"]))
    if fld.periodic:
        d = d.merge(periodicity_defect(fld, points=pts, times=ts, tol=tol["periodic"]))
    # curl away from the singular set only (stencil must not straddle it)
    off = pts[~_near_singular(fld.geo, pts, 4 * curl_h)]
    if off.size:
        d.curl_defect = discrete_curl_defect(fld, off[:200], ts[:4], curl_h)
    d.meta.update({"kind": fld.kind.value, "p": fld.p, "T": fld.T})
    return d


def _near_singular(geo, pts, radius):
    mask = geo.singular(pts)
    for j in range(3):
        for s in (-1.0, 1.0):
            e = np.zeros(3)
            e[j] = s * radius
            mask |= geo.singular(pts + e)
    return mask
