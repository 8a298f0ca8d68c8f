"""Acceptance criteria 1-11, each with its tolerance and runtime budget.

Every test prints one ``criterion N PASS/FAIL`` line; the lines are repeated
in the pytest terminal summary.
"""
from __future__ import annotations

import math

import numpy as np

from curlwave import (CoefficientProfiles, GeometryProfile, GridSpec, OdeCase, PhasePoint, Variant,
                      a_inverse, apply_phase_shift, integrate_orbit, invert_period, period,
                      period_derivative_rogue, period_limit, synth_breather, synth_dark_breather,
                      synth_dark_constant, synth_explicit_rogue, synth_monochromatic, synth_rogue,
                      synth_rogue_approximant)
from curlwave.grids import regular_points
from curlwave.levels import rogue_center_level
from curlwave.synthesis import orbit_family, shifted_curve
from curlwave.verification import (convergence_check, corrupt, default_grid, holder_check, ode_residual,
                                   parallelism)

TORUS = GeometryProfile.torus(0.0)


def _rogue_coeffs(p=3):
    return CoefficientProfiles.from_expressions(p, 1, 1, "exp(zeta)")


def test_criterion_01_period_endpoints(criterion):
    with criterion(1, "period-map endpoints", 5) as c:
        worst = 0.0
        for p in (2, 3, 5):
            case = OdeCase(Variant.ROGUE, p)
            L = period(case, rogue_center_level(p) + 1e-6)
            err = abs(L - 2 * math.pi / math.sqrt(p - 1))
            worst = max(worst, err)
            assert err < 1e-3, (p, L)
        err = abs(period(OdeCase(Variant.PLUS, 3), 1e-8) - 2 * math.pi)
        assert err < 1e-3
        c.detail = f"max err {max(worst, err):.2e}"


def test_criterion_02_inverse_derivative_endpoint(criterion):
    with criterion(2, "derivative of M at the endpoint", 30) as c:
        out = []
        for p in (2, 3):
            case = OdeCase(Variant.ROGUE, p)
            s0 = period_limit(case)
            target = 12 * (p - 1) ** 1.5 / (math.pi * p * (p + 3))
            hs = 10.0 ** -np.arange(2, 8)
            q = np.array([(invert_period(case, s0 + h) - rogue_center_level(p)) / h for h in hs])
            rel = np.abs(q / target - 1)
            assert np.all(np.diff(rel) < 0), rel
            assert rel[-1] < 0.01
            out.append(f"p={p}: {q[-1]:.6f} vs {target:.6f}")
        assert abs(12 * 2 ** 1.5 / (math.pi * 18) - 0.60022) < 1e-4
        c.detail = "; ".join(out)


def test_criterion_03_derivative_identity(criterion):
    with criterion(3, "derivative identity vs finite differences", 60) as c:
        worst = 0.0
        for p in (1.5, 2, 3):
            case = OdeCase(Variant.ROGUE, p)
            c0 = rogue_center_level(p)
            cs = c0 * np.linspace(0.05, 0.95, 20)
            h = 1e-5 * abs(c0)
            fd = (period(case, cs + h) - period(case, cs - h)) / (2 * h)
            rel = np.abs(period_derivative_rogue(p, cs) / fd - 1)
            worst = max(worst, float(rel.max()))
            assert np.all(rel < 1e-5), (p, rel.max())
        c.detail = f"max rel {worst:.1e}"


def _sample_levels(case, n, rng):
    u = rng.uniform(0.02, 0.98, n)
    if case.variant is Variant.PLUS:
        return 4.0 * u
    lo, hi = {Variant.MINUS: (0.0, (case.p - 1) / (case.p + 1)),
              Variant.ROGUE: (rogue_center_level(case.p), 0.0)}[case.variant]
    return lo + (hi - lo) * u


def test_criterion_04_oracle_equivalence(criterion):
    with criterion(4, "quadrature vs time-of-flight periods", 60) as c:
        rng = np.random.default_rng(2024)
        worst = 0.0
        for variant in Variant:
            case = OdeCase(variant, 3)
            for lev in _sample_levels(case, 50, rng):
                if variant is Variant.ROGUE:
                    pt = PhasePoint(a_inverse(3, lev), 0.0)
                else:
                    pt = PhasePoint(0.0, math.sqrt(lev))
                tof = integrate_orbit(case, pt).period
                err = abs(tof - period(case, lev))
                worst = max(worst, err)
                assert err < 1e-8, (variant, lev, err)
        c.detail = f"max |diff| {worst:.1e}"


def test_criterion_05_explicit_rogue(criterion):
    with criterion(5, "explicit rogue wave on 17^3 x 33", 10) as c:
        fld = synth_rogue(3, TORUS, _rogue_coeffs())
        grid = GridSpec(extent=3.0, n=17, t0=-4.0, t1=4.0, nt=33)
        x = regular_points(TORUS, grid)
        t = grid.times()
        r = np.linalg.norm(x, axis=1)
        exact = (math.sqrt(2) * np.exp(-r / 2))[:, None, None] / np.cosh(t)[None, :, None] \
            * (x / r[:, None])[:, None, :]
        err = float(np.max(np.abs(fld.on_grid(x, t) - exact)))
        assert err <= 1e-8
        c.detail = f"max err {err:.1e}"


def _all_kinds():
    p = 3
    plus = CoefficientProfiles.from_sigma_tau(p, "1 - 0.5*exp(-zeta^2)", 1.0, sigma_inf=1.0)
    minus = CoefficientProfiles.from_sigma_tau(p, "1 + 0.5*exp(-zeta^2)", 1.0, sigma_inf=1.0)
    dark = CoefficientProfiles.from_sigma_tau(p, "1 + exp(-zeta^2)", "1 + 2*exp(-zeta^2)",
                                              sigma_inf=1.0, tau_inf=1.0)
    mono = CoefficientProfiles.from_sigma_tau(p, "1 + 0.3*exp(-zeta^2)", "1 + exp(-zeta)")
    sample = regular_points(TORUS, GridSpec())
    return [
        synth_breather(+1, p, TORUS, plus, sample=sample),
        synth_breather(-1, p, TORUS, minus, sample=sample),
        synth_dark_breather(p, TORUS, dark, math.sqrt(2), sample=sample),
        synth_dark_constant(p, TORUS, 8.0),
        synth_rogue(p, TORUS, _rogue_coeffs(), sample=sample),
        synth_rogue_approximant(p, TORUS, _rogue_coeffs(), 20.0, sample=sample),
        synth_monochromatic("rogue", p, TORUS, mono, 1.0),
        synth_explicit_rogue(TORUS),
    ]


def test_criterion_06_residual_suite(criterion):
    with criterion(6, "residual suite over all kinds", 120) as c:
        worst_res, worst_par, min_bad = 0.0, 0.0, math.inf
        for fld in _all_kinds():
            grid = default_grid(fld)
            res = ode_residual(fld, grid)
            par = parallelism(fld, grid)
            assert res.residual_max <= 1e-6, (fld.kind, res.residual_max)
            assert par.parallelism <= 1e-10, (fld.kind, par.parallelism)
            bad = ode_residual(corrupt(fld), grid)
            assert not bad.pass_flags["residual"], fld.kind
            assert bad.residual_max > 1e-3, (fld.kind, bad.residual_max)
            worst_res = max(worst_res, res.residual_max)
            worst_par = max(worst_par, par.parallelism)
            min_bad = min(min_bad, bad.residual_max)
        c.detail = f"8 kinds, residual <= {worst_res:.1e}, parallel <= {worst_par:.1e}, controls >= {min_bad:.1e}"


def test_criterion_07_compact_support(criterion):
    with criterion(7, "compact support outside the rho-ball", 10) as c:
        R = 2.0
        geo = GeometryProfile.torus(0.5)
        co = CoefficientProfiles.from_sigma_tau(3, "1 - 0.5*max(0, 1 - zeta^2/4)^2", 1.0, sigma_inf=1.0)
        fld = synth_breather(+1, 3, geo, co)
        rho = geo.support_radius(R)
        grid = GridSpec(extent=2 * rho, n=21, t0=0.0, t1=fld.T, nt=12)
        x = regular_points(geo, grid)
        U = fld.on_grid(x, grid.times())
        outside = np.linalg.norm(x, axis=1) >= rho
        assert outside.sum() > 0
        assert np.all(U[outside] == 0.0)
        assert np.max(np.abs(U[~outside])) > 0
        c.detail = f"rho={rho:g}, {int(outside.sum())} outer points exactly zero"


def test_criterion_08_convergence(criterion):
    with criterion(8, "U_T -> U_0 for T = 10, 20, 40", 60) as c:
        d = convergence_check(synth_rogue(3, TORUS, _rogue_coeffs()), [10.0, 20.0, 40.0])
        errs = [e for _, e in d.convergence_table]
        assert errs[0] > errs[1] > errs[2]
        assert d.pass_flags["convergence"]
        c.detail = "errors " + ", ".join(f"{e:.1e}" for e in errs)


def test_criterion_09_holder(criterion):
    with criterion(9, "Hoelder bound on 50 random pairs", 60) as c:
        rng = np.random.default_rng(7)
        out = []
        for p, T in ((2, 5.0), (3, 5.0), (3, 10.0)):
            pairs = rng.uniform(rogue_center_level(p), 0.0, size=(50, 2))
            d = holder_check(p, T, pairs)
            assert d.pass_flags["holder"], (p, T)
            out.append(f"({p},{T:g}) max ratio {max(d.holder_ratios):.2f} <= {d.holder_bound:.3g}")
        c.detail = "; ".join(out)


def test_criterion_10_amplitude_expansion(criterion):
    with criterion(10, "amplitude expansion exponent", 30) as c:
        out = []
        for p in (2, 3):
            case = OdeCase(Variant.PLUS, p)
            gap = np.logspace(-3, -6, 10)
            M = np.asarray(invert_period(case, 2 * math.pi - gap))
            slope, _ = np.polyfit(np.log(gap), 0.5 * np.log(M), 1)
            expect = 1 / (p - 1)
            assert abs(slope / expect - 1) < 0.02, (p, slope)
            out.append(f"p={p}: {slope:.5f} vs {expect:.5f}")
        c.detail = "; ".join(out)


def test_criterion_11_curve_shift(criterion):
    with criterion(11, "phase shift equals curve shift", 30) as c:
        co = CoefficientProfiles.from_sigma_tau(3, "1 - 0.5*exp(-zeta^2)", 1.0, sigma_inf=1.0)
        base = synth_breather(+1, 3, TORUS, co)
        fam = orbit_family(OdeCase(Variant.PLUS, 3))
        curved = synth_breather(+1, 3, TORUS, co, initial_curve=shifted_curve(fam, lambda cc: cc))
        shifted = apply_phase_shift(base, lambda z: base.c_of_zeta(z) / co.sigma(z))
        grid = GridSpec(extent=3.0, n=9, t0=0.0, t1=base.T, nt=16)
        x = regular_points(TORUS, grid)
        err = float(np.max(np.abs(curved.on_grid(x, grid.times()) - shifted.on_grid(x, grid.times()))))
        assert err <= 1e-8
        c.detail = f"max diff {err:.1e}"
