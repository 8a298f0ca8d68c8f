from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curlwave import (CoefficientProfiles, Diagnostics, GeometryProfile, GridSpec, convergence_check,
                      decay_fit, holder_check, ode_residual, run_suite, synth_breather, synth_dark_constant,
                      synth_explicit_rogue, synth_rogue)
from curlwave.grids import regular_points
from curlwave.levels import rogue_center_level
from curlwave.verification import (azimuthal_control, corrupt, default_grid, discrete_curl_defect,
                                   fd_second_derivative, holder_bound, holder_constant, parallelism,
                                   residual_order)

TORUS = GeometryProfile.torus(0.0)
GRID = GridSpec(extent=3.0, n=5, t0=-3.0, t1=3.0, nt=7)


def _explicit():
    return synth_explicit_rogue(TORUS)


# --- finite differences -----------------------------------------------------------

@given(a=st.floats(-3, 3), b=st.floats(-3, 3), c=st.floats(-3, 3), t=st.floats(-2, 2))
def test_fd_exact_on_quadratics(a, b, c, t):
    _, d5 = fd_second_derivative(lambda s: a * s * s + b * s + c, np.array(t), h=0.01, stencil=5)
    _, d3 = fd_second_derivative(lambda s: a * s * s + b * s + c, np.array(t), h=0.01, stencil=3)
    assert d5 == pytest.approx(2 * a, abs=1e-8)
    assert d3 == pytest.approx(2 * a, abs=1e-8)


def test_fd_constant_is_exactly_zero():
    _, d = fd_second_derivative(lambda s: np.full_like(s, 0.123456789), np.linspace(0, 1, 5))
    assert np.all(d == 0.0)


# --- residuals ------------------------------------------------------------------------

def test_dark_constant_residual():
    fld = synth_dark_constant(3, TORUS, 2 * math.pi / math.sqrt(2))
    assert ode_residual(fld, GRID).residual_max <= 1e-10


def test_explicit_rogue_residual():
    assert ode_residual(_explicit(), GRID).residual_max <= 1e-8


def test_corrupted_field_fails():
    d = ode_residual(corrupt(_explicit()), GRID)
    assert d.residual_max > 1e-3
    assert d.pass_flags["residual"] is False


def test_residual_order_three_point():
    order, r = residual_order(_explicit(), GRID)
    assert order >= 1.9
    assert r[1] < r[0]


def test_parallelism_flag_consistent():
    d = parallelism(_explicit(), GRID)
    assert d.parallelism <= 1e-10 and d.pass_flags["parallelism"]


# --- curl ----------------------------------------------------------------------------

def test_curl_second_order_on_torus():
    co = CoefficientProfiles.from_sigma_tau(3, "1 - 0.5*exp(-zeta^2)", 1.0, sigma_inf=1.0)
    fld = synth_breather(+1, 3, TORUS, co)
    rng = np.random.default_rng(3)
    x = rng.uniform(0.5, 2.0, size=(30, 3)) * rng.choice([-1, 1], size=(30, 3))
    t = np.array([0.3, 1.9])
    d1 = discrete_curl_defect(fld, x, t, h=2e-3)
    d2 = discrete_curl_defect(fld, x, t, h=1e-3)
    assert math.log2(d1 / d2) >= 1.9


def test_curl_constant_direction_is_zero():
    geo = GeometryProfile.custom("x3", "1")
    fld = synth_dark_constant(3, geo, 8.0)
    x = np.random.default_rng(0).uniform(-2, 2, size=(20, 3))
    assert discrete_curl_defect(fld, x, np.array([0.0, 1.0, 2.5])) <= 1e-12


def test_curl_negative_control():
    x = np.random.default_rng(1).uniform(0.5, 2.0, size=(20, 3))
    assert discrete_curl_defect(azimuthal_control, x, np.array([0.0])) > 0.1


# --- decay ---------------------------------------------------------------------------

def test_spatial_decay_explicit():
    fit = decay_fit(_explicit(), "spatial", r_max=10.0, n_dirs=100)
    assert fit.exponent == pytest.approx(0.5, abs=0.02)
    assert fit.stderr >= 0 and not fit.insufficient


def test_spacetime_decay_explicit():
    fit = decay_fit(_explicit(), "spacetime", r_max=12.0, n_dirs=60)
    assert fit.exponent >= 0.5 * 0.98
    assert fit.exponent == pytest.approx(0.5, abs=0.02)


def test_zero_field_is_insufficient():
    co = CoefficientProfiles.from_sigma_tau(3, 1.0, 1.0, sigma_inf=1.0)
    fld = synth_breather(+1, 3, TORUS, co)
    fit = decay_fit(fld, "spatial", r_max=8.0, n_dirs=40)
    assert fit.insufficient and fit.label == "InsufficientDecay"


def test_decay_needs_four_shells():
    with pytest.raises(ValueError):
        decay_fit(_explicit(), "spatial", [1.0, 2.0, 3.0])


# --- convergence ---------------------------------------------------------------------

def _rogue():
    return synth_rogue(3, TORUS, CoefficientProfiles.from_expressions(3, 1, 1, "exp(zeta)"))


def test_convergence_single_row():
    d = convergence_check(_rogue(), [20.0], grid=GRID)
    assert len(d.convergence_table) == 1
    assert d.pass_flags["convergence"]


def test_convergence_flag_detects_increase():
    d = convergence_check(_rogue(), [40.0, 10.0], grid=GRID)
    assert not d.pass_flags["convergence"]


# --- Hoelder ------------------------------------------------------------------------

def test_holder_equal_pair_ratio_zero():
    d = holder_check(3, 5.0, [(-0.3, -0.3)])
    assert d.holder_ratios == [0.0]


def test_holder_straddling_center():
    c0 = rogue_center_level(3)
    pairs = [(c0, c0 + 10.0 ** -k) for k in range(2, 9)]
    d = holder_check(3, 5.0, pairs)
    assert d.pass_flags["holder"]
    assert max(d.holder_ratios) <= d.holder_bound


def test_holder_p2_T10_random():
    rng = np.random.default_rng(11)
    pairs = rng.uniform(rogue_center_level(2), 0.0, size=(50, 2))
    assert holder_check(2, 10.0, pairs).pass_flags["holder"]


def test_holder_constant_covers_sqrt_behaviour():
    # a^-1 has a square-root branch at the centre, so H is finite and at least the local slope
    H = holder_constant(3)
    assert 0 < H < 10
    assert holder_bound(3, 0.0, H) == H


# --- diagnostics ---------------------------------------------------------------------

def test_diagnostics_json_and_merge():
    a = Diagnostics(residual_max=1e-9, pass_flags={"residual": True})
    b = Diagnostics(parallelism=math.nan, pass_flags={"parallelism": False})
    m = a.merge(b)
    assert a.pass_flags == {"residual": True}
    assert m.pass_flags == {"residual": True, "parallelism": False}
    assert not m.passed
    d = json.loads(m.to_json())
    assert d["parallelism"] == "NaN" and d["passed"] is False


def test_run_suite_and_default_grid():
    fld = _explicit()
    g = default_grid(fld)
    assert (g.t0, g.t1, g.n, g.nt) == (-4.0, 4.0, 9, 16)
    d = run_suite(fld, GRID)
    assert d.passed
    assert d.curl_defect < 1e-4
    assert d.residual_max >= 0 and d.residual_l2 <= d.residual_max


def test_run_suite_tolerance_override():
    d = run_suite(_explicit(), GRID, tolerances={"residual": 1e-14})
    assert not d.pass_flags["residual"]


def test_run_suite_periodic_kind_records_periodicity():
    fld = synth_dark_constant(3, TORUS, 8.0)
    d = run_suite(fld, GridSpec(extent=2.0, n=3, t0=0.0, t1=8.0, nt=5))
    assert d.periodicity_defect is not None and d.periodicity_defect <= 1e-8
    assert regular_points(TORUS, GridSpec(extent=2.0, n=3)).shape[0] == 26
