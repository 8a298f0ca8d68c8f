from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curlwave import (CoefficientProfiles, DomainError, ExpressionError, GeometryProfile, SingularPoint,
                      accumulation_set_probe, check_compatibility, eval_direction)
from curlwave.expr import compile_expr
from curlwave.geometry import sphere_points

vec = st.tuples(*[st.floats(-5, 5) for _ in range(3)])

BUILTINS = [
    GeometryProfile.torus(0.0),
    GeometryProfile.torus(1.0),
    GeometryProfile.cone_axial(2.0, 0.5),
    GeometryProfile.cone_abs_axial(0.7, 1.0),
]


# --- expressions ----------------------------------------------------------------

def test_expression_precedence():
    assert compile_expr("2^3^2")() == 512
    assert compile_expr("-2^2")() == -4
    assert compile_expr("2*3+4/2-1")() == 7
    assert compile_expr("max(1, 2) + min(3, -1)")() == 1
    assert compile_expr("cosh(0) + e^0 + pi*0")() == 2


def test_expression_vectorized():
    f = compile_expr("zeta^2 + 1", {"zeta"})
    np.testing.assert_array_equal(f(zeta=np.arange(3.0)), [1.0, 2.0, 5.0])


@pytest.mark.parametrize("src", ["1 +", "(1", "foo(1)", "max(1)", "2 $ 3", "y + 1", ""])
def test_expression_errors(src):
    with pytest.raises(ExpressionError):
        compile_expr(src, {"zeta"})


def test_expression_error_has_column():
    with pytest.raises(ExpressionError, match="column"):
        compile_expr("1 + * 2")


_ops = st.sampled_from(["+", "-", "*", "/", "^"])
_operand = st.tuples(st.booleans(), st.integers(1, 3))


@given(first=_operand, rest=st.lists(st.tuples(_ops, _operand), max_size=6))
@settings(max_examples=200)
def test_expression_matches_python(first, rest):
    # same precedence and associativity as Python with ^ -> **
    parts = [("-" if first[0] else "") + str(first[1])]
    for op, (neg, n) in rest:
        parts.append(op)
        parts.append(("-" if neg else "") + str(n))
    src = " ".join(parts)
    # float literals keep Python from computing huge exact integer powers
    py = " ".join(p + ".0" if p[-1].isdigit() else p for p in parts)
    try:
        expected = eval(py.replace("^", "**"))
    except (OverflowError, ZeroDivisionError):
        return
    if isinstance(expected, complex) or abs(expected) > 1e200:
        return
    with np.errstate(all="ignore"):
        got = float(compile_expr(src)())
    assert got == pytest.approx(expected, rel=1e-12, abs=1e-300)


# --- directions -------------------------------------------------------------------

def test_torus_radial_direction():
    d = eval_direction(GeometryProfile.torus(0.0), np.array([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(d, [1, 0, 0], atol=1e-15)


def test_cone_abs_direction():
    geo = GeometryProfile.cone_abs_axial(1.0, 0.0)
    x = np.array([2.0, 0.0, 1.0])
    np.testing.assert_allclose(eval_direction(geo, x), np.array([1, 0, 1]) / math.sqrt(2), atol=1e-14)
    fd = geo.fd_grad(x)
    np.testing.assert_allclose(fd / np.linalg.norm(fd), np.array([1, 0, 1]) / math.sqrt(2), atol=1e-8)


def test_shifted_torus_direction():
    geo = GeometryProfile.torus(1.0)
    x = np.array([2.0, 0.0, 0.0])
    np.testing.assert_allclose(eval_direction(geo, x), [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(geo.fd_grad(x), [1, 0, 0], atol=1e-8)


@pytest.mark.parametrize("geo,x", [
    (GeometryProfile.torus(0.0), [0, 0, 0]),
    (GeometryProfile.torus(1.0), [0, 1, 0]),
    (GeometryProfile.cone_axial(1.0, 0.0), [0, 0, 2]),
    (GeometryProfile.cone_abs_axial(1.0, 0.0), [1, 1, 0]),
])
def test_singular_points_raise(geo, x):
    x = np.array(x, float)
    assert geo.singular(x[None])[0]
    with pytest.raises(SingularPoint):
        eval_direction(geo, x)
    assert np.all(np.isnan(geo.direction(x[None], strict=False)))


@pytest.mark.parametrize("geo", BUILTINS, ids=lambda g: g.family.value + str(g.r0))
@given(x=vec)
@settings(max_examples=60)
def test_direction_unit_norm(geo, x):
    x = np.array(x)
    if geo.singular(x[None])[0]:
        return
    assert abs(np.linalg.norm(eval_direction(geo, x)) - 1) <= 1e-12


@pytest.mark.parametrize("geo", BUILTINS, ids=lambda g: g.family.value + str(g.r0))
@given(x=vec)
@settings(max_examples=60)
def test_analytic_gradient_matches_fd(geo, x):
    x = np.array(x)
    if geo.singular(x[None])[0] or _near_kink(geo, x):
        return
    np.testing.assert_allclose(geo.grad(x), geo.fd_grad(x), atol=1e-6)


def _near_kink(geo, x, eps=1e-3):
    r = math.hypot(x[0], x[1])
    return r < eps or abs(r - geo.r0) < eps or abs(x[2]) < eps


# --- compatibility ------------------------------------------------------------------

def _cube(n=7, ext=3.0):
    a = np.linspace(-ext, ext, n)
    return np.stack(np.meshgrid(a, a, a, indexing="ij"), -1).reshape(-1, 3) + 0.013


@pytest.mark.parametrize("geo", BUILTINS, ids=lambda g: g.family.value + str(g.r0))
def test_builtins_compatible(geo):
    rep = check_compatibility(geo, _cube())
    assert rep.passed and rep.analytic
    assert rep.max_defect <= 1e-12


def test_cone_constant_G():
    geo = GeometryProfile.cone_axial(2.0, 0.0)
    assert np.allclose(geo.G(np.array([-3.0, 0.0, 5.0])), math.sqrt(5))
    assert check_compatibility(geo, _cube()).max_defect <= 1e-14


def test_custom_square_profile():
    geo = GeometryProfile.custom("x1^2", "2*sqrt(zeta)")
    x = np.random.default_rng(1).uniform(0.2, 3.0, size=(200, 3))
    rep = check_compatibility(geo, x)
    assert not rep.analytic and rep.threshold == 1e-5 and rep.passed


def test_custom_wrong_G_fails():
    geo = GeometryProfile.custom("x1^2", "sqrt(zeta)")
    x = np.random.default_rng(1).uniform(0.2, 3.0, size=(50, 3))
    assert not check_compatibility(geo, x).passed


def test_custom_bad_expression():
    with pytest.raises(ExpressionError):
        GeometryProfile.custom("x1 +", "1")


# --- accumulation set -----------------------------------------------------------

RADII = [20, 40, 60, 80]


def test_probe_torus_empty():
    assert accumulation_set_probe(GeometryProfile.torus(1.0), RADII).kind == "empty"
    assert accumulation_set_probe(GeometryProfile.torus(0.0), RADII).empty


def test_probe_cone_all():
    rep = accumulation_set_probe(GeometryProfile.cone_axial(1.0, 0.0), RADII)
    assert rep.kind == "all" and rep.interval == (-math.inf, math.inf)


def test_probe_bounded():
    geo = GeometryProfile.custom("tanh(x3)", "1")
    assert accumulation_set_probe(geo, RADII, n_dirs=500).kind == "bounded"


def test_probe_needs_increasing_radii():
    with pytest.raises(DomainError):
        accumulation_set_probe(GeometryProfile.torus(0.0), [3, 2])


def test_sphere_points_on_sphere():
    x = sphere_points(100, 2.5)
    np.testing.assert_allclose(np.linalg.norm(x, axis=1), 2.5, rtol=1e-14)


# --- coefficients -----------------------------------------------------------------

def test_sigma_tau_from_s_q_V():
    co = CoefficientProfiles.from_expressions(3, "2", "8", "2")
    assert co.sigma(0.0) == pytest.approx(2.0)
    assert co.tau(0.0) == pytest.approx(2.0)


@given(p=st.floats(1.3, 6), sig=st.floats(0.1, 5), tau=st.floats(0.1, 5), s=st.floats(0.1, 5))
def test_from_sigma_tau_round_trip(p, sig, tau, s):
    co = CoefficientProfiles.from_sigma_tau(p, sig, tau, s)
    z = np.array([0.0, 1.0])
    np.testing.assert_allclose(co.sigma(z), sig, rtol=1e-12)
    np.testing.assert_allclose(co.tau(z), tau, rtol=1e-12)


def test_check_positive():
    co = CoefficientProfiles.from_expressions(3, "1", "zeta", "1")
    co.check_positive(np.array([0.5, 1.0]))
    with pytest.raises(DomainError):
        co.check_positive(np.array([-1.0, 1.0]))


def test_ordering_predicate():
    co = CoefficientProfiles.from_sigma_tau(3, "1 - 0.5*exp(-zeta^2)", 1, sigma_inf=1.0)
    z = np.linspace(0, 5, 11)
    assert co.b2(z, +1) and not co.b2(z, -1)
    flat = CoefficientProfiles.from_sigma_tau(3, 1, 1, sigma_inf=1.0)
    assert not flat.b2(z, +1)


def test_sigma_decay_bound():
    co = CoefficientProfiles.from_sigma_tau(3, "1 - 0.5*exp(-2*zeta)", 1, sigma_inf=1.0, delta=1.0)
    x = sphere_points(50) * np.linspace(0.5, 10, 50)[:, None]
    b = co.sigma_decay_bound(x, GeometryProfile.torus(0.0))
    assert 0 < b <= 0.5 + 1e-12
    assert CoefficientProfiles.from_sigma_tau(3, 1, 1).sigma_decay_bound(x, GeometryProfile.torus(0.0)) is None


def test_limits_must_be_positive():
    with pytest.raises(DomainError):
        CoefficientProfiles.from_sigma_tau(3, 1, 1, sigma_inf=-1.0)
