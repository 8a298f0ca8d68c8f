"""Strict JSON run configuration.

Every section rejects unknown keys. Example (all keys shown; only ``kind``
or ``periodmap`` and ``p`` are required)::

    {
      "kind": "BreatherPlus",
      "equation": "plus",
      "p": 3,
      "geometry": {"family": "torus", "r0": 0.0},
      "coefficients": {"sigma": "1 - 0.5*exp(-zeta^2)", "tau": "1", "sigma_inf": 1.0},
      "omega": null, "T": null,
      "phase_shift": "0",
      "grid": {"extent": 3.0, "n": 9, "t0": 0.0, "t1": null, "nt": 16},
      "tolerances": {"residual": 1e-6, "parallel": 1e-10, "periodic": 1e-8, "orbit": 1e-12},
      "decay": {"mode": "spatial", "r_max": 10.0, "shells": 8},
      "holder": {"T": 5.0, "pairs": 50},
      "approximate": {"T_list": [10, 20, 40]},
      "periodmap": {"equation": "rogue", "c": [-0.49, -0.01, 50], "s": null},
      "seed": 0,
      "output": {"csv": "field.csv", "json": "diagnostics.json"}
    }
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CurlWaveError, DomainError, ExpressionError, ParseError, ValidationError
from .geometry import CoefficientProfiles, GeometryProfile
from .grids import GridSpec
from .phase_plane import Variant
from .synthesis import (FieldKind, synth_breather, synth_dark_breather, synth_dark_constant,
                        synth_explicit_rogue, synth_monochromatic, synth_rogue,
                        synth_rogue_approximant, apply_phase_shift)

TOP_KEYS = {"kind", "equation", "p", "geometry", "coefficients", "omega", "T", "phase_shift",
            "grid", "tolerances", "decay", "holder", "approximate", "periodmap", "seed", "output"}
GEOMETRY_KEYS = {"family", "gamma", "r0", "tube", "g", "G", "grad"}
COEFF_KEYS = {"s", "q", "V", "sigma", "tau", "sigma_inf", "tau_inf", "delta"}
GRID_KEYS = {"extent", "n", "t0", "t1", "nt"}
TOL_KEYS = {"residual", "parallel", "periodic", "orbit"}
DECAY_KEYS = {"mode", "r_max", "shells"}
HOLDER_KEYS = {"T", "pairs"}
APPROX_KEYS = {"T_list"}
PERIODMAP_KEYS = {"equation", "c", "s"}
OUTPUT_KEYS = {"csv", "json"}

DEFAULT_TOLERANCES = {"residual": 1e-6, "parallel": 1e-10, "periodic": 1e-8, "orbit": 1e-12}


@dataclass
class RunConfig:
    p: float
    kind: FieldKind | None = None
    equation: Variant | None = None
    geometry: dict = field(default_factory=lambda: {"family": "torus", "r0": 0.0})
    coefficients: dict = field(default_factory=dict)
    omega: float | None = None
    T: float | None = None
    phase_shift: str | None = None
    grid: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    decay: dict | None = None
    holder: dict | None = None
    approximate: dict | None = None
    periodmap: dict | None = None
    seed: int = 0
    output: dict = field(default_factory=dict)

    # ---- builders ------------------------------------------------------

    def build_geometry(self) -> GeometryProfile:
        g = dict(self.geometry)
        fam = g.pop("family", "torus")
        tube = g.pop("tube", 1e-6)
        try:
            if fam == "torus":
                return GeometryProfile.torus(g.get("r0", 0.0), tube=tube)
            if fam == "cone_axial":
                return GeometryProfile.cone_axial(g.get("gamma", 1.0), g.get("r0", 0.0), tube=tube)
            if fam == "cone_abs_axial":
                return GeometryProfile.cone_abs_axial(g.get("gamma", 1.0), g.get("r0", 0.0), tube=tube)
            return GeometryProfile.custom(g["g"], g["G"], g.get("grad"), tube=tube)
        except (DomainError, ExpressionError) as err:
            raise ValidationError("geometry", str(err)) from None

    def build_coefficients(self) -> CoefficientProfiles:
        c = dict(self.coefficients)
        lim = {k: c.pop(k) for k in ("sigma_inf", "tau_inf", "delta") if k in c}
        try:
            if "sigma" in c or "tau" in c:
                return CoefficientProfiles.from_sigma_tau(self.p, c.get("sigma", 1.0), c.get("tau", 1.0),
                                                          c.get("s"), **lim)
            return CoefficientProfiles.from_expressions(self.p, c.get("s", 1.0), c.get("q", 1.0),
                                                        c.get("V", 1.0), **lim)
        except (DomainError, ExpressionError) as err:
            raise ValidationError("coefficients", str(err)) from None

    def grid_spec(self, T=None) -> GridSpec:
        g = self.grid
        if "t1" in g and g["t1"] is not None:
            t1 = g["t1"]
        elif T is not None and math.isfinite(T):
            t1 = T
        else:
            t1 = 4.0
        t0 = g.get("t0", 0.0 if (T is not None and math.isfinite(T)) else -4.0)
        return GridSpec(extent=g.get("extent", 3.0), n=g.get("n", 9), t0=t0, t1=t1, nt=g.get("nt", 16))

    def build_field(self, sample=None):
        """Synthesize the configured field (with the phase shift applied)."""
        geo = self.build_geometry()
        kind = self.kind
        if kind is None:
            raise ValidationError("kind", "required for this subcommand")
        tol = self.tolerances.get("orbit", 1e-12)
        if kind is FieldKind.DARK_CONSTANT:
            fld = synth_dark_constant(self.p, geo, _need(self.T, "T"), tol=tol)
        elif kind is FieldKind.EXPLICIT_ROGUE:
            if self.p != 3:
                raise ValidationError("p", "the explicit rogue wave needs p = 3")
            fld = synth_explicit_rogue(geo, self.coefficients.get("V", "exp(zeta)"))
        else:
            co = self.build_coefficients()
            if kind is FieldKind.BREATHER_PLUS:
                fld = synth_breather(+1, self.p, geo, co, sample=sample, tol=tol)
            elif kind is FieldKind.BREATHER_MINUS:
                fld = synth_breather(-1, self.p, geo, co, sample=sample, tol=tol)
            elif kind is FieldKind.DARK_BREATHER:
                fld = synth_dark_breather(self.p, geo, co, _need(self.omega, "omega"), sample=sample, tol=tol)
            elif kind is FieldKind.ROGUE_WAVE:
                return synth_rogue(self.p, geo, co, self.phase_shift, sample=sample)
            elif kind is FieldKind.ROGUE_APPROXIMANT:
                fld = synth_rogue_approximant(self.p, geo, co, _need(self.T, "T"), sample=sample, tol=tol)
            else:
                eq = self.equation or Variant.ROGUE
                fld = synth_monochromatic(eq, self.p, geo, co, self.omega)
        if self.phase_shift is not None:
            fld = apply_phase_shift(fld, self.phase_shift, sample=sample)
        return fld


def _need(value, key):
    if value is None:
        raise ValidationError(key, "required for this kind")
    return value


def _section(d, allowed, name):
    if d is None:
        return None
    if not isinstance(d, dict):
        raise ValidationError(name, "must be an object")
    for k in d:
        if k not in allowed:
            raise ValidationError(f"{name}.{k}" if name else k, "unknown key")
    return d


def _num(d, key, name, positive=False, integer=False, minimum=None):
    if key not in d or d[key] is None:
        return
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValidationError(f"{name}.{key}" if name else key, "must be a finite number")
    if integer and int(v) != v:
        raise ValidationError(f"{name}.{key}" if name else key, "must be an integer")
    if positive and not v > 0:
        raise ValidationError(f"{name}.{key}" if name else key, "must be positive")
    if minimum is not None and v < minimum:
        raise ValidationError(f"{name}.{key}" if name else key, f"must be at least {minimum}")


def _expr_or_num(d, key, name):
    if key not in d:
        return
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (str, int, float)):
        raise ValidationError(f"{name}.{key}", "must be a number or an expression string")


def validate(raw: dict) -> RunConfig:
    """Check a decoded config object and build a :class:`RunConfig`."""
    if not isinstance(raw, dict):
        raise ValidationError("<root>", "config must be a JSON object")
    _section(raw, TOP_KEYS, "")
    if "p" not in raw:
        raise ValidationError("p", "required")
    _num(raw, "p", "")
    if not raw["p"] > 1:
        raise ValidationError("p", "p must exceed 1")
    kind = None
    if raw.get("kind") is not None:
        try:
            kind = FieldKind(raw["kind"])
        except ValueError:
            raise ValidationError("kind", f"must be one of {[k.value for k in FieldKind]}") from None
    eq = None
    if raw.get("equation") is not None:
        try:
            eq = Variant(raw["equation"])
        except ValueError:
            raise ValidationError("equation", "must be plus, minus or rogue") from None
    geo = _section(raw.get("geometry", {"family": "torus"}), GEOMETRY_KEYS, "geometry")
    fam = geo.get("family", "torus")
    if fam not in ("torus", "cone_axial", "cone_abs_axial", "custom"):
        raise ValidationError("geometry.family", "must be torus, cone_axial, cone_abs_axial or custom")
    if fam == "custom":
        for k in ("g", "G"):
            if not isinstance(geo.get(k), str):
                raise ValidationError(f"geometry.{k}", "custom geometry needs an expression string")
    _num(geo, "gamma", "geometry", positive=True)
    _num(geo, "r0", "geometry", minimum=0.0)
    _num(geo, "tube", "geometry", positive=True)
    co = _section(raw.get("coefficients", {}), COEFF_KEYS, "coefficients")
    for k in ("s", "q", "V", "sigma", "tau"):
        _expr_or_num(co, k, "coefficients")
    if ({"sigma", "tau"} & co.keys()) and ({"q", "V"} & co.keys()):
        raise ValidationError("coefficients", "give either s/q/V or sigma/tau (with optional s)")
    for k in ("sigma_inf", "tau_inf", "delta"):
        _num(co, k, "coefficients", positive=True)
    _num(raw, "omega", "", minimum=0.0)
    _num(raw, "T", "", positive=True)
    grid = _section(raw.get("grid", {}), GRID_KEYS, "grid")
    _num(grid, "extent", "grid", positive=True)
    _num(grid, "n", "grid", integer=True, minimum=2)
    _num(grid, "nt", "grid", integer=True, minimum=1)
    _num(grid, "t0", "grid")
    _num(grid, "t1", "grid")
    tols = _section(raw.get("tolerances", {}), TOL_KEYS, "tolerances")
    for k in TOL_KEYS:
        _num(tols, k, "tolerances", positive=True)
    decay = _section(raw.get("decay"), DECAY_KEYS, "decay")
    if decay is not None:
        if decay.get("mode", "spatial") not in ("spatial", "spacetime"):
            raise ValidationError("decay.mode", "must be spatial or spacetime")
        _num(decay, "r_max", "decay", positive=True)
        _num(decay, "shells", "decay", integer=True, minimum=4)
    holder = _section(raw.get("holder"), HOLDER_KEYS, "holder")
    if holder is not None:
        _num(holder, "T", "holder", positive=True)
        _num(holder, "pairs", "holder", integer=True, minimum=1)
    approx = _section(raw.get("approximate"), APPROX_KEYS, "approximate")
    if approx is not None:
        tl = approx.get("T_list")
        if not isinstance(tl, list) or not tl or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in tl):
            raise ValidationError("approximate.T_list", "must be a non-empty list of positive numbers")
    pm = _section(raw.get("periodmap"), PERIODMAP_KEYS, "periodmap")
    if pm is not None:
        if pm.get("equation", "rogue") not in ("plus", "minus", "rogue"):
            raise ValidationError("periodmap.equation", "must be plus, minus or rogue")
        for k in ("c", "s"):
            v = pm.get(k)
            if v is not None and not (isinstance(v, list) and len(v) == 3
                                      and all(isinstance(a, (int, float)) for a in v) and v[2] >= 2):
                raise ValidationError(f"periodmap.{k}", "must be [start, stop, count >= 2]")
        if pm.get("c") is None and pm.get("s") is None:
            raise ValidationError("periodmap", "needs a c or an s range")
    if raw.get("phase_shift") is not None and not isinstance(raw["phase_shift"], (str, int, float)):
        raise ValidationError("phase_shift", "must be an expression string")
    _num(raw, "seed", "", integer=True, minimum=0)
    out = _section(raw.get("output", {}), OUTPUT_KEYS, "output")
    tol_all = dict(DEFAULT_TOLERANCES)
    tol_all.update(tols)
    shift = raw.get("phase_shift")
    cfg = RunConfig(
        p=float(raw["p"]), kind=kind, equation=eq, geometry=dict(geo), coefficients=dict(co),
        omega=raw.get("omega"), T=raw.get("T"), phase_shift=None if shift is None else str(shift),
        grid=dict(grid), tolerances=tol_all, decay=decay, holder=holder, approximate=approx,
        periodmap=pm, seed=int(raw.get("seed", 0)), output=dict(out),
    )
    # expression syntax errors surface as validation errors of their section
    try:
        if kind is not None and kind not in (FieldKind.DARK_CONSTANT, FieldKind.EXPLICIT_ROGUE):
            cfg.build_coefficients()
        cfg.build_geometry()
        if cfg.phase_shift is not None:
            from .expr import compile_expr
            compile_expr(cfg.phase_shift, {"zeta"})
    except ExpressionError as err:
        raise ValidationError("phase_shift", str(err)) from None
    return cfg


def parse_config_text(text: str) -> RunConfig:
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as err:
        raise ParseError(err.msg, err.lineno, err.colno) from None
    return validate(raw)


def _reject_constant(name):
    raise ParseError(f"non-standard JSON constant {name}")


def parse_config(path) -> RunConfig:
    """Read and validate a JSON config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ParseError(f"cannot read config: {err}") from None
    return parse_config_text(text)


__all__ = ["RunConfig", "parse_config", "parse_config_text", "validate", "CurlWaveError"]
