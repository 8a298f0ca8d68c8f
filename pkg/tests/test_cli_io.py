from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curlwave import (CoefficientProfiles, FieldKind, GeometryProfile, GridSpec, IoError, ParseError,
                      ValidationError, export_diagnostics, export_field, parse_config, read_field_csv,
                      synth_explicit_rogue, synth_monochromatic)
from curlwave.cli import main
from curlwave.config import DEFAULT_TOLERANCES, parse_config_text
from curlwave.export import resolve_threads
from curlwave.verification import Diagnostics

TORUS = GeometryProfile.torus(0.0)


def _write(tmp_path, obj, name="run.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


# --- config ------------------------------------------------------------------------

def test_minimal_config_defaults(tmp_path):
    cfg = parse_config(_write(tmp_path, {"p": 3, "kind": "BreatherPlus"}))
    assert cfg.p == 3.0 and cfg.kind is FieldKind.BREATHER_PLUS
    assert cfg.tolerances == DEFAULT_TOLERANCES
    assert cfg.seed == 0 and cfg.phase_shift is None
    g = cfg.grid_spec(2 * math.pi)
    assert (g.extent, g.n, g.t0, g.t1, g.nt) == (3.0, 9, 0.0, 2 * math.pi, 16)
    assert cfg.grid_spec(math.inf).t0 == -4.0


def test_p_must_exceed_one():
    with pytest.raises(ValidationError, match="p must exceed 1") as e:
        parse_config_text('{"p": 0.5}')
    assert e.value.key == "p"


def test_unknown_key_rejected():
    with pytest.raises(ValidationError) as e:
        parse_config_text('{"p": 3, "coefficients": {"sigma∞": 1.0}}')
    assert e.value.key == "coefficients.sigma∞"
    with pytest.raises(ValidationError):
        parse_config_text('{"p": 3, "colour": 1}')


def test_parse_error_position():
    with pytest.raises(ParseError) as e:
        parse_config_text('{"p": 3,\n  "kind": }')
    assert (e.value.line, e.value.column) == (2, 11)


def test_non_standard_constant_rejected():
    with pytest.raises(ParseError):
        parse_config_text('{"p": NaN}')


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        parse_config(tmp_path / "nope.json")


@pytest.mark.parametrize("raw,key", [
    ({"p": 3, "grid": {"n": 1}}, "grid.n"),
    ({"p": 3, "tolerances": {"residual": 0}}, "tolerances.residual"),
    ({"p": 3, "geometry": {"family": "sphere"}}, "geometry.family"),
    ({"p": 3, "geometry": {"family": "custom", "g": "x1"}}, "geometry.G"),
    ({"p": 3, "kind": "Breather"}, "kind"),
    ({"p": 3, "equation": "both"}, "equation"),
    ({"p": 3, "decay": {"mode": "temporal"}}, "decay.mode"),
    ({"p": 3, "periodmap": {"equation": "rogue"}}, "periodmap"),
    ({"p": 3, "approximate": {"T_list": []}}, "approximate.T_list"),
    ({"p": 3, "coefficients": {"sigma": "1 +"}, "kind": "BreatherPlus"}, "coefficients"),
    ({"p": 3, "phase_shift": "zeta +"}, "phase_shift"),
    ({"p": "3"}, "p"),
])
def test_validation_names_key(raw, key):
    with pytest.raises(ValidationError) as e:
        parse_config_text(json.dumps(raw))
    assert e.value.key == key


def test_build_field_requires_kind():
    with pytest.raises(ValidationError):
        parse_config_text('{"p": 3}').build_field()


def test_build_field_from_config():
    cfg = parse_config_text(json.dumps({"p": 3, "kind": "RogueWave",
                                        "coefficients": {"s": 1, "q": 1, "V": "exp(zeta)"}}))
    fld = cfg.build_field()
    ref = synth_explicit_rogue(TORUS)
    x = np.array([[1.0, 0.5, -0.2]])
    np.testing.assert_allclose(fld.on_grid(x, [0.0, 1.0]), ref.on_grid(x, [0.0, 1.0]), atol=1e-10)


# --- export --------------------------------------------------------------------------

def test_export_row_count(tmp_path):
    grid = GridSpec(extent=1.0, n=2, t0=0.0, t1=1.0, nt=2)
    n = export_field(synth_explicit_rogue(TORUS), grid, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert n == 16 and len(lines) == 17
    assert lines[0] == "x1,x2,x3,t,U1,U2,U3,singular"


def test_export_singular_row_flagged(tmp_path):
    grid = GridSpec(extent=1.0, n=3, t0=0.0, t1=0.0, nt=1)
    export_field(synth_explicit_rogue(TORUS), grid, tmp_path / "f.csv")
    with open(tmp_path / "f.csv") as fh:
        rows = list(csv.DictReader(fh))
    origin = [r for r in rows if r["x1"] == r["x2"] == r["x3"] == "0"]
    assert len(origin) == 1
    assert origin[0]["singular"] == "1" and origin[0]["U1"] == "NaN"
    assert sum(r["singular"] == "1" for r in rows) == 1


def test_export_round_trip(tmp_path):
    fld = synth_explicit_rogue(TORUS)
    grid = GridSpec(extent=2.0, n=4, t0=-1.0, t1=1.0, nt=3)
    export_field(fld, grid, tmp_path / "f.csv")
    d = read_field_csv(tmp_path / "f.csv")
    x = np.stack([d["x1"], d["x2"], d["x3"]], axis=1)
    U = fld(x, d["t"])
    got = np.stack([d["U1"], d["U2"], d["U3"]], axis=1)
    assert np.max(np.abs(got - U)) <= 1e-12


@given(v=st.floats(allow_nan=False, allow_infinity=False))
@settings(max_examples=200)
def test_seventeen_digits_lossless(v):
    assert float("%.17g" % v) == v


def test_export_complex_columns(tmp_path):
    co = CoefficientProfiles.from_expressions(3, 1, 1, 1)
    fld = synth_monochromatic("rogue", 3, TORUS, co, 1.0)
    grid = GridSpec(extent=1.0, n=2, t0=0.0, t1=1.0, nt=2)
    export_field(fld, grid, tmp_path / "c.csv")
    d = read_field_csv(tmp_path / "c.csv")
    assert list(d) == ["x1", "x2", "x3", "t", "U1", "U2", "U3", "U1_im", "U2_im", "U3_im", "singular"]
    x = np.stack([d["x1"], d["x2"], d["x3"]], axis=1)
    U = fld(x, d["t"])
    assert np.max(np.abs(d["U2_im"] - U[:, 1].imag)) <= 1e-12


def test_export_threads_identical(tmp_path):
    fld = synth_explicit_rogue(TORUS)
    pts = GridSpec(extent=2.0, n=9).points()
    t = np.linspace(-1, 1, 3)
    export_field(fld, points=pts, times=t, path=tmp_path / "a.csv", threads=1)
    export_field(fld, points=pts, times=t, path=tmp_path / "b.csv", threads=3)
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()


def test_export_io_error(tmp_path):
    grid = GridSpec(extent=1.0, n=2, t0=0.0, t1=1.0, nt=2)
    with pytest.raises(IoError):
        export_field(synth_explicit_rogue(TORUS), grid, tmp_path / "missing" / "f.csv")
    with pytest.raises(IoError):
        export_diagnostics(Diagnostics(), tmp_path / "missing" / "d.json")


def test_export_diagnostics(tmp_path):
    d = Diagnostics(residual_max=1e-9, periodicity_defect=math.inf, pass_flags={"residual": True})
    export_diagnostics(d, tmp_path / "d.json", meta={"seed": 5})
    out = json.loads((tmp_path / "d.json").read_text())
    assert out["meta"]["seed"] == 5 and out["periodicity_defect"] == "Infinity" and out["passed"]


def test_threads_fallback(monkeypatch):
    monkeypatch.setenv("CURLWAVE_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    monkeypatch.setenv("CURLWAVE_THREADS", "many")
    assert resolve_threads(None) == 1


# --- CLI ----------------------------------------------------------------------------

ROGUE_CFG = {"kind": "RogueWave", "p": 3, "coefficients": {"s": 1, "q": 1, "V": "exp(zeta)"},
             "grid": {"n": 3, "nt": 3}, "holder": {"T": 5, "pairs": 5},
             "approximate": {"T_list": [10, 20, 40]}}


def test_cli_synthesize(tmp_path):
    cfg = _write(tmp_path, ROGUE_CFG)
    assert main(["synthesize", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "4"]) == 0
    rows = (tmp_path / "o" / "field.csv").read_text().splitlines()
    assert len(rows) == 1 + 27 * 3
    meta = json.loads((tmp_path / "o" / "field.meta.json").read_text())
    assert meta["seed"] == 4 and meta["kind"] == "RogueWave"


def test_cli_verify_pass_and_seed(tmp_path):
    cfg = _write(tmp_path, ROGUE_CFG)
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "9"]) == 0
    d = json.loads((tmp_path / "o" / "diagnostics.json").read_text())
    assert d["meta"]["seed"] == 9 and d["passed"]
    assert len(d["holder_ratios"]) == 5


def test_cli_verify_same_seed_same_report(tmp_path):
    cfg = _write(tmp_path, {"p": 2, "holder": {"T": 3, "pairs": 4}})
    for name in ("a", "b"):
        assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / name), "--seed", "1"]) == 0
    a = json.loads((tmp_path / "a" / "diagnostics.json").read_text())
    b = json.loads((tmp_path / "b" / "diagnostics.json").read_text())
    assert a["holder_ratios"] == b["holder_ratios"]


def test_cli_verify_failure_exit_one(tmp_path):
    cfg = _write(tmp_path, {**ROGUE_CFG, "tolerances": {"residual": 1e-30}})
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_cli_config_error_exit_two(tmp_path, capsys):
    cfg = _write(tmp_path, {"p": 0.5})
    assert main(["verify", "--config", str(cfg)]) == 2
    assert "p must exceed 1" in capsys.readouterr().err
    bad = _write(tmp_path, "{", "bad.json")
    assert main(["synthesize", "--config", str(bad)]) == 2


def test_cli_usage_error_exit_two():
    with pytest.raises(SystemExit) as e:
        main(["explode"])
    assert e.value.code == 2


def test_cli_periodmap(tmp_path):
    cfg = _write(tmp_path, {"p": 3, "periodmap": {"equation": "rogue", "c": [-0.4, -0.1, 4], "s": [5, 7, 3]}})
    assert main(["periodmap", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    with open(tmp_path / "o" / "period.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 and all(float(r["dL_dc"]) > 0 for r in rows)
    with open(tmp_path / "o" / "inverse.csv") as fh:
        inv = list(csv.DictReader(fh))
    assert [float(r["s"]) for r in inv] == [5.0, 6.0, 7.0]


def test_cli_approximate(tmp_path):
    cfg = _write(tmp_path, ROGUE_CFG)
    assert main(["approximate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    with open(tmp_path / "o" / "convergence.csv") as fh:
        errs = [float(r["sup_error"]) for r in csv.DictReader(fh)]
    assert len(errs) == 3 and errs[0] > errs[1] > errs[2]


def test_cli_approximate_needs_rogue(tmp_path):
    cfg = _write(tmp_path, {"p": 3, "kind": "BreatherPlus"})
    assert main(["approximate", "--config", str(cfg), "--out", str(tmp_path)]) == 2
