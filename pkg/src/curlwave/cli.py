"""Command line entry point.

Subcommands::

    curlwave periodmap   --config run.json --out DIR   # L, L', M tables
    curlwave synthesize  --config run.json --out DIR   # field.csv
    curlwave verify      --config run.json --out DIR   # diagnostics.json
    curlwave approximate --config run.json --out DIR   # U_T convergence table

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, parse_config
from .errors import CurlWaveError, IoError, ParseError, ValidationError
from .export import export_diagnostics, export_field, resolve_threads, write_json, write_table
from .grids import regular_points
from .levels import rogue_center_level
from .period_maps import invert_period, period, period_derivative_rogue
from .phase_plane import OdeCase, Variant
from .synthesis import FieldKind
from .verification import Diagnostics, convergence_check, decay_fit, default_shells, holder_check, run_suite

log = logging.getLogger("curlwave")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _out_dir(args):
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise IoError(f"cannot create {out}: {err}") from None
    return out


def _linspace(triple):
    a, b, n = triple
    return np.linspace(float(a), float(b), int(n))


def _run_meta(cfg: RunConfig, args, threads):
    return {"seed": args.seed if args.seed is not None else cfg.seed, "threads": threads,
            "version": __version__, "config": str(args.config)}


# --- subcommands ------------------------------------------------------------------

def cmd_periodmap(cfg: RunConfig, args, threads):
    pm = cfg.periodmap
    if pm is None:
        raise ValidationError("periodmap", "required for this subcommand")
    case = OdeCase(Variant(pm.get("equation", "rogue")), cfg.p)
    out = _out_dir(args)
    written = []
    if pm.get("c") is not None:
        c = _linspace(pm["c"])
        L = np.asarray(period(case, c), float)
        if case.variant is Variant.ROGUE:
            inner = (c > rogue_center_level(cfg.p)) & (c < 0.0)
            dL = np.full_like(c, np.nan)
            if inner.any():
                dL[inner] = period_derivative_rogue(cfg.p, c[inner])
        else:
            dL = np.full_like(c, np.nan)
        write_table(out / "period.csv", ["c", "L", "dL_dc"],
                    [(float(a), float(b), float(d)) for a, b, d in zip(c, L, dL)])
        written.append("period.csv")
    if pm.get("s") is not None:
        s = _linspace(pm["s"])
        M = np.asarray(invert_period(case, s), float)
        write_table(out / "inverse.csv", ["s", "M"], [(float(a), float(b)) for a, b in zip(s, M)])
        written.append("inverse.csv")
    log.info("wrote %s", ", ".join(written))
    return EXIT_OK


def _field_and_grid(cfg: RunConfig):
    probe = cfg.grid_spec(cfg.T)
    fld = cfg.build_field(sample=regular_points(cfg.build_geometry(), probe))
    return fld, cfg.grid_spec(fld.T)


def cmd_synthesize(cfg: RunConfig, args, threads):
    fld, grid = _field_and_grid(cfg)
    out = _out_dir(args)
    name = cfg.output.get("csv", "field.csv")
    n = export_field(fld, grid, out / name, threads=threads)
    meta = {**_run_meta(cfg, args, threads), "kind": fld.kind.value, "p": fld.p, "rows": n,
            **{k: v for k, v in fld.meta.items() if isinstance(v, (int, float, str))}}
    write_json(_clean(meta), out / (Path(name).stem + ".meta.json"))
    log.info("wrote %d rows to %s", n, out / name)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args, threads):
    seed = args.seed if args.seed is not None else cfg.seed
    rng = np.random.default_rng(seed)
    diag = Diagnostics()
    if cfg.kind is not None:
        fld, grid = _field_and_grid(cfg)
        diag = run_suite(fld, grid, tolerances=cfg.tolerances)
        if cfg.decay is not None:
            mode = cfg.decay.get("mode", "spatial")
            r_max = float(cfg.decay.get("r_max", 10.0))
            fit = decay_fit(fld, mode, default_shells(r_max, int(cfg.decay.get("shells", 8))), r_max=r_max)
            key = "spatial_decay" if mode == "spatial" else "spacetime_decay"
            setattr(diag, key, fit)
            diag.pass_flags[key] = (not fit.insufficient) and fit.exponent > 0
            if "delta_tilde" in fld.meta:
                diag.meta["decay_target"] = fld.meta["delta_tilde"]
    if cfg.holder is not None:
        T = float(cfg.holder.get("T", 5.0))
        n = int(cfg.holder.get("pairs", 50))
        c0 = rogue_center_level(cfg.p)
        pairs = rng.uniform(c0, 0.0, size=(n, 2))
        diag = diag.merge(holder_check(cfg.p, T, pairs))
    if not diag.pass_flags:
        raise ValidationError("kind", "verify needs a kind or a holder section")
    diag.meta.update(_run_meta(cfg, args, threads))
    out = _out_dir(args)
    export_diagnostics(diag, out / cfg.output.get("json", "diagnostics.json"))
    for k, v in diag.pass_flags.items():
        log.info("%-12s %s", k, "pass" if v else "FAIL")
    return EXIT_OK if diag.passed else EXIT_FAIL


def cmd_approximate(cfg: RunConfig, args, threads):
    if cfg.kind is not FieldKind.ROGUE_WAVE:
        raise ValidationError("kind", "approximate needs kind RogueWave")
    T_list = (cfg.approximate or {}).get("T_list", [10, 20, 40])
    fld, _ = _field_and_grid(cfg)
    grid = cfg.grid_spec(None) if cfg.grid else None
    diag = convergence_check(fld, T_list, grid=grid)
    diag.meta.update(_run_meta(cfg, args, threads))
    out = _out_dir(args)
    write_table(out / "convergence.csv", ["T", "sup_error"], diag.convergence_table)
    export_diagnostics(diag, out / cfg.output.get("json", "convergence.json"))
    return EXIT_OK if diag.passed else EXIT_FAIL


COMMANDS = {"periodmap": cmd_periodmap, "synthesize": cmd_synthesize,
            "verify": cmd_verify, "approximate": cmd_approximate}


def _clean(d):
    return {k: (v if not (isinstance(v, float) and not math.isfinite(v)) else str(v)) for k, v in d.items()}


def build_parser():
    ap = argparse.ArgumentParser(prog="curlwave", description="Breather and rogue-wave fields of curl-curl wave equations.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", default=".", help="output directory (default: current)")
        sp.add_argument("--seed", type=int, default=None, help="seed for sampled checks (overrides config)")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads for grid evaluation (default: $CURLWAVE_THREADS or 1)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        threads = resolve_threads(args.threads)
        cfg = parse_config(args.config)
        return COMMANDS[args.command](cfg, args, threads)
    except (ParseError, ValidationError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except IoError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except CurlWaveError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
