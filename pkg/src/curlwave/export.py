"""CSV export of sampled fields and JSON export of diagnostics.

Field CSV layout: header ``x1,x2,x3,t,U1,U2,U3`` (complex fields add
``U1_im,U2_im,U3_im``) and a final ``singular`` column (0/1). Rows run over
points in grid order and, for each point, over times. Numbers are written
with 17 significant digits, so a reload reproduces the values exactly;
singular points carry literal ``NaN`` components.
"""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import IoError

FMT = "%.17g"


def resolve_threads(threads=None):
    """Thread count from the argument, else CURLWAVE_THREADS, else 1."""
    if threads is None:
        env = os.environ.get("CURLWAVE_THREADS")
        threads = int(env) if env and env.strip().isdigit() else 1
    return max(1, int(threads))


def evaluate_grid(fld, points, times, threads=1, chunk=2048):
    """``fld.on_grid`` split over point chunks; results keep grid order."""
    points = np.asarray(points, float).reshape(-1, 3)
    times = np.asarray(times, float).ravel()
    pieces = [points[i:i + chunk] for i in range(0, points.shape[0], chunk)] or [points]
    if threads <= 1 or len(pieces) == 1:
        parts = [fld.on_grid(p, times) for p in pieces]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda p: fld.on_grid(p, times), pieces))
    return np.concatenate(parts, axis=0)


def field_header(is_complex):
    cols = ["x1", "x2", "x3", "t", "U1", "U2", "U3"]
    if is_complex:
        cols += ["U1_im", "U2_im", "U3_im"]
    return cols + ["singular"]


def field_rows(fld, points, times, threads=1):
    points = np.asarray(points, float).reshape(-1, 3)
    times = np.asarray(times, float).ravel()
    U = evaluate_grid(fld, points, times, threads)
    sing = fld.geo.singular(points)
    n, m = points.shape[0], times.size
    X = np.repeat(points, m, axis=0)
    Tt = np.tile(times, n)
    Uf = U.reshape(n * m, 3)
    cols = [X, Tt[:, None]]
    if np.iscomplexobj(Uf):
        cols += [Uf.real, Uf.imag]
    else:
        cols.append(Uf)
    data = np.hstack(cols)
    flag = np.repeat(sing, m)
    data[flag, 4:] = np.nan
    return data, flag


def export_field(fld, grid=None, path=None, *, points=None, times=None, threads=1):
    """Write the field sampled on ``grid`` (or explicit points/times) to ``path``."""
    if points is None:
        points = grid.points()
    if times is None:
        times = grid.times()
    data, flag = field_rows(fld, points, times, threads)
    header = field_header(fld.is_complex)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row, f in zip(data, flag):
                w.writerow([FMT % v if np.isfinite(v) else "NaN" for v in row] + [int(f)])
    except OSError as err:
        raise IoError(f"cannot write {path}: {err}") from None
    return data.shape[0]


def read_field_csv(path):
    """Read a field CSV back: dict of column name -> float array."""
    try:
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            rows = [[float(v) for v in row] for row in r]
    except OSError as err:
        raise IoError(f"cannot read {path}: {err}") from None
    arr = np.array(rows, float).reshape(-1, len(header))
    return {h: arr[:, i] for i, h in enumerate(header)}


def write_json(obj, path):
    try:
        with open(path, "w") as fh:
            json.dump(obj, fh, indent=2, allow_nan=False)
            fh.write("\n")
    except OSError as err:
        raise IoError(f"cannot write {path}: {err}") from None


def export_diagnostics(diag, path, meta=None):
    d = diag.to_dict()
    if meta:
        d["meta"] = {**d.get("meta", {}), **meta}
    write_json(d, path)


def write_table(path, header, rows):
    """Plain numeric CSV table (17 significant digits)."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([FMT % v if isinstance(v, float) else v for v in row])
    except OSError as err:
        raise IoError(f"cannot write {path}: {err}") from None
