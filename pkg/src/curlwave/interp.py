"""Piecewise quintic Hermite interpolation on uniform grids.

Used to evaluate tabulated orbits between integrator output nodes. With the
value and the first two derivatives matched at both cell ends the interpolant
is C^2, so finite-difference second time derivatives of synthesized fields
stay consistent across cell boundaries.
"""
from __future__ import annotations

import numpy as np


def _basis(u):
    u2 = u * u
    u3 = u2 * u
    u4 = u3 * u
    u5 = u4 * u
    return (
        1 - 10 * u3 + 15 * u4 - 6 * u5,
        u - 6 * u3 + 8 * u4 - 3 * u5,
        0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5,
        10 * u3 - 15 * u4 + 6 * u5,
        -4 * u3 + 7 * u4 - 3 * u5,
        0.5 * u3 - u4 + 0.5 * u5,
    )


def hermite5(values, d1, d2, h, rows, s):
    """Evaluate tabulated functions at arbitrary abscissae.

    ``values``, ``d1``, ``d2`` have shape (n_rows, K+1): samples and first and
    second derivatives on the uniform grid ``0, h_i, ..., K h_i`` of row i.
    ``rows`` and ``s`` are broadcast-compatible arrays giving, per query, the
    row and the abscissa in ``[0, K h_i]``.
    """
    rows, s = np.broadcast_arrays(np.asarray(rows), np.asarray(s, float))
    K = values.shape[1] - 1
    hr = np.asarray(h, float)[rows]
    pos = s / hr
    j = np.clip(np.floor(pos).astype(np.int64), 0, K - 1)
    u = pos - j
    b0, b1, b2, b3, b4, b5 = _basis(u)
    return (
        values[rows, j] * b0
        + hr * d1[rows, j] * b1
        + hr * hr * d2[rows, j] * b2
        + values[rows, j + 1] * b3
        + hr * d1[rows, j + 1] * b4
        + hr * hr * d2[rows, j + 1] * b5
    )
