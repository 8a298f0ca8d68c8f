"""Batched orbit families y(s; c) for many first-integral values at once.

Synthesis needs one orbit per distinct ``c(zeta)``. Members are integrated
together (one vectorized system per chunk), each on its own time interval
mapped to ``[0, 1]``, and tabulated on a uniform grid in its own time. Values
between nodes come from quintic Hermite interpolation using the ODE for the
second derivative, so the interpolant is C^2 and accurate to roughly the
integrator tolerance.

Only half a period is integrated when the orbit has a reflection symmetry:

* ``"even"``: launched from a turning point, ``y(S - s) = y(s)``,
  ``y'(S - s) = -y'(s)``;
* ``"odd"``: launched from ``y = 0`` of an odd force,
  ``y(S - s) = -y(s)``, ``y'(S - s) = y'(s)``.

The mismatch at the half period is kept as the periodicity defect.
"""
from __future__ import annotations

import math
import threading

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, NonConvergence
from .interp import hermite5
from .phase_plane import OdeCase

CHUNK = 128
SPACING = 0.02


class OrbitTable:
    """Tabulated orbits of one case.

    ``xi``, ``eta``: initial points; ``horizon``: per-member period (periodic
    tables) or integration length; ``symmetry``: ``"even"``, ``"odd"`` or
    ``None``; ``periodic``: wrap evaluation times modulo ``horizon``.
    """

    def __init__(self, case: OdeCase, xi, eta, horizon, symmetry=None, periodic=True,
                 tol=1e-12, spacing=SPACING):
        self.case = case
        self.xi = np.atleast_1d(np.asarray(xi, float))
        self.eta = np.atleast_1d(np.asarray(eta, float))
        self.horizon = np.atleast_1d(np.asarray(horizon, float))
        self.symmetry = symmetry
        self.periodic = periodic or symmetry is not None
        n = self.xi.size
        span = 0.5 * self.horizon if symmetry else self.horizon.copy()
        finite = np.isfinite(span)
        top = float(np.max(span[finite])) if finite.any() else 1.0
        K = int(np.clip(math.ceil(top / spacing), 16, 1 << 14))
        K += K % 2
        self.K = K
        self.span = span
        self.step = np.where(finite & (span > 0), span / K, 1.0)
        self.Y = np.empty((n, K + 1))
        self.V = np.empty((n, K + 1))
        speed = np.hypot(self.eta, case.force(self.xi))
        if np.any((speed > 0) & ~finite):
            raise DomainError("a moving orbit needs a finite horizon")
        still = (speed == 0.0) | (span <= 0)
        self.still = still
        self.Y[still] = self.xi[still, None]
        self.V[still] = self.eta[still, None]
        moving = np.flatnonzero(~still)
        for lo in range(0, moving.size, CHUNK):
            idx = moving[lo:lo + CHUNK]
            self._integrate(idx, tol)
        self.defect = self._defects()

    def _integrate(self, idx, tol):
        case = self.case
        scale = np.maximum(np.maximum(np.abs(self.xi[idx]), np.abs(self.eta[idx])), 1e-300)
        H = self.span[idx]
        m = idx.size

        def rhs(tau, z):
            w = z[:m]
            v = z[m:]
            return np.concatenate([H * v, H * case.force(scale * w) / scale])

        z0 = np.concatenate([self.xi[idx] / scale, self.eta[idx] / scale])
        grid = np.linspace(0.0, 1.0, self.K + 1)
        sol = solve_ivp(rhs, (0.0, 1.0), z0, method="DOP853", t_eval=grid, rtol=tol,
                        atol=tol * 1e-2)
        if sol.status < 0 or sol.y.shape[1] != self.K + 1:
            raise NonConvergence(f"orbit family integration failed: {sol.message}")
        self.Y[idx] = scale[:, None] * sol.y[:m]
        self.V[idx] = scale[:, None] * sol.y[m:]

    def _defects(self):
        if self.symmetry == "even":
            return np.abs(self.V[:, -1])
        if self.symmetry == "odd":
            return np.abs(self.Y[:, -1])
        if self.periodic:
            return np.hypot(self.Y[:, -1] - self.xi, self.V[:, -1] - self.eta)
        return np.zeros(self.xi.size)

    def _raw(self, rows, s):
        F = self.case.force
        dF = self.case.dforce
        K = self.K
        hr = self.step[rows]
        j = np.clip(np.floor(s / hr).astype(np.int64), 0, K - 1)
        y0, y1 = self.Y[rows, j], self.Y[rows, j + 1]
        v0, v1 = self.V[rows, j], self.V[rows, j + 1]
        a0, a1 = F(y0), F(y1)
        # gather the two bracketing nodes per query and interpolate on those
        vals = np.stack([y0, y1], axis=-1).reshape(-1, 2)
        d1 = np.stack([v0, v1], axis=-1).reshape(-1, 2)
        d2 = np.stack([a0, a1], axis=-1).reshape(-1, 2)
        flat = np.arange(vals.shape[0])
        local = (s - j * hr).ravel()
        h = hr.ravel()
        y = hermite5(vals, d1, d2, h, flat, local).reshape(s.shape)
        j1 = np.stack([a0, a1], axis=-1).reshape(-1, 2)
        j2 = np.stack([dF(y0) * v0, dF(y1) * v1], axis=-1).reshape(-1, 2)
        v = hermite5(d1, j1, j2, h, flat, local).reshape(s.shape)
        return y, v

    def evaluate(self, rows, s):
        """Return ``(y, y')`` of member ``rows`` at own-time ``s`` (broadcast)."""
        rows, s = np.broadcast_arrays(np.asarray(rows, np.int64), np.asarray(s, float))
        S = self.horizon[rows]
        if self.periodic:
            period = np.where(np.isfinite(S) & (S > 0), S, 1.0)
            s = np.mod(s, period)
        else:
            s = np.clip(s, 0.0, self.span[rows])
        sign_y = np.ones(s.shape)
        sign_v = np.ones(s.shape)
        if self.symmetry:
            half = 0.5 * S
            back = s > half
            s = np.where(back, S - s, s)
            if self.symmetry == "even":
                sign_v = np.where(back, -1.0, 1.0)
            else:
                sign_y = np.where(back, -1.0, 1.0)
        y, v = self._raw(rows, s)
        # constant members are returned exactly (no interpolation roundoff)
        still = self.still[rows]
        y = np.where(still, self.xi[rows], sign_y * y)
        v = np.where(still, self.eta[rows], sign_v * v)
        return y, v


def _key(c):
    """Quantize c to about 12 significant digits (drop the 12 low mantissa bits)."""
    bits = np.asarray(c, np.float64).view(np.int64)
    return (bits + 2048) >> 12


class OrbitCache:
    """Memoized orbit tables keyed by first-integral value.

    ``curve(c) -> (xi, eta)`` gives the initial points, ``period(c)`` the
    horizons; ``special(c) -> mask`` marks values whose orbits are constant
    (equilibria or the zero orbit) and are filled in without integration.
    Lookups are lock-free; inserts take a lock so concurrent evaluations that
    need new members do not integrate them twice.
    """

    def __init__(self, case, curve, period, symmetry, tol=1e-12):
        self.case = case
        self.curve = curve
        self.period = period
        self.symmetry = symmetry
        self.tol = tol
        self._index: dict = {}
        self._tables: list = []
        self._lock = threading.Lock()

    def lookup(self, c):
        """Return (table id, row) arrays for the values ``c``, integrating new ones."""
        c = np.asarray(c, float)
        flat = c.ravel()
        keys = _key(flat)
        uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        missing = [i for i, k in enumerate(uniq.tolist()) if k not in self._index]
        if missing:
            with self._lock:
                missing = [i for i in missing if uniq[i].item() not in self._index]
                if missing:
                    cs = flat[first[missing]]
                    xi, eta = self.curve(cs)
                    S = self.period(cs)
                    table = OrbitTable(self.case, xi, eta, S, self.symmetry, True, self.tol)
                    tid = len(self._tables)
                    self._tables.append((table, cs))
                    for row, i in enumerate(missing):
                        self._index[uniq[i].item()] = (tid, row)
        pairs = np.array([self._index[k] for k in uniq.tolist()], dtype=np.int64).reshape(-1, 2)
        tid = pairs[inverse.ravel(), 0].reshape(c.shape)
        row = pairs[inverse.ravel(), 1].reshape(c.shape)
        return tid, row

    def evaluate(self, c, s):
        """Orbit value and velocity for first integral ``c`` at own time ``s``."""
        c, s = np.broadcast_arrays(np.asarray(c, float), np.asarray(s, float))
        tid, row = self.lookup(c)
        y = np.empty(c.shape)
        v = np.empty(c.shape)
        for t in np.unique(tid):
            m = tid == t
            table = self._tables[t][0]
            y[m], v[m] = table.evaluate(row[m], s[m])
        return y, v

    def defects(self, c):
        tid, row = self.lookup(c)
        out = np.empty(np.shape(c))
        for t in np.unique(tid):
            m = tid == t
            out[m] = self._tables[t][0].defect[row[m]]
        return out

    def __len__(self):
        return len(self._index)
