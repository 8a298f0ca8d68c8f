"""Tensor-product sampling grids in space and time."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class GridSpec:
    """Cube ``[-extent, extent]^3`` (or explicit ``lower``/``upper``) with ``n`` points per axis,
    and ``nt`` times on ``[t0, t1]``."""

    extent: float = 3.0
    n: int = 9
    t0: float = 0.0
    t1: float = 1.0
    nt: int = 8
    lower: tuple | None = None
    upper: tuple | None = None

    def __post_init__(self):
        if self.n < 2 or self.nt < 1:
            raise DomainError("a grid needs at least 2 points per axis and 1 time")
        if not self.extent > 0:
            raise DomainError("grid extent must be positive")

    def axes(self):
        lo = np.full(3, -self.extent) if self.lower is None else np.asarray(self.lower, float)
        hi = np.full(3, self.extent) if self.upper is None else np.asarray(self.upper, float)
        return [np.linspace(lo[i], hi[i], self.n) for i in range(3)]

    def points(self):
        a, b, c = self.axes()
        return np.stack(np.meshgrid(a, b, c, indexing="ij"), axis=-1).reshape(-1, 3)

    def times(self):
        if self.nt == 1:
            return np.array([self.t0])
        return np.linspace(self.t0, self.t1, self.nt)

    def with_times(self, t0, t1, nt=None):
        return GridSpec(self.extent, self.n, float(t0), float(t1), self.nt if nt is None else nt,
                        self.lower, self.upper)


def regular_points(geo, grid: GridSpec):
    """Grid points off the singular set of ``geo``."""
    x = grid.points()
    return x[~geo.singular(x)]
