"""Rectangular node grids, optionally masked to a triangle T_{N,delta}."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int
    # triangle mask {x >= x_min, y >= y_min, x + y <= N}; None keeps the full rectangle
    triangle_n: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidInput("grid needs 0 < x_min < x_max and y_min < y_max")
        if self.nx < 3 or self.ny < 3:
            raise InvalidInput("grid needs at least 3 nodes per axis")

    @classmethod
    def triangle(cls, mu, n, delta, nx, ny):
        """Bounding grid of T_{N,delta} = {x >= delta, y >= mu + delta, x + y <= N}."""
        if not mu + delta < n:
            raise InvalidInput("triangle needs mu + delta < N")
        return cls(delta, n - mu - delta, mu + delta, n - delta, nx, ny, triangle_n=n)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    def mesh(self):
        """``(X, Y)`` arrays of shape ``(ny, nx)``."""
        return np.meshgrid(self.xs, self.ys)

    def mask(self) -> np.ndarray:
        X, Y = self.mesh()
        if self.triangle_n is None:
            return np.ones_like(X, dtype=bool)
        return X + Y <= self.triangle_n * (1 + 1e-12)
