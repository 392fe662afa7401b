"""Grid description and field containers.

All fields live at cell centers of a uniform rectangular grid on
(0, Lx) x (0, Ly).  Arrays are row-major with shape (ny, nx) per
component, y being the slow axis.  Boundary conditions are applied by
the operators through ghost values, never stored in the arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centered grid on the rectangle (0, Lx) x (0, Ly)."""

    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError(f"grid must be at least 8x8, got {self.nx}x{self.ny}")
        if self.Lx <= 0 or self.Ly <= 0:
            raise ValueError("domain edge lengths must be positive")

    @property
    def hx(self) -> float:
        return self.Lx / self.nx

    @property
    def hy(self) -> float:
        return self.Ly / self.ny

    @property
    def ncells(self) -> int:
        return self.nx * self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def cell_centers(self):
        """Return (X, Y) arrays of cell-center coordinates, shape (ny, nx)."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y)


def _check_samples(grid: GridSpec, data: np.ndarray, ncomp: int) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    want = (grid.ny, grid.nx) if ncomp == 1 else (ncomp, grid.ny, grid.nx)
    if data.shape != want:
        raise ValueError(f"sample array shape {data.shape} does not match grid {want}")
    if not np.all(np.isfinite(data)):
        raise ValueError("field samples must be finite")
    return data


@dataclass(frozen=True)
class ScalarField:
    grid: GridSpec
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_samples(self.grid, self.data, 1))


@dataclass(frozen=True)
class VectorField2:
    """Velocity-like field, components (vx, vy) stacked on axis 0."""

    grid: GridSpec
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_samples(self.grid, self.data, 2))


@dataclass(frozen=True)
class VectorField3:
    """Orientation field d = (d1, d2, d3) stacked on axis 0."""

    grid: GridSpec
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_samples(self.grid, self.data, 3))


@dataclass(frozen=True)
class TensorField22:
    """2x2 tensor samples, entries stacked (s11, s12, s21, s22) on axis 0."""

    grid: GridSpec
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_samples(self.grid, self.data, 4))

    def entry(self, i: int, j: int) -> np.ndarray:
        return self.data[2 * i + j]


@dataclass(frozen=True)
class State:
    """A (velocity, orientation) pair at absolute time t (may be negative)."""

    t: float
    v: VectorField2
    d: VectorField3

    def __post_init__(self):
        if self.v.grid != self.d.grid:
            raise ValueError("velocity and orientation live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.v.grid


def zero_state(grid: GridSpec, t: float = 0.0) -> State:
    return State(
        t=t,
        v=VectorField2(grid, np.zeros((2, grid.ny, grid.nx))),
        d=VectorField3(grid, np.zeros((3, grid.ny, grid.nx))),
    )
