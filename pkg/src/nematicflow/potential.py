"""Polynomial bulk potential family.

tilde_f(x) = sum_k a_k x^k acts on x = |d|^2; the vector nonlinearity is
f(d) = tilde_f(|d|^2) d, and tilde_F is the antiderivative of tilde_f
normalized to tilde_F(0) = 0.  The classic double-well with unit width is
the degree-1 member a = (-1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import VectorField3


@dataclass(frozen=True)
class PotentialCoeffs:
    coeffs: tuple  # a_0 .. a_N

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(a) for a in self.coeffs))
        if len(self.coeffs) < 2:
            raise ValueError("need degree at least 1")
        if self.coeffs[-1] <= 0:
            raise ValueError("leading coefficient must be positive")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def antiderivative_coeffs(self) -> tuple:
        # recomputed on demand, never stored independently
        return tuple(a / (k + 1) for k, a in enumerate(self.coeffs))


GINZBURG_LANDAU = PotentialCoeffs((-1.0, 1.0))


def _horner(coeffs, x):
    acc = np.zeros_like(np.asarray(x, dtype=np.float64))
    for a in reversed(coeffs):
        acc = acc * x + a
    return acc


def tilde_f(x, c: PotentialCoeffs):
    """Evaluate sum_k a_k x^k for x >= 0 (scalar or array)."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("tilde_f argument must be nonnegative")
    out = _horner(c.coeffs, x)
    return float(out) if out.ndim == 0 else out


def tilde_F(x, c: PotentialCoeffs):
    """Antiderivative of tilde_f with tilde_F(0) = 0."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("tilde_F argument must be nonnegative")
    out = _horner((0.0,) + c.antiderivative_coeffs, x)
    return float(out) if out.ndim == 0 else out


def f_of_d(d, c: PotentialCoeffs):
    """Vector nonlinearity tilde_f(|d|^2) d.

    Accepts a length-3 vector, an array with components on axis 0, or a
    VectorField3; returns the same shape (raw array for raw input).
    """
    if isinstance(d, VectorField3):
        return VectorField3(d.grid, f_of_d(d.data, c))
    d = np.asarray(d, dtype=np.float64)
    mag2 = np.sum(d * d, axis=0)
    return _horner(c.coeffs, mag2)[None, ...] * d


def bulk_energy(d, c: PotentialCoeffs, grid=None) -> float:
    """Midpoint-rule integral of tilde_F(|d|^2) over the domain."""
    if isinstance(d, VectorField3):
        grid = d.grid
        d = d.data
    if grid is None:
        raise ValueError("grid required for raw arrays")
    mag2 = np.sum(np.asarray(d) ** 2, axis=0)
    return float(np.sum(tilde_F(mag2, c)) * grid.cell_area)


def coeffs_from_params(p) -> PotentialCoeffs:
    return PotentialCoeffs(p.potential_coeffs)
