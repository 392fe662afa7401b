"""Noise paths, the divergence-free mode basis, and the OU convolution.

Brownian increments are generated counter-style: each (seed, channel,
bin) triple is hashed to two 64-bit words and pushed through Box-Muller,
so any window of any path can be revisited in any order and reproduce
the same values bit-for-bit.  Channel 0 is the scalar rotation noise;
channels 1..M drive the velocity modes.  Bin indices are signed, which
is what makes pullback (start times far in the past) addressable.

The velocity mode basis diagonalizes the discrete Stokes operator
exactly: modes are eigenvectors of the Dirichlet vector Laplacian
restricted (Galerkin) to the nullspace of the discrete divergence.
Exactness matters: the per-mode exponential decay used by the OU update
then agrees with the full-field implicit diffusion of the direct
integrator to second order per step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .grid import GridSpec, VectorField2
from . import operators as ops

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_CHAN_SALT = np.uint64(0x8CB92BA72F3D8DD7)
_PAIR_SALT = np.uint64(0xD1B54A32D192ED03)
_INV_2_53 = 2.0 ** -53


def _mix64(x):
    """splitmix64 finalizer; x is uint64 scalar or array (wraps mod 2^64)."""
    with np.errstate(over="ignore"):
        z = np.asarray(x, dtype=np.uint64) + _GOLD
        z = z ^ (z >> np.uint64(30))
        z = z * _MIX1
        z = z ^ (z >> np.uint64(27))
        z = z * _MIX2
        return z ^ (z >> np.uint64(31))


def _zigzag(k):
    """Map signed bins to uint64: 0,-1,1,-2,2,... -> 0,1,2,3,4,..."""
    k = np.asarray(k, dtype=np.int64)
    return ((k << 1) ^ (k >> np.int64(63))).astype(np.uint64)


def standard_normals(seed, channel, k) -> np.ndarray:
    """Unit normals addressed by (seed, channel, bin); broadcasts all three."""
    with np.errstate(over="ignore"):
        s = _mix64(np.asarray(np.asarray(seed, dtype=np.int64).astype(np.uint64)))
        ch = np.asarray(channel, dtype=np.uint64)
        kk = _zigzag(k)
        base = _mix64(s ^ (ch * _CHAN_SALT))
        b1 = _mix64(base ^ (kk * _GOLD))
        b2 = _mix64(b1 ^ _PAIR_SALT)
    u1 = ((b1 >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53  # in (0, 1]
    u2 = (b2 >> np.uint64(11)).astype(np.float64) * _INV_2_53          # in [0, 1)
    r = np.sqrt(-2.0 * np.log(u1))
    return r * np.cos(2.0 * np.pi * u2)


@dataclass(frozen=True)
class PathStore:
    """Deterministic two-sided Brownian increment source."""

    seed: int
    dt_master: float
    channels: int  # number of W1 channels; valid channel range is 0..channels

    def __post_init__(self):
        if self.dt_master <= 0:
            raise ValueError("dt_master must be positive")
        if self.channels < 1:
            raise ValueError("need at least one W1 channel")

    def _check_channel(self, channel) -> None:
        c = np.asarray(channel)
        if np.any(c < 0) or np.any(c > self.channels):
            raise ValueError(f"channel out of range 0..{self.channels}")

    def increment(self, channel, k):
        """N(0, dt_master) increment(s) for bin(s) k; pure and replay-exact."""
        self._check_channel(channel)
        out = standard_normals(self.seed, channel, k) * np.sqrt(self.dt_master)
        return float(out) if np.ndim(out) == 0 else out

    def w1_increments(self, k: int) -> np.ndarray:
        """All mode-channel increments (1..channels) for one bin."""
        return self.increment(np.arange(1, self.channels + 1), k)

    def w2_value(self, t: float) -> float:
        """W2(t) = signed sum of channel-0 increments, anchored W2(0) = 0."""
        k = _bin_of(t, self.dt_master)
        if k == 0:
            return 0.0
        if k > 0:
            return float(np.sum(self.increment(0, np.arange(0, k))))
        return -float(np.sum(self.increment(0, np.arange(k, 0))))


def _bin_of(t: float, dt: float) -> int:
    k = round(t / dt)
    if abs(k * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"time {t} is not on the master grid with dt = {dt}")
    return int(k)


def path_store_for(p) -> PathStore:
    return PathStore(seed=int(p.seed), dt_master=float(p.dt),
                     channels=int(p.noise_mode_count))


# --- divergence-free mode basis ------------------------------------------


@dataclass(frozen=True)
class ModeBasis:
    grid: GridSpec
    fields: np.ndarray    # (M, 2, ny, nx), orthonormal in discrete L2
    alphas: np.ndarray    # Rayleigh/eigen values of the Dirichlet form, ascending
    lambdas: np.ndarray   # spectrum weights (1 + alpha_n)^-q
    q: float

    @property
    def count(self) -> int:
        return self.fields.shape[0]

    def mode(self, n: int) -> VectorField2:
        return VectorField2(self.grid, self.fields[n])

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Sum_n coeffs[n] * e_n as a raw (2, ny, nx) array."""
        return np.tensordot(np.asarray(coeffs), self.fields, axes=(0, 0))

    def coefficients(self, v: np.ndarray) -> np.ndarray:
        """Discrete L2 coefficients <v, e_n> of a raw velocity array."""
        return np.tensordot(self.fields, v, axes=([1, 2, 3], [0, 1, 2])) * self.grid.cell_area


_basis_cache: dict = {}


def build_mode_basis(grid: GridSpec, count: int, q: float = 3.0) -> ModeBasis:
    """Lowest `count` eigenmodes of the discrete Stokes operator.

    Assembles the discrete divergence D and Dirichlet vector Laplacian L,
    takes an orthonormal basis N of null(D) (dense SVD; desk-scale grids
    only), and solves the symmetric Galerkin eigenproblem N^T (-L) N.
    The resulting fields are exactly divergence-free, pairwise
    orthonormal in the discrete L2 product, and satisfy
    P(-L) e_n = alpha_n e_n with P the orthogonal Leray projector.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if count > grid.ncells // 4:
        raise ValueError("count exceeds nx*ny/4")
    key = (grid.nx, grid.ny, grid.Lx, grid.Ly, count, float(q))
    if key in _basis_cache:
        return _basis_cache[key]

    nsk = (grid.nx, grid.ny, grid.Lx, grid.Ly)
    pair = _basis_cache.get(("raw", nsk))
    if pair is None:
        d = ops.div_matrix(grid).toarray()
        nullb = scipy.linalg.null_space(d)  # (2n, n+1), Euclidean-orthonormal
        lap = ops.lap_matrix(grid, ops.DIRICHLET)
        lap2 = np.vstack([lap @ nullb[: grid.ncells], lap @ nullb[grid.ncells:]])
        b = -(nullb.T @ lap2)
        b = 0.5 * (b + b.T)
        evals, evecs = scipy.linalg.eigh(b)
        _basis_cache[("raw", nsk)] = pair = (nullb, evals, evecs)
    nullb, evals, evecs = pair

    if count > len(evals):
        raise ValueError("fewer independent divergence-free modes than requested")
    w = nullb @ evecs[:, :count]
    w /= np.sqrt(grid.cell_area)  # Euclidean -> discrete L2 normalization
    fields = np.transpose(w, (1, 0)).reshape(count, 2, grid.ny, grid.nx)
    alphas = np.array(evals[:count], dtype=np.float64)
    lambdas = (1.0 + alphas) ** (-float(q))
    basis = ModeBasis(grid=grid, fields=fields, alphas=alphas,
                      lambdas=lambdas, q=float(q))
    _basis_cache[key] = basis
    return basis


def basis_for(p) -> ModeBasis:
    return build_mode_basis(p.grid, p.noise_mode_count, p.noise_spectrum_exponent)


def spectrum_summability(basis: ModeBasis) -> float:
    """Discrete shadow of the noise admissibility sum: sum lambda_n alpha_n^2."""
    return float(np.sum(basis.lambdas * basis.alphas**2))


def sample_w1_increment(store: PathStore, basis: ModeBasis, t: float,
                        dt: float) -> np.ndarray:
    """Truncated Wiener increment sum_n sqrt(lambda_n) dB_n e_n for one bin."""
    if abs(dt - store.dt_master) > 1e-15:
        raise ValueError("noise bins are locked to the master dt")
    if basis.count > store.channels:
        raise ValueError("basis has more modes than the store has channels")
    k = _bin_of(t, store.dt_master)
    db = store.increment(np.arange(1, basis.count + 1), k)
    return basis.synthesize(np.sqrt(basis.lambdas) * db)


# --- OU stochastic convolution -------------------------------------------


@dataclass(frozen=True)
class OUState:
    t: float
    coeffs: np.ndarray  # per-mode real coefficients z_n(t)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if not np.all(np.isfinite(c)):
            raise ValueError("OU coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    def field(self, basis: ModeBasis) -> np.ndarray:
        return basis.synthesize(self.coeffs)


def ou_step(z: OUState, store: PathStore, basis: ModeBasis, dt: float,
            beta: float) -> OUState:
    """Exponential-Euler step of dz_n = -(alpha_n + beta) z_n dt + sqrt(lambda_n) dB_n.

    Consumes the same increments as sample_w1_increment for the bin
    starting at z.t, so v = u + z holds discretely between the direct
    and transformed integrators.
    """
    if abs(dt - store.dt_master) > 1e-15:
        raise ValueError("noise bins are locked to the master dt")
    k = _bin_of(z.t, store.dt_master)
    db = store.increment(np.arange(1, basis.count + 1), k)
    decay = np.exp(-(basis.alphas + beta) * dt)
    coeffs = decay * z.coeffs + np.sqrt(basis.lambdas) * db
    return OUState(t=(k + 1) * store.dt_master, coeffs=coeffs)


def ou_stationary_init(store: PathStore, basis: ModeBasis, t0: float,
                       burn_in_bins: int, beta: float) -> OUState:
    """Finite-horizon truncation of the two-sided stochastic convolution.

    Integrates from rest over [t0 - burn_in*dt, t0]; per-mode truncation
    error is bounded by exp(-(alpha_n + beta) * burn_in * dt) relative to
    the stationary spread.
    """
    if burn_in_bins < 0:
        raise ValueError("burn_in_bins must be nonnegative")
    k0 = _bin_of(t0, store.dt_master)
    if burn_in_bins == 0:
        return OUState(t=k0 * store.dt_master, coeffs=np.zeros(basis.count))
    # closed form of burn_in_bins exponential-Euler steps from rest:
    # z_n(t0) = sum_j exp(-(alpha_n+beta) dt (burn-1-j)) sqrt(lambda_n) dB_j
    bins = np.arange(k0 - burn_in_bins, k0)
    db = store.increment(np.arange(1, basis.count + 1)[:, None], bins[None, :])
    rates = basis.alphas + beta
    ages = store.dt_master * np.arange(burn_in_bins - 1, -1, -1)
    weights = np.exp(-np.outer(rates, ages))
    coeffs = np.sqrt(basis.lambdas) * np.sum(weights * db, axis=1)
    return OUState(t=k0 * store.dt_master, coeffs=coeffs)


def default_burn_in_bins(basis: ModeBasis, beta: float, dt: float) -> int:
    """Horizon with e^-20 (~2e-9) relative truncation error on the slowest mode."""
    rate = float(basis.alphas[0]) + beta
    return max(1, int(np.ceil(20.0 / (rate * dt))))
