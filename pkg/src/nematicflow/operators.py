"""Discrete differential operators on the cell-centered grid.

Ghost-cell conventions: Dirichlet data uses odd reflection across the
face (ghost = -edge cell), Neumann data uses even reflection
(ghost = edge cell).  The centered divergence of a Dirichlet vector
field and the centered gradient of a Neumann scalar are exact negative
adjoints of each other in the discrete L2 inner product; the projection
solve composes them, so projected fields are divergence-free to solver
precision and the projector is orthogonal.

Linear solves go through cached sparse LU factorizations keyed by grid,
boundary condition, and coefficient.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import GridSpec, ScalarField, TensorField22, VectorField2, VectorField3

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

POISSON_TOL = 1e-10          # relative residual contract for poisson_solve
PROJECTION_DIV_TOL = 1e-8    # divergence bound on projected fields


class SolverError(RuntimeError):
    """A linear solve failed to meet its residual contract."""


# --- raw centered differences -------------------------------------------


def _ghost_sign(mode: str) -> float:
    if mode == DIRICHLET:
        return -1.0
    if mode == NEUMANN:
        return 1.0
    raise ValueError(f"unknown boundary condition {mode!r}")


def diff_x(f: np.ndarray, h: float, mode: str) -> np.ndarray:
    """Centered x-derivative with ghost values per `mode` (axis 1)."""
    s = _ghost_sign(mode)
    out = np.empty_like(f)
    out[..., :, 1:-1] = f[..., :, 2:] - f[..., :, :-2]
    out[..., :, 0] = f[..., :, 1] - s * f[..., :, 0]
    out[..., :, -1] = s * f[..., :, -1] - f[..., :, -2]
    out /= 2.0 * h
    return out


def diff_y(f: np.ndarray, h: float, mode: str) -> np.ndarray:
    """Centered y-derivative with ghost values per `mode` (axis 0)."""
    s = _ghost_sign(mode)
    out = np.empty_like(f)
    out[..., 1:-1, :] = f[..., 2:, :] - f[..., :-2, :]
    out[..., 0, :] = f[..., 1, :] - s * f[..., 0, :]
    out[..., -1, :] = s * f[..., -1, :] - f[..., -2, :]
    out /= 2.0 * h
    return out


def lap_raw(f: np.ndarray, grid: GridSpec, bc: str) -> np.ndarray:
    """5-point Laplacian with ghost cells per bc; works on (..., ny, nx)."""
    s = _ghost_sign(bc)
    hx2, hy2 = grid.hx**2, grid.hy**2
    out = np.empty_like(f)
    out[..., :, 1:-1] = f[..., :, 2:] - 2.0 * f[..., :, 1:-1] + f[..., :, :-2]
    out[..., :, 0] = f[..., :, 1] + (s - 2.0) * f[..., :, 0]
    out[..., :, -1] = f[..., :, -2] + (s - 2.0) * f[..., :, -1]
    out /= hx2
    tmp = np.empty_like(f)
    tmp[..., 1:-1, :] = f[..., 2:, :] - 2.0 * f[..., 1:-1, :] + f[..., :-2, :]
    tmp[..., 0, :] = f[..., 1, :] + (s - 2.0) * f[..., 0, :]
    tmp[..., -1, :] = f[..., -2, :] + (s - 2.0) * f[..., -1, :]
    out += tmp / hy2
    return out


def grad_raw(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Pressure-type gradient (even ghosts): shape (ny,nx) -> (2,ny,nx)."""
    return np.stack([diff_x(f, grid.hx, NEUMANN), diff_y(f, grid.hy, NEUMANN)])


def div_raw(v: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Velocity divergence (odd ghosts): shape (2,ny,nx) -> (ny,nx)."""
    return diff_x(v[0], grid.hx, DIRICHLET) + diff_y(v[1], grid.hy, DIRICHLET)


def advect_raw(v: np.ndarray, f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Skew-symmetric advection (v . grad) f, componentwise over axis 0.

    Average of advective form (even-ghost derivatives of f) and
    conservative form (odd-ghost derivatives of v_i f): the discrete
    pairing <advect(v,f), f> vanishes identically, mirroring the
    continuum integration-by-parts cancellation.
    """
    adv = v[0] * diff_x(f, grid.hx, NEUMANN) + v[1] * diff_y(f, grid.hy, NEUMANN)
    con = diff_x(v[0] * f, grid.hx, DIRICHLET) + diff_y(v[1] * f, grid.hy, DIRICHLET)
    return 0.5 * (adv + con)


# --- sparse matrices and cached factorizations ---------------------------


def _diff1d(n: int, h: float, mode: str) -> sp.csr_matrix:
    s = _ghost_sign(mode)
    m = sp.lil_matrix((n, n))
    for i in range(n):
        if i > 0:
            m[i, i - 1] = -1.0
        else:
            m[i, i] += -s
        if i < n - 1:
            m[i, i + 1] = 1.0
        else:
            m[i, i] += s
    return (m / (2.0 * h)).tocsr()


def _lap1d(n: int, h: float, bc: str) -> sp.csr_matrix:
    s = _ghost_sign(bc)
    main = np.full(n, -2.0)
    main[0] += s
    main[-1] += s
    off = np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / h**2


def div_matrix(grid: GridSpec) -> sp.csr_matrix:
    """Divergence as an (n, 2n) matrix acting on [vx.ravel(); vy.ravel()]."""
    ix = sp.identity(grid.nx, format="csr")
    iy = sp.identity(grid.ny, format="csr")
    dx = sp.kron(iy, _diff1d(grid.nx, grid.hx, DIRICHLET), format="csr")
    dy = sp.kron(_diff1d(grid.ny, grid.hy, DIRICHLET), ix, format="csr")
    return sp.hstack([dx, dy], format="csr")


def grad_matrix(grid: GridSpec) -> sp.csr_matrix:
    """Gradient as a (2n, n) matrix; equals -div_matrix(grid).T exactly."""
    return (-div_matrix(grid).T).tocsr()


def lap_matrix(grid: GridSpec, bc: str) -> sp.csr_matrix:
    key = ("lapmat", (grid.nx, grid.ny, grid.Lx, grid.Ly), bc)
    if key not in _cache:
        ix = sp.identity(grid.nx, format="csr")
        iy = sp.identity(grid.ny, format="csr")
        _cache[key] = (sp.kron(iy, _lap1d(grid.nx, grid.hx, bc), format="csr")
                       + sp.kron(_lap1d(grid.ny, grid.hy, bc), ix, format="csr"))
    return _cache[key]


_cache: dict = {}


def _grid_key(grid: GridSpec):
    return (grid.nx, grid.ny, grid.Lx, grid.Ly)


def _poisson_lu(grid: GridSpec, bc: str):
    key = ("poisson", _grid_key(grid), bc)
    if key not in _cache:
        a = lap_matrix(grid, bc)
        if bc == NEUMANN:
            a = _pin_first_cell(a)
        _cache[key] = spla.splu(a.tocsc())
    return _cache[key]


def _helmholtz_lu(grid: GridSpec, bc: str, c: float):
    key = ("helmholtz", _grid_key(grid), bc, float(c))
    if key not in _cache:
        a = sp.identity(grid.ncells, format="csr") - c * lap_matrix(grid, bc)
        _cache[key] = spla.splu(a.tocsc())
    return _cache[key]


def _projection_lu(grid: GridSpec):
    # composite operator div(grad(.)); singular with nullspace = constants,
    # compatible for any rhs in the range of div, so pinning one cell is exact
    key = ("projection", _grid_key(grid))
    if key not in _cache:
        d = div_matrix(grid)
        a = (d @ grad_matrix(grid)).tocsr()
        _cache[key] = spla.splu(_pin_first_cell(a).tocsc())
    return _cache[key]


def _pin_first_cell(a: sp.csr_matrix) -> sp.csr_matrix:
    a = a.tolil(copy=True)
    a[0, :] = 0.0
    a[0, 0] = 1.0
    return a.tocsr()


# --- public operations ----------------------------------------------------


def laplacian(f: ScalarField, bc: str) -> ScalarField:
    return ScalarField(f.grid, lap_raw(f.data, f.grid, bc))


def gradient(f: ScalarField) -> VectorField2:
    return VectorField2(f.grid, grad_raw(f.data, f.grid))


def divergence(v: VectorField2) -> ScalarField:
    return ScalarField(v.grid, div_raw(v.data, v.grid))


def advect(v: VectorField2, f):
    """(v . grad) f for f of any arity on the same grid."""
    if v.grid != f.grid:
        raise ValueError("advect: velocity and field on different grids")
    out = advect_raw(v.data, f.data, v.grid)
    return type(f)(f.grid, out)


def elastic_stress(d: VectorField3) -> TensorField22:
    """sigma_ij = sum_k d_i d^k d_j d^k from discrete orientation gradients."""
    gx = diff_x(d.data, d.grid.hx, NEUMANN)
    gy = diff_y(d.data, d.grid.hy, NEUMANN)
    s11 = np.sum(gx * gx, axis=0)
    s12 = np.sum(gx * gy, axis=0)
    s22 = np.sum(gy * gy, axis=0)
    return TensorField22(d.grid, np.stack([s11, s12, s12.copy(), s22]))


def elastic_force_raw(d: np.ndarray, grid: GridSpec) -> np.ndarray:
    gx = diff_x(d, grid.hx, NEUMANN)
    gy = diff_y(d, grid.hy, NEUMANN)
    s11 = np.sum(gx * gx, axis=0)
    s12 = np.sum(gx * gy, axis=0)
    s22 = np.sum(gy * gy, axis=0)
    # row-wise divergence; the stress rows are flux-like, even ghosts keep
    # the normal derivative consistent with the Neumann orientation data
    fx = diff_x(s11, grid.hx, NEUMANN) + diff_y(s12, grid.hy, NEUMANN)
    fy = diff_x(s12, grid.hx, NEUMANN) + diff_y(s22, grid.hy, NEUMANN)
    return np.stack([fx, fy])


def elastic_force(d: VectorField3) -> VectorField2:
    return VectorField2(d.grid, elastic_force_raw(d.data, d.grid))


def poisson_solve_raw(rhs: np.ndarray, grid: GridSpec, bc: str) -> np.ndarray:
    b = rhs.reshape(-1).astype(np.float64).copy()
    if bc == NEUMANN:
        b -= b.mean()
    bsolve = b.copy()
    if bc == NEUMANN:
        # pinned row replaces the (redundant) first equation
        bsolve[0] = 0.0
    x = _poisson_lu(grid, bc).solve(bsolve)
    if bc == NEUMANN:
        x -= x.mean()
    scale = float(np.linalg.norm(b))
    if scale > 0.0:
        res = float(np.linalg.norm(lap_matrix(grid, bc) @ x - b)) / scale
        if res > POISSON_TOL:
            raise SolverError(f"poisson residual {res:.3e} exceeds {POISSON_TOL}")
    return x.reshape(grid.ny, grid.nx)


def poisson_solve(rhs: ScalarField, bc: str) -> ScalarField:
    """Solve the 5-point Laplacian system Delta(phi) = rhs.

    Neumann right-hand sides are mean-corrected and the solution is
    normalized to zero mean.
    """
    return ScalarField(rhs.grid, poisson_solve_raw(rhs.data, rhs.grid, bc))


def helmholtz_solve_raw(rhs: np.ndarray, grid: GridSpec, bc: str, c: float) -> np.ndarray:
    """Solve (I - c * Delta) x = rhs for each leading component of rhs."""
    if c == 0.0:
        return rhs.copy()
    lu = _helmholtz_lu(grid, bc, c)
    flat = rhs.reshape(-1, grid.ncells).T  # one solve, many right-hand sides
    return lu.solve(flat).T.reshape(rhs.shape)


def leray_project_raw(v: np.ndarray, grid: GridSpec):
    rhs = div_raw(v, grid).reshape(-1)
    rhs0 = rhs.copy()
    rhs0[0] = 0.0
    phi = _projection_lu(grid).solve(rhs0)
    phi -= phi.mean()
    phi = phi.reshape(grid.ny, grid.nx)
    return v - grad_raw(phi, grid), phi


def leray_project(v: VectorField2):
    """Project onto discretely divergence-free fields; returns (P v, phi)."""
    out, phi = leray_project_raw(v.data, v.grid)
    return VectorField2(v.grid, out), ScalarField(v.grid, phi)


# --- inner products -------------------------------------------------------


def inner(a: np.ndarray, b: np.ndarray, grid: GridSpec) -> float:
    """Discrete L2 inner product (all components summed)."""
    return float(np.sum(a * b) * grid.cell_area)


def l2_norm(a: np.ndarray, grid: GridSpec) -> float:
    return float(np.sqrt(max(inner(a, a, grid), 0.0)))


def dirichlet_form(a: np.ndarray, grid: GridSpec, bc: str) -> float:
    """Quadratic form <a, -Delta a> = discrete |grad a|_2^2 for the given bc."""
    return -inner(a, lap_raw(a, grid, bc), grid)
