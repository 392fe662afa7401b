"""Norms, energies, and residual checkers for simulated trajectories.

Every checker turns an analytic identity of the continuous system into a
per-step discrete residual: the identity is considered verified when the
residual shrinks at the expected order as dt is refined.  Checkers never
abort a run; they return numbers and let tests decide.

Spatial terms inside time-derivative residuals are evaluated at the
midpoint state (d_k + d_{k+1}) / 2, which removes the leading chain-rule
commutator and leaves the scheme's genuine first-order-in-dt error.

Gradient energies are computed from cell-face differences.  With the
reflection ghost rules used by the operators, the face sums reproduce
the quadratic forms <a, -Lap a> exactly (summation by parts), so
residual identities that pair a nonlinearity against the Laplacian close
at machine precision in space and measure time error alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec, State
from .params import SimulationParams
from .potential import coeffs_from_params, f_of_d, tilde_f, bulk_energy
from . import operators as ops
from . import noise
from . import integrator


# --- norms and energies ---------------------------------------------------


def lebesgue_norm(data: np.ndarray, p: int, grid: GridSpec) -> float:
    """Midpoint quadrature of |field|^p, returned as the p-th power.

    ``p`` must be 2 or a larger even integer; the pointwise magnitude is
    the Euclidean norm over the leading component axis (a plain scalar
    field is treated as one component).
    """
    if p < 2 or p % 2 != 0:
        raise ValueError(f"unsupported Lebesgue exponent {p}")
    data = np.asarray(data, dtype=np.float64)
    mag2 = data * data if data.ndim == 2 else np.sum(data * data, axis=0)
    return float(np.sum(mag2 ** (p // 2)) * grid.cell_area)


def grad_energy_faces(data: np.ndarray, grid: GridSpec, bc: str) -> float:
    """|grad a|_2^2 from face differences; equals <a, -Lap a> exactly.

    Interior faces contribute (delta a / h)^2; Dirichlet boundary faces
    add the ghost-reflection term 2 a^2 / h^2 per boundary cell, Neumann
    boundary faces contribute nothing.
    """
    a = np.asarray(data, dtype=np.float64)
    if a.ndim == 2:
        a = a[None]
    w = grid.cell_area
    total = float(np.sum(np.diff(a, axis=2) ** 2)) / grid.hx**2 * w
    total += float(np.sum(np.diff(a, axis=1) ** 2)) / grid.hy**2 * w
    if bc == ops.DIRICHLET:
        total += 2.0 * float(np.sum(a[:, :, 0] ** 2 + a[:, :, -1] ** 2)) / grid.hx**2 * w
        total += 2.0 * float(np.sum(a[:, 0, :] ** 2 + a[:, -1, :] ** 2)) / grid.hy**2 * w
    return total


def h1_norm_sq(data: np.ndarray, grid: GridSpec, bc: str = ops.NEUMANN) -> float:
    """Squared H1 norm |a|_2^2 + |grad a|_2^2 (quadratic-form gradient)."""
    return ops.inner(data, data, grid) + ops.dirichlet_form(data, grid, bc)


def log_energy(d: np.ndarray, p: SimulationParams) -> float:
    """y = ln(1 + |d|_{4N+2}^{4N+2}) with N the potential degree."""
    pw = 4 * p.potential_degree + 2
    grid = p.grid
    return float(np.log1p(lebesgue_norm(np.asarray(d), pw, grid)))


def total_energy(state: State, p: SimulationParams) -> float:
    """E = (|v|_2^2 + |grad d|_2^2 + int F(|d|^2)) / 2.

    The bulk term carries the same 1/2 as the quadratic terms because
    the directional derivative of F(|d|^2) is 2 f(d).
    """
    grid = state.grid
    c = coeffs_from_params(p)
    return 0.5 * (ops.inner(state.v.data, state.v.data, grid)
                  + ops.dirichlet_form(state.d.data, grid, ops.NEUMANN)
                  + bulk_energy(state.d.data, c, grid))


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Per-snapshot scalar diagnostics (norms are reported unsquared)."""

    t: float
    v_l2: float
    v_h1: float        # |grad v|_2 with no-slip ghosts
    d_l2: float
    d_h1: float        # full H1 norm of d
    d_lap_l2: float
    d_l4n2: float      # |d|_{4N+2}^{4N+2} (p-th power, not the root)
    y: float           # ln(1 + d_l4n2)
    energy: float
    div_v_l2: float

    FIELDS = ("t", "v_l2", "v_h1", "d_l2", "d_h1", "d_lap_l2",
              "d_l4n2", "y", "energy", "div_v_l2")

    def as_row(self) -> tuple:
        return tuple(getattr(self, name) for name in self.FIELDS)


def record_for(state: State, p: SimulationParams, z=None) -> DiagnosticsRecord:
    grid = state.grid
    v, d = state.v.data, state.d.data
    pw = 4 * p.potential_degree + 2
    l4n2 = lebesgue_norm(d, pw, grid)
    return DiagnosticsRecord(
        t=state.t,
        v_l2=ops.l2_norm(v, grid),
        v_h1=float(np.sqrt(max(ops.dirichlet_form(v, grid, ops.DIRICHLET), 0.0))),
        d_l2=ops.l2_norm(d, grid),
        d_h1=float(np.sqrt(max(h1_norm_sq(d, grid), 0.0))),
        d_lap_l2=ops.l2_norm(ops.lap_raw(d, grid, ops.NEUMANN), grid),
        d_l4n2=l4n2,
        y=float(np.log1p(l4n2)),
        energy=total_energy(state, p),
        div_v_l2=ops.l2_norm(ops.div_raw(v, grid), grid),
    )


# --- residual checkers ----------------------------------------------------


def _stride_one(traj) -> None:
    if traj.stride != 1:
        raise ValueError("residual checkers need stride-1 trajectories")
    if len(traj.states) < 2:
        raise ValueError("need at least two snapshots")


def ito_gradient_integral(d: np.ndarray, grid: GridSpec, degree: int) -> float:
    """Quadrature of int |d|^{4N} |grad d|^2 compatible with the Laplacian.

    Computed as face sums of delta(|d|^{4N} d) . delta(d) / (4N+1), which
    pairs exactly with the discrete Neumann Laplacian:
    <|d|^{4N} d, Lap d> = -(4N+1) * this value, with no spatial error.
    """
    w = np.abs(np.sum(d * d, axis=0)) ** (2 * degree) * d
    fx = float(np.sum(np.diff(w, axis=2) * np.diff(d, axis=2))) / grid.hx**2
    fy = float(np.sum(np.diff(w, axis=1) * np.diff(d, axis=1))) / grid.hy**2
    return (fx + fy) * grid.cell_area / (4 * degree + 1)


def ito_residual_L(traj, p: SimulationParams) -> np.ndarray:
    """Per-step residual of the |d|_{4N+2}^{4N+2} balance.

    r_k = Delta L / dt + (4N+2)(4N+1) gamma * int |d|^{4N} |grad d|^2
          + (4N+2) gamma * <|d|^{4N} d, f(d)>
          + (4N+2) * <|d|^{4N} d, (v . grad) d>,
    all spatial terms at the midpoint state.  The rotational noise never
    appears: the rotation substep leaves L invariant exactly, which is
    the discrete form of the drift-free structure of the balance.
    """
    _stride_one(traj)
    grid = p.grid
    N = p.potential_degree
    pw = 4 * N + 2
    c = coeffs_from_params(p)
    out = np.zeros(len(traj.states) - 1)
    basis = None
    for k in range(len(out)):
        s0, s1 = traj.states[k], traj.states[k + 1]
        dm = 0.5 * (s0.d.data + s1.d.data)
        vm = 0.5 * (s0.v.data + s1.v.data)
        if traj.scheme.mode == integrator.TRANSFORMED:
            if basis is None:
                basis = noise.basis_for(p)
            zm = 0.5 * (traj.ou_states[k].field(basis)
                        + traj.ou_states[k + 1].field(basis))
            vm = vm + zm
        wmid = np.sum(dm * dm, axis=0) ** (2 * N) * dm
        dL = (lebesgue_norm(s1.d.data, pw, grid)
              - lebesgue_norm(s0.d.data, pw, grid)) / p.dt
        grad_term = pw * (4 * N + 1) * p.gamma_c * ito_gradient_integral(dm, grid, N)
        pot_term = pw * p.gamma_c * ops.inner(wmid, f_of_d(dm, c), grid)
        adv_term = pw * ops.inner(wmid, ops.advect_raw(vm, dm, grid), grid)
        out[k] = dL + grad_term + pot_term + adv_term
    return out


def energy_balance_residual(traj, p: SimulationParams) -> np.ndarray:
    """Per-step residual of Delta E / dt + |grad v|_2^2 + |Lap d - f(d)|_2^2.

    Only defined for the deterministic part of the dynamics: refuses
    trajectories run with velocity noise or a nonzero rotation axis, and
    requires the normalized constants mu = lambda = gamma = 1 the
    identity is stated for.
    """
    _stride_one(traj)
    if traj.scheme.mode != integrator.DIRECT or traj.scheme.velocity_noise:
        raise ValueError("energy balance residual needs a noise-free direct run")
    if any(h != 0.0 for h in p.h_vec):
        raise ValueError("energy balance residual needs h = 0")
    if not (p.mu == 1.0 and p.lambda_c == 1.0 and p.gamma_c == 1.0):
        raise ValueError("energy balance identity assumes mu = lambda = gamma = 1")
    grid = p.grid
    c = coeffs_from_params(p)
    out = np.zeros(len(traj.states) - 1)
    for k in range(len(out)):
        s0, s1 = traj.states[k], traj.states[k + 1]
        vm = 0.5 * (s0.v.data + s1.v.data)
        dm = 0.5 * (s0.d.data + s1.d.data)
        dE = (total_energy(s1, p) - total_energy(s0, p)) / p.dt
        visc = ops.dirichlet_form(vm, grid, ops.DIRICHLET)
        relax = ops.lap_raw(dm, grid, ops.NEUMANN) - f_of_d(dm, c)
        out[k] = dE + visc + ops.inner(relax, relax, grid)
    return out


def gronwall_log_check(traj, p: SimulationParams,
                       tail_fraction: float = 0.25,
                       slack: float = 1.05):
    """Fit y(t) <= y(t0) e^{-c (t-t0)} + (K/c)(1 - e^{-c (t-t0)}).

    Scans c downward from fast to slow; for each c the smallest feasible
    K is computed in closed form, and the largest c whose implied
    asymptote K/c does not exceed the observed tail band (its maximum
    times ``slack``) is reported.  Returns (c_fit, violations); c_fit is
    0.0 with a nonempty violation list when nothing fits.
    """
    ys = np.array([log_energy(s.d.data, p) for s in traj.states])
    ts = np.array([s.t for s in traj.states])
    taus = ts - ts[0]
    if len(ys) < 3:
        return 0.0, ["trajectory too short to fit a decay rate"]
    ntail = max(2, int(np.ceil(tail_fraction * len(ys))))
    cap = slack * float(np.max(ys[-ntail:])) + 1e-12
    y0 = ys[0]
    for c in np.logspace(2, -3, 121):
        decay = np.exp(-c * taus[1:])
        need = (ys[1:] - y0 * decay) / (1.0 - decay)
        asymptote = max(float(np.max(need)), 0.0)
        if asymptote <= cap:
            return float(c), []
    return 0.0, [f"no decay rate fits below the tail cap {cap:.3g}"]


def scalar_flow_residual(traj, store: noise.PathStore,
                         p: SimulationParams) -> np.ndarray:
    """Per-step residual of the scalar flow dbar = e^{W2} (h . d).

    dbar solves dbar_t + (u+z).grad dbar = gamma (Lap dbar - fbar(dbar))
    + dbar o dW2, with fbar(dbar) = tilde_f(|d|^2) dbar using the
    simulated magnitude.  The Stratonovich product is discretized
    midpoint-style; returns the L2 norm of the residual field per step.
    """
    _stride_one(traj)
    if traj.scheme.mode != integrator.TRANSFORMED:
        raise ValueError("scalar flow residual needs a transformed-mode run")
    grid = p.grid
    c = coeffs_from_params(p)
    h = np.asarray(p.h_vec)
    basis = noise.basis_for(p)
    out = np.zeros(len(traj.states) - 1)
    for k in range(len(out)):
        s0, s1 = traj.states[k], traj.states[k + 1]
        w2_0 = store.w2_value(s0.t)
        dW2 = store.increment(0, noise._bin_of(s0.t, store.dt_master))
        bar0 = np.exp(w2_0) * np.tensordot(h, s0.d.data, axes=(0, 0))
        bar1 = np.exp(w2_0 + dW2) * np.tensordot(h, s1.d.data, axes=(0, 0))
        barm = 0.5 * (bar0 + bar1)
        dm = 0.5 * (s0.d.data + s1.d.data)
        um = 0.5 * (s0.v.data + s1.v.data)
        zm = 0.5 * (traj.ou_states[k].field(basis)
                    + traj.ou_states[k + 1].field(basis))
        mag2 = np.sum(dm * dm, axis=0)
        res = ((bar1 - bar0) / p.dt
               + ops.advect_raw(um + zm, barm, grid)
               - p.gamma_c * (ops.lap_raw(barm, grid, ops.NEUMANN)
                              - tilde_f(mag2, c) * barm)
               - barm * dW2 / p.dt)
        out[k] = ops.l2_norm(res, grid)
    return out


def cocycle_check(initial: State, s: float, r: float, t: float,
                  p: SimulationParams, scheme) -> float:
    """Max abs difference between run(s->t) and run(run(s->r), r->t).

    Both legs query the same deterministic path store, so the expected
    value is exactly zero; any nonzero return means the stepping depends
    on something besides (state, absolute time, path).
    """
    if not (s <= r <= t):
        raise ValueError("need s <= r <= t")
    store = noise.path_store_for(p)
    basis = noise.basis_for(p)
    whole = integrator.run(initial, s, t, p, scheme, store=store, basis=basis)
    first = integrator.run(initial, s, r, p, scheme, store=store, basis=basis)
    second = integrator.run(first.final_state(), r, t, p, scheme,
                            store=store, basis=basis, z0=first.final_ou())
    a, b = whole.final_state(), second.final_state()
    diff = max(float(np.max(np.abs(a.v.data - b.v.data))),
               float(np.max(np.abs(a.d.data - b.d.data))))
    if scheme.mode == integrator.TRANSFORMED:
        diff = max(diff, float(np.max(np.abs(whole.final_ou().coeffs
                                             - second.final_ou().coeffs))))
    return diff
