import numpy as np
import pytest

from nematicflow.grid import GridSpec, State, VectorField2, VectorField3, zero_state
from nematicflow.params import SimulationParams
from nematicflow import diagnostics as dg
from nematicflow import integrator as it
from nematicflow import noise
from nematicflow import operators as ops

TAU = 2 * np.pi


def test_lebesgue_norm_examples():
    g = GridSpec(8, 8, 1.0, 1.0)
    zero = np.zeros((3, 8, 8))
    assert dg.lebesgue_norm(zero, 6, g) == 0.0
    unit = np.zeros((3, 8, 8))
    unit[0] = 1.0
    assert np.isclose(dg.lebesgue_norm(unit, 6, g), 1.0)
    rng = np.random.default_rng(0)
    f = rng.standard_normal((3, 8, 8))
    assert np.isclose(dg.lebesgue_norm(2 * f, 4, g),
                      16 * dg.lebesgue_norm(f, 4, g))
    with pytest.raises(ValueError):
        dg.lebesgue_norm(f, 3, g)


def test_log_energy_examples():
    g = GridSpec(8, 8, 1.0, 1.0)
    p = SimulationParams(grid=g)
    assert dg.log_energy(np.zeros((3, 8, 8)), p) == 0.0
    unit = np.zeros((3, 8, 8))
    unit[0] = 1.0
    assert np.isclose(dg.log_energy(unit, p), np.log(2.0))
    assert dg.log_energy(2 * unit, p) > dg.log_energy(unit, p)


def test_h1_face_energy_matches_quadratic_form_exactly():
    g = GridSpec(16, 16, 1.5, 0.8)
    rng = np.random.default_rng(1)
    a = rng.standard_normal((3, 16, 16))
    for bc in (ops.DIRICHLET, ops.NEUMANN):
        face = dg.grad_energy_faces(a, g, bc)
        form = ops.dirichlet_form(a, g, bc)
        assert abs(face - form) < 1e-8 * max(1.0, abs(form))


def test_sobolev_embedding_constant_stable():
    g = GridSpec(16, 16)
    rng = np.random.default_rng(2)
    consts = []
    for _ in range(20):
        d = rng.standard_normal((3, 16, 16))
        l4 = dg.lebesgue_norm(d, 4, g) ** 0.25
        h1 = np.sqrt(dg.h1_norm_sq(d, g))
        consts.append(l4 / h1)
    assert max(consts) / min(consts) < 3.0
    assert max(consts) < 2.0  # embedding constant is O(1) on a fixed grid


def relax_traj(dt, T=0.2, g=None, h=(0.0, 0.0, 0.0)):
    g = g or GridSpec(16, 16, TAU, TAU)
    p = SimulationParams(grid=g, dt=dt, noise_mode_count=4, h_vec=h, seed=3)
    X, Y = g.cell_centers()
    d = np.stack([0.6 + 0.3 * np.cos(X) * np.cos(Y),
                  0.5 + 0.2 * np.sin(X) ** 2, 0.4 + 0.2 * np.cos(Y)])
    v = np.stack([np.sin(X) * np.cos(Y), -np.cos(X) * np.sin(Y)]) * 0.3
    v, _ = ops.leray_project_raw(v, g)
    s = State(0.0, VectorField2(g, v), VectorField3(g, d))
    traj = it.run(s, 0.0, T, p, it.StepScheme(velocity_noise=False))
    return traj, p


def test_ito_residual_zero_for_zero_field():
    g = GridSpec(16, 16)
    p = SimulationParams(grid=g, dt=1e-2, noise_mode_count=4, h_vec=(0, 0, 0))
    traj = it.run(zero_state(g), 0.0, 0.05, p, it.StepScheme(velocity_noise=False))
    assert np.abs(dg.ito_residual_L(traj, p)).max() == 0.0


def test_ito_residual_first_order():
    r1, p1 = relax_traj(2e-3)
    r2, p2 = relax_traj(1e-3)
    m1 = np.abs(dg.ito_residual_L(r1, p1)).max()
    m2 = np.abs(dg.ito_residual_L(r2, p2)).max()
    assert 1.5 < m1 / m2 < 2.5


def test_ito_rotation_only_invariance():
    # pure rotation leaves the L^{4N+2} functional frozen
    g = GridSpec(16, 16, TAU, TAU)
    p = SimulationParams(grid=g, dt=5e-3, noise_mode_count=4,
                         h_vec=(0.2, 0.1, -0.1), gamma_c=0.0, lambda_c=0.0, seed=4)
    X, Y = g.cell_centers()
    d = np.stack([0.6 + 0.3 * np.cos(X), 0.5 + 0.2 * np.sin(Y), 0.4 + 0 * X])
    s = State(0.0, zero_state(g).v, VectorField3(g, d))
    traj = it.run(s, 0.0, 0.25, p, it.StepScheme(velocity_noise=False))
    pw = 4 * p.potential_degree + 2
    vals = [dg.lebesgue_norm(st.d.data, pw, g) for st in traj.states]
    rel = (max(vals) - min(vals)) / vals[0]
    assert rel < 1e-12


def test_ito_residual_requires_stride_one():
    g = GridSpec(16, 16)
    p = SimulationParams(grid=g, dt=1e-2, noise_mode_count=4)
    traj = it.run(zero_state(g), 0.0, 0.1, p,
                  it.StepScheme(velocity_noise=False), stride=5)
    with pytest.raises(ValueError):
        dg.ito_residual_L(traj, p)


def test_energy_monotone_and_first_order():
    r1, p1 = relax_traj(2e-3)
    r2, p2 = relax_traj(1e-3)
    for traj, p in ((r1, p1), (r2, p2)):
        E = [dg.total_energy(s, p) for s in traj.states]
        assert all(b <= a + 1e-12 for a, b in zip(E, E[1:]))
    m1 = np.abs(dg.energy_balance_residual(r1, p1)).max()
    m2 = np.abs(dg.energy_balance_residual(r2, p2)).max()
    assert 1.5 < m1 / m2 < 2.5


def test_energy_residual_refuses_noisy_runs():
    g = GridSpec(16, 16, TAU, TAU)
    p = SimulationParams(grid=g, dt=5e-3, noise_mode_count=4, h_vec=(0, 0, 0))
    traj = it.run(zero_state(g), 0.0, 0.05, p, it.StepScheme())  # noise on
    with pytest.raises(ValueError):
        dg.energy_balance_residual(traj, p)
    p2 = SimulationParams(grid=g, dt=5e-3, noise_mode_count=4,
                          h_vec=(0, 0, 0), mu=2.0)
    traj = it.run(zero_state(g), 0.0, 0.05, p2, it.StepScheme(velocity_noise=False))
    with pytest.raises(ValueError):
        dg.energy_balance_residual(traj, p2)


def test_equilibrium_energy_residual_tiny():
    g = GridSpec(16, 16)
    p = SimulationParams(grid=g, dt=1e-3, noise_mode_count=4, h_vec=(0, 0, 0))
    d = np.zeros((3, 16, 16))
    d[0] = 1.0
    s = State(0.0, zero_state(g).v, VectorField3(g, d))
    traj = it.run(s, 0.0, 0.02, p, it.StepScheme(velocity_noise=False))
    assert np.abs(dg.energy_balance_residual(traj, p)).max() < 1e-10


def test_gronwall_constant_y():
    g = GridSpec(16, 16)
    p = SimulationParams(grid=g, dt=1e-2, noise_mode_count=4, h_vec=(0, 0, 0))
    d = np.zeros((3, 16, 16))
    d[0] = 1.0
    s = State(0.0, zero_state(g).v, VectorField3(g, d))
    traj = it.run(s, 0.0, 0.2, p, it.StepScheme(velocity_noise=False))
    c, viol = dg.gronwall_log_check(traj, p)
    assert viol == [] and c > 0


def test_scalar_flow_zero_for_zero_axis():
    g = GridSpec(16, 16, TAU, TAU)
    p = SimulationParams(grid=g, dt=5e-3, noise_mode_count=4, h_vec=(0, 0, 0), seed=2)
    store = noise.path_store_for(p)
    basis = noise.basis_for(p)
    z0 = noise.ou_stationary_init(store, basis, 0.0, 50, p.beta)
    traj = it.run(zero_state(g), 0.0, 0.05, p,
                  it.StepScheme(mode=it.TRANSFORMED), store=store,
                  basis=basis, z0=z0)
    assert np.abs(dg.scalar_flow_residual(traj, store, p)).max() == 0.0


def test_scalar_flow_requires_transformed():
    g = GridSpec(16, 16, TAU, TAU)
    p = SimulationParams(grid=g, dt=5e-3, noise_mode_count=4, seed=2)
    store = noise.path_store_for(p)
    traj = it.run(zero_state(g), 0.0, 0.05, p, it.StepScheme())
    with pytest.raises(ValueError):
        dg.scalar_flow_residual(traj, store, p)


def test_cocycle_trivial_splits():
    g = GridSpec(16, 16, TAU, TAU)
    p = SimulationParams(grid=g, dt=5e-3, noise_mode_count=4,
                         h_vec=(0.1, 0.1, 0.1), seed=6)
    X, Y = g.cell_centers()
    d = np.stack([0.5 + 0.2 * np.cos(X), 0.5 + 0 * X, 0.3 + 0.1 * np.sin(Y)])
    s = State(0.0, zero_state(g).v, VectorField3(g, d))
    sch = it.StepScheme()
    assert dg.cocycle_check(s, 0.0, 0.0, 0.05, p, sch) == 0.0
    assert dg.cocycle_check(s, 0.0, 0.05, 0.05, p, sch) == 0.0


def test_record_fields_finite_and_consistent():
    traj, p = relax_traj(5e-3, T=0.05)
    rec = dg.record_for(traj.states[-1], p)
    row = rec.as_row()
    assert all(np.isfinite(row))
    assert np.isclose(rec.y, np.log1p(rec.d_l4n2))
    assert rec.div_v_l2 < 1e-8
