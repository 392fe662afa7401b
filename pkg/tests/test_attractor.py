import numpy as np
import pytest

from nematicflow.grid import GridSpec
from nematicflow.params import SimulationParams
from nematicflow import attractor as at
from nematicflow import integrator as it
from nematicflow import noise

TAU = 2 * np.pi


def small_params(**kw):
    base = dict(grid=GridSpec(16, 16, TAU, TAU), dt=5e-3,
                noise_mode_count=4, h_vec=(0.1, 0.1, 0.1), seed=3)
    base.update(kw)
    return SimulationParams(**base)


def test_pullback_config_validation():
    with pytest.raises(ValueError):
        at.PullbackConfig(s_list=(-1.0, -0.5))  # not decreasing
    with pytest.raises(ValueError):
        at.PullbackConfig(s_list=(1.0,))  # not before t_star
    cfg = at.PullbackConfig(s_list=(-0.5, -1.0))
    assert cfg.s_list == (-0.5, -1.0)


def test_identical_initials_zero_distance():
    g = GridSpec(16, 16, TAU, TAU)
    a = at.smooth_initial(g, 1.0)
    assert at.product_distance(a, a) == 0.0


def test_pullback_rows_deterministic():
    p = small_params()
    cfg = at.PullbackConfig(s_list=(-0.05, -0.1), seeds=(3,))
    r1 = at.pullback_run(cfg, p)
    r2 = at.pullback_run(cfg, p)
    assert r1 == r2
    assert all(r["status"] == "ok" for r in r1)
    assert all(np.isfinite(r["distance"]) for r in r1)


def test_absorbing_rows_and_blowup_flagging():
    p = small_params(h_vec=(0.0, 0.0, 0.0))
    sch = it.StepScheme(velocity_noise=False)
    rows = at.absorbing_radius_estimate([1.0], [-0.05], [3], p, sch)
    assert rows[0]["status"] == "ok"
    # absurd magnitude trips the guard and is flagged, not raised
    rows = at.absorbing_radius_estimate([1e6], [-0.05], [3], p, sch)
    assert rows[0]["status"].startswith("blow-up")
    assert np.isnan(rows[0]["g0"])
    with pytest.raises(ValueError):
        at.absorbing_radius_estimate([1.0], [0.5], [3], p, sch)


def test_deterministic_g_non_increasing_after_transient():
    p = small_params(h_vec=(0.0, 0.0, 0.0), dt=2e-3)
    sch = it.StepScheme(velocity_noise=False)
    x0 = at.smooth_initial(p.grid, 5.0, t=0.0)
    traj = it.run(x0, 0.0, 0.5, p, sch, stride=25)
    gs = [at.g_functional(s, p) for s in traj.states]
    assert all(b <= a + 1e-10 for a, b in zip(gs, gs[1:]))


def test_ensemble_run_aggregates():
    p = small_params()

    def job(pp):
        return {"seed_echo": float(pp.seed)}

    out = at.ensemble_run(3, 100, job, p)
    assert out["n"] == 3
    assert out["seed_echo"]["mean"] == 101.0
    assert out["seed_echo"]["min"] == 100.0
    # bit-exact on rerun
    assert at.ensemble_run(3, 100, job, p) == out
    # n = 1 equals the single run
    single = at.ensemble_run(1, 5, job, p)
    assert single["seed_echo"]["mean"] == 5.0 and single["seed_echo"]["std"] == 0.0


def test_ensemble_member_failure_is_attributed():
    p = small_params()

    def job(pp):
        if pp.seed == 11:
            raise RuntimeError("boom")
        return {"x": 0.0}

    with pytest.raises(RuntimeError, match="member 1 \\(seed 11\\)"):
        at.ensemble_run(3, 10, job, p)


def test_ou_stationary_variance_oracle():
    # quick ensemble (n = 200) shadow of the acceptance-scale check
    p = small_params(dt=5e-3)
    basis = noise.basis_for(p)
    burn = noise.default_burn_in_bins(basis, p.beta, p.dt)

    def job(pp):
        st = noise.path_store_for(pp)
        z = noise.ou_stationary_init(st, basis, 0.0, burn, pp.beta)
        return {"z1": float(z.coeffs[0])}

    out = at.ensemble_run(200, 500, job, p)
    var = out["z1"]["std"] ** 2
    target = basis.lambdas[0] / (2 * (basis.alphas[0] + p.beta))
    assert abs(var - target) / target < 0.25


def test_lipschitz_ratio_stable_under_delta_halving():
    p = small_params(grid=GridSpec(16, 16, TAU, TAU), dt=2e-3)
    sch = it.StepScheme()
    ratios = [at.lipschitz_ratio(p, sch, d, T=0.1) for d in (0.1, 0.05, 0.025)]
    assert max(ratios) / min(ratios) < 2.0
