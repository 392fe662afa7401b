"""Command-line interface.

Subcommands:

* ``simulate`` — run one trajectory, write a diagnostics CSV and a final
  checkpoint (plus figures with ``--plots``).
* ``verify``   — run the built-in residual suite and exit nonzero if any
  identity check fails.
* ``pullback`` / ``absorb`` — attractor experiments, written as CSV tables.
* ``basis``    — dump the noise mode spectrum.
* ``replay``   — checkpoint-restart determinism check: a split run must
  reproduce the whole run bit-exactly.

Exit codes: 0 success, 1 configuration error, 2 numerical failure
(blow-up or solver breakdown), 3 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .grid import State
from .params import (SimulationParams, ConfigError, load_config,
                     validate_params, with_overrides)
from . import operators as ops
from . import noise
from . import integrator
from . import diagnostics as diag
from . import attractor
from . import io as nio

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY = 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nematicflow",
                                 description="nematic liquid crystal flow laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="config file (key = value lines)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--plots", action="store_true",
                        help="also render PNG figures next to the CSV output")

    sp = sub.add_parser("simulate", help="run one trajectory")
    common(sp)
    sp.add_argument("--tend", type=float, default=1.0)
    sp.add_argument("--stride", type=int, default=10)
    sp.add_argument("--mode", choices=(integrator.DIRECT, integrator.TRANSFORMED),
                    default=integrator.DIRECT)

    sp = sub.add_parser("verify", help="run the residual verification suite")
    common(sp)

    sp = sub.add_parser("pullback", help="pullback distance experiment")
    common(sp)
    sp.add_argument("--slist", type=float, nargs="+", default=(-1.0, -2.0, -4.0, -8.0))

    sp = sub.add_parser("absorb", help="absorbing-ball experiment")
    common(sp)
    sp.add_argument("--slist", type=float, nargs="+", default=(-1.0, -2.0, -4.0, -8.0))
    sp.add_argument("--radii", type=float, nargs="+", default=(1.0, 10.0, 100.0))

    sp = sub.add_parser("basis", help="dump the noise mode basis spectrum")
    common(sp)

    sp = sub.add_parser("replay", help="split-vs-whole checkpoint determinism check")
    common(sp)
    sp.add_argument("--tend", type=float, default=0.2)
    sp.add_argument("--tmid", type=float, default=0.1)
    return ap


def _load_params(args) -> SimulationParams:
    p = load_config(args.config) if args.config else SimulationParams()
    if args.seed is not None:
        p = with_overrides(p, seed=args.seed)
    report = validate_params(p)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if not report.passed:
        raise ConfigError("; ".join(report.violations))
    return p


def cmd_simulate(args) -> int:
    p = _load_params(args)
    scheme = integrator.StepScheme(mode=args.mode)
    initial = attractor.smooth_initial(p.grid, 1.0)
    traj = integrator.run(initial, 0.0, args.tend, p, scheme,
                          stride=args.stride,
                          record_fn=lambda s, z: diag.record_for(s, p, z))
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = args.out / "diagnostics.csv"
    nio.write_csv(traj.records, csv_path)
    nio.save_checkpoint(args.out / "final.ckpt", traj.final_state(), p,
                        traj.final_ou())
    print(f"wrote {csv_path} ({len(traj.records)} rows)")
    if args.plots:
        from . import report
        _, rows = nio.read_csv(csv_path)
        fig = report.render_diagnostics(rows, args.out / "diagnostics.png")
        print(f"wrote {fig}")
    return EXIT_OK


def _check(name: str, ok: bool, detail: str, failures: list) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    if not ok:
        failures.append(name)


def cmd_verify(args) -> int:
    p = _load_params(args)
    failures: list = []

    # rotation invariance of |d| under the noise substep
    rng = np.random.default_rng(0)
    d = rng.standard_normal((3, p.grid.ny, p.grid.nx))
    dr = integrator.rotate_orientation(d, (0.3, -0.4, 0.5), 0.7)
    drift = float(np.max(np.abs(np.linalg.norm(dr, axis=0)
                                - np.linalg.norm(d, axis=0))))
    _check("rotation invariance", drift < 1e-13, f"max |d| drift {drift:.2e}", failures)

    # noise-free dissipation identities at two time steps
    scheme = integrator.StepScheme(velocity_noise=False)
    pd = with_overrides(p, h_vec=(0.0, 0.0, 0.0),
                        mu=1.0, lambda_c=1.0, gamma_c=1.0)
    maxima = {}
    for dt in (2 * p.dt, p.dt):
        pp = with_overrides(pd, dt=dt)
        traj = integrator.run(attractor.smooth_initial(p.grid, 1.0),
                              0.0, 0.25, pp, scheme)
        maxima[dt] = (np.abs(diag.ito_residual_L(traj, pp)).max(),
                      np.abs(diag.energy_balance_residual(traj, pp)).max())
    r_ito = maxima[2 * p.dt][0] / maxima[p.dt][0]
    r_en = maxima[2 * p.dt][1] / maxima[p.dt][1]
    _check("ito balance order", 1.5 <= r_ito <= 2.5,
           f"residual ratio {r_ito:.2f} under dt halving", failures)
    _check("energy balance order", 1.5 <= r_en <= 2.5,
           f"residual ratio {r_en:.2f} under dt halving", failures)

    # scalar flow residual on a transformed run
    ph = p if any(p.h_vec) else with_overrides(p, h_vec=(0.1, 0.1, 0.1))
    store = noise.path_store_for(ph)
    basis = noise.basis_for(ph)
    z0 = noise.ou_stationary_init(store, basis, 0.0,
                                  noise.default_burn_in_bins(basis, ph.beta, ph.dt),
                                  ph.beta)
    init = attractor.smooth_initial(ph.grid, 1.0)
    u0 = State(0.0, type(init.v)(ph.grid, init.v.data - z0.field(basis)), init.d)
    traj = integrator.run(u0, 0.0, 0.25, ph,
                          integrator.StepScheme(mode=integrator.TRANSFORMED),
                          store=store, basis=basis, z0=z0)
    sf = float(np.mean(diag.scalar_flow_residual(traj, store, ph)))
    _check("scalar flow residual", np.isfinite(sf) and sf < 1.0,
           f"time-averaged residual {sf:.3e}", failures)

    # cocycle composition, both modes
    for mode in (integrator.DIRECT, integrator.TRANSFORMED):
        sch = integrator.StepScheme(mode=mode)
        dtv = p.dt
        diff = diag.cocycle_check(attractor.smooth_initial(p.grid, 1.0),
                                  0.0, 40 * dtv, 100 * dtv, p, sch)
        _check(f"cocycle ({mode})", diff == 0.0, f"max split/whole diff {diff:.1e}",
               failures)

    if failures:
        print(f"verification failed: {', '.join(failures)}")
        return EXIT_VERIFY
    print("all verification checks passed")
    return EXIT_OK


def cmd_pullback(args) -> int:
    p = _load_params(args)
    cfg = attractor.PullbackConfig(s_list=tuple(args.slist), seeds=(p.seed,))
    rows = attractor.pullback_run(cfg, p)
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = args.out / "pullback.csv"
    nio.write_csv(rows, csv_path)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    if args.plots:
        from . import report
        print(f"wrote {report.render_pullback(rows, args.out / 'pullback.png')}")
    return EXIT_OK


def cmd_absorb(args) -> int:
    p = _load_params(args)
    rows = attractor.absorbing_radius_estimate(args.radii, args.slist,
                                               (p.seed,), p)
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = args.out / "absorb.csv"
    nio.write_csv(rows, csv_path)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    if args.plots:
        from . import report
        print(f"wrote {report.render_absorbing(rows, args.out / 'absorb.png')}")
    return EXIT_OK


def cmd_basis(args) -> int:
    p = _load_params(args)
    basis = noise.basis_for(p)
    rows = [{"n": n + 1, "alpha": float(basis.alphas[n]),
             "lambda": float(basis.lambdas[n])} for n in range(basis.count)]
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = args.out / "basis.csv"
    nio.write_csv(rows, csv_path)
    print(f"wrote {csv_path}; admissibility sum "
          f"{noise.spectrum_summability(basis):.6g}")
    if args.plots:
        from . import report
        print(f"wrote {report.render_spectrum(basis, args.out / 'basis.png')}")
    return EXIT_OK


def cmd_replay(args) -> int:
    p = _load_params(args)
    if not 0.0 < args.tmid < args.tend:
        raise ConfigError("need 0 < tmid < tend")
    scheme = integrator.StepScheme()
    initial = attractor.smooth_initial(p.grid, 1.0)
    whole = integrator.run(initial, 0.0, args.tend, p, scheme)
    first = integrator.run(initial, 0.0, args.tmid, p, scheme)
    args.out.mkdir(parents=True, exist_ok=True)
    ckpt = args.out / "replay.ckpt"
    nio.save_checkpoint(ckpt, first.final_state(), p, first.final_ou())
    state, p2, ou = nio.load_checkpoint(ckpt)
    second = integrator.run(state, args.tmid, args.tend, p2, scheme, z0=ou)
    a, b = whole.final_state(), second.final_state()
    diff = max(float(np.max(np.abs(a.v.data - b.v.data))),
               float(np.max(np.abs(a.d.data - b.d.data))))
    print(f"max replay difference: {diff}")
    return EXIT_OK if diff == 0.0 else EXIT_VERIFY


_COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "pullback": cmd_pullback,
    "absorb": cmd_absorb,
    "basis": cmd_basis,
    "replay": cmd_replay,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (integrator.BlowUpError, ops.SolverError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
