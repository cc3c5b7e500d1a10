"""Command-line interface.

Subcommands: simulate, groundstate, diagnose, admissible, experiment.
Exit codes: 0 success, 2 validation error, 3 runtime flag (blow-up or
boundary contamination) with the report still emitted.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .grids import CutoffSpec, Grid, PhysicsParams
from .dynamics import IntegratorConfig, SpongeSpec, evolve
from .ground_state import calibrate, elliptic_residual, profile
from . import admissibility, diagnostics, experiments, fieldio, spectral

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME_FLAG = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="fnls_out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="FFT worker threads")


def _add_physics(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.8)
    p.add_argument("--mu", type=int, default=1, choices=(-1, 1))
    p.add_argument("--box-length", type=float, default=100.0)
    p.add_argument("--points", type=int, default=256)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fnls",
        description="Pseudospectral experiments for the energy-critical "
        "fractional NLS on a periodic box",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a time evolution")
    _add_physics(sim)
    _add_common(sim)
    sim.add_argument("--dt", type=float, default=1e-3)
    sim.add_argument("--t-end", type=float, default=1.0)
    sim.add_argument("--scheme", choices=("strang_split", "etdrk4"),
                     default="strang_split")
    sim.add_argument("--no-dealias", action="store_true")
    sim.add_argument("--sponge-width", type=float, default=None,
                     help="sponge width fraction in (0, 0.3); off when absent")
    sim.add_argument("--sponge-strength", type=float, default=10.0)
    sim.add_argument("--ic", choices=("gaussian", "ground_state",
                                      "scaled_ground_state"), default="gaussian")
    sim.add_argument("--amplitude", type=float, default=1.0)
    sim.add_argument("--width", type=float, default=2.0)
    sim.add_argument("--chirp", type=float, default=0.0)
    sim.add_argument("--scale", type=float, default=1.0,
                     help="ground-state family scale lambda0")
    sim.add_argument("--cadence", type=int, default=100)

    gs = sub.add_parser("groundstate", help="calibrate and report constants")
    _add_physics(gs)
    _add_common(gs)
    gs.add_argument("--quad-points", type=int, default=20000)
    gs.add_argument("--tail-pad", type=int, default=8)

    dg = sub.add_parser("diagnose", help="diagnostics over a stored trajectory")
    dg.add_argument("--traj", required=True, help="directory with snapshots")
    _add_physics(dg)
    _add_common(dg)
    dg.add_argument("--cutoff-radius", type=float, default=8.0)

    adm = sub.add_parser("admissible", help="exponent-pair predicates and tables")
    adm.add_argument("--dim", type=int, default=2)
    adm.add_argument("--alpha", type=str, default="4/5",
                     help="rational like 4/5 for exact arithmetic, or a float")
    adm.add_argument("--q", type=str, default=None)
    adm.add_argument("--r", type=str, default=None)
    adm.add_argument("--enumerate-bound", type=int, default=None)
    adm.add_argument("--json", action="store_true", dest="as_json")

    exp = sub.add_parser("experiment", help="run a configured scenario")
    exp.add_argument("--config", required=True)
    exp.add_argument("--out", default=None, help="override config output_dir")
    exp.add_argument("--seed", type=int, default=None)
    exp.add_argument("--threads", type=int, default=1)
    return ap


def _parse_exponent(text: str):
    if text in ("inf", "Inf", "INF", "oo"):
        return admissibility.INF
    if "/" in text:
        return Fraction(text)
    if "." not in text and "e" not in text.lower():
        return Fraction(int(text))
    return float(text)


def cmd_simulate(args) -> int:
    try:
        params = PhysicsParams(args.dim, args.alpha, args.mu)
        grid = Grid(args.dim, args.box_length, args.points)
        sponge = (
            SpongeSpec(args.sponge_width, args.sponge_strength)
            if args.sponge_width is not None
            else None
        )
        cfg = IntegratorConfig(
            scheme=args.scheme,
            dt=args.dt,
            t_end=args.t_end,
            dealias=not args.no_dealias,
            sponge=sponge,
        )
        ic = experiments.InitialCondition(
            kind=args.ic, amplitude=args.amplitude, width=args.width,
            chirp=args.chirp, scale=args.scale,
        )
    except (ValueError, experiments.ConfigError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    spec = constants = None
    if args.ic in ("ground_state", "scaled_ground_state"):
        spec, constants = calibrate(params, grid)
    scfg = experiments.ScenarioConfig(
        scenario="stationarity" if args.mu == -1 else "defocusing_scatter",
        physics=params, grid=grid, integrator=cfg, initial_condition=ic,
        seed=args.seed, snapshot_cadence=args.cadence, output_dir=args.out,
    )
    u0 = experiments.build_initial_condition(scfg, spec)
    result = evolve(u0, cfg, params, args.cadence, constants=constants)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "diagnostics.csv").write_text(
        diagnostics.records_to_csv(result.records), "utf-8"
    )
    chash = experiments.config_hash(scfg)
    for t, f in zip(result.times, result.fields):
        step = int(round(t / cfg.dt))
        fieldio.write_checkpoint(outdir, f"snapshot_{step:08d}", f, t, step, chash)
    report = {
        "status": result.status,
        "message": result.message,
        "flag_time": result.flag_time,
        "monitors_final": result.monitors[-1] if result.monitors else None,
        "config_hash": chash,
    }
    experiments.emit_report(report, outdir)
    print(json.dumps(report, sort_keys=True, indent=2, default=str))
    return EXIT_OK if result.status == "completed" else EXIT_RUNTIME_FLAG


def cmd_groundstate(args) -> int:
    try:
        params = PhysicsParams(args.dim, args.alpha, args.mu)
        grid = Grid(args.dim, args.box_length, args.points)
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    spec, consts = calibrate(params, grid, args.quad_points)
    W = profile(grid, spec)
    residual = elliptic_residual(W, params, spec=spec, tail_pad=args.tail_pad)
    mass_box = spectral.l2_norm(W) ** 2
    report = {
        "kappa": consts.kappa,
        "C1": spec.C1,
        "C_N": consts.sobolev_const,
        "grad_norm_sq": consts.grad_norm_sq,
        "grad_norm_sq_grid": consts.grad_norm_sq_grid,
        "potential_integral": consts.potential_integral,
        "E_focusing": consts.energy_focusing,
        "E_defocusing": consts.energy_defocusing,
        "residual": residual,
        "mass_box": mass_box,
        "mass_finite_on_whole_space": params.dim > 4 * params.alpha,
        "grid": {
            "dim": grid.dim,
            "box_length": grid.box_length,
            "points_per_dim": grid.points_per_dim,
        },
    }
    if params.dim <= 4 * params.alpha:
        report["mass_note"] = (
            "profile is not square-integrable on the whole space for "
            "N <= 4*alpha; mass_box is a box-truncated value only"
        )
    experiments.emit_report(report, args.out, "groundstate.json")
    print(json.dumps(report, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_diagnose(args) -> int:
    try:
        params = PhysicsParams(args.dim, args.alpha, args.mu)
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    traj = Path(args.traj)
    names = sorted(p.stem for p in traj.glob("snapshot_*.field"))
    if not names:
        print(f"validation error: no snapshots in {traj}", file=sys.stderr)
        return EXIT_VALIDATION
    cutoff = CutoffSpec(R=args.cutoff_radius)
    records = []
    for name in names:
        f, sidecar = fieldio.read_checkpoint(traj, name)
        records.append(diagnostics.record(sidecar["t"], f, params, cutoff))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "diagnostics.csv").write_text(
        diagnostics.records_to_csv(records), "utf-8"
    )
    masses = [r.mass for r in records]
    energies = [r.energy for r in records]
    fd_errs = []
    for k in range(1, len(records) - 1):
        dt1 = records[k + 1].t - records[k - 1].t
        if dt1 <= 0:
            continue
        fd = (records[k + 1].virial - records[k - 1].virial) / dt1
        fd_errs.append(abs(fd - records[k].virial_rate_rhs) / abs(records[k].virial_rate_rhs))
    summary = {
        "samples": len(records),
        "max_mass_drift": max(abs(m - masses[0]) / masses[0] for m in masses)
        if masses[0] > 0
        else 0.0,
        "max_energy_drift": max(abs(e - energies[0]) for e in energies)
        / max(abs(energies[0]), 1e-300),
        "max_virial_identity_residual": max(fd_errs) if fd_errs else None,
        "trapping_all_hold": all(
            r.trap_grad_below and r.trap_coercive
            for r in records
            if r.trap_grad_below is not None
        ),
    }
    experiments.emit_report(summary, outdir, "diagnose_summary.json")
    print(json.dumps(summary, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_admissible(args) -> int:
    try:
        alpha = _parse_exponent(args.alpha)
        dim = args.dim
        sw = admissibility.strichartz_exponents(dim, alpha)
    except (ValueError, ZeroDivisionError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out: dict = {
        "dim": dim,
        "alpha": str(alpha),
        "solution_norm_pair": {"q": str(sw.q_s), "r": str(sw.r_s)},
        "derivative_norm_pair": {"q": str(sw.q_w), "r": str(sw.r_w)},
        "derivative_pair_alpha_admissible": admissibility.is_alpha_admissible(
            admissibility.ExponentPair(sw.q_w, sw.r_w), dim, alpha
        ),
    }
    if args.q is not None and args.r is not None:
        pair = admissibility.ExponentPair(
            _parse_exponent(args.q), _parse_exponent(args.r)
        )
        out["pair"] = {"q": str(pair.q), "r": str(pair.r)}
        out["alpha_admissible"] = admissibility.is_alpha_admissible(pair, dim, alpha)
        out["radial_admissible_strict"] = admissibility.is_radial_admissible(
            pair, dim, boundary=False
        )
        out["radial_admissible_boundary"] = admissibility.is_radial_admissible(
            pair, dim, boundary=True
        )
    if args.enumerate_bound is not None:
        pairs = admissibility.enumerate_admissible(
            dim, alpha, args.enumerate_bound, radial="strict"
        )
        out["enumeration"] = [{"q": str(p.q), "r": str(p.r)} for p in pairs]
    if args.as_json:
        print(json.dumps(out, sort_keys=True, indent=2))
    else:
        for k, v in out.items():
            print(f"{k}: {v}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    try:
        cfg = experiments.load_config(args.config)
        if args.out is not None or args.seed is not None:
            raw = experiments.config_to_dict(cfg)
            if args.out is not None:
                raw["output_dir"] = args.out
            if args.seed is not None:
                raw["seed"] = args.seed
            cfg = experiments.config_from_dict(raw)
    except (experiments.ConfigError, FileNotFoundError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        report = experiments.run_scenario(cfg)
    except experiments.ConfigError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(json.dumps(report, sort_keys=True, indent=2, default=str))
    if report.get("status") in ("blow_up", "contaminated"):
        return EXIT_RUNTIME_FLAG
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", None):
        spectral.set_workers(args.threads)
    handler = {
        "simulate": cmd_simulate,
        "groundstate": cmd_groundstate,
        "diagnose": cmd_diagnose,
        "admissible": cmd_admissible,
        "experiment": cmd_experiment,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
