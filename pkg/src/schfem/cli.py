"""Command-line front end.

Subcommands: check, evolve, stability, converge, holder.  Exit codes:
0 success, 1 invariant failure, 2 configuration error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import os
import sys
import time

from . import __version__
from .config import PRESETS, RunConfig, config_to_text, load_config
from .errors import ConfigError, LinearSolveError, NewtonError, SchfemError
from .experiments import (ConvergenceConfig, HolderConfig, StabilityConfig,
                          holder_check, run_convergence, run_stability,
                          write_convergence_csv, write_holder_csv,
                          write_levelset_csv, write_manifest,
                          write_stability_csv)
from .fem import NodalField, assemble, l2_project, verify_operators
from .initialdata import make_initial
from .levelset import zero_level_set
from .mesh import build_rect_mesh, mesh_size
from .noise import NoiseStream
from .stepper import SchemeParams, evolve_path

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schfem",
        description="Stochastic Cahn-Hilliard mixed finite element experiments")
    parser.add_argument("--version", action="version", version=f"schfem {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
            ("check", "run the operator property suite on a mesh"),
            ("evolve", "evolve a single sample path and dump fields"),
            ("stability", "Monte Carlo stability curves"),
            ("converge", "common-noise spatial convergence table"),
            ("holder", "mean-square time-increment scaling")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="plain-text key = value configuration file")
        p.add_argument("--preset", choices=sorted(PRESETS),
                       help="built-in parameter set applied before the config file")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--paths", type=int, help="number of sample paths (overrides config)")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config, args.preset,
                      overrides={"seed": args.seed, "out": args.out,
                                 "paths": args.paths})
    return cfg


def _require_seed(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise ConfigError("no seed given: pass --seed or set 'seed' in the config "
                          "(runs must be reproducible)")
    return cfg.seed


def _require_out(cfg: RunConfig) -> str:
    if not cfg.out:
        raise ConfigError("no output directory: pass --out or set 'out' in the config")
    return cfg.out


def _scheme_params(cfg: RunConfig) -> SchemeParams:
    cfg.require_scheme()
    return SchemeParams(epsilon=cfg.epsilon, tau=cfg.tau, T=cfg.T, delta=cfg.delta,
                        diffusion=cfg.diffusion, newton_tol=cfg.newton_tol,
                        newton_max_iter=cfg.newton_max_iter,
                        increment_variance_mode=cfg.increment_variance_mode)


def _say(quiet: bool, *parts):
    if not quiet:
        print(*parts)


def cmd_check(args) -> int:
    cfg = _load(args)
    nx = cfg.check_nx
    mesh = build_rect_mesh(nx, nx, cfg.bounds)
    ops = assemble(mesh)
    seed = cfg.seed if cfg.seed is not None else 0
    results = verify_operators(ops, n_random=cfg.check_fields, seed=seed)
    failed = [r for r in results if not r.ok]
    for r in results:
        _say(args.quiet, f"[{'PASS' if r.ok else 'FAIL'}] {r.name}: {r.detail}")
    sizes = mesh_size(mesh)
    _say(args.quiet, f"mesh nx=ny={nx}, h_max={sizes['h_max']:.6g}, "
                     f"area={sizes['area']:.12g}")
    if failed:
        print(f"{len(failed)} operator check(s) FAILED", file=sys.stderr)
        return EXIT_INVARIANT
    _say(args.quiet, "all operator checks passed")
    return EXIT_OK


def _write_field_csv(path, mesh, values):
    with open(path, "w") as f:
        f.write("x,y,u\n")
        for (x, y), v in zip(mesh.vertices, values):
            f.write(f"{x:.17g},{y:.17g},{v:.17g}\n")


def cmd_evolve(args) -> int:
    cfg = _load(args)
    seed = _require_seed(cfg)
    outdir = _require_out(cfg)
    params = _scheme_params(cfg)
    t0 = time.perf_counter()

    mesh = build_rect_mesh(cfg.nx, cfg.ny_resolved, cfg.bounds)
    ops = assemble(mesh)
    initial = make_initial(cfg.initial, epsilon=cfg.epsilon,
                           constant=cfg.initial_constant,
                           expression=cfg.initial_expression)
    u0 = l2_project(initial, ops)
    res = evolve_path(u0, params, ops, stream=NoiseStream(seed, 0),
                      snapshot_times=cfg.snapshot_times)

    os.makedirs(outdir, exist_ok=True)
    _write_field_csv(os.path.join(outdir, "initial_field.csv"), mesh, u0.values)
    _write_field_csv(os.path.join(outdir, "final_field.csv"), mesh, res.final_u.values)
    with open(os.path.join(outdir, "evolve.csv"), "w") as f:
        f.write("t,l2,h1,mass\n")
        for i, t in enumerate(res.times):
            f.write(f"{t:.17g},{res.l2[i]:.17g},{res.h1[i]:.17g},{res.mass[i]:.17g}\n")
    for t, values in sorted(res.snapshots.items()):
        write_levelset_csv(zero_level_set(NodalField(values, mesh), time=t, tag="path0"),
                           outdir)
    write_manifest(outdir, cfg.as_dict(), seed,
                   increment_digests=[res.increments_digest],
                   extra={"command": "evolve", "config_text": config_to_text(cfg),
                          "wall_time_s": time.perf_counter() - t0})
    _say(args.quiet, f"evolved {params.n_steps} steps; final L2 {res.l2[-1]:.6g}, "
                     f"H1 {res.h1[-1]:.6g} -> {outdir} "
                     f"({time.perf_counter() - t0:.1f}s)")
    return EXIT_OK


def cmd_stability(args) -> int:
    cfg = _load(args)
    seed = _require_seed(cfg)
    outdir = _require_out(cfg)
    t0 = time.perf_counter()
    scfg = StabilityConfig(params=_scheme_params(cfg), nx=cfg.nx, ny=cfg.ny_resolved,
                           bounds=cfg.bounds, initial=cfg.initial,
                           initial_constant=cfg.initial_constant,
                           initial_expression=cfg.initial_expression,
                           n_paths=cfg.paths, master_seed=seed,
                           snapshot_times=cfg.snapshot_times, workers=cfg.workers)
    stats = run_stability(scfg)
    write_stability_csv(stats, outdir)
    for t, fieldv in sorted(stats.mean_snapshots.items()):
        write_levelset_csv(zero_level_set(fieldv, time=t, tag="average"), outdir)
    for t, fieldv in sorted(stats.sample_snapshots.items()):
        write_levelset_csv(zero_level_set(fieldv, time=t, tag="path0"), outdir)
    write_manifest(outdir, cfg.as_dict(), seed,
                   increment_digests=stats.increment_digests,
                   extra={"command": "stability", "config_text": config_to_text(cfg),
                          "wall_time_s": time.perf_counter() - t0})
    _say(args.quiet,
         f"{stats.n_paths} paths, final E L2 {stats.e_l2[-1]:.6g} "
         f"(se {stats.e_l2_se[-1]:.2g}), E H1 {stats.e_h1[-1]:.6g} "
         f"-> {outdir} ({time.perf_counter() - t0:.1f}s)")
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = _load(args)
    seed = _require_seed(cfg)
    outdir = _require_out(cfg)
    if not cfg.ladder:
        raise ConfigError("converge needs a mesh ladder, e.g. 'ladder = 10,20,40'")
    reference = cfg.reference_nx if cfg.reference_nx is not None else 2 * max(cfg.ladder)
    t0 = time.perf_counter()
    ccfg = ConvergenceConfig(params=_scheme_params(cfg), ladder=cfg.ladder,
                             reference_nx=reference, bounds=cfg.bounds,
                             initial=cfg.initial,
                             initial_constant=cfg.initial_constant,
                             initial_expression=cfg.initial_expression,
                             n_paths=cfg.paths, master_seed=seed,
                             workers=cfg.workers)
    table = run_convergence(ccfg)
    write_convergence_csv(table, outdir)
    write_manifest(outdir, cfg.as_dict(), seed,
                   increment_digests=table.increment_digests,
                   extra={"command": "converge", "config_text": config_to_text(cfg),
                          "wall_time_s": time.perf_counter() - t0})
    if not args.quiet:
        print("h,err_linf_el2,order,err_el2h1,order")
        for row in table.rows:
            o1 = "-" if row.order_linf_el2 is None else f"{row.order_linf_el2:.3f}"
            o2 = "-" if row.order_el2h1 is None else f"{row.order_el2h1:.3f}"
            print(f"{row.h:.5g},{row.err_linf_el2:.6g},{o1},{row.err_el2h1:.6g},{o2}")
        print(f"-> {outdir} ({time.perf_counter() - t0:.1f}s)")
    return EXIT_OK


def cmd_holder(args) -> int:
    cfg = _load(args)
    seed = _require_seed(cfg)
    outdir = _require_out(cfg)
    t0 = time.perf_counter()
    hcfg = HolderConfig(params=_scheme_params(cfg), nx=cfg.nx, ny=cfg.ny_resolved,
                        bounds=cfg.bounds, initial=cfg.initial,
                        initial_constant=cfg.initial_constant,
                        initial_expression=cfg.initial_expression,
                        lags=cfg.holder_lags, n_paths=cfg.paths,
                        master_seed=seed, workers=cfg.workers)
    report = holder_check(hcfg)
    write_holder_csv(report, outdir)
    write_manifest(outdir, cfg.as_dict(), seed,
                   extra={"command": "holder", "config_text": config_to_text(cfg),
                          "slope": report.slope, "degenerate": report.degenerate,
                          "wall_time_s": time.perf_counter() - t0})
    if report.degenerate:
        _say(args.quiet, "degenerate run: all increments are zero")
    else:
        _say(args.quiet, f"log-log slope {report.slope:.3f} over lags "
                         f"{report.lags[0]}..{report.lags[-1]} steps "
                         f"-> {outdir} ({time.perf_counter() - t0:.1f}s)")
    return EXIT_OK


_COMMANDS = {
    "check": cmd_check,
    "evolve": cmd_evolve,
    "stability": cmd_stability,
    "converge": cmd_converge,
    "holder": cmd_holder,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NewtonError, LinearSolveError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except SchfemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
