"""Monte Carlo experiment drivers: stability curves, common-noise spatial
convergence with an overkill reference, zero-level-set extraction, and the
time-increment scaling check.

All drivers map over independent sample paths (optionally in worker
processes) and reduce results in path-index order, so output is bit-identical
regardless of the worker count.  A failing path aborts the whole run: silently
dropping paths would bias the estimators.
"""
from __future__ import annotations

import json
import os
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError
from .fem import AssembledOperators, NodalField, assemble, l2_project
from .initialdata import make_initial
from .levelset import LevelSet
from .mesh import DEFAULT_BOUNDS, Bounds, build_rect_mesh
from .noise import NoiseStream, increment_array, increments_digest
from .stepper import SchemeParams, evolve_path, step

# Per-process cache so worker processes assemble each mesh once.
_OPS_CACHE: dict = {}


def _cached_ops(nx: int, ny: int, bounds: Bounds) -> AssembledOperators:
    key = (nx, ny, bounds)
    ops = _OPS_CACHE.get(key)
    if ops is None:
        ops = assemble(build_rect_mesh(nx, ny, bounds))
        _OPS_CACHE[key] = ops
    return ops


def _resolve_initial(cfg) -> Callable:
    if callable(cfg.initial):
        return cfg.initial
    return make_initial(cfg.initial, epsilon=cfg.params.epsilon,
                        constant=cfg.initial_constant,
                        expression=cfg.initial_expression)


def _map_paths(fn, n_paths: int, workers: int) -> list:
    """Evaluate fn(p) for p = 0..n_paths-1, results in path order."""
    if workers <= 1 or n_paths <= 1:
        return [fn(p) for p in range(n_paths)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_paths)))


# ---------------------------------------------------------------------------
# Stability curves (Tests 1 and 2)
# ---------------------------------------------------------------------------

@dataclass
class StabilityConfig:
    params: SchemeParams
    nx: int
    ny: int | None = None
    bounds: Bounds = DEFAULT_BOUNDS
    initial: object = "test1_circle"
    initial_constant: float | None = None
    initial_expression: str | None = None
    n_paths: int = 100
    master_seed: int = 0
    snapshot_times: tuple = ()
    workers: int = 1
    record_laplacian: bool = True

    def __post_init__(self):
        if self.ny is None:
            self.ny = self.nx
        if self.n_paths < 1:
            raise ConfigError("n_paths must be >= 1")


@dataclass
class StabilityMonitors:
    """Empirical counterparts of the scheme's stability estimates."""

    max_e_l2_sq: float        # max_n E||u^n||^2
    sum_e_step_sq: float      # sum_n E||u^n - u^{n-1}||^2
    tau_sum_e_lap_sq: float   # tau sum_n E||Lap_h u^n||^2
    tau_sum_e_h1_sq: float    # tau sum_n E||grad u^n||^2
    sup_e_l2_p4: float        # sup_n E||u^n||^4


@dataclass
class RunStats:
    """Per-time-step Monte Carlo statistics over M paths."""

    times: np.ndarray
    e_l2: np.ndarray
    e_l2_se: np.ndarray
    e_h1: np.ndarray
    e_h1_se: np.ndarray
    e_l2_sq: np.ndarray
    e_l2_sq_se: np.ndarray
    e_l2_p4: np.ndarray
    e_l2_p4_se: np.ndarray
    rms_l2: np.ndarray
    rms_h1: np.ndarray
    sample_l2: np.ndarray
    sample_h1: np.ndarray
    monitors: StabilityMonitors
    n_paths: int
    increment_digests: list[str]
    mass_identity_max_err: float
    mean_snapshots: dict[float, NodalField] = field(default_factory=dict)
    sample_snapshots: dict[float, NodalField] = field(default_factory=dict)
    newton_iters_max: int = 0


class _StabilityPathJob:
    """Picklable per-path worker for run_stability."""

    def __init__(self, cfg: StabilityConfig, initial_fn):
        self.cfg = cfg
        self.initial_fn = initial_fn

    def __call__(self, p: int):
        cfg = self.cfg
        ops = _cached_ops(cfg.nx, cfg.ny, cfg.bounds)
        u0 = l2_project(self.initial_fn, ops)
        stream = NoiseStream(cfg.master_seed, p)
        res = evolve_path(u0, cfg.params, ops, stream=stream,
                          snapshot_times=cfg.snapshot_times,
                          record_laplacian=cfg.record_laplacian)
        delta = cfg.params.delta
        mass_err = np.abs(np.diff(res.mass)
                          - delta * res.increments * res.g_mass[:-1]).max()
        return {
            "l2": res.l2, "h1": res.h1, "h1_semi": res.h1_semi,
            "lap": res.laplacian_l2, "step_l2": res.step_l2,
            "snapshots": res.snapshots, "digest": res.increments_digest,
            "mass_err": float(mass_err),
            "newton_max": int(res.newton_iters.max()) if res.newton_iters.size else 0,
        }


def run_stability(cfg: StabilityConfig) -> RunStats:
    """Evolve M independent paths and aggregate per-step norm statistics."""
    initial_fn = _resolve_initial(cfg)
    results = _map_paths(_StabilityPathJob(cfg, initial_fn), cfg.n_paths, cfg.workers)

    M = cfg.n_paths
    l2 = np.stack([r["l2"] for r in results])        # (M, N+1)
    h1 = np.stack([r["h1"] for r in results])
    h1_semi = np.stack([r["h1_semi"] for r in results])
    lap = np.stack([r["lap"] for r in results])
    step_sq = np.stack([r["step_l2"] for r in results]) ** 2

    def mean_se(x):
        m = x.mean(axis=0)
        se = x.std(axis=0, ddof=1) / np.sqrt(M) if M > 1 else np.zeros_like(m)
        return m, se

    e_l2, e_l2_se = mean_se(l2)
    e_h1, e_h1_se = mean_se(h1)
    e_l2_sq, e_l2_sq_se = mean_se(l2 ** 2)
    e_l2_p4, e_l2_p4_se = mean_se(l2 ** 4)

    tau = cfg.params.tau
    monitors = StabilityMonitors(
        max_e_l2_sq=float(e_l2_sq[1:].max()),
        sum_e_step_sq=float(step_sq.mean(axis=0).sum()),
        tau_sum_e_lap_sq=float(tau * (lap[:, 1:] ** 2).mean(axis=0).sum()),
        tau_sum_e_h1_sq=float(tau * (h1_semi[:, 1:] ** 2).mean(axis=0).sum()),
        sup_e_l2_p4=float(e_l2_p4.max()),
    )

    mesh = _cached_ops(cfg.nx, cfg.ny, cfg.bounds).mesh
    mean_snapshots = {}
    for t in sorted(results[0]["snapshots"]):
        acc = np.zeros(mesh.n_vertices)
        for r in results:
            acc += r["snapshots"][t]
        mean_snapshots[t] = NodalField(acc / M, mesh)
    sample_snapshots = {t: NodalField(v, mesh)
                        for t, v in sorted(results[0]["snapshots"].items())}

    return RunStats(
        times=cfg.params.times(),
        e_l2=e_l2, e_l2_se=e_l2_se, e_h1=e_h1, e_h1_se=e_h1_se,
        e_l2_sq=e_l2_sq, e_l2_sq_se=e_l2_sq_se,
        e_l2_p4=e_l2_p4, e_l2_p4_se=e_l2_p4_se,
        rms_l2=np.sqrt(e_l2_sq), rms_h1=np.sqrt((h1 ** 2).mean(axis=0)),
        sample_l2=l2[0], sample_h1=h1[0],
        monitors=monitors, n_paths=M,
        increment_digests=[r["digest"] for r in results],
        mass_identity_max_err=max(r["mass_err"] for r in results),
        mean_snapshots=mean_snapshots, sample_snapshots=sample_snapshots,
        newton_iters_max=max(r["newton_max"] for r in results),
    )


# ---------------------------------------------------------------------------
# Common-noise spatial convergence (Test 3)
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceConfig:
    params: SchemeParams
    ladder: tuple[int, ...]
    reference_nx: int
    bounds: Bounds = DEFAULT_BOUNDS
    initial: object = "test3_cross"
    initial_constant: float | None = None
    initial_expression: str | None = None
    n_paths: int = 20
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        self.ladder = tuple(int(n) for n in self.ladder)
        if not self.ladder:
            raise ConfigError("convergence ladder is empty")
        if any(n < 1 for n in self.ladder):
            raise ConfigError("ladder entries must be positive")
        for n in self.ladder:
            if self.reference_nx % n != 0:
                raise ConfigError(
                    f"non-nested ladder: reference nx={self.reference_nx} is not "
                    f"a multiple of ladder nx={n}")
        if self.n_paths < 1:
            raise ConfigError("n_paths must be >= 1")


@dataclass
class ErrorRow:
    h: float
    err_linf_el2: float
    order_linf_el2: float | None
    err_el2h1: float
    order_el2h1: float | None


@dataclass
class ErrorTable:
    rows: list[ErrorRow]
    reference_nx: int
    n_paths: int
    increment_digests: list[str]


def prolongation_weights(nx_c: int, ny_c: int, nx_r: int, ny_r: int):
    """Evaluate a coarse P1 field at every reference-mesh vertex.

    Nested grids split along the same diagonal make a coarse triangle a union
    of reference triangles, so this evaluation represents the coarse function
    exactly on the reference mesh.  Returns (idx, w) with field values at the
    fine vertices given by (values[idx] * w).sum(axis=1).
    """
    rx, ry = nx_r // nx_c, ny_r // ny_c
    I, J = np.meshgrid(np.arange(nx_r + 1), np.arange(ny_r + 1))
    I, J = I.ravel(), J.ravel()
    ic = np.minimum(I // rx, nx_c - 1)
    jc = np.minimum(J // ry, ny_c - 1)
    a = (I - ic * rx) / rx
    b = (J - jc * ry) / ry
    v00 = jc * (nx_c + 1) + ic
    v10 = v00 + 1
    v01 = v00 + (nx_c + 1)
    v11 = v01 + 1
    idx = np.empty((I.size, 3), dtype=np.int64)
    w = np.empty((I.size, 3))
    lower = a >= b  # below the cell diagonal
    idx[lower] = np.column_stack([v00[lower], v10[lower], v11[lower]])
    w[lower] = np.column_stack([1.0 - a[lower], a[lower] - b[lower], b[lower]])
    up = ~lower
    idx[up] = np.column_stack([v00[up], v01[up], v11[up]])
    w[up] = np.column_stack([1.0 - b[up], b[up] - a[up], a[up]])
    return idx, w


class _ConvergencePathJob:
    """Evolves one path on every ladder mesh plus the reference, in lockstep
    on a shared scalar increment sequence, accumulating errors per step.

    Errors are norms of the difference between the reference solution and the
    exactly prolonged coarse solution, computed on the reference mesh; nodal
    restriction to the coarse mesh under-samples interface layers and was
    measured to distort the convergence orders."""

    def __init__(self, cfg: ConvergenceConfig, initial_fn):
        self.cfg = cfg
        self.initial_fn = initial_fn

    def __call__(self, p: int):
        cfg = self.cfg
        params = cfg.params
        N = params.n_steps

        ref_ops = _cached_ops(cfg.reference_nx, cfg.reference_nx, cfg.bounds)
        coarse = []
        for nx in cfg.ladder:
            ops = _cached_ops(nx, nx, cfg.bounds)
            idx, w = prolongation_weights(nx, nx, cfg.reference_nx, cfg.reference_nx)
            coarse.append((ops, idx, w))

        increments = increment_array(NoiseStream(cfg.master_seed, p), N, params)

        u_ref = l2_project(self.initial_fn, ref_ops)
        u_c = [l2_project(self.initial_fn, ops) for ops, _, _ in coarse]

        sq_l2 = np.zeros((len(coarse), N + 1))
        h1_sum = np.zeros(len(coarse))

        def record(n):
            for m, (_, idx, w) in enumerate(coarse):
                e = u_ref.values - (u_c[m].values[idx] * w).sum(axis=1)
                sq_l2[m, n] = e @ (ref_ops.M @ e)
                if n >= 1:
                    h1_sum[m] += e @ (ref_ops.K @ e)

        record(0)
        for n in range(1, N + 1):
            dW = float(increments[n - 1])
            u_ref = step(u_ref, dW, params, ref_ops).u
            for m, (ops, _, _) in enumerate(coarse):
                u_c[m] = step(u_c[m], dW, params, ops).u
            record(n)

        return {"sq_l2": sq_l2, "h1_sum": params.tau * h1_sum,
                "digest": increments_digest(increments)}


def run_convergence(cfg: ConvergenceConfig) -> ErrorTable:
    """Errors against an overkill reference on a nested mesh ladder.

    For each mesh the table reports
        err_linf_el2 = max_n (E||E^n||^2_{L2})^{1/2}
        err_el2h1    = (E[tau sum_n ||grad E^n||^2])^{1/2}
    with E^n the difference between the reference solution and the coarse
    solution (prolonged exactly to the reference mesh), and orders between
    successive rows.
    """
    initial_fn = _resolve_initial(cfg)
    results = _map_paths(_ConvergencePathJob(cfg, initial_fn), cfg.n_paths, cfg.workers)

    M = cfg.n_paths
    sq_l2 = np.zeros_like(results[0]["sq_l2"])
    h1_sum = np.zeros_like(results[0]["h1_sum"])
    for r in results:
        sq_l2 += r["sq_l2"]
        h1_sum += r["h1_sum"]
    sq_l2 /= M
    h1_sum /= M

    xmin, xmax, ymin, ymax = cfg.bounds
    rows: list[ErrorRow] = []
    for m, nx in enumerate(cfg.ladder):
        dx, dy = (xmax - xmin) / nx, (ymax - ymin) / nx
        h = float(np.hypot(dx, dy))
        err_l2 = float(np.sqrt(sq_l2[m].max()))
        err_h1 = float(np.sqrt(h1_sum[m]))
        if m == 0:
            rows.append(ErrorRow(h, err_l2, None, err_h1, None))
        else:
            ratio = np.log(rows[-1].h / h)
            o_l2 = float(np.log(rows[-1].err_linf_el2 / err_l2) / ratio) \
                if err_l2 > 0 and rows[-1].err_linf_el2 > 0 else None
            o_h1 = float(np.log(rows[-1].err_el2h1 / err_h1) / ratio) \
                if err_h1 > 0 and rows[-1].err_el2h1 > 0 else None
            rows.append(ErrorRow(h, err_l2, o_l2, err_h1, o_h1))

    return ErrorTable(rows=rows, reference_nx=cfg.reference_nx, n_paths=M,
                      increment_digests=[r["digest"] for r in results])


# ---------------------------------------------------------------------------
# Time-increment scaling (Holder-continuity counterpart)
# ---------------------------------------------------------------------------

@dataclass
class HolderConfig:
    params: SchemeParams
    nx: int
    ny: int | None = None
    bounds: Bounds = DEFAULT_BOUNDS
    initial: object = "test1_circle"
    initial_constant: float | None = None
    initial_expression: str | None = None
    lags: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64, 128)
    n_paths: int = 50
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.ny is None:
            self.ny = self.nx
        self.lags = tuple(int(k) for k in self.lags if k >= 1)
        max_lag = max(self.lags)
        if max_lag > self.params.n_steps:
            raise ConfigError(
                f"largest lag {max_lag} exceeds the number of steps "
                f"{self.params.n_steps}; extend T or drop lags")


@dataclass
class HolderReport:
    lags: tuple[int, ...]
    lag_times: np.ndarray
    msd: np.ndarray            # E||u^{n+k} - u^n||^2, pooled over n
    slope: float | None
    doubling_ratios: np.ndarray
    degenerate: bool
    n_paths: int


class _HolderPathJob:
    def __init__(self, cfg: HolderConfig, initial_fn):
        self.cfg = cfg
        self.initial_fn = initial_fn

    def __call__(self, p: int):
        cfg = self.cfg
        ops = _cached_ops(cfg.nx, cfg.ny, cfg.bounds)
        u0 = l2_project(self.initial_fn, ops)
        res = evolve_path(u0, cfg.params, ops,
                          stream=NoiseStream(cfg.master_seed, p),
                          keep_trajectory=True)
        traj = res.trajectory
        out = np.empty(len(cfg.lags))
        for idx, k in enumerate(cfg.lags):
            d = traj[k:] - traj[:-k]
            out[idx] = np.mean(np.einsum("ij,ij->i", d, (ops.M @ d.T).T))
        return out


def holder_check(cfg: HolderConfig) -> HolderReport:
    """Mean-square time increments over dyadic lags and their log-log slope.

    The continuum solution satisfies a bound linear in the lag; the discrete
    process is expected to inherit at most linear scaling, so the slope is a
    soft diagnostic, not a hard invariant.
    """
    initial_fn = _resolve_initial(cfg)
    results = _map_paths(_HolderPathJob(cfg, initial_fn), cfg.n_paths, cfg.workers)
    msd = np.zeros(len(cfg.lags))
    for r in results:
        msd += r
    msd /= cfg.n_paths

    lag_times = np.array(cfg.lags, dtype=np.float64) * cfg.params.tau
    degenerate = bool(msd.max() < 1e-24)
    slope = None
    if not degenerate:
        slope = float(np.polyfit(np.log(lag_times), np.log(msd), 1)[0])
    ratios = msd[1:] / np.maximum(msd[:-1], 1e-300)
    return HolderReport(lags=cfg.lags, lag_times=lag_times, msd=msd, slope=slope,
                        doubling_ratios=ratios, degenerate=degenerate,
                        n_paths=cfg.n_paths)


# ---------------------------------------------------------------------------
# CSV and manifest output
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    return f"{x:.17g}"


def write_stability_csv(stats: RunStats, outdir: str) -> dict[str, str]:
    """Write stability.csv plus the sample-path and moment companions."""
    os.makedirs(outdir, exist_ok=True)
    paths = {}

    main = os.path.join(outdir, "stability.csv")
    with open(main, "w") as f:
        f.write("t,e_l2,e_l2_se,e_h1,e_h1_se,e_l2_p4\n")
        for i, t in enumerate(stats.times):
            f.write(",".join(_fmt(v) for v in (
                t, stats.e_l2[i], stats.e_l2_se[i], stats.e_h1[i],
                stats.e_h1_se[i], stats.e_l2_p4[i])) + "\n")
    paths["stability"] = main

    sample = os.path.join(outdir, "stability_sample.csv")
    with open(sample, "w") as f:
        f.write("t,l2,h1\n")
        for i, t in enumerate(stats.times):
            f.write(",".join(_fmt(v) for v in (
                t, stats.sample_l2[i], stats.sample_h1[i])) + "\n")
    paths["stability_sample"] = sample

    moments = os.path.join(outdir, "stability_moments.csv")
    with open(moments, "w") as f:
        f.write("t,rms_l2,rms_h1,e_l2_sq,e_l2_sq_se,e_l2_p4,e_l2_p4_se\n")
        for i, t in enumerate(stats.times):
            f.write(",".join(_fmt(v) for v in (
                t, stats.rms_l2[i], stats.rms_h1[i], stats.e_l2_sq[i],
                stats.e_l2_sq_se[i], stats.e_l2_p4[i], stats.e_l2_p4_se[i])) + "\n")
    paths["stability_moments"] = moments
    return paths


def write_convergence_csv(table: ErrorTable, outdir: str) -> str:
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "convergence.csv")
    with open(path, "w") as f:
        f.write("h,err_linf_el2,order_linf_el2,err_el2h1,order_el2h1\n")
        for row in table.rows:
            o1 = "" if row.order_linf_el2 is None else _fmt(row.order_linf_el2)
            o2 = "" if row.order_el2h1 is None else _fmt(row.order_el2h1)
            f.write(f"{_fmt(row.h)},{_fmt(row.err_linf_el2)},{o1},"
                    f"{_fmt(row.err_el2h1)},{o2}\n")
    return path


def write_levelset_csv(ls: LevelSet, outdir: str) -> str:
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, f"levelset_t{ls.time:g}_{ls.tag}.csv")
    with open(path, "w") as f:
        f.write("x1,y1,x2,y2\n")
        for x1, y1, x2, y2 in ls.segments:
            f.write(f"{_fmt(x1)},{_fmt(y1)},{_fmt(x2)},{_fmt(y2)}\n")
    return path


def write_holder_csv(report: HolderReport, outdir: str) -> str:
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "holder.csv")
    with open(path, "w") as f:
        f.write("lag_steps,lag_time,msd\n")
        for k, t, v in zip(report.lags, report.lag_times, report.msd):
            f.write(f"{k},{_fmt(t)},{_fmt(v)}\n")
    return path


def write_manifest(outdir: str, config: dict, master_seed: int,
                   increment_digests: Sequence[str] = (),
                   extra: dict | None = None) -> str:
    """Record the run configuration and noise checksums for reproducibility."""
    os.makedirs(outdir, exist_ok=True)
    payload = {
        "schfem_version": __version__,
        "master_seed": master_seed,
        "config": config,
        "increment_digests": list(increment_digests),
        "written_unix_time": _time.time(),
    }
    if extra:
        payload.update(extra)
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return path
