"""One-step solver and path evolution for the implicit mixed scheme.

Each step advances (u, w) through the coupled system

    M (u - u_prev) + tau K w = delta * dW * M g(u_prev)
    eps K u + (1/eps) M f(u) - M w = 0,       f(u) = u^3 - u nodewise,

solved by Newton iteration on the 2n-by-2n block system.  The noise enters
explicitly through the previous state; the drift, including the double-well
term, is fully implicit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NewtonError
from .fem import AssembledOperators, NodalField
from .noise import NoiseStream, draw_increment, increments_digest


def _diffusion_identity(u):
    return u


def _diffusion_sqrt1p(u):
    return np.sqrt(u * u + 1.0)


DIFFUSION_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "identity": _diffusion_identity,
    "sqrt1p": _diffusion_sqrt1p,
}

# Reuse the factored Jacobian while each iteration still shrinks the residual
# by at least this factor; refresh it otherwise.  Iterations with a reused
# factorization cost two triangular solves instead of a new factorization.
_REFRESH_RATE = 0.5


class TableDiffusion:
    """Piecewise-linear g(u) from tabulated (u, g(u)) pairs.

    Constant extrapolation beyond the table ends; the Lipschitz bound is the
    largest slope between adjacent table points.
    """

    def __init__(self, table):
        table = np.asarray(table, dtype=np.float64)
        if table.ndim != 2 or table.shape[1] != 2 or table.shape[0] < 2:
            raise ValueError("diffusion table must be a sequence of (u, g(u)) pairs")
        order = np.argsort(table[:, 0])
        self.xs = table[order, 0]
        self.gs = table[order, 1]

    @property
    def lipschitz_bound(self) -> float:
        return float(np.abs(np.diff(self.gs) / np.diff(self.xs)).max())

    def __call__(self, u):
        return np.interp(u, self.xs, self.gs)


def resolve_diffusion(spec) -> Callable[[np.ndarray], np.ndarray]:
    """Accept a builtin name, a callable, or a (u, g(u)) interpolation table.

    A custom callable or table is assumed globally Lipschitz; this is a
    modelling assumption, not something checked at runtime.
    """
    if callable(spec):
        return spec
    if isinstance(spec, str):
        try:
            return DIFFUSION_FUNCTIONS[spec]
        except KeyError:
            raise ValueError(
                f"unknown diffusion '{spec}'; choose from {sorted(DIFFUSION_FUNCTIONS)} "
                "or pass a callable / value table") from None
    return TableDiffusion(spec)


@dataclass
class SchemeParams:
    """Scheme and solver parameters for one run."""

    epsilon: float
    tau: float
    T: float
    delta: float = 1.0
    diffusion: object = "identity"
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    increment_variance_mode: str = "tau"

    def __post_init__(self):
        if not (self.epsilon > 0 and self.tau > 0 and self.T > 0):
            raise ValueError("epsilon, tau, and T must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.newton_tol <= 0 or self.newton_max_iter < 1:
            raise ValueError("newton_tol must be positive and newton_max_iter >= 1")
        if self.increment_variance_mode not in ("tau", "unit"):
            raise ValueError("increment_variance_mode must be 'tau' or 'unit'")
        if self.n_steps < 1:
            raise ValueError(f"T/tau = {self.T / self.tau:.3g} rounds to zero steps")
        self.diffusion_fn = resolve_diffusion(self.diffusion)

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.tau))

    def times(self) -> np.ndarray:
        return self.tau * np.arange(self.n_steps + 1)


@dataclass
class StepResult:
    u: NodalField
    w: NodalField
    newton_iters: int
    residual: float


def _residual(uv, wv, rhs1, params, ops):
    r1 = ops.M @ uv + params.tau * (ops.K @ wv) - rhs1
    f = uv * uv * uv - uv
    r2 = params.epsilon * (ops.K @ uv) + (ops.M @ f) / params.epsilon - ops.M @ wv
    return r1, r2


def _jacobian(uv, params, ops):
    dfdu = 3.0 * uv * uv - 1.0
    block21 = params.epsilon * ops.K + ops.M.multiply(dfdu[None, :]) / params.epsilon
    return sp.bmat([[ops.M, params.tau * ops.K], [block21, -ops.M]], format="csc")


def step(u_prev: NodalField, dW: float, params: SchemeParams,
         ops: AssembledOperators) -> StepResult:
    """Advance one time step from u_prev with Wiener increment dW.

    Newton iteration with a line search (up to 8 halvings of the update).
    The Jacobian factorization is reused across iterations while the residual
    keeps contracting (see _REFRESH_RATE); for small tau one factorization
    per step is typical.
    """
    up = u_prev.values
    g_prev = params.diffusion_fn(up)
    rhs1 = ops.M @ up + params.delta * dW * (ops.M @ g_prev)
    # rhs1 keeps the scale meaningful when u_prev vanishes but noise acts
    scale = max(float(np.abs(ops.M @ up).max()),
                float(np.abs(rhs1).max()), 1e-30)

    # Predictor: absorb the noise term nodewise (it then satisfies the first
    # equation up to the tau K w drift) and start w consistent with it.
    uv = up + params.delta * dW * g_prev
    wv = ops.solve_mass(params.epsilon * (ops.K @ uv)
                        + (ops.M @ (uv ** 3 - uv)) / params.epsilon)

    r1, r2 = _residual(uv, wv, rhs1, params, ops)
    res = max(np.abs(r1).max(), np.abs(r2).max()) / scale
    lu = None
    lu_fresh = False  # was lu factored at the current iterate?
    n = ops.n
    for it in range(1, params.newton_max_iter + 1):
        if res <= params.newton_tol:
            return StepResult(NodalField(uv, ops.mesh), NodalField(wv, ops.mesh),
                              it - 1, res)
        if lu is None:
            lu = spla.splu(_jacobian(uv, params, ops))
            lu_fresh = True
        d = lu.solve(-np.concatenate([r1, r2]))
        du, dw = d[:n], d[n:]
        step_frac = 1.0
        for _ in range(9):
            u_new = uv + step_frac * du
            w_new = wv + step_frac * dw
            r1n, r2n = _residual(u_new, w_new, rhs1, params, ops)
            res_new = max(np.abs(r1n).max(), np.abs(r2n).max()) / scale
            if res_new < res or res_new <= params.newton_tol:
                break
            step_frac *= 0.5
        else:
            if lu_fresh:
                raise NewtonError("line search failed to reduce the residual",
                                  residual=res, iterations=it)
            lu = None  # stale direction; refactor at the current iterate
            continue
        slow = res_new > _REFRESH_RATE * res or step_frac < 1.0
        uv, wv, r1, r2, res = u_new, w_new, r1n, r2n, res_new
        lu_fresh = False
        if slow:
            lu = None  # state moved enough that the frozen Jacobian is stale
    if res <= params.newton_tol:
        return StepResult(NodalField(uv, ops.mesh), NodalField(wv, ops.mesh),
                          params.newton_max_iter, res)
    raise NewtonError(
        f"Newton did not converge in {params.newton_max_iter} iterations "
        f"(residual {res:.3e}, tol {params.newton_tol:.1e})",
        residual=res, iterations=params.newton_max_iter)


@dataclass
class PathResult:
    """Per-step observables of one sample path."""

    times: np.ndarray
    l2: np.ndarray
    h1_semi: np.ndarray
    h1: np.ndarray
    mass: np.ndarray          # (u^n, 1)
    g_mass: np.ndarray        # (g(u^n), 1)
    laplacian_l2: np.ndarray  # ||Lap_h u^n||_{L2}
    step_l2: np.ndarray       # ||u^n - u^{n-1}||_{L2}, length N
    newton_iters: np.ndarray
    increments: np.ndarray
    snapshots: dict[float, np.ndarray] = field(default_factory=dict)
    trajectory: np.ndarray | None = None
    final_u: NodalField | None = None
    final_w: NodalField | None = None

    @property
    def increments_digest(self) -> str:
        return increments_digest(self.increments)


def evolve_path(u0: NodalField, params: SchemeParams, ops: AssembledOperators,
                stream: NoiseStream | None = None,
                increments: np.ndarray | None = None,
                observers: Sequence[Callable] = (),
                snapshot_times: Sequence[float] = (),
                record_laplacian: bool = False,
                keep_trajectory: bool = False) -> PathResult:
    """Run the scheme for n_steps = round(T/tau) steps from u0.

    Increments may be supplied directly (shared across meshes in the
    convergence study) or drawn from a stream.  Observers are callbacks
    (n, u, w) invoked after each step; w is None at n = 0.  Snapshot times
    are rounded to the nearest step; times beyond the horizon are ignored.
    """
    N = params.n_steps
    if increments is None:
        if stream is None:
            raise ValueError("provide either a NoiseStream or an increment array")
        increments = np.array([draw_increment(stream, n, params)
                               for n in range(1, N + 1)])
    else:
        increments = np.asarray(increments, dtype=np.float64)
        if increments.shape != (N,):
            raise ValueError(f"expected {N} increments, got {increments.shape}")

    snap_steps = {int(round(t / params.tau)): float(t) for t in snapshot_times}
    path_index = stream.path_index if stream is not None else None

    l2 = np.empty(N + 1)
    h1s = np.empty(N + 1)
    mass = np.empty(N + 1)
    g_mass = np.empty(N + 1)
    lap = np.zeros(N + 1)
    step_l2 = np.zeros(N)
    iters = np.zeros(N, dtype=np.int64)
    traj = np.empty((N + 1, ops.n)) if keep_trajectory else None
    snapshots: dict[float, np.ndarray] = {}

    ones_m = ops.basis_integrals

    def record(n, field_u):
        v = field_u.values
        l2sq = v @ (ops.M @ v)
        h1sq = v @ (ops.K @ v)
        l2[n] = np.sqrt(max(l2sq, 0.0))
        h1s[n] = np.sqrt(max(h1sq, 0.0))
        mass[n] = ones_m @ v
        g_mass[n] = ones_m @ params.diffusion_fn(v)
        if record_laplacian:
            y = ops.solve_mass(-(ops.K @ v))
            lap[n] = np.sqrt(max(y @ (ops.M @ y), 0.0))
        if traj is not None:
            traj[n] = v
        if n in snap_steps:
            snapshots[snap_steps[n]] = v.copy()

    u = u0
    w = None
    record(0, u)
    for obs in observers:
        obs(0, u, None)
    for n in range(1, N + 1):
        try:
            result = step(u, float(increments[n - 1]), params, ops)
        except NewtonError as exc:
            exc.step_index = n
            exc.path_index = path_index
            raise
        diff = result.u.values - u.values
        step_l2[n - 1] = np.sqrt(max(diff @ (ops.M @ diff), 0.0))
        u, w = result.u, result.w
        iters[n - 1] = result.newton_iters
        record(n, u)
        for obs in observers:
            obs(n, u, w)

    return PathResult(times=params.times(), l2=l2, h1_semi=h1s,
                      h1=np.sqrt(l2 ** 2 + h1s ** 2), mass=mass, g_mass=g_mass,
                      laplacian_l2=lap, step_l2=step_l2, newton_iters=iters,
                      increments=increments, snapshots=snapshots, trajectory=traj,
                      final_u=u, final_w=w)
