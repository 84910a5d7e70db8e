import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schfem import (NewtonError, NodalField, NoiseStream, SchemeParams,
                    assemble, build_rect_mesh, evolve_path, l2_project, step)
from schfem.initialdata import make_initial
from schfem.stepper import TableDiffusion, resolve_diffusion


def make_params(**kw):
    base = dict(epsilon=0.1, tau=0.001, T=0.01, delta=0.0)
    base.update(kw)
    return SchemeParams(**base)


# --- parameters ---------------------------------------------------------------

def test_params_validation():
    with pytest.raises(ValueError):
        SchemeParams(epsilon=0.0, tau=0.001, T=0.1)
    with pytest.raises(ValueError):
        SchemeParams(epsilon=0.1, tau=-1.0, T=0.1)
    with pytest.raises(ValueError):
        SchemeParams(epsilon=0.1, tau=0.001, T=0.1, delta=-0.5)
    with pytest.raises(ValueError):
        SchemeParams(epsilon=0.1, tau=0.001, T=0.1, newton_max_iter=0)
    with pytest.raises(ValueError):
        SchemeParams(epsilon=0.1, tau=0.001, T=0.1, increment_variance_mode="bogus")
    with pytest.raises(ValueError):
        SchemeParams(epsilon=0.1, tau=1.0, T=0.1)  # rounds to zero steps


def test_params_step_count():
    assert make_params().n_steps == 10
    assert SchemeParams(epsilon=0.05, tau=1e-6, T=1e-4).n_steps == 100


def test_diffusion_selectors():
    u = np.array([-1.0, 0.0, 2.0])
    np.testing.assert_array_equal(resolve_diffusion("identity")(u), u)
    np.testing.assert_allclose(resolve_diffusion("sqrt1p")(u), np.sqrt(u * u + 1))
    with pytest.raises(ValueError):
        resolve_diffusion("nope")
    table = resolve_diffusion([(-1.0, 0.5), (1.0, 1.5)])
    assert isinstance(table, TableDiffusion)
    assert table(np.array([0.0]))[0] == pytest.approx(1.0)
    assert table.lipschitz_bound == pytest.approx(0.5)


# --- single step ----------------------------------------------------------------

def test_stationary_constants(ops8):
    params = make_params()
    for c in (-1.0, 0.0, 1.0):
        u0 = NodalField(np.full(ops8.n, c), ops8.mesh)
        res = step(u0, 0.0, params, ops8)
        assert res.newton_iters <= 2
        np.testing.assert_allclose(res.u.values, c, atol=1e-12)
        np.testing.assert_allclose(res.w.values, 0.0, atol=1e-10)


def test_mass_identity_single_step(ops8, rng):
    params = make_params(delta=1.0)
    u0 = NodalField(rng.uniform(-1, 1, ops8.n), ops8.mesh)
    dW = 0.02
    res = step(u0, dW, params, ops8)
    ones = np.ones(ops8.n)
    lhs = ones @ (ops8.M @ (res.u.values - u0.values))
    rhs = params.delta * dW * (ones @ (ops8.M @ u0.values))  # g = identity
    assert lhs == pytest.approx(rhs, abs=1e-10)


@given(st.floats(-0.1, 0.1), st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_mass_identity_property(dW, seed):
    mesh = build_rect_mesh(6, 6)
    ops = assemble(mesh)
    params = make_params(delta=1.0, diffusion="sqrt1p")
    u0 = NodalField(np.random.default_rng(seed).uniform(-1.2, 1.2, ops.n), mesh)
    res = step(u0, dW, params, ops)
    ones = np.ones(ops.n)
    lhs = ones @ (ops.M @ (res.u.values - u0.values))
    rhs = params.delta * dW * (ones @ (ops.M @ params.diffusion_fn(u0.values)))
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_step_doubling_is_first_order(ops16):
    # fixed horizon, halved substeps: defects shrink by ~2 per halving
    f = make_initial("test1_circle", epsilon=0.1)
    u0 = l2_project(f, ops16)
    horizon = 0.001
    finals = {}
    for n_sub in (1, 2, 4):
        params = SchemeParams(epsilon=0.1, tau=horizon / n_sub, T=horizon, delta=0.0)
        res = evolve_path(u0, params, ops16, increments=np.zeros(n_sub))
        finals[n_sub] = res.final_u.values
    d1 = finals[1] - finals[2]
    d2 = finals[2] - finals[4]
    n1 = np.sqrt(d1 @ (ops16.M @ d1))
    n2 = np.sqrt(d2 @ (ops16.M @ d2))
    assert 1.5 <= n1 / n2 <= 2.5


def test_newton_failure_reports_residual(ops8):
    params = make_params(newton_max_iter=1, delta=1.0)
    f = make_initial("test1_circle", epsilon=0.1)
    u0 = l2_project(f, ops8)
    with pytest.raises(NewtonError) as info:
        step(u0, 0.5, params, ops8)
    assert info.value.residual is not None


# --- path evolution ---------------------------------------------------------------

def test_constant_path_stays_constant(ops8):
    params = make_params()
    u0 = NodalField(np.ones(ops8.n), ops8.mesh)
    res = evolve_path(u0, params, ops8, increments=np.zeros(params.n_steps))
    assert np.abs(res.final_u.values - 1.0).max() <= 1e-8 * params.n_steps
    np.testing.assert_allclose(res.l2, 2.0, atol=1e-9)


def test_deterministic_mass_conservation(ops16):
    params = make_params(T=0.02)
    f = make_initial("test1_circle", epsilon=0.1)
    u0 = l2_project(f, ops16)
    res = evolve_path(u0, params, ops16, increments=np.zeros(params.n_steps))
    assert np.abs(res.mass - res.mass[0]).max() <= 1e-9


def test_per_step_mass_identity_along_path(ops16):
    params = make_params(delta=1.0, T=0.02)
    f = make_initial("test1_circle", epsilon=0.1)
    u0 = l2_project(f, ops16)
    res = evolve_path(u0, params, ops16, stream=NoiseStream(5, 0))
    err = np.abs(np.diff(res.mass) - params.delta * res.increments * res.g_mass[:-1])
    assert err.max() <= 1e-9


def test_trajectory_bit_identical_reruns(ops8):
    params = make_params(delta=1.0, T=0.01)
    f = make_initial("test1_circle", epsilon=0.1)
    u0 = l2_project(f, ops8)
    a = evolve_path(u0, params, ops8, stream=NoiseStream(42, 3))
    b = evolve_path(u0, params, ops8, stream=NoiseStream(42, 3))
    assert np.array_equal(a.final_u.values, b.final_u.values)
    assert np.array_equal(a.l2, b.l2)
    assert a.increments_digest == b.increments_digest


def test_observers_and_snapshots(ops8):
    params = make_params(T=0.005)
    u0 = NodalField(np.zeros(ops8.n), ops8.mesh)
    seen = []
    res = evolve_path(u0, params, ops8, increments=np.zeros(5),
                      observers=[lambda n, u, w: seen.append((n, w is None))],
                      snapshot_times=(0.0, 0.002, 0.005), keep_trajectory=True)
    assert seen[0] == (0, True)
    assert len(seen) == 6
    assert all(not none for _, none in seen[1:])
    assert sorted(res.snapshots) == [0.0, 0.002, 0.005]
    assert res.trajectory.shape == (6, ops8.n)


def test_newton_error_annotated_with_step(ops8):
    params = make_params(delta=1.0, newton_max_iter=1, T=0.003)
    f = make_initial("test1_circle", epsilon=0.1)
    u0 = l2_project(f, ops8)
    with pytest.raises(NewtonError) as info:
        evolve_path(u0, params, ops8, increments=np.array([0.9, 0.9, 0.9]),
                    stream=None)
    assert info.value.step_index == 1


def test_bounded_test1_trajectory(ops16):
    # stability pilot bound: the L2 norm stays well below 3 for Test-1 dynamics
    params = SchemeParams(epsilon=0.1, tau=0.001, T=0.05, delta=1.0)
    f = make_initial("test1_circle", epsilon=0.1)
    u0 = l2_project(f, ops16)
    res = evolve_path(u0, params, ops16, stream=NoiseStream(11, 0))
    assert res.l2.max() < 3.0
    assert np.isfinite(res.h1).all()
