import json

import numpy as np
import pytest

from schfem import ConvergenceConfig, HolderConfig, SchemeParams, StabilityConfig
from schfem.errors import ConfigError
from schfem.experiments import (holder_check, prolongation_weights,
                                run_convergence, run_stability,
                                write_convergence_csv, write_holder_csv,
                                write_levelset_csv, write_manifest,
                                write_stability_csv)
from schfem.fem import assemble, l2_project
from schfem.initialdata import make_initial
from schfem.levelset import zero_level_set
from schfem.mesh import build_rect_mesh


def small_params(**kw):
    base = dict(epsilon=0.1, tau=0.001, T=0.005, delta=1.0)
    base.update(kw)
    return SchemeParams(**base)


# --- stability ---------------------------------------------------------------

def test_stability_constant_deterministic():
    cfg = StabilityConfig(params=small_params(delta=0.0), nx=8,
                          initial="constant", initial_constant=1.0,
                          n_paths=1, master_seed=3)
    stats = run_stability(cfg)
    np.testing.assert_allclose(stats.e_l2, 2.0, atol=1e-9)
    np.testing.assert_allclose(stats.e_l2_se, 0.0)
    assert stats.monitors.sup_e_l2_p4 == pytest.approx(16.0, rel=1e-8)


def test_stability_series_shapes_and_sample():
    cfg = StabilityConfig(params=small_params(), nx=8, initial="test1_circle",
                          n_paths=3, master_seed=17, snapshot_times=(0.0, 0.005))
    stats = run_stability(cfg)
    N = cfg.params.n_steps
    for series in (stats.e_l2, stats.e_h1, stats.e_l2_sq, stats.e_l2_p4,
                   stats.rms_l2, stats.rms_h1, stats.sample_l2, stats.sample_h1):
        assert series.shape == (N + 1,)
    assert len(stats.increment_digests) == 3
    assert len(set(stats.increment_digests)) == 3
    assert sorted(stats.mean_snapshots) == [0.0, 0.005]
    # sample series is path 0's own trajectory, not an average
    assert not np.allclose(stats.sample_l2, stats.e_l2)


def test_stability_worker_count_invariance():
    kw = dict(params=small_params(), nx=8, initial="test1_circle",
              n_paths=4, master_seed=99, snapshot_times=(0.005,))
    serial = run_stability(StabilityConfig(workers=1, **kw))
    parallel = run_stability(StabilityConfig(workers=2, **kw))
    assert np.array_equal(serial.e_l2, parallel.e_l2)
    assert np.array_equal(serial.e_l2_p4, parallel.e_l2_p4)
    assert serial.increment_digests == parallel.increment_digests
    t = 0.005
    assert np.array_equal(serial.mean_snapshots[t].values,
                          parallel.mean_snapshots[t].values)


def test_mean_snapshot_is_average_of_fields():
    # averaging happens on nodal fields, then the contour is taken
    from schfem import NoiseStream, evolve_path
    from schfem.experiments import _cached_ops
    cfg = StabilityConfig(params=small_params(T=0.004), nx=8,
                          initial="test1_circle", n_paths=3, master_seed=44,
                          snapshot_times=(0.004,))
    stats = run_stability(cfg)
    ops = _cached_ops(8, 8, cfg.bounds)
    u0 = l2_project(make_initial("test1_circle", epsilon=0.1), ops)
    acc = np.zeros(ops.n)
    for p in range(3):
        res = evolve_path(u0, cfg.params, ops, stream=NoiseStream(44, p),
                          snapshot_times=(0.004,))
        acc += res.snapshots[0.004]
    np.testing.assert_array_equal(stats.mean_snapshots[0.004].values, acc / 3)


def test_noise_perturbs_the_deterministic_path():
    # with noise switched on, the trajectory departs from the delta=0 one
    kw = dict(nx=16, initial="test1_circle", n_paths=2, master_seed=7)
    det = run_stability(StabilityConfig(params=small_params(T=0.02, delta=0.0), **kw))
    noisy = run_stability(StabilityConfig(params=small_params(T=0.02, delta=1.0), **kw))
    assert np.array_equal(det.e_l2[:1], noisy.e_l2[:1])
    assert np.abs(det.e_l2[1:] - noisy.e_l2[1:]).max() > 1e-6
    assert np.all(det.e_l2_se == 0)  # identical deterministic paths
    assert np.any(noisy.e_l2_se[1:] > 0)


# --- convergence ---------------------------------------------------------------

def test_prolongation_is_exact_for_nested_p1():
    coarse = build_rect_mesh(4, 4)
    ops_c = assemble(coarse)
    fine = build_rect_mesh(16, 16)
    rng = np.random.default_rng(1)
    values = rng.standard_normal(coarse.n_vertices)
    idx, w = prolongation_weights(4, 4, 16, 16)
    prolonged = (values[idx] * w).sum(axis=1)
    from .test_levelset import eval_p1
    from schfem import NodalField
    field = NodalField(values, coarse)
    expect = np.array([eval_p1(field, x, y) for x, y in fine.vertices])
    np.testing.assert_allclose(prolonged, expect, atol=1e-13)


def test_reference_against_itself_is_zero():
    params = SchemeParams(epsilon=0.1, tau=0.001, T=0.002, delta=1.0)
    cfg = ConvergenceConfig(params=params, ladder=(8,), reference_nx=8,
                            initial="test1_circle", n_paths=1, master_seed=4)
    table = run_convergence(cfg)
    assert table.rows[0].err_linf_el2 == 0.0
    assert table.rows[0].err_el2h1 == 0.0


def test_non_nested_ladder_rejected():
    params = small_params()
    with pytest.raises(ConfigError, match="non-nested"):
        ConvergenceConfig(params=params, ladder=(6, 10), reference_nx=16)


def test_deterministic_errors_decrease_monotonically():
    params = SchemeParams(epsilon=0.1, tau=1e-5, T=2e-4, delta=0.0)
    cfg = ConvergenceConfig(params=params, ladder=(4, 8, 16), reference_nx=32,
                            initial="test1_circle", n_paths=1, master_seed=0)
    table = run_convergence(cfg)
    el2 = [r.err_linf_el2 for r in table.rows]
    eh1 = [r.err_el2h1 for r in table.rows]
    assert el2[0] > el2[1] > el2[2] > 0
    assert eh1[0] > eh1[1] > eh1[2] > 0
    assert table.rows[1].order_linf_el2 > 0
    assert table.rows[2].order_linf_el2 > 0


def test_common_noise_identical_digests_across_worker_counts():
    params = SchemeParams(epsilon=0.1, tau=0.001, T=0.003, delta=1.0)
    kw = dict(params=params, ladder=(4, 8), reference_nx=16,
              initial="test1_circle", n_paths=3, master_seed=12)
    a = run_convergence(ConvergenceConfig(workers=1, **kw))
    b = run_convergence(ConvergenceConfig(workers=2, **kw))
    assert a.increment_digests == b.increment_digests
    for ra, rb in zip(a.rows, b.rows):
        assert ra.err_linf_el2 == rb.err_linf_el2
        assert ra.err_el2h1 == rb.err_el2h1


# --- holder --------------------------------------------------------------------

def test_holder_degenerate_for_stationary_field():
    params = SchemeParams(epsilon=0.1, tau=0.001, T=0.02, delta=0.0)
    cfg = HolderConfig(params=params, nx=6, initial="constant",
                       initial_constant=1.0, lags=(1, 2, 4), n_paths=1,
                       master_seed=0)
    report = holder_check(cfg)
    assert report.degenerate
    assert report.slope is None


def test_holder_monotone_increments_with_noise():
    params = SchemeParams(epsilon=0.1, tau=0.001, T=0.032, delta=1.0)
    cfg = HolderConfig(params=params, nx=12, initial="test1_circle",
                       lags=(1, 2, 4, 8, 16), n_paths=4, master_seed=21)
    report = holder_check(cfg)
    assert not report.degenerate
    assert np.all(np.diff(report.msd) > 0)
    assert np.isfinite(report.slope)


def test_holder_lag_exceeding_steps_rejected():
    params = SchemeParams(epsilon=0.1, tau=0.001, T=0.01, delta=1.0)
    with pytest.raises(ConfigError, match="lag"):
        HolderConfig(params=params, nx=6, lags=(1, 64), n_paths=1, master_seed=0)


# --- output files -----------------------------------------------------------------

def test_stability_csv_schema(tmp_path):
    cfg = StabilityConfig(params=small_params(), nx=6, initial="test1_circle",
                          n_paths=2, master_seed=5)
    stats = run_stability(cfg)
    paths = write_stability_csv(stats, str(tmp_path))
    with open(paths["stability"]) as f:
        header = f.readline().strip()
        rows = f.readlines()
    assert header == "t,e_l2,e_l2_se,e_h1,e_h1_se,e_l2_p4"
    assert len(rows) == cfg.params.n_steps + 1
    with open(paths["stability_sample"]) as f:
        assert f.readline().strip() == "t,l2,h1"
    with open(paths["stability_moments"]) as f:
        header = f.readline().strip()
    assert header.startswith("t,rms_l2,rms_h1,")


def test_stability_csv_row_count_smoke(tmp_path):
    # T = 0.01, tau = 0.001 -> 11 rows after the header
    cfg = StabilityConfig(params=small_params(T=0.01), nx=6,
                          initial="test1_circle", n_paths=2, master_seed=5)
    stats = run_stability(cfg)
    paths = write_stability_csv(stats, str(tmp_path))
    with open(paths["stability"]) as f:
        assert len(f.readlines()) == 12


def test_convergence_csv_schema(tmp_path):
    params = SchemeParams(epsilon=0.1, tau=0.001, T=0.002, delta=0.0)
    cfg = ConvergenceConfig(params=params, ladder=(4, 8), reference_nx=16,
                            initial="test1_circle", n_paths=1, master_seed=1)
    table = run_convergence(cfg)
    path = write_convergence_csv(table, str(tmp_path))
    with open(path) as f:
        header = f.readline().strip()
        first = f.readline().strip().split(",")
    assert header == "h,err_linf_el2,order_linf_el2,err_el2h1,order_el2h1"
    assert first[2] == ""  # no order on the coarsest row


def test_levelset_csv_schema(tmp_path):
    mesh = build_rect_mesh(16, 16)
    ops = assemble(mesh)
    u = l2_project(make_initial("test1_circle", epsilon=0.1), ops)
    ls = zero_level_set(u, time=0.02, tag="average")
    path = write_levelset_csv(ls, str(tmp_path))
    assert path.endswith("levelset_t0.02_average.csv")
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (ls.n_segments, 4)
    with open(path) as f:
        assert f.readline().strip() == "x1,y1,x2,y2"


def test_holder_csv(tmp_path):
    params = SchemeParams(epsilon=0.1, tau=0.001, T=0.008, delta=1.0)
    cfg = HolderConfig(params=params, nx=6, initial="test1_circle",
                       lags=(1, 2, 4), n_paths=2, master_seed=2)
    report = holder_check(cfg)
    path = write_holder_csv(report, str(tmp_path))
    with open(path) as f:
        assert f.readline().strip() == "lag_steps,lag_time,msd"
        assert len(f.readlines()) == 3


def test_manifest_roundtrip(tmp_path):
    config = {"epsilon": 0.1, "tau": 0.001, "ladder": [4, 8]}
    path = write_manifest(str(tmp_path), config, master_seed=42,
                          increment_digests=["ab", "cd"], extra={"command": "x"})
    with open(path) as f:
        payload = json.load(f)
    assert payload["master_seed"] == 42
    assert payload["config"] == config
    assert payload["increment_digests"] == ["ab", "cd"]
    assert payload["command"] == "x"
    assert "schfem_version" in payload


def test_csv_bitwise_determinism(tmp_path):
    kw = dict(params=small_params(T=0.003), nx=6, initial="test1_circle",
              n_paths=3, master_seed=8)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    write_stability_csv(run_stability(StabilityConfig(workers=1, **kw)), str(out1))
    write_stability_csv(run_stability(StabilityConfig(workers=2, **kw)), str(out2))
    assert (out1 / "stability.csv").read_bytes() == (out2 / "stability.csv").read_bytes()
    assert (out1 / "stability_moments.csv").read_bytes() == \
        (out2 / "stability_moments.csv").read_bytes()
