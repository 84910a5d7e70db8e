#!/usr/bin/env python3
"""Monte Carlo stability curves at two noise intensities (scaled-down Test 1).

Runs the circular-interface problem at delta = 1 and delta = 10 with a small
path count and writes the stability CSV trio per intensity under
demos_out/stability_d{1,10}/.  At full scale (nx = 64, 100 paths) this is the
experiment behind the paired stability figures.
"""
import time

from schfem import SchemeParams, StabilityConfig, run_stability
from schfem.experiments import write_stability_csv

for delta in (1.0, 10.0):
    params = SchemeParams(epsilon=0.1, tau=0.001, T=0.05, delta=delta)
    cfg = StabilityConfig(params=params, nx=32, initial="test1_circle",
                          n_paths=8, master_seed=7, workers=2)
    t0 = time.perf_counter()
    stats = run_stability(cfg)
    outdir = f"demos_out/stability_d{delta:g}"
    write_stability_csv(stats, outdir)
    print(f"delta = {delta:4.1f}: E L2 ends at {stats.e_l2[-1]:.3f} "
          f"(se {stats.e_l2_se[-1]:.3f}), E H1 at {stats.e_h1[-1]:.3f}, "
          f"4th moment sup {stats.monitors.sup_e_l2_p4:.2f} "
          f"[{time.perf_counter() - t0:.0f}s] -> {outdir}")

print("plot with: python plots/plot_stability.py "
      "--in demos_out/stability_d1/stability.csv "
      "demos_out/stability_d10/stability.csv --out demos_out/stability.png")
