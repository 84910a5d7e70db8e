#!/usr/bin/env python3
"""Spatial convergence orders on a nested mesh ladder (scaled-down Test 3).

Every mesh consumes the same scalar noise increments, so differences from
the overkill reference isolate the spatial error.  The full-scale study
(ladder 10/20/40, reference 80, tau = 1e-6) reproduces second-order L2 and
first-order H1 convergence; this demo runs a shorter horizon and coarser
reference to stay fast.
"""
import time

from schfem import ConvergenceConfig, SchemeParams, run_convergence
from schfem.experiments import write_convergence_csv

params = SchemeParams(epsilon=0.05, tau=1e-6, T=2e-5, delta=1.0,
                      diffusion="sqrt1p")
cfg = ConvergenceConfig(params=params, ladder=(10, 20), reference_nx=40,
                        initial="test3_cross", n_paths=3, master_seed=99,
                        workers=2)
t0 = time.perf_counter()
table = run_convergence(cfg)
print(f"{cfg.n_paths} common-noise paths in {time.perf_counter() - t0:.0f}s; "
      f"reference nx = {table.reference_nx}")
print(f"{'h':>10} {'err L2':>12} {'order':>7} {'err H1':>12} {'order':>7}")
for row in table.rows:
    o1 = f"{row.order_linf_el2:.3f}" if row.order_linf_el2 else "     -"
    o2 = f"{row.order_el2h1:.3f}" if row.order_el2h1 else "     -"
    print(f"{row.h:10.5f} {row.err_linf_el2:12.5e} {o1:>7} "
          f"{row.err_el2h1:12.5e} {o2:>7}")

path = write_convergence_csv(table, "demos_out/convergence")
print(f"-> {path}; typeset with: python plots/render_table.py --in {path} "
      "--out demos_out/convergence/table.md")
