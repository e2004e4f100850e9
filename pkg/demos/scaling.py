"""
How the hybrid solve scales
===========================

Time the hybrid iteration over growing spheres with the identity
preconditioner, fit log-log exponents and set them next to a dense solve
and the analytic cost model.
"""

import numpy as np

from efie_hybrid import ComplexityParams, HybridConfig, RunConfig, predict_complexity
from efie_hybrid.experiments import bench_scaling

cfg = RunConfig(kind="bench", solver=HybridConfig(inner="qr", precond="identity"))
res = bench_scaling(cfg)

print("   N   n_ext  T_sub_build  T_iter   T_total   T_direct")
for r in res["rows"]:
    print(f"{r['N']:5d} {r['n_ext']:6d} {r['t_sub_build_s']:11.4f} {r['t_iter_quantum_s']:8.4f}"
          f" {r['t_total_s']:9.4f} {r['t_direct_s']:9.4f}")

print(f"\nfitted exponents: hybrid {res['exponent_hybrid']:.2f}, "
      f"dense direct {res['exponent_direct']:.2f}, N log N {res['exponent_nlogn']:.2f}")

# the cost models at fixed kappa: single-shot solvers grow like log N, the
# hybrid ones like N once the classical projection dominates
p = ComplexityParams(kappa=20.0, kappa_sub=5.0)
print("\n       N  HHL-single  VQLS-single  hybrid-HHL  hybrid-VQLS")
for N in np.logspace(2, 20, 7):
    vals = [predict_complexity(k, int(N), p)
            for k in ("HHL-single", "VQLS-single", "hybrid-HHL", "hybrid-VQLS")]
    print(f"{N:8.0e} " + " ".join(f"{v:11.3e}" for v in vals))
