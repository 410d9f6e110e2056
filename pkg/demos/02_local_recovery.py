"""Local recovery: fixing the lost region before cycling on.

After the fault, the interface values around the lost subdomain are
restored bitwise from ghost redundancy.  That turns the lost region into a
self-contained Dirichlet problem, which we improve with n_F steps of some
iterative solver while the rest of the machine waits.  The choice of
solver matters enormously:

* a handful of local multigrid V/W/F-cycles fully compensates the fault
  (n_F = k_F always suffices, usually less),
* plain Gauss-Seidel sweeps or Jacobi-PCG need orders of magnitude more
  steps for the same effect, because a single-grid iteration leaves the
  smooth error components that the subsequent global cycles then have to
  grind down themselves.

Cycle advantage kappa = (k_faulty - k_free) / k_F:  0 means the fault cost
nothing, 1 means everything computed before the fault was wasted.
"""

import os

import faultmg as fm
from faultmg.harness import emit_table

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

hier = fm.build_hierarchy(fm.PartitionSpec((3, 3, 3), 2, 3))
problem = fm.get_problem("harmonic_poly")
corner = 0

baseline = fm.run_fault_free(hier, problem)
k_free = baseline.iterations
print(f"k_free = {k_free}\n")

rows = []
grids = {
    "Vcycle": [1, 2, 3, 4, 5],
    "Wcycle": [1, 2, 3, 4, 5],
    "Fcycle": [1, 2, 3, 4, 5],
    "PCG": [25, 50, 75, 100],
    "Smooth": [200, 400, 800, 1600],
}
for k_F in (5, 7):
    print(f"--- fault after {k_F} cycles ---")
    for solver, steps in grids.items():
        line = []
        for n_F in steps:
            cfg = fm.RecoveryConfig(strategy="LR", local_solver=solver, n_F=n_F)
            rep = fm.run_faulty_job(hier, problem, [fm.FaultEvent(k_F, {corner})],
                                    cfg, accounting="table1", k_free=k_free)
            line.append(f"{n_F} steps -> {float(rep.kappa):.2f}")
            rows.append({"strategy": "LR", "local_solver": solver,
                         "scenario": "corner", "k_F": k_F, "n_I": 0,
                         "n_F": n_F, "eta_super": 1, "accounting": "table1",
                         "k_free": rep.k_free, "k_cycles": rep.k_cycles,
                         "k_faulty": rep.k_faulty, "kappa": rep.kappa,
                         "logical_time": rep.logical_time_total,
                         "converged": rep.converged, "error": ""})
        print(f"  {solver:<7} kappa: " + ", ".join(line))
    print()

emit_table(rows, os.path.join(OUT, "local_recovery_kappa.csv"))
print(f"table written to {OUT}/local_recovery_kappa.csv")
print("\nnote how the local multigrid variants reach kappa = 0 with a few "
      "cycles\nwhile Smooth and PCG crawl -- single-grid recovery is not a "
      "practical option.")
