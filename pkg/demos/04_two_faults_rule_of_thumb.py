"""Choosing n_I: the n_F = n_I + k_F - 2 rule, and surviving two faults.

A local multigrid recovery needs roughly k_F - 2 cycles to rebuild what
was lost after k_F global cycles.  With a superman of strength eta the
faulty side gets n_F = eta * n_I cycles in n_I units of time, so picking
n_I such that

    n_F = eta * n_I  ~  n_I + k_F - 2

balances the two sides.  Too small an n_I reconnects an unfinished region
(pollution), too large a one wastes decoupled cycles on stale boundary
data.

The second part schedules two faults (after cycles 5 and 9) in one run.
With one smoothing step per leg the baseline needs ~22 cycles, the regime
where a late fault still has runway; the DN recovery with eta = 4 then
absorbs both faults at no extra logical time -- the faulty job can even
finish *earlier* than the fault-free one, as the decoupled healthy cycles
are slightly more effective than coupled global ones.
"""

import os
from fractions import Fraction

import faultmg as fm

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

hier = fm.build_hierarchy(fm.PartitionSpec((3, 3, 3), 2, 3))
problem = fm.get_problem("harmonic_poly")
center = hier.spec.subdomain_id(1, 1, 1)

baseline = fm.run_fault_free(hier, problem)
k_free = baseline.iterations

print(f"single faults, DN with eta = 4 (k_free = {k_free})")
print(f"{'k_F':>4} {'n_I':>4} {'n_F':>4} {'rule n_I+k_F-2':>15} {'kappa':>7}")
for k_F in (5, 7):
    for n_I in (1, 2, 3):
        cfg = fm.RecoveryConfig(strategy="DN", local_solver="Vcycle",
                                n_I=n_I, eta_super=4)
        rep = fm.run_faulty_job(hier, problem, [fm.FaultEvent(k_F, {center})],
                                cfg, accounting="global", k_free=k_free)
        rule = n_I + k_F - 2
        print(f"{k_F:>4} {n_I:>4} {cfg.resolved_n_F:>4} {rule:>15} "
              f"{float(rep.kappa):>7.2f}")
print()

print("two faults (after cycles 5 and 9), DN with eta = 4, V(1,1) cycles")
cycle = fm.CycleSpec(kind="V", pre_smooth=1, post_smooth=1)
base2 = fm.run_fault_free(hier, problem, cycle=cycle)
print(f"  fault-free baseline: {base2.iterations} cycles")
for n_I in (1, 2, 3, 4):
    cfg = fm.RecoveryConfig(strategy="DN", local_solver="Vcycle",
                            n_I=n_I, eta_super=4)
    rep = fm.run_faulty_job(
        hier, problem,
        [fm.FaultEvent(5, {hier.spec.subdomain_id(0, 0, 0)}),
         fm.FaultEvent(9, {hier.spec.subdomain_id(2, 2, 2)})],
        cfg, cycle=cycle, accounting="global", k_free=base2.iterations)
    extra = rep.logical_time_total - base2.iterations
    sign = "+" if extra >= 0 else ""
    print(f"  n_I = {n_I}: {rep.k_cycles} global cycles, total logical time "
          f"{rep.logical_time_total} ({sign}{extra} vs fault-free)")
