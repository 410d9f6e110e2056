"""Fail-stop fault injection, recovery strategies and the cycle-advantage metric.

A fault fires only at a cycle boundary and wipes the volume data of its
subdomains on every level; interface values owned by the lost processes
are rebuilt bitwise from surviving ghost copies.  Three recovery
strategies are provided:

* local recovery -- approximate the faulty-side Dirichlet problem with a
  fixed number of solver steps while the healthy side idles;
* Dirichlet-Dirichlet -- both sides iterate on decoupled Dirichlet
  problems with the interface frozen, no communication either way;
* Dirichlet-Neumann -- the healthy side iterates on its Neumann problem
  with the interface flux extracted once at fault time, pushing fresh
  interface values one-way to the faulty side after each of its cycles.

Over-provisioned recovery compute is modeled by the acceleration ratio
``eta``: the faulty side performs ``n_F = ceil(n_I * eta)`` cycles in the
logical time the healthy side needs for ``n_I``, and the recovery phase
costs the maximum of the two sides on the logical clock (whose unit is
one global multigrid cycle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import ScheduleConflict
from .fields import FieldVector, restore_interface, sync_ghosts
from .hierarchy import FAULTY, GAMMA, GridHierarchy, RegionMask, region_masks
from .operators import sub_stencils
from .problems import PoissonProblem, initial_field, rhs_field
from .regions import (FAULTY_DIRICHLET, FULL, HEALTHY_DIRICHLET,
                      HEALTHY_NEUMANN, RegionSystem)
from .solvers import (CycleSpec, KrylovSpec, SolveTrace, StoppingRule,
                      mg_cycle, pcg, region_residual_norms, smooth_only,
                      solve_to_tol)

LOCAL_SOLVERS = ("Vcycle", "Wcycle", "Fcycle", "PCG", "Smooth")
STRATEGIES = ("none", "LR", "DD", "DN")


@dataclass(frozen=True)
class FaultEvent:
    """Fail-stop loss of a subdomain set after a completed global cycle."""

    after_cycle: int
    subdomains: frozenset

    def __post_init__(self):
        object.__setattr__(self, "subdomains",
                           frozenset(int(s) for s in self.subdomains))
        if self.after_cycle < 1:
            raise ValueError("after_cycle must be >= 1")
        if not self.subdomains:
            raise ValueError("faulty subdomain set must be nonempty")


def _as_fraction(value) -> Fraction:
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10 ** 6)
    return Fraction(value)


@dataclass(frozen=True)
class RecoveryConfig:
    """Strategy, local solver and the n_I / n_F / eta work split."""

    strategy: str = "none"
    local_solver: str = "Vcycle"
    n_I: int = 0
    eta_super: Fraction = Fraction(1)
    n_F: int | None = None    # defaults to ceil(n_I * eta_super)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.local_solver not in LOCAL_SOLVERS:
            raise ValueError(f"unknown local solver {self.local_solver!r}")
        eta = _as_fraction(self.eta_super)
        object.__setattr__(self, "eta_super", eta)
        if eta < 1:
            raise ValueError("eta_super must be >= 1")
        if self.n_I < 0:
            raise ValueError("n_I must be >= 0")
        if self.strategy == "none" and (self.n_I or self.n_F):
            raise ValueError("strategy 'none' forces n_I = n_F = 0")
        if self.n_F is not None and self.n_F < 0:
            raise ValueError("n_F must be >= 0")

    @property
    def resolved_n_F(self) -> int:
        if self.n_F is not None:
            return self.n_F
        return math.ceil(self.n_I * self.eta_super)

    @property
    def recovery_time(self) -> Fraction:
        """Logical-clock cost of one recovery phase, in global cycle units."""
        if self.strategy in ("none",):
            return Fraction(0)
        faulty_time = Fraction(self.resolved_n_F) / self.eta_super
        if self.strategy == "LR":
            return faulty_time      # healthy side waits idle
        return max(Fraction(self.n_I), faulty_time)


class LogicalClock:
    """Monotone simulation clock in units of one global multigrid cycle."""

    def __init__(self):
        self.elapsed = Fraction(0)

    def advance(self, units):
        units = Fraction(units)
        if units < 0:
            raise ValueError("clock cannot run backwards")
        self.elapsed += units
        return self.elapsed


@dataclass
class RecoveryReport:
    """Outcome of one faulty job against its fault-free baseline."""

    k_free: int
    k_cycles: int
    k_faulty: Fraction
    kappa: Fraction
    accounting: str
    logical_time_total: Fraction
    converged: bool
    events_fired: list
    trace: SolveTrace
    baseline_trace: SolveTrace | None = None
    recovery_healthy_residuals: list = field(default_factory=list)

    def to_dict(self) -> dict:
        """JSON-ready summary; exact rationals rendered as 'p/q' strings."""
        return {
            "k_free": self.k_free,
            "k_cycles": self.k_cycles,
            "k_faulty": str(Fraction(self.k_faulty)),
            "kappa": str(self.kappa),
            "accounting": self.accounting,
            "logical_time_total": str(self.logical_time_total),
            "converged": self.converged,
            "events": [{"after_cycle": e.after_cycle,
                        "subdomains": sorted(e.subdomains)}
                       for e in self.events_fired],
        }


@dataclass
class SolverState:
    """Mutable global solve state shared with the fault hooks."""

    hierarchy: GridHierarchy
    problem: PoissonProblem
    system: RegionSystem
    u: FieldVector
    f: np.ndarray


def make_state(h: GridHierarchy, problem: PoissonProblem,
               initial: str = "zero", seed: int = 0) -> SolverState:
    return SolverState(h, problem, RegionSystem(h, FULL),
                       initial_field(h, problem, initial, seed),
                       rhs_field(h, problem))


def cycle_advantage(k_faulty, k_free, k_F) -> Fraction:
    """Extra iterations caused by the fault, normalized by the fault time."""
    if k_F < 1:
        raise ValueError("k_F must be >= 1")
    return (Fraction(k_faulty) - Fraction(k_free)) / Fraction(k_F)


# -- fault injection ------------------------------------------------------


def inject_fault(state: SolverState, event: FaultEvent,
                 masks: RegionMask) -> SolverState:
    """Wipe the faulty volume data, restore the interface, rebuild f.

    Volume-interior masters of the faulty subdomains are zeroed on all
    levels (the zero initial guess of a restarted process); interface
    masters whose primary owner died are rebuilt bitwise from ghost
    copies; the lost source values are regenerated from the registered
    analytic problem data.  Healthy masters are untouched.
    """
    h = state.hierarchy
    if masks.faulty != event.subdomains:
        masks = region_masks(h, event.subdomains)
    fine = h.finest
    for level in range(fine + 1):
        fidx = masks.idx(level, FAULTY)
        state.u.levels[level][fidx] = 0.0
    restore_interface(h, state.u, event.subdomains)

    lv = h.levels[fine]
    lost = np.concatenate([masks.idx(fine, FAULTY), masks.idx(fine, GAMMA)])
    if lost.size:
        x, y, z = lv.coords(lost)
        state.f[lost] = state.problem.f(x, y, z)
    sync_ghosts(h, state.u, fine)
    return state


# -- recovery strategies --------------------------------------------------


def _local_cycle_spec(cfg: RecoveryConfig) -> CycleSpec:
    kind = {"Vcycle": "V", "Wcycle": "W", "Fcycle": "F"}[cfg.local_solver]
    return CycleSpec(kind=kind)


def _run_local_steps(state, cfg, sys_f, steps):
    fine = state.hierarchy.finest
    arr = state.u.levels[fine]
    if cfg.local_solver in ("Vcycle", "Wcycle", "Fcycle"):
        spec = _local_cycle_spec(cfg)
        for _ in range(steps):
            mg_cycle(sys_f, arr, state.f, spec)
    elif cfg.local_solver == "PCG":
        pcg(sys_f, fine, arr, state.f, KrylovSpec(rel_tol=0.0), max_steps=steps)
    else:  # Smooth
        smooth_only(sys_f, arr, state.f, steps)


def recover_local(state: SolverState, cfg: RecoveryConfig,
                  masks: RegionMask) -> SolverState:
    """Local recovery: fixed steps on the faulty-side Dirichlet problem.

    The interface data has already been restored, so the faulty rows read
    their boundary values straight from the field; the healthy domain is
    untouched while its processes idle.
    """
    sys_f = RegionSystem(state.hierarchy, FAULTY_DIRICHLET, masks)
    _run_local_steps(state, cfg, sys_f, cfg.resolved_n_F)
    sync_ghosts(state.hierarchy, state.u, state.hierarchy.finest)
    return state


def recover_dd(state: SolverState, cfg: RecoveryConfig, masks: RegionMask,
               healthy_residuals: list | None = None) -> SolverState:
    """Dirichlet-Dirichlet recovery: decoupled iteration, frozen interface.

    The two subproblems share no unknowns and both freeze the interface,
    so the simulated-parallel execution order cannot change the result;
    no faulty value is ever read by the healthy sweep.
    """
    h = state.hierarchy
    fine = h.finest
    arr = state.u.levels[fine]
    sys_f = RegionSystem(h, FAULTY_DIRICHLET, masks)
    sys_i = RegionSystem(h, HEALTHY_DIRICHLET, masks)
    _run_local_steps(state, cfg, sys_f, cfg.resolved_n_F)
    spec = CycleSpec()

    def record():
        if healthy_residuals is not None:
            _, healthy, _, _ = region_residual_norms(
                state.system, fine, arr, state.f, masks)
            healthy_residuals.append(healthy)

    record()
    for _ in range(cfg.n_I):
        mg_cycle(sys_i, arr, state.f, spec)
        record()
    sync_ghosts(h, state.u, fine)
    return state


def compute_neumann_flux(state: SolverState, masks: RegionMask,
                         level: int | None = None):
    """Discrete interface flux of the healthy side at the current iterate.

    Row-wise on the interface masters: the healthy share of the source
    minus the healthy sub-stencil applied to the current values; with a
    zero source this is exactly minus the one-sided operator times
    ``(u_I, u_Gamma)``.
    Returns ``(gamma_idx, lam)``.
    """
    h = state.hierarchy
    if level is None:
        level = h.finest
    split = sub_stencils(h, level, masks)
    if split.gamma_idx.size == 0:
        raise ValueError("region mask has an empty interface")
    lv = h.levels[level]
    sx, sy, sz = lv.strides
    out = np.zeros(lv.n_nodes)
    kernels.apply_weighted(state.u.levels[level], out, split.gamma_idx,
                           split.healthy, sx, sy, sz)
    lam = split.healthy_cell_share * state.f[split.gamma_idx] \
        - out[split.gamma_idx]
    return split.gamma_idx, lam


def recover_dn(state: SolverState, cfg: RecoveryConfig, masks: RegionMask,
               healthy_residuals: list | None = None) -> SolverState:
    """Dirichlet-Neumann recovery with one-way interface pushes.

    The flux is extracted once at fault time and stays fixed.  Each of
    the ``n_I`` healthy Neumann cycles is followed by an interface push;
    the faulty side then runs its next batch of local Dirichlet cycles
    (batch sizes differ by at most one and sum to ``n_F``) against the
    latest pushed boundary values.
    """
    if cfg.n_I == 0:
        return state
    h = state.hierarchy
    fine = h.finest
    arr = state.u.levels[fine]
    gamma_idx, lam = compute_neumann_flux(state, masks)
    sys_n = RegionSystem(h, HEALTHY_NEUMANN, masks)
    sys_f = RegionSystem(h, FAULTY_DIRICHLET, masks)
    # interface equation of the Neumann block: healthy row applied to u
    # equals the healthy load share minus the extracted flux, which makes
    # the fault-time iterate an exact solution of its own interface rows
    rhs_n = state.f.copy()
    share = sys_n.plans[fine].split.healthy_cell_share
    rhs_n[gamma_idx] = share * state.f[gamma_idx] - lam

    n_F = cfg.resolved_n_F
    base, rem = divmod(n_F, cfg.n_I)
    batches = [base + 1] * rem + [base] * (cfg.n_I - rem)
    spec = CycleSpec()

    def record():
        if healthy_residuals is not None:
            _, healthy, _, _ = region_residual_norms(
                state.system, fine, arr, state.f, masks)
            healthy_residuals.append(healthy)

    record()
    for steps in batches:
        mg_cycle(sys_n, arr, rhs_n, spec)
        sync_ghosts(h, state.u, fine)   # push u_Gamma_I -> u_Gamma -> u_Gamma_F
        record()
        _run_local_steps(state, cfg, sys_f, steps)
    sync_ghosts(h, state.u, fine)
    return state


def apply_recovery(state, cfg, masks, healthy_residuals=None):
    if cfg.strategy == "none":
        return state
    if cfg.strategy == "LR":
        return recover_local(state, cfg, masks)
    if cfg.strategy == "DD":
        return recover_dd(state, cfg, masks, healthy_residuals)
    return recover_dn(state, cfg, masks, healthy_residuals)


# -- full experiment ------------------------------------------------------


def run_fault_free(h: GridHierarchy, problem: PoissonProblem,
                   cycle: CycleSpec = CycleSpec(),
                   stop: StoppingRule = StoppingRule(),
                   mask: RegionMask | None = None,
                   initial: str = "zero", seed: int = 0) -> SolveTrace:
    state = make_state(h, problem, initial, seed)
    clock = LogicalClock()
    return solve_to_tol(state.system, state.u, state.f, cycle, stop,
                        mask=mask, clock=clock)


def run_faulty_job(h: GridHierarchy, problem: PoissonProblem, schedule,
                   cfg: RecoveryConfig, stop: StoppingRule = StoppingRule(),
                   cycle: CycleSpec = CycleSpec(), accounting: str = "global",
                   k_free: int | None = None,
                   baseline_trace: SolveTrace | None = None,
                   initial: str = "zero", seed: int = 0) -> RecoveryReport:
    """Full experiment: baseline, scheduled faults, recovery, accounting.

    ``accounting='global'`` adds each recovery phase's logical cost to
    ``k_faulty`` (the comparison rule for the parallel strategies);
    ``'table1'`` counts global cycles only (the rule used for plain local
    recovery studies).
    """
    schedule = sorted(schedule, key=lambda e: e.after_cycle)
    for a, b in zip(schedule, schedule[1:]):
        if b.after_cycle <= a.after_cycle:
            raise ScheduleConflict(
                f"faults at cycles {a.after_cycle} and {b.after_cycle} overlap")
    if accounting not in ("global", "table1"):
        raise ValueError(f"unknown accounting mode {accounting!r}")

    if k_free is None:
        baseline_trace = run_fault_free(h, problem, cycle, stop,
                                        initial=initial, seed=seed)
        k_free = baseline_trace.iterations

    union = frozenset().union(*(e.subdomains for e in schedule)) if schedule \
        else frozenset()
    trace_mask = region_masks(h, union) if union else None

    state = make_state(h, problem, initial, seed)
    clock = LogicalClock()
    pending = list(schedule)
    fired = []
    recovery_charge = Fraction(0)
    recovery_residuals = []

    def hook(k, u):
        nonlocal recovery_charge
        if not pending or pending[0].after_cycle != k:
            return
        event = pending.pop(0)
        masks = region_masks(h, event.subdomains)
        inject_fault(state, event, masks)
        per_event = []
        apply_recovery(state, cfg, masks, per_event)
        recovery_residuals.append(per_event)
        clock.advance(cfg.recovery_time)
        recovery_charge += cfg.recovery_time
        fired.append(event)

    trace = solve_to_tol(state.system, state.u, state.f, cycle, stop,
                         hook=hook, mask=trace_mask, clock=clock)

    k_cycles = trace.iterations
    k_faulty = Fraction(k_cycles)
    if accounting == "global":
        k_faulty += recovery_charge
    if schedule:
        kappa = cycle_advantage(k_faulty, k_free, schedule[0].after_cycle)
    else:
        kappa = Fraction(0)
    return RecoveryReport(
        k_free=k_free, k_cycles=k_cycles, k_faulty=k_faulty, kappa=kappa,
        accounting=accounting, logical_time_total=clock.elapsed,
        converged=trace.converged, events_fired=fired, trace=trace,
        baseline_trace=baseline_trace,
        recovery_healthy_residuals=recovery_residuals)
