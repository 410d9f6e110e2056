"""Multigrid cycles, Jacobi-PCG, smoother-only iteration and the driver.

Every solver runs on a :class:`~faultmg.regions.RegionSystem`, so the same
machinery serves the global problem and the Dirichlet/Neumann subproblems
used during recovery.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PcgBreakdown
from .fields import FieldVector, sync_ghosts
from .hierarchy import FAULTY, GAMMA, HEALTHY
from .regions import RegionSystem


@dataclass(frozen=True)
class KrylovSpec:
    """Conjugate-gradient configuration for the coarsest level."""

    preconditioner: str = "jacobi"   # 'jacobi' | 'none'
    rel_tol: float = 1e-10
    max_iter: int = 2000


@dataclass(frozen=True)
class CycleSpec:
    """Multigrid cycle shape; defaults follow the three-smoothing setup."""

    kind: str = "V"                  # 'V' | 'W' | 'F'
    pre_smooth: int = 3
    post_smooth: int = 3
    coarse: KrylovSpec = field(default_factory=KrylovSpec)

    def __post_init__(self):
        if self.kind not in ("V", "W", "F"):
            raise ValueError(f"unknown cycle kind {self.kind!r}")
        if self.pre_smooth < 0 or self.post_smooth < 0:
            raise ValueError("smoothing counts must be >= 0")


@dataclass(frozen=True)
class StoppingRule:
    rel_residual_tol: float = 1e-13
    max_cycles: int = 60


@dataclass
class SolveTrace:
    """Per-cycle relative residuals, split by region."""

    r0_norm: float = 0.0
    rel_residual: list = field(default_factory=list)
    res_healthy: list = field(default_factory=list)
    res_faulty: list = field(default_factory=list)
    res_interface: list = field(default_factory=list)
    logical_time: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


# -- preconditioned conjugate gradients ----------------------------------


def _pcg_compact(apply_fn, diag, b, x, spec: KrylovSpec):
    """Jacobi-PCG on compact vectors; returns iterations used."""
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        x[:] = 0.0
        return 0
    r = b - apply_fn(x)
    use_prec = spec.preconditioner == "jacobi"
    z = r / diag if use_prec else r.copy()
    p = z.copy()
    rz = float(r @ z)
    iters = 0
    while iters < spec.max_iter:
        if float(np.linalg.norm(r)) <= spec.rel_tol * b_norm:
            break
        Ap = apply_fn(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise PcgBreakdown(f"nonpositive curvature p^T A p = {pAp!r}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = r / diag if use_prec else r.copy()
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        iters += 1
    return iters


def pcg(system: RegionSystem, level: int, u, rhs, spec: KrylovSpec,
        max_steps: int | None = None):
    """Jacobi-PCG on the region block at one level, in place on ``u``.

    Returns the number of iterations performed.  ``max_steps`` overrides
    the spec's ``max_iter`` (used when a fixed step count is wanted).
    """
    plan = system.plans[level]
    idx = plan.all_idx
    if max_steps is not None:
        spec = KrylovSpec(spec.preconditioner, spec.rel_tol, max_steps)

    scatter = np.zeros(plan.n_nodes)

    def apply_compact(v):
        scatter[idx] = v
        out = system.apply(level, scatter)
        return out[idx].copy()

    # eliminate frozen boundary data: b = rhs - A u with unknowns zeroed
    scatter_u = u.copy()
    scatter_u[idx] = 0.0
    b = rhs[idx] - system.apply(level, scatter_u)[idx]
    x = u[idx].copy()
    iters = _pcg_compact(apply_compact, plan.diag, b, x, spec)
    u[idx] = x
    return iters


# -- multigrid cycles -----------------------------------------------------


def _coarse_solve(system, x, b, spec: KrylovSpec):
    plan = system.plans[0]
    idx = plan.all_idx

    scatter = np.zeros(plan.n_nodes)

    def apply_compact(v):
        scatter[idx] = v
        return system.apply(0, scatter)[idx].copy()

    xc = x[idx].copy()
    _pcg_compact(apply_compact, plan.diag, b[idx].copy(), xc, spec)
    x[idx] = xc


def _cycle(system, level, x, b, spec: CycleSpec, kind: str):
    if level == 0:
        system.smooth_calls[0] += 1
        _coarse_solve(system, x, b, spec.coarse)
        return
    system.smooth(level, x, b, spec.pre_smooth)
    r = system.residual(level, x, b)
    bc = system.restrict_rhs(level, r)
    xc = system.plans[level - 1].xbuf
    xc[:] = 0.0
    if kind == "V":
        _cycle(system, level - 1, xc, bc, spec, "V")
    elif kind == "W":
        _cycle(system, level - 1, xc, bc, spec, "W")
        _cycle(system, level - 1, xc, bc, spec, "W")
    else:  # F: one F-visit then one V-visit of the coarser level
        _cycle(system, level - 1, xc, bc, spec, "F")
        _cycle(system, level - 1, xc, bc, spec, "V")
    system.prolong_correct(level, xc, x)
    system.smooth(level, x, b, spec.post_smooth)


def mg_cycle(system: RegionSystem, u, rhs, spec: CycleSpec):
    """One multigrid cycle on the region system's finest level, in place."""
    _cycle(system, system.finest, u, rhs, spec, spec.kind)
    return u


def smooth_only(system: RegionSystem, u, rhs, sweeps: int):
    """Plain hybrid Gauss-Seidel relaxation on the finest level."""
    return system.smooth(system.finest, u, rhs, sweeps)


# -- stopping-criterion driver --------------------------------------------


def region_residual_norms(system, level, u, rhs, mask):
    """(global, healthy, faulty, interface) residual 2-norms over masters."""
    r = system.residual(level, u, rhs)
    idx = system.plans[level].all_idx
    total = float(np.linalg.norm(r[idx]))
    if mask is None:
        return total, total, 0.0, 0.0
    reg = mask.region[level][idx]
    vals = r[idx]
    healthy = float(np.linalg.norm(vals[reg == HEALTHY]))
    faulty = float(np.linalg.norm(vals[reg == FAULTY]))
    gamma = float(np.linalg.norm(vals[reg == GAMMA]))
    return total, healthy, faulty, gamma


def solve_to_tol(system: RegionSystem, u: FieldVector, rhs, spec: CycleSpec,
                 stop: StoppingRule, hook=None, mask=None, clock=None) -> SolveTrace:
    """Cycle until the relative residual meets the rule, with a fault hook.

    ``hook(k, u)`` runs after every completed, recorded cycle that did not
    already satisfy the stopping rule; fault injection and recovery happen
    there.  Ghosts of the finest level are re-synchronized after every
    cycle so redundant interface copies are valid whenever the hook fires.
    """
    h = system.hierarchy
    fine = h.finest
    arr = u.levels[fine]
    trace = SolveTrace()
    r0, *_ = region_residual_norms(system, fine, arr, rhs, mask)
    trace.r0_norm = r0
    if r0 == 0.0 or stop.rel_residual_tol >= 1.0:
        trace.converged = True
        return trace
    k = 0
    while k < stop.max_cycles:
        mg_cycle(system, arr, rhs, spec)
        sync_ghosts(h, u, fine)
        k += 1
        if clock is not None:
            clock.advance(1)
        total, healthy, faulty, gamma = region_residual_norms(
            system, fine, arr, rhs, mask)
        trace.rel_residual.append(total / r0)
        trace.res_healthy.append(healthy / r0)
        trace.res_faulty.append(faulty / r0)
        trace.res_interface.append(gamma / r0)
        trace.logical_time.append(
            float(clock.elapsed) if clock is not None else float(k))
        if total / r0 <= stop.rel_residual_tol:
            trace.converged = True
            break
        if hook is not None:
            hook(k, u)
    trace.iterations = k
    return trace
