"""Fault injection, recovery strategies, flux extraction and accounting."""

from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse.linalg as spla

import faultmg as fm
from faultmg.hierarchy import FAULTY, GAMMA, HEALTHY
from faultmg.solvers import region_residual_norms

CENTER = 13


def _run_cycles(state, n, spec=None):
    spec = spec or fm.CycleSpec()
    fine = state.hierarchy.finest
    for _ in range(n):
        fm.mg_cycle(state.system, state.u.levels[fine], state.f, spec)
    fm.sync_ghosts(state.hierarchy, state.u, fine)
    return state


def test_inject_fault_locality_and_residual_jump(desk_small, problem):
    h = desk_small
    state = _run_cycles(fm.make_state(h, problem), 5)
    fine = h.finest
    masks = fm.region_masks(h, {CENTER})
    before = state.u.levels[fine].copy()
    r_before = region_residual_norms(state.system, fine,
                                     state.u.levels[fine], state.f, masks)
    fm.inject_fault(state, fm.FaultEvent(5, {CENTER}), masks)
    r_after = region_residual_norms(state.system, fine,
                                    state.u.levels[fine], state.f, masks)
    healthy_idx = masks.healthy_idx(fine)
    assert np.array_equal(before[healthy_idx], state.u.levels[fine][healthy_idx])
    assert np.array_equal(before[masks.gamma_idx(fine)],
                          state.u.levels[fine][masks.gamma_idx(fine)])
    assert np.all(state.u.levels[fine][masks.faulty_idx(fine)] == 0.0)
    assert r_after[2] > 100.0 * r_before[2]     # faulty-region residual jumps
    assert r_after[1] == r_before[1]            # healthy rows untouched


def test_inject_into_zero_field_is_identity(desk_small, problem):
    h = desk_small
    state = fm.make_state(h, problem)
    fine = h.finest
    lv = h.levels[fine]
    masks = fm.region_masks(h, {CENTER})
    # boundary data of the fresh state is g, interior zero; the faulty
    # region of the center subdomain holds no boundary nodes
    before = state.u.levels[fine].copy()
    fm.inject_fault(state, fm.FaultEvent(1, {CENTER}), masks)
    assert np.array_equal(before, state.u.levels[fine])


def test_inject_whole_domain_fails(desk_small, problem):
    state = fm.make_state(desk_small, problem)
    with pytest.raises(fm.NoHealthyRegion):
        fm.run_faulty_job(desk_small, problem,
                          [fm.FaultEvent(1, set(range(27)))],
                          fm.RecoveryConfig(), k_free=10)


def test_recover_local_converges_to_dense_local_solution(desk_small, problem):
    h = desk_small
    fine = h.finest
    state = _run_cycles(fm.make_state(h, problem), 5)
    masks = fm.region_masks(h, {CENTER})
    fm.inject_fault(state, fm.FaultEvent(5, {CENTER}), masks)
    cfg = fm.RecoveryConfig(strategy="LR", local_solver="Vcycle", n_F=20)
    fm.recover_local(state, cfg, masks)

    # dense oracle: faulty block solved against the frozen interface data
    blocks = fm.assemble_blocks(h, fine, masks)
    rhs = state.f[blocks["F"]] - blocks["A_FG"] @ state.u.levels[fine][blocks["G"]]
    ref = spla.spsolve(blocks["A_FF"].tocsc(), rhs)
    err = np.max(np.abs(state.u.levels[fine][blocks["F"]] - ref))
    assert err <= 1e-10 * max(1.0, np.max(np.abs(ref)))


def test_recover_local_leaves_healthy_untouched(desk_small, problem):
    h = desk_small
    state = _run_cycles(fm.make_state(h, problem), 5)
    fine = h.finest
    masks = fm.region_masks(h, {CENTER})
    fm.inject_fault(state, fm.FaultEvent(5, {CENTER}), masks)
    before = state.u.levels[fine].copy()
    cfg = fm.RecoveryConfig(strategy="LR", local_solver="Vcycle", n_F=3)
    fm.recover_local(state, cfg, masks)
    outside = np.concatenate([masks.healthy_idx(fine), masks.gamma_idx(fine)])
    assert np.array_equal(before[outside], state.u.levels[fine][outside])


def test_dd_zero_cycles_is_do_nothing(desk_small, problem):
    h = desk_small
    masks = fm.region_masks(h, {CENTER})
    states = []
    for strategy in ("none", "DD"):
        state = _run_cycles(fm.make_state(h, problem), 5)
        fm.inject_fault(state, fm.FaultEvent(5, {CENTER}), masks)
        cfg = fm.RecoveryConfig(strategy=strategy, n_I=0, eta_super=2) \
            if strategy == "DD" else fm.RecoveryConfig()
        fm.apply_recovery(state, cfg, masks)
        states.append(state.u.levels[h.finest].copy())
    assert np.array_equal(states[0], states[1])


def test_dd_healthy_side_never_reads_faulty_values(desk_small, problem):
    # poison the faulty region with NaN: any read would propagate
    h = desk_small
    fine = h.finest
    masks = fm.region_masks(h, {CENTER})
    cfg = fm.RecoveryConfig(strategy="DD", local_solver="Vcycle",
                            n_I=2, eta_super=2)

    state = _run_cycles(fm.make_state(h, problem), 5)
    fm.inject_fault(state, fm.FaultEvent(5, {CENTER}), masks)
    ref = _run_dd_healthy_only(state, cfg, masks)

    state = _run_cycles(fm.make_state(h, problem), 5)
    fm.inject_fault(state, fm.FaultEvent(5, {CENTER}), masks)
    state.u.levels[fine][masks.faulty_idx(fine)] = np.nan
    poisoned = _run_dd_healthy_only(state, cfg, masks)

    healthy = masks.healthy_idx(fine)
    assert np.all(np.isfinite(poisoned[healthy]))
    assert np.array_equal(ref[healthy], poisoned[healthy])


def _run_dd_healthy_only(state, cfg, masks):
    h = state.hierarchy
    fine = h.finest
    sys_i = fm.RegionSystem(h, fm.HEALTHY_DIRICHLET, masks)
    for _ in range(cfg.n_I):
        fm.mg_cycle(sys_i, state.u.levels[fine], state.f, fm.CycleSpec())
    return state.u.levels[fine]


def test_dd_decoupled_phase_healthy_residual_never_increases(desk_small, problem):
    h = desk_small
    masks = fm.region_masks(h, {CENTER})
    for strategy in ("DD", "DN"):
        state = _run_cycles(fm.make_state(h, problem), 5)
        fm.inject_fault(state, fm.FaultEvent(5, {CENTER}), masks)
        cfg = fm.RecoveryConfig(strategy=strategy, local_solver="Vcycle",
                                n_I=3, eta_super=2)
        res = []
        fm.apply_recovery(state, cfg, masks, res)
        assert len(res) == cfg.n_I + 1
        assert all(b <= a for a, b in zip(res, res[1:])), (strategy, res)


def test_flux_zero_for_zero_state(desk_small):
    h = desk_small
    masks = fm.region_masks(h, {CENTER})
    state = fm.SolverState(h, fm.get_problem("manufactured_sine"),
                           fm.RegionSystem(h, fm.FULL), fm.FieldVector(h),
                           np.zeros(h.levels[h.finest].n_nodes))
    _, lam = fm.compute_neumann_flux(state, masks)
    assert np.all(lam == 0.0)


def test_flux_consistent_at_exact_discrete_solution(two_sub):
    # healthy Neumann block rows are satisfied by the exact solution and
    # the flux extracted from it; homogeneous boundary data keeps the
    # dense blocks free of elimination shifts
    problem = fm.get_problem("manufactured_sine")
    h = two_sub
    fine = 1
    lv = h.levels[fine]
    masks = fm.region_masks(h, {1})
    blocks = fm.assemble_blocks(h, fine, masks)
    A, unk = fm.assemble_dense(h, fine)
    idx = np.arange(lv.n_nodes)
    x, y, z = lv.coords(idx)
    f = np.zeros(lv.n_nodes)
    f[unk] = problem.f(x[unk], y[unk], z[unk])
    u = np.zeros(lv.n_nodes)
    u[unk] = spla.spsolve(A.tocsc(), f[unk])

    state = fm.SolverState(h, problem, fm.RegionSystem(h, fm.FULL),
                           fm.FieldVector(h), f)
    state.u.levels[fine][:] = u
    gamma_idx, lam = fm.compute_neumann_flux(state, masks, level=fine)
    np.testing.assert_array_equal(gamma_idx, blocks["G"])

    uI = u[blocks["I"]]
    uG = u[blocks["G"]]
    r1 = f[blocks["I"]] - blocks["A_II"] @ uI - blocks["A_IG"] @ uG
    split = blocks["split"]
    r2 = split.healthy_cell_share * f[blocks["G"]] \
        - blocks["A_GI"] @ uI - blocks["A_GG_I"] @ uG - lam
    scale = max(np.linalg.norm(f[unk]), 1.0)
    assert np.linalg.norm(r1) <= 1e-12 * scale
    assert np.linalg.norm(r2) <= 1e-12 * scale


def test_flux_sign_outward_bump(two_sub):
    # positive bump inside the healthy side, zero on the interface: heat
    # flows out of the healthy region, extracted flux is positive
    h = two_sub
    fine = 1
    lv = h.levels[fine]
    masks = fm.region_masks(h, {1})
    idx = np.arange(lv.n_nodes)
    x, y, z = lv.coords(idx)
    u = np.zeros(lv.n_nodes)
    inside = (masks.region[fine] == HEALTHY)
    u[inside] = np.maximum(0.0, 0.25 - np.abs(x[inside] - 0.375)) \
        * y[inside] * (1 - y[inside]) * z[inside] * (1 - z[inside])
    state = fm.SolverState(h, fm.get_problem("manufactured_sine"),
                           fm.RegionSystem(h, fm.FULL), fm.FieldVector(h),
                           np.zeros(lv.n_nodes))
    state.u.levels[fine][:] = u
    gamma_idx, lam = fm.compute_neumann_flux(state, masks, level=fine)

    # finite-difference oracle for the one-sided flux direction
    sx = lv.strides[0]
    oracle = (u[gamma_idx - sx] - u[gamma_idx]) / lv.h[0]
    hit = oracle != 0.0
    assert np.any(hit)
    assert np.all(np.sign(lam[hit]) == np.sign(oracle[hit]))


def test_dn_zero_cycles_is_do_nothing(desk_small, problem):
    h = desk_small
    masks = fm.region_masks(h, {CENTER})
    state = _run_cycles(fm.make_state(h, problem), 5)
    fm.inject_fault(state, fm.FaultEvent(5, {CENTER}), masks)
    before = state.u.levels[h.finest].copy()
    cfg = fm.RecoveryConfig(strategy="DN", n_I=0, eta_super=4)
    fm.recover_dn(state, cfg, masks)
    assert np.array_equal(before, state.u.levels[h.finest])


def test_cycle_advantage_examples():
    assert fm.cycle_advantage(25, 21, 5) == Fraction(4, 5)
    assert fm.cycle_advantage(17, 17, 3) == 0
    assert fm.cycle_advantage(21, 11, 11) == Fraction(10, 11)
    with pytest.raises(ValueError):
        fm.cycle_advantage(10, 10, 0)


def test_recovery_config_validation():
    with pytest.raises(ValueError):
        fm.RecoveryConfig(strategy="none", n_I=1)
    with pytest.raises(ValueError):
        fm.RecoveryConfig(strategy="LR", eta_super=0.5)
    with pytest.raises(ValueError):
        fm.RecoveryConfig(strategy="LR", local_solver="SOR")
    cfg = fm.RecoveryConfig(strategy="DD", n_I=3, eta_super=2)
    assert cfg.resolved_n_F == 6
    assert cfg.recovery_time == 3
    lr = fm.RecoveryConfig(strategy="LR", n_F=4, eta_super=2)
    assert lr.recovery_time == Fraction(2)


def test_logical_clock_monotone():
    clock = fm.LogicalClock()
    clock.advance(1)
    clock.advance(Fraction(3, 2))
    assert clock.elapsed == Fraction(5, 2)
    with pytest.raises(ValueError):
        clock.advance(-1)


def test_run_faulty_job_empty_schedule(desk_small, problem, desk_small_baseline):
    rep = fm.run_faulty_job(desk_small, problem, [], fm.RecoveryConfig(),
                            k_free=desk_small_baseline.iterations)
    assert rep.kappa == 0
    assert rep.k_faulty == rep.k_free


def test_run_faulty_job_schedule_conflict(desk_small, problem):
    with pytest.raises(fm.ScheduleConflict):
        fm.run_faulty_job(desk_small, problem,
                          [fm.FaultEvent(5, {0}), fm.FaultEvent(5, {26})],
                          fm.RecoveryConfig(), k_free=10)


def test_do_nothing_cost_small_grid(desk_small, problem, desk_small_baseline):
    k_free = desk_small_baseline.iterations
    rep = fm.run_faulty_job(desk_small, problem, [fm.FaultEvent(5, {CENTER})],
                            fm.RecoveryConfig(), accounting="table1",
                            k_free=k_free)
    extra = rep.k_cycles - k_free
    assert abs(extra - 4) <= 1


def test_lr_k_faulty_monotone_in_n_F(desk_small, problem, desk_small_baseline):
    k_free = desk_small_baseline.iterations
    ks = []
    for n_F in range(0, 6):
        cfg = fm.RecoveryConfig(strategy="LR", local_solver="Vcycle", n_F=n_F)
        rep = fm.run_faulty_job(desk_small, problem,
                                [fm.FaultEvent(5, {CENTER})], cfg,
                                accounting="table1", k_free=k_free)
        ks.append(rep.k_cycles)
    assert all(b <= a for a, b in zip(ks, ks[1:]))


def test_accounting_modes_differ_by_recovery_charge(desk_small, problem,
                                                    desk_small_baseline):
    k_free = desk_small_baseline.iterations
    cfg = fm.RecoveryConfig(strategy="DD", local_solver="Vcycle",
                            n_I=2, eta_super=2)
    reps = {mode: fm.run_faulty_job(desk_small, problem,
                                    [fm.FaultEvent(5, {CENTER})], cfg,
                                    accounting=mode, k_free=k_free)
            for mode in ("global", "table1")}
    assert reps["global"].k_cycles == reps["table1"].k_cycles
    assert reps["global"].k_faulty == reps["table1"].k_faulty + cfg.n_I
    assert reps["global"].logical_time_total == reps["table1"].logical_time_total


def test_lr_middle_fault_five_local_cycles(desk_small, problem,
                                           desk_small_baseline):
    # five local V-cycles after a fault at cycle 7 compensate within one
    # global cycle
    k_free = desk_small_baseline.iterations
    cfg = fm.RecoveryConfig(strategy="LR", local_solver="Vcycle", n_F=5)
    rep = fm.run_faulty_job(desk_small, problem, [fm.FaultEvent(7, {CENTER})],
                            cfg, accounting="table1", k_free=k_free)
    assert abs(rep.kappa) <= Fraction(1, 7)


def test_report_json_round_trip(desk_small, problem, desk_small_baseline):
    import json
    cfg = fm.RecoveryConfig(strategy="LR", local_solver="Vcycle", n_F=2)
    rep = fm.run_faulty_job(desk_small, problem, [fm.FaultEvent(5, {CENTER})],
                            cfg, accounting="table1",
                            k_free=desk_small_baseline.iterations)
    blob = json.dumps(rep.to_dict())
    back = json.loads(blob)
    assert Fraction(back["kappa"]) == rep.kappa
    assert back["events"][0]["after_cycle"] == 5


def test_ghost_sync_debug_assertion(desk_small, problem):
    state = fm.make_state(desk_small, problem)
    fine = desk_small.finest
    fm.assert_ghosts_synced(desk_small, state.u, fine)
    op = fm.StencilOperator.for_level(desk_small, fine)
    fm.smooth_hybrid_gs(desk_small, op, fine, state.u.levels[fine], state.f, 1)
    with pytest.raises(AssertionError):
        fm.assert_ghosts_synced(desk_small, state.u, fine)


def test_kappa_identity_in_report(desk_small, problem, desk_small_baseline):
    k_free = desk_small_baseline.iterations
    cfg = fm.RecoveryConfig(strategy="DN", local_solver="Vcycle",
                            n_I=1, eta_super=2)
    rep = fm.run_faulty_job(desk_small, problem, [fm.FaultEvent(5, {CENTER})],
                            cfg, k_free=k_free)
    assert rep.kappa == Fraction(rep.k_faulty - rep.k_free, 5)


def test_two_worker_equivalence_dd(desk_small, problem):
    # the simulated-parallel DD phase is order-independent: faulty-first
    # and healthy-first give bitwise identical reconnection states
    h = desk_small
    fine = h.finest
    masks = fm.region_masks(h, {CENTER})
    cfg = fm.RecoveryConfig(strategy="DD", local_solver="Vcycle",
                            n_I=2, eta_super=2)

    state_a = _run_cycles(fm.make_state(h, problem), 5)
    fm.inject_fault(state_a, fm.FaultEvent(5, {CENTER}), masks)
    fm.recover_dd(state_a, cfg, masks)

    state_b = _run_cycles(fm.make_state(h, problem), 5)
    fm.inject_fault(state_b, fm.FaultEvent(5, {CENTER}), masks)
    sys_i = fm.RegionSystem(h, fm.HEALTHY_DIRICHLET, masks)
    sys_f = fm.RegionSystem(h, fm.FAULTY_DIRICHLET, masks)
    for _ in range(cfg.n_I):
        fm.mg_cycle(sys_i, state_b.u.levels[fine], state_b.f, fm.CycleSpec())
    from faultmg.resilience import _run_local_steps
    _run_local_steps(state_b, cfg, sys_f, cfg.resolved_n_F)
    fm.sync_ghosts(h, state_b.u, fine)

    assert np.array_equal(state_a.u.levels[fine], state_b.u.levels[fine])
