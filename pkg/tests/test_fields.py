"""Field storage: ghost synchronization and interface restoration."""

import numpy as np
import pytest

import faultmg as fm
from faultmg.hierarchy import BOUNDARY


def _fill_coords(h, u, fn):
    lv = h.levels[h.finest]
    idx = np.arange(lv.n_nodes)
    x, y, z = lv.coords(idx)
    u.levels[h.finest][:] = fn(x, y, z)


def test_sync_constant(desk_small):
    h = desk_small
    u = fm.FieldVector(h)
    u.levels[h.finest][:] = 1.0
    fm.sync_ghosts(h, u, h.finest)
    for vals in u.ghosts[h.finest]:
        assert np.all(vals == 1.0)


def test_sync_linear_matches_coordinates(desk_small):
    h = desk_small
    u = fm.FieldVector(h)
    _fill_coords(h, u, lambda x, y, z: 3.0 * x + 2.0 * y - 7.0 * z)
    fm.sync_ghosts(h, u, h.finest)
    lv = h.levels[h.finest]
    for ci, gidx in enumerate(lv.ghosts):
        if gidx.size:
            gx, gy, gz = lv.coords(gidx)
            np.testing.assert_array_equal(
                u.ghosts[h.finest][ci], 3.0 * gx + 2.0 * gy - 7.0 * gz)


def test_sync_idempotent_and_masters_untouched(desk_small):
    h = desk_small
    u = fm.FieldVector(h)
    rng = np.random.default_rng(5)
    u.levels[h.finest][:] = rng.standard_normal(h.levels[h.finest].n_nodes)
    masters_before = u.levels[h.finest].copy()
    fm.sync_ghosts(h, u, h.finest)
    snap = [g.copy() for g in u.ghosts[h.finest]]
    fm.sync_ghosts(h, u, h.finest)
    assert np.array_equal(masters_before, u.levels[h.finest])
    for a, b in zip(snap, u.ghosts[h.finest]):
        assert np.array_equal(a, b)
    assert fm.ghost_defect(h, u, h.finest) == 0.0


def test_resync_after_smoothing_is_exact(desk_small, problem):
    h = desk_small
    state = fm.make_state(h, problem)
    op = fm.StencilOperator.for_level(h, h.finest)
    fm.smooth_hybrid_gs(h, op, h.finest, state.u.levels[h.finest], state.f, 1)
    assert fm.ghost_defect(h, state.u, h.finest) > 0.0
    fm.sync_ghosts(h, state.u, h.finest)
    assert fm.ghost_defect(h, state.u, h.finest) == 0.0


def test_restore_interface_exact(desk_small):
    h = desk_small
    u = fm.FieldVector(h)
    _fill_coords(h, u, lambda x, y, z: x + 2.0 * y)
    fm.sync_ghosts(h, u, h.finest)
    before = u.levels[h.finest].copy()
    lv = h.levels[h.finest]
    faulty = {0}
    for c in h.containers:
        if c.kind != "volume" and c.owner in faulty:
            u.levels[h.finest][lv.masters[c.index]] = np.nan
    fm.restore_interface(h, u, faulty)
    assert np.array_equal(before, u.levels[h.finest])


def test_restore_empty_faulty_is_identity(desk_small):
    h = desk_small
    u = fm.FieldVector(h)
    rng = np.random.default_rng(1)
    u.levels[h.finest][:] = rng.standard_normal(h.levels[h.finest].n_nodes)
    before = u.levels[h.finest].copy()
    fm.restore_interface(h, u, set())
    assert np.array_equal(before, u.levels[h.finest])


def test_restore_two_disjoint_faults_independent(desk_small):
    h = desk_small
    sid_a, sid_b = 0, 26   # opposite corners, no shared entity
    u = fm.FieldVector(h)
    _fill_coords(h, u, lambda x, y, z: x * y + z)
    fm.sync_ghosts(h, u, h.finest)
    lv = h.levels[h.finest]

    def scribble(faulty):
        for c in h.containers:
            if c.kind != "volume" and c.owner in faulty:
                u.levels[h.finest][lv.masters[c.index]] = -1e30

    ref = u.levels[h.finest].copy()
    scribble({sid_a}); scribble({sid_b})
    fm.restore_interface(h, u, {sid_a, sid_b})
    joint = u.levels[h.finest].copy()
    u.levels[h.finest][:] = ref
    scribble({sid_a})
    fm.restore_interface(h, u, {sid_a})
    scribble({sid_b})
    fm.restore_interface(h, u, {sid_b})
    assert np.array_equal(joint, u.levels[h.finest])
    assert np.array_equal(joint, ref)
