"""Shared fixtures; expensive hierarchies and baselines are session-scoped."""

import numpy as np
import pytest

import faultmg as fm


@pytest.fixture(scope="session")
def desk():
    """Default desk geometry: (3,3,3) partition, n0=2, finest 49^3."""
    return fm.build_hierarchy(fm.PartitionSpec((3, 3, 3), 2, 3))


@pytest.fixture(scope="session")
def desk_small():
    """Small variant for cheap experiment tests (finest 25^3)."""
    return fm.build_hierarchy(fm.PartitionSpec((3, 3, 3), 2, 2))


@pytest.fixture(scope="session")
def two_sub():
    """Two-subdomain toy grid for block-system oracles (level 1 is 9x5x5)."""
    return fm.build_hierarchy(fm.PartitionSpec((2, 1, 1), 2, 1))


@pytest.fixture(scope="session")
def single_sub():
    """Single subdomain, 5^3 fine grid: hybrid smoothing degenerates to GS."""
    return fm.build_hierarchy(fm.PartitionSpec((1, 1, 1), 2, 1))


@pytest.fixture(scope="session")
def problem():
    return fm.get_problem("harmonic_poly")


@pytest.fixture(scope="session")
def desk_baseline(desk, problem):
    trace = fm.run_fault_free(desk, problem)
    assert trace.converged
    return trace


@pytest.fixture(scope="session")
def desk_small_baseline(desk_small, problem):
    trace = fm.run_fault_free(desk_small, problem)
    assert trace.converged
    return trace


def random_interior(h, level, seed=0):
    """Field with seeded noise on the unknowns, zeros on the boundary."""
    lv = h.levels[level]
    rng = np.random.default_rng(seed)
    u = np.zeros(lv.n_nodes)
    idx = lv.non_dirichlet_idx
    u[idx] = rng.standard_normal(idx.size)
    return u
