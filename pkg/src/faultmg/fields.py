"""Level-indexed nodal fields with per-container ghost copies.

The canonical (master) value of every node lives in one flat array per
level; each container additionally stores its own ghost copies of the
neighboring masters it reads.  Ghost copies are only guaranteed to match
their masters right after :func:`sync_ghosts`.
"""

from __future__ import annotations

import numpy as np

from .errors import UnrecoverableInterface
from .hierarchy import GridHierarchy


class FieldVector:
    """Nodal values on every level of a hierarchy.

    ``levels[l]`` is the flat master array of level ``l`` (Dirichlet slots
    included so stencils can read boundary data directly).  ``ghosts[l][c]``
    holds container ``c``'s ghost values, parallel to the container's ghost
    index table.
    """

    def __init__(self, h: GridHierarchy, with_ghosts: bool = True):
        self.hierarchy = h
        self.levels = [np.zeros(lv.n_nodes) for lv in h.levels]
        if with_ghosts:
            self.ghosts = [[np.zeros(g.size) for g in lv.ghosts] for lv in h.levels]
        else:
            self.ghosts = None

    def copy(self) -> "FieldVector":
        out = FieldVector(self.hierarchy, with_ghosts=self.ghosts is not None)
        for l, arr in enumerate(self.levels):
            out.levels[l][:] = arr
        if self.ghosts is not None:
            for l, per in enumerate(self.ghosts):
                for c, arr in enumerate(per):
                    out.ghosts[l][c][:] = arr
        return out

    def fine(self) -> np.ndarray:
        return self.levels[self.hierarchy.finest]


def sync_ghosts(h: GridHierarchy, u: FieldVector, level: int) -> FieldVector:
    """Copy every master value into all ghost copies of that node.

    Total function: masters are untouched and every ghost ends up bitwise
    equal to its master, so syncing twice equals syncing once.
    """
    lv = h.levels[level]
    arr = u.levels[level]
    for c, gidx in enumerate(lv.ghosts):
        u.ghosts[level][c][:] = arr[gidx]
    return u


def ghost_defect(h: GridHierarchy, u: FieldVector, level: int) -> float:
    """Largest |ghost - master| discrepancy on a level (0 right after sync)."""
    lv = h.levels[level]
    arr = u.levels[level]
    worst = 0.0
    for c, gidx in enumerate(lv.ghosts):
        if gidx.size:
            worst = max(worst, float(np.max(np.abs(u.ghosts[level][c] - arr[gidx]))))
    return worst


def assert_ghosts_synced(h: GridHierarchy, u: FieldVector, level: int) -> None:
    """Debug assertion for the stencil precondition of synchronized ghosts."""
    defect = ghost_defect(h, u, level)
    assert defect == 0.0, f"ghosts out of sync on level {level}: defect {defect!r}"


def restore_interface(h: GridHierarchy, u: FieldVector, faulty) -> FieldVector:
    """Rebuild interface masters lost with faulty subdomains from ghost copies.

    Every face/edge/vertex container whose primary owner is faulty but that
    still has a healthy adjacent subdomain gets its masters rewritten from
    the ghost layer of the lowest-numbered healthy adjacent volume
    container.  Ghosts are bitwise copies of the pre-fault masters, so the
    restore is exact.  Volume values are never touched.
    """
    faulty = frozenset(int(s) for s in faulty)
    if not faulty:
        return u
    for c in h.containers:
        if c.kind == "volume" or c.owner not in faulty:
            continue
        healthy = [o for o in c.owners if o not in faulty]
        if not healthy:
            continue  # entity interior to the faulty region; not restorable data
        donor = min(healthy)  # volume container index == subdomain id
        for level, lv in enumerate(h.levels):
            masters = lv.masters[c.index]
            if masters.size == 0:
                continue
            gidx = lv.ghosts[donor]
            pos = np.searchsorted(gidx, masters)
            bad = (pos >= gidx.size) | (gidx[np.minimum(pos, gidx.size - 1)] != masters)
            if np.any(bad):
                raise UnrecoverableInterface(
                    f"container {c.index} ({c.kind}) node(s) missing from donor "
                    f"volume {donor} ghost table on level {level}")
            u.levels[level][masters] = u.ghosts[level][donor][pos]
    return u
