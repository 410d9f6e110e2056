"""Discrete Laplacian, inter-grid transfer and interface sub-stencils.

The operator is the 7-point finite-difference Laplacian with Dirichlet
rows eliminated; per-axis coefficients ``1/h_a**2`` keep anisotropic box
partitions consistent (for a cubic mesh width h this is the classic
``6/h**2`` center, ``-1/h**2`` neighbors).

Interface rows can be split into the two one-sided sub-stencils by
sub-assembling over the 8 cells around each node: every lattice edge is
shared by 4 cells, so a coupling contributes quarter-shares to the side
each cell belongs to.  The two sides always sum to the full row exactly
(the shares are dyadic and ``1/h**2`` is an integer).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .hierarchy import BOUNDARY, GAMMA, FAULTY, HEALTHY, GridHierarchy, RegionMask

DENSE_ORACLE_MAX_UNKNOWNS = 20_000

#: scaling constant in the transfer adjointness <P u_c, v_f> = c <u_c, R v_f>
ADJOINT_SCALE = 8.0


@dataclass(frozen=True)
class StencilOperator:
    """Constant-coefficient 7-point Laplacian of one level."""

    level: int
    h: tuple[float, float, float]
    cx: float
    cy: float
    cz: float

    @property
    def diag(self) -> float:
        return 2.0 * (self.cx + self.cy + self.cz)

    @classmethod
    def for_level(cls, hier: GridHierarchy, level: int) -> "StencilOperator":
        h = hier.levels[level].h
        return cls(level, h, 1.0 / h[0] ** 2, 1.0 / h[1] ** 2, 1.0 / h[2] ** 2)


def operators_for(hier: GridHierarchy) -> list[StencilOperator]:
    return [StencilOperator.for_level(hier, l) for l in range(hier.finest + 1)]


def apply_operator(hier, op, level, u, region_idx=None, out=None):
    """v = A u on the given unknowns (all non-Dirichlet masters by default).

    ``u`` must hold valid values at every node the stencil reads, i.e.
    ghosts/boundary data in sync.  Entries of ``out`` outside the region
    are left untouched.
    """
    lv = hier.levels[level]
    if region_idx is None:
        region_idx = lv.non_dirichlet_idx
    if out is None:
        out = np.zeros(lv.n_nodes)
    sx, sy, sz = lv.strides
    kernels.apply_const(u, out, region_idx, sx, sy, sz, op.cx, op.cy, op.cz, op.diag)
    return out


def residual(hier, op, level, u, f, region_idx=None, out=None):
    """r = f - A u on the given unknowns; other entries untouched."""
    lv = hier.levels[level]
    if region_idx is None:
        region_idx = lv.non_dirichlet_idx
    if out is None:
        out = np.zeros(lv.n_nodes)
    sx, sy, sz = lv.strides
    kernels.residual_const(u, f, out, region_idx, sx, sy, sz,
                           op.cx, op.cy, op.cz, op.diag)
    return out


# -- inter-grid transfer -----------------------------------------------


def prolongate(hier, fine_level, coarse_arr):
    """Trilinear interpolation from level ``fine_level - 1``."""
    if not 1 <= fine_level <= hier.finest:
        raise ValueError(f"no coarser level below level {fine_level}")
    cshape = hier.levels[fine_level - 1].shape
    fshape = hier.levels[fine_level].shape
    if coarse_arr.size != hier.levels[fine_level - 1].n_nodes:
        raise ValueError(f"coarse array has {coarse_arr.size} entries; level "
                         f"{fine_level - 1} has {hier.levels[fine_level - 1].n_nodes}")
    xc = coarse_arr.reshape(cshape)
    xf = np.zeros(fshape)
    xf[::2, ::2, ::2] = xc
    xf[1::2, ::2, ::2] = 0.5 * (xc[:-1, :, :] + xc[1:, :, :])
    xf[::2, 1::2, ::2] = 0.5 * (xc[:, :-1, :] + xc[:, 1:, :])
    xf[::2, ::2, 1::2] = 0.5 * (xc[:, :, :-1] + xc[:, :, 1:])
    xf[1::2, 1::2, ::2] = 0.25 * (xc[:-1, :-1, :] + xc[1:, :-1, :]
                                  + xc[:-1, 1:, :] + xc[1:, 1:, :])
    xf[1::2, ::2, 1::2] = 0.25 * (xc[:-1, :, :-1] + xc[1:, :, :-1]
                                  + xc[:-1, :, 1:] + xc[1:, :, 1:])
    xf[::2, 1::2, 1::2] = 0.25 * (xc[:, :-1, :-1] + xc[:, 1:, :-1]
                                  + xc[:, :-1, 1:] + xc[:, 1:, 1:])
    xf[1::2, 1::2, 1::2] = 0.125 * (
        xc[:-1, :-1, :-1] + xc[1:, :-1, :-1] + xc[:-1, 1:, :-1] + xc[1:, 1:, :-1]
        + xc[:-1, :-1, 1:] + xc[1:, :-1, 1:] + xc[:-1, 1:, 1:] + xc[1:, 1:, 1:])
    return xf.ravel()


def restrict(hier, fine_level, fine_arr):
    """Full-weighting restriction to level ``fine_level - 1``.

    Scaled adjoint of :func:`prolongate` (R = P^T / ADJOINT_SCALE) on the
    coarse interior; the coarse boundary ring is set to zero.
    """
    if not 1 <= fine_level <= hier.finest:
        raise ValueError(f"no coarser level below level {fine_level}")
    cshape = hier.levels[fine_level - 1].shape
    fshape = hier.levels[fine_level].shape
    if fine_arr.size != hier.levels[fine_level].n_nodes:
        raise ValueError(f"fine array has {fine_arr.size} entries; level "
                         f"{fine_level} has {hier.levels[fine_level].n_nodes}")
    rf = fine_arr.reshape(fshape)
    rc = np.zeros(cshape)
    nfx, nfy, nfz = fshape
    core = np.zeros((cshape[0] - 2, cshape[1] - 2, cshape[2] - 2))
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            for dk in (-1, 0, 1):
                w = 2.0 ** (3 - abs(di) - abs(dj) - abs(dk)) / 64.0
                core += w * rf[2 + di:nfx - 2 + di + 1:2,
                               2 + dj:nfy - 2 + dj + 1:2,
                               2 + dk:nfz - 2 + dk + 1:2]
    rc[1:-1, 1:-1, 1:-1] = core
    return rc.ravel()


@dataclass(frozen=True)
class TransferPair:
    """Prolongation with its scaled-adjoint restriction."""

    hierarchy: GridHierarchy
    scale: float = ADJOINT_SCALE

    def prolongate(self, fine_level, coarse_arr):
        return prolongate(self.hierarchy, fine_level, coarse_arr)

    def restrict(self, fine_level, fine_arr):
        return restrict(self.hierarchy, fine_level, fine_arr)


def inject_to_fine(hier, fine_level, coarse_idx):
    """Flat fine-level indices of coarse-level nodes (levels are nested)."""
    clv = hier.levels[fine_level - 1]
    flv = hier.levels[fine_level]
    ny, nz = clv.shape[1], clv.shape[2]
    i = coarse_idx // (ny * nz)
    j = (coarse_idx // nz) % ny
    k = coarse_idx % nz
    return flv.flat(2 * i, 2 * j, 2 * k)


# -- interface sub-stencils --------------------------------------------

# weight-row columns: diag, x-, x+, y-, y+, z-, z+
_DIRS = ((0, -1), (0, 1), (1, -1), (1, 1), (2, -1), (2, 1))


@dataclass(frozen=True)
class SubStencilSplit:
    """One-sided partial rows for every interface node between the regions."""

    level: int
    gamma_idx: np.ndarray       # flat node indices, ascending
    healthy: np.ndarray         # (n, 7) healthy-side rows
    faulty: np.ndarray          # (n, 7) faulty-side rows
    healthy_cell_share: np.ndarray  # healthy fraction of the 8 adjacent cells


def _edge_healthy_share(lv, spec, faulty_sids, i, j, k, axis, d):
    """Healthy fraction of the 4 cells around one incident lattice edge."""
    m = lv.m
    px, py, pz = spec.subdomain_counts
    base = [i, j, k]
    cells = []
    for db in (0, -1):
        for dc in (0, -1):
            cell = list(base)
            cell[axis] = base[axis] if d > 0 else base[axis] - 1
            other = [ax for ax in range(3) if ax != axis]
            cell[other[0]] = base[other[0]] + db
            cell[other[1]] = base[other[1]] + dc
            sid = ((cell[0] // m) * py + cell[1] // m) * pz + cell[2] // m
            cells.append(sid in faulty_sids)
    return (4 - sum(cells)) / 4.0


def sub_stencils(hier: GridHierarchy, level: int, mask: RegionMask) -> SubStencilSplit:
    """Split every interface row into its healthy and faulty partial rows.

    Shares come from counting faulty cells among the cells adjacent to the
    row's couplings, which mimics assembling the two sides separately: a
    face-interior node splits its diagonal half/half, edge and vertex
    nodes proportionally to the adjacent-cell counts, and couplings whose
    surrounding cells all lie on one side go fully to that side.
    """
    lv = hier.levels[level]
    spec = hier.spec
    gamma = mask.gamma_idx(level)
    coeff = StencilOperator.for_level(hier, level)
    cax = (coeff.cx, coeff.cx, coeff.cy, coeff.cy, coeff.cz, coeff.cz)
    ny, nz = lv.shape[1], lv.shape[2]
    faulty = mask.faulty

    healthy = np.zeros((gamma.size, 7))
    faulty_w = np.zeros((gamma.size, 7))
    share8 = np.zeros(gamma.size)
    m = lv.m
    px, py, pz = spec.subdomain_counts
    for t, p in enumerate(gamma):
        i = int(p // (ny * nz))
        j = int((p // nz) % ny)
        k = int(p % nz)
        diag_h = 0.0
        diag_f = 0.0
        for col, (axis, d) in enumerate(_DIRS, start=1):
            s = _edge_healthy_share(lv, spec, faulty, i, j, k, axis, d)
            healthy[t, col] = -s * cax[col - 1]
            faulty_w[t, col] = -(1.0 - s) * cax[col - 1]
            diag_h += s * cax[col - 1]
            diag_f += (1.0 - s) * cax[col - 1]
        healthy[t, 0] = diag_h
        faulty_w[t, 0] = diag_f
        n_f = 0
        for di in (0, -1):
            for dj in (0, -1):
                for dk in (0, -1):
                    sid = (((i + di) // m) * py + (j + dj) // m) * pz + (k + dk) // m
                    n_f += sid in faulty
        share8[t] = (8 - n_f) / 8.0
    return SubStencilSplit(level, gamma, healthy, faulty_w, share8)


# -- hybrid Gauss-Seidel smoother ---------------------------------------


def smooth_hybrid_gs(hier, op, level, u, rhs, sweeps, kind_order=None):
    """Hybrid Gauss-Seidel sweeps over the full set of masters.

    Per sweep each container relaxes its masters lexicographically against
    the latest synchronized neighbor copies; container groups run in the
    fixed order volume, face, edge, vertex with a ghost refresh in
    between.  Containers of the same kind never couple through the 7-point
    stencil, so the sweep is a plain successive relaxation in that global
    ordering and independent of any per-container execution interleaving.
    """
    lv = hier.levels[level]
    if kind_order is None:
        kind_order = lv.kind_order
    sx, sy, sz = lv.strides
    for _ in range(sweeps):
        for idx in kind_order:
            if idx.size:
                kernels.gs_const(u, rhs, idx, sx, sy, sz,
                                 op.cx, op.cy, op.cz, op.diag)
    return u


# -- dense oracles -------------------------------------------------------


def assemble_dense(hier, level):
    """Sparse assembly of the eliminated operator (test oracle only).

    Returns ``(A, unknown_idx)`` where ``A`` is CSR over the non-Dirichlet
    masters in ascending flat order.  Rejects levels above
    ``DENSE_ORACLE_MAX_UNKNOWNS`` unknowns.
    """
    lv = hier.levels[level]
    op = StencilOperator.for_level(hier, level)
    unknowns = lv.non_dirichlet_idx
    n = unknowns.size
    if n > DENSE_ORACLE_MAX_UNKNOWNS:
        raise ValueError(f"level {level} has {n} unknowns; dense oracle is "
                         f"capped at {DENSE_ORACLE_MAX_UNKNOWNS}")
    row_of = np.full(lv.n_nodes, -1, dtype=np.int64)
    row_of[unknowns] = np.arange(n)
    sx, sy, sz = lv.strides
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, op.diag)]
    for off, c in ((sx, op.cx), (-sx, op.cx), (sy, op.cy), (-sy, op.cy),
                   (sz, op.cz), (-sz, op.cz)):
        q = unknowns + off
        keep = lv.cls[q] != BOUNDARY
        rows.append(row_of[unknowns[keep]])
        cols.append(row_of[q[keep]])
        vals.append(np.full(keep.sum(), -c))
    A = sp.coo_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    return A, unknowns


def dirichlet_rhs_shift(hier, level, g_values):
    """RHS contribution moved by eliminating Dirichlet columns.

    ``g_values`` is a full-grid array holding boundary data on the
    Dirichlet slots.  Returns the vector ``-A_ib g`` over the unknowns.
    """
    lv = hier.levels[level]
    op = StencilOperator.for_level(hier, level)
    unknowns = lv.non_dirichlet_idx
    shift = np.zeros(unknowns.size)
    sx, sy, sz = lv.strides
    for off, c in ((sx, op.cx), (-sx, op.cx), (sy, op.cy), (-sy, op.cy),
                   (sz, op.cz), (-sz, op.cz)):
        q = unknowns + off
        hit = lv.cls[q] == BOUNDARY
        shift[hit] += c * g_values[q[hit]]
    return shift


def assemble_blocks(hier, level, mask: RegionMask):
    """Region-ordered sparse blocks of the operator (test oracle only).

    Returns a dict with the index sets ``I/G/F`` (healthy, interface,
    faulty) and the blocks of the full matrix between them, plus the
    one-sided interface blocks ``A_GG_I``/``A_GG_F`` from the sub-stencil
    split.
    """
    A, unknowns = assemble_dense(hier, level)
    reg = mask.region[level][unknowns]
    pos_I = np.flatnonzero(reg == HEALTHY)
    pos_G = np.flatnonzero(reg == GAMMA)
    pos_F = np.flatnonzero(reg == FAULTY)

    split = sub_stencils(hier, level, mask)
    lv = hier.levels[level]
    row_of = np.full(lv.n_nodes, -1, dtype=np.int64)
    row_of[unknowns] = np.arange(unknowns.size)
    gpos_of = np.full(unknowns.size, -1, dtype=np.int64)
    gpos_of[row_of[split.gamma_idx]] = np.arange(split.gamma_idx.size)

    def gamma_side(w):
        n_g = split.gamma_idx.size
        rows, cols, vals = [], [], []
        sx, sy, sz = lv.strides
        offs = (-sx, sx, -sy, sy, -sz, sz)
        for t in range(n_g):
            p = split.gamma_idx[t]
            rows.append(t)
            cols.append(t)
            vals.append(w[t, 0])
            for col, off in enumerate(offs, start=1):
                if w[t, col] == 0.0:
                    continue
                q = p + off
                gq = gpos_of[row_of[q]] if row_of[q] >= 0 else -1
                if gq >= 0:
                    rows.append(t)
                    cols.append(gq)
                    vals.append(w[t, col])
        return sp.coo_matrix((vals, (rows, cols)), shape=(n_g, n_g)).tocsr()

    blocks = {
        "I": unknowns[pos_I], "G": unknowns[pos_G], "F": unknowns[pos_F],
        "A_II": A[pos_I][:, pos_I], "A_IG": A[pos_I][:, pos_G],
        "A_GI": A[pos_G][:, pos_I], "A_GG": A[pos_G][:, pos_G],
        "A_GF": A[pos_G][:, pos_F], "A_FG": A[pos_F][:, pos_G],
        "A_FF": A[pos_F][:, pos_F],
        "A_GG_I": gamma_side(split.healthy),
        "A_GG_F": gamma_side(split.faulty),
        "split": split,
    }
    return blocks
