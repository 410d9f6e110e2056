"""Multigrid-ready view of the operator on a region of the domain.

A :class:`RegionSystem` fixes, per level, which masters are unknowns and
which row each of them carries: full 7-point rows for volume interiors
and for interface masters strictly inside the region, or one-sided
sub-stencil rows for interface masters on the region boundary of the
Neumann variant.  Frozen nodes (Dirichlet data, and the interface values
of the Dirichlet-coupled variants) are never written; their values are
read from the field like boundary data.

Sub-operators are re-derived geometrically on every level from the same
region masks, so coarse corrections see the same region shape.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .hierarchy import FAULTY, GAMMA, HEALTHY, GridHierarchy, RegionMask
from .operators import StencilOperator, prolongate, restrict, sub_stencils

FULL = "full"
FAULTY_DIRICHLET = "faulty_dirichlet"
HEALTHY_DIRICHLET = "healthy_dirichlet"
HEALTHY_NEUMANN = "healthy_neumann"

_KIND_NAMES = ("volume", "face", "edge", "vertex")


class _LevelPlan:
    """Per-level unknown lists, row weights and scratch buffers."""

    def __init__(self, hier, level, kind, mask):
        lv = hier.levels[level]
        op = StencilOperator.for_level(hier, level)
        self.op = op
        self.strides = lv.strides
        self.n_nodes = lv.n_nodes

        if kind == FULL:
            wanted = None
        elif kind == FAULTY_DIRICHLET:
            wanted = (FAULTY,)
        else:
            wanted = (HEALTHY,)

        groups = []
        reg = mask.container_region if mask is not None else None
        for kname in _KIND_NAMES:
            parts = []
            for c in hier.containers:
                if c.kind != kname:
                    continue
                if wanted is not None and reg[c.index] not in wanted:
                    continue
                parts.append(lv.masters[c.index])
            const_idx = (np.concatenate(parts) if parts
                         else np.empty(0, np.int64))
            groups.append([const_idx, np.empty(0, np.int64), np.empty((0, 7))])

        if kind == HEALTHY_NEUMANN:
            split = sub_stencils(hier, level, mask)
            self.split = split
            for gi, kname in enumerate(_KIND_NAMES):
                if kname == "volume":
                    continue
                parts = []
                for c in hier.containers:
                    if c.kind != kname or reg[c.index] != GAMMA:
                        continue
                    parts.append(lv.masters[c.index])
                if not parts:
                    continue
                idx = np.concatenate(parts)
                pos = np.searchsorted(split.gamma_idx, idx)
                groups[gi][1] = idx
                groups[gi][2] = split.healthy[pos]
        else:
            self.split = None

        self.groups = [tuple(g) for g in groups]
        self.all_idx = np.concatenate(
            [a for g in self.groups for a in (g[0], g[1]) if a.size]
            or [np.empty(0, np.int64)])
        self.unknown_f = np.zeros(lv.n_nodes)
        self.unknown_f[self.all_idx] = 1.0
        diag = np.full(self.all_idx.size, op.diag)
        off = 0
        for g in self.groups:
            off += g[0].size
            if g[1].size:
                diag[off:off + g[1].size] = g[2][:, 0]
                off += g[1].size
        self.diag = diag

        # scratch buffers; kernels only ever write unknown slots
        self.rbuf = np.zeros(lv.n_nodes)
        self.bbuf = np.zeros(lv.n_nodes)
        self.xbuf = np.zeros(lv.n_nodes)


class RegionSystem:
    """Operator + smoother + transfers restricted to one region."""

    def __init__(self, hier: GridHierarchy, kind: str, mask: RegionMask | None = None):
        if kind != FULL and mask is None:
            raise ValueError(f"region kind {kind!r} needs a RegionMask")
        self.hierarchy = hier
        self.kind = kind
        self.mask = mask
        self.plans = [_LevelPlan(hier, l, kind, mask)
                      for l in range(hier.finest + 1)]
        if any(p.all_idx.size == 0 for p in self.plans):
            raise ValueError(f"region {kind!r} has an empty interior on some level")
        self.finest = hier.finest
        self.smooth_calls = [0] * (hier.finest + 1)

    # -- row-wise operations ------------------------------------------

    def smooth(self, level, u, rhs, sweeps):
        p = self.plans[level]
        sx, sy, sz = p.strides
        op = p.op
        self.smooth_calls[level] += sweeps
        for _ in range(sweeps):
            for const_idx, w_idx, w in p.groups:
                if const_idx.size:
                    kernels.gs_const(u, rhs, const_idx, sx, sy, sz,
                                     op.cx, op.cy, op.cz, op.diag)
                if w_idx.size:
                    kernels.gs_weighted(u, rhs, w_idx, w, sx, sy, sz)
        return u

    def apply(self, level, u, out=None):
        p = self.plans[level]
        if out is None:
            out = np.zeros(p.n_nodes)
        sx, sy, sz = p.strides
        op = p.op
        for const_idx, w_idx, w in p.groups:
            if const_idx.size:
                kernels.apply_const(u, out, const_idx, sx, sy, sz,
                                    op.cx, op.cy, op.cz, op.diag)
            if w_idx.size:
                kernels.apply_weighted(u, out, w_idx, w, sx, sy, sz)
        return out

    def residual(self, level, u, rhs, out=None):
        p = self.plans[level]
        if out is None:
            out = p.rbuf
        sx, sy, sz = p.strides
        op = p.op
        for const_idx, w_idx, w in p.groups:
            if const_idx.size:
                kernels.residual_const(u, rhs, out, const_idx, sx, sy, sz,
                                       op.cx, op.cy, op.cz, op.diag)
            if w_idx.size:
                kernels.residual_weighted(u, rhs, out, w_idx, w, sx, sy, sz)
        return out

    def residual_norm(self, level, u, rhs):
        r = self.residual(level, u, rhs)
        return float(np.linalg.norm(r[self.plans[level].all_idx]))

    # -- transfers ------------------------------------------------------

    def restrict_rhs(self, fine_level, r_fine):
        b = restrict(self.hierarchy, fine_level, r_fine)
        b *= self.plans[fine_level - 1].unknown_f
        self.plans[fine_level - 1].bbuf[:] = b
        return self.plans[fine_level - 1].bbuf

    def prolong_correct(self, fine_level, x_coarse, u_fine):
        t = prolongate(self.hierarchy, fine_level, x_coarse)
        idx = self.plans[fine_level].all_idx
        u_fine[idx] += t[idx]
        return u_fine
