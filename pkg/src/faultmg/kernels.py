"""Number-crunching kernels, jit-compiled with numba.

All kernels work on flat per-level arrays with z-fastest node ordering and
are strictly sequential, so results are bitwise reproducible.  Nodes with
constant 7-point rows are handled by the ``*_const`` kernels; interface
rows that carry per-node weights (the one-sided sub-stencil rows of the
Neumann system) go through the ``*_weighted`` kernels.  Weight rows store
the actual matrix entries ``[diag, x-, x+, y-, y+, z-, z+]``; zero entries
are skipped so a decoupled side is never read.
"""

import numba as nb
import numpy as np

_jit = nb.njit(cache=True)


@_jit
def gs_const(u, rhs, idx, sx, sy, sz, cx, cy, cz, diag):
    """One lexicographic Gauss-Seidel pass over constant-row unknowns."""
    for t in range(idx.size):
        p = idx[t]
        acc = rhs[p]
        acc += cx * (u[p - sx] + u[p + sx])
        acc += cy * (u[p - sy] + u[p + sy])
        acc += cz * (u[p - sz] + u[p + sz])
        u[p] = acc / diag


@_jit
def gs_weighted(u, rhs, idx, w, sx, sy, sz):
    """One Gauss-Seidel pass over rows with per-node weights."""
    for t in range(idx.size):
        p = idx[t]
        acc = rhs[p]
        if w[t, 1] != 0.0:
            acc -= w[t, 1] * u[p - sx]
        if w[t, 2] != 0.0:
            acc -= w[t, 2] * u[p + sx]
        if w[t, 3] != 0.0:
            acc -= w[t, 3] * u[p - sy]
        if w[t, 4] != 0.0:
            acc -= w[t, 4] * u[p + sy]
        if w[t, 5] != 0.0:
            acc -= w[t, 5] * u[p - sz]
        if w[t, 6] != 0.0:
            acc -= w[t, 6] * u[p + sz]
        u[p] = acc / w[t, 0]


@_jit
def apply_const(u, out, idx, sx, sy, sz, cx, cy, cz, diag):
    for t in range(idx.size):
        p = idx[t]
        out[p] = (diag * u[p]
                  - cx * (u[p - sx] + u[p + sx])
                  - cy * (u[p - sy] + u[p + sy])
                  - cz * (u[p - sz] + u[p + sz]))


@_jit
def apply_weighted(u, out, idx, w, sx, sy, sz):
    for t in range(idx.size):
        p = idx[t]
        acc = w[t, 0] * u[p]
        if w[t, 1] != 0.0:
            acc += w[t, 1] * u[p - sx]
        if w[t, 2] != 0.0:
            acc += w[t, 2] * u[p + sx]
        if w[t, 3] != 0.0:
            acc += w[t, 3] * u[p - sy]
        if w[t, 4] != 0.0:
            acc += w[t, 4] * u[p + sy]
        if w[t, 5] != 0.0:
            acc += w[t, 5] * u[p - sz]
        if w[t, 6] != 0.0:
            acc += w[t, 6] * u[p + sz]
        out[p] = acc


@_jit
def residual_const(u, rhs, out, idx, sx, sy, sz, cx, cy, cz, diag):
    for t in range(idx.size):
        p = idx[t]
        out[p] = (rhs[p] - diag * u[p]
                  + cx * (u[p - sx] + u[p + sx])
                  + cy * (u[p - sy] + u[p + sy])
                  + cz * (u[p - sz] + u[p + sz]))


@_jit
def residual_weighted(u, rhs, out, idx, w, sx, sy, sz):
    for t in range(idx.size):
        p = idx[t]
        acc = rhs[p] - w[t, 0] * u[p]
        if w[t, 1] != 0.0:
            acc -= w[t, 1] * u[p - sx]
        if w[t, 2] != 0.0:
            acc -= w[t, 2] * u[p + sx]
        if w[t, 3] != 0.0:
            acc -= w[t, 3] * u[p - sy]
        if w[t, 4] != 0.0:
            acc -= w[t, 4] * u[p + sy]
        if w[t, 5] != 0.0:
            acc -= w[t, 5] * u[p - sz]
        if w[t, 6] != 0.0:
            acc -= w[t, 6] * u[p + sz]
        out[p] = acc
