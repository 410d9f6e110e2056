"""Nested grid hierarchy over a box-partitioned unit cube.

The unit cube is split into ``P_x * P_y * P_z`` axis-aligned subdomains.
Level ``l`` carries ``n0 * 2**l`` cells per axis per subdomain, so adjacent
subdomains share conforming grids on every level and level ``l-1`` nodes
coincide with level ``l`` nodes.

Every node of a level is classified geometrically (volume interior, shared
face, shared edge, shared vertex, or outer Dirichlet boundary) and the
non-Dirichlet nodes are grouped into containers.  Each container owns its
master nodes and carries one layer of ghost copies of the masters it needs
from neighboring containers; volume interiors are stored once while the
lower-dimensional interface containers are replicated on every adjacent
logical owner, so a single subdomain loss never destroys the last copy of
an interface value.

Node ids are lexicographic with z fastest, so ``flat = (i*ny + j)*nz + k``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidPartition, NoHealthyRegion

# node class codes
VOLUME = 0
FACE = 1
EDGE = 2
VERTEX = 3
BOUNDARY = 4

CLASS_NAMES = {VOLUME: "volume", FACE: "face", EDGE: "edge", VERTEX: "vertex",
               BOUNDARY: "boundary"}

# region codes
HEALTHY = 0
GAMMA = 1
FAULTY = 2
DIRICHLET = 3

_EDGE_AXIS_PAIRS = ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class PartitionSpec:
    """Box partition of the unit cube plus refinement depth.

    Parameters
    ----------
    subdomain_counts : tuple of int
        Number of subdomains along each axis, each >= 1.
    base_cells_per_subdomain : int
        Cells per axis per subdomain on level 0; must be >= 2 so every
        subdomain owns at least one interior node on the coarsest level.
    levels : int
        Finest level index L; the hierarchy has levels 0..L.
    """

    subdomain_counts: tuple[int, int, int]
    base_cells_per_subdomain: int
    levels: int

    def __post_init__(self):
        counts = tuple(int(c) for c in self.subdomain_counts)
        if len(counts) != 3 or any(c < 1 for c in counts):
            raise InvalidPartition(
                f"subdomain_counts must be three integers >= 1, got {self.subdomain_counts!r}")
        object.__setattr__(self, "subdomain_counts", counts)
        if self.base_cells_per_subdomain < 2:
            raise InvalidPartition(
                "base_cells_per_subdomain must be >= 2 so each subdomain has "
                f"an interior node on level 0, got {self.base_cells_per_subdomain}")
        if self.levels < 0:
            raise InvalidPartition(f"levels must be >= 0, got {self.levels}")

    @property
    def n_subdomains(self) -> int:
        px, py, pz = self.subdomain_counts
        return px * py * pz

    def cells_per_subdomain(self, level: int) -> int:
        return self.base_cells_per_subdomain * 2 ** level

    def subdomain_id(self, sx: int, sy: int, sz: int) -> int:
        px, py, pz = self.subdomain_counts
        if not (0 <= sx < px and 0 <= sy < py and 0 <= sz < pz):
            raise InvalidPartition(f"subdomain coordinate ({sx},{sy},{sz}) out of range")
        return (sx * py + sy) * pz + sz

    def subdomain_coords(self, sid: int) -> tuple[int, int, int]:
        px, py, pz = self.subdomain_counts
        if not 0 <= sid < self.n_subdomains:
            raise InvalidPartition(f"subdomain id {sid} out of range")
        return sid // (py * pz), (sid // pz) % py, sid % pz


@dataclass(frozen=True)
class NodeClass:
    """Geometric class of a node plus the container it belongs to."""

    kind: str            # 'volume' | 'face' | 'edge' | 'vertex' | 'boundary'
    container: int | None  # container index; None for Dirichlet boundary nodes


@dataclass(frozen=True)
class Container:
    """Storage unit for the masters and ghosts of one geometric entity."""

    index: int
    kind: str            # 'volume' | 'face' | 'edge' | 'vertex'
    key: tuple           # deterministic geometric key
    owners: tuple[int, ...]  # adjacent subdomain ids holding a replica
    owner: int           # primary logical process id (min of owners)


def _grid_flat(ix, iy, iz, strides):
    """Flat indices of the cartesian product of three 1-D index arrays."""
    sx, sy, sz = strides
    ix = np.asarray(ix, dtype=np.int64)
    iy = np.asarray(iy, dtype=np.int64)
    iz = np.asarray(iz, dtype=np.int64)
    out = (ix[:, None, None] * sx + iy[None, :, None] * sy
           + iz[None, None, :] * sz)
    return out.ravel()


class GridLevel:
    """One refinement level: geometry, classification and container tables."""

    def __init__(self, spec: PartitionSpec, level: int, containers):
        px, py, pz = spec.subdomain_counts
        m = spec.cells_per_subdomain(level)
        self.level = level
        self.m = m
        self.shape = (px * m + 1, py * m + 1, pz * m + 1)
        nx, ny, nz = self.shape
        self.n_nodes = nx * ny * nz
        self.strides = (ny * nz, nz, 1)
        self.h = (1.0 / (px * m), 1.0 / (py * m), 1.0 / (pz * m))

        self.cls, self.cid = self._classify(spec, containers)
        self.masters = self._group_masters(len(containers))
        self.ghosts = self._build_ghosts(spec, containers)
        # ordered unknown lists per container kind, used by the smoothers
        self.kind_order = tuple(
            np.concatenate([self.masters[c.index] for c in containers
                            if c.kind == kind] or [np.empty(0, np.int64)])
            for kind in ("volume", "face", "edge", "vertex"))

    # -- construction -------------------------------------------------

    def _classify(self, spec, containers):
        px, py, pz = spec.subdomain_counts
        nx, ny, nz = self.shape
        m = self.m

        ax = [np.arange(n, dtype=np.int64) for n in self.shape]
        bnd1 = [(a == 0) | (a == n - 1) for a, n in zip(ax, self.shape)]
        plane1 = [((a % m) == 0) & ~b for a, b in zip(ax, bnd1)]
        sub1 = [np.minimum(a // m, p - 1)
                for a, p in zip(ax, spec.subdomain_counts)]

        shp = [(nx, 1, 1), (1, ny, 1), (1, 1, nz)]
        bnd = (bnd1[0].reshape(shp[0]) | bnd1[1].reshape(shp[1])
               | bnd1[2].reshape(shp[2]))
        pl = [plane1[i].reshape(shp[i]) for i in range(3)]
        d = pl[0].astype(np.int8) + pl[1].astype(np.int8) + pl[2].astype(np.int8)

        cls = np.empty(self.shape, dtype=np.uint8)
        cls[...] = VOLUME
        cls[d == 1] = FACE
        cls[d == 2] = EDGE
        cls[d == 3] = VERTEX
        cls[bnd] = BOUNDARY

        sub = [sub1[i].reshape(shp[i]) for i in range(3)]
        plane_idx = [ax[i].reshape(shp[i]) // m for i in range(3)]

        counts = self._container_counts(spec)
        n_vol, n_face_ax, n_edge_pair, _ = counts
        face_off = n_vol
        edge_off = face_off + sum(n_face_ax)
        vert_off = edge_off + sum(n_edge_pair)

        cid = np.full(self.shape, -1, dtype=np.int32)

        vol_id = (sub[0] * py + sub[1]) * pz + sub[2]
        np.copyto(cid, vol_id.astype(np.int32), where=(cls == VOLUME))

        # faces: normal axis a, perpendicular axes in ascending order
        perp = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
        P = spec.subdomain_counts
        off = face_off
        for a in range(3):
            b, c = perp[a]
            local = ((plane_idx[a] - 1) * P[b] + sub[b]) * P[c] + sub[c]
            sel = (cls == FACE) & pl[a]
            np.copyto(cid, (off + local).astype(np.int32), where=sel)
            off += n_face_ax[a]

        off = edge_off
        for pair_i, (a, b) in enumerate(_EDGE_AXIS_PAIRS):
            t = 3 - a - b
            local = ((plane_idx[a] - 1) * (P[b] - 1) + (plane_idx[b] - 1)) * P[t] + sub[t]
            sel = (cls == EDGE) & pl[a] & pl[b]
            np.copyto(cid, (off + local).astype(np.int32), where=sel)
            off += n_edge_pair[pair_i]

        local = ((plane_idx[0] - 1) * (P[1] - 1) + (plane_idx[1] - 1)) * (P[2] - 1) \
            + (plane_idx[2] - 1)
        np.copyto(cid, (vert_off + local).astype(np.int32), where=(cls == VERTEX))

        return cls.ravel(), cid.ravel()

    @staticmethod
    def _container_counts(spec):
        px, py, pz = spec.subdomain_counts
        P = (px, py, pz)
        perp = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
        n_vol = px * py * pz
        n_face_ax = tuple((P[a] - 1) * P[perp[a][0]] * P[perp[a][1]] for a in range(3))
        n_edge_pair = tuple((P[a] - 1) * (P[b] - 1) * P[3 - a - b]
                            for a, b in _EDGE_AXIS_PAIRS)
        n_vert = (px - 1) * (py - 1) * (pz - 1)
        return n_vol, n_face_ax, n_edge_pair, n_vert

    def _group_masters(self, n_containers):
        order = np.argsort(self.cid, kind="stable")
        sorted_cid = self.cid[order]
        start = np.searchsorted(sorted_cid, np.arange(n_containers, dtype=np.int32),
                                side="left")
        stop = np.searchsorted(sorted_cid, np.arange(n_containers, dtype=np.int32),
                               side="right")
        return [order[s:e].astype(np.int64) for s, e in zip(start, stop)]

    def _build_ghosts(self, spec, containers):
        m = self.m
        st = self.strides
        ghosts = []
        for c in containers:
            if c.kind == "volume":
                _, sx, sy, sz = c.key
                lo = (sx * m, sy * m, sz * m)
                hi = (lo[0] + m, lo[1] + m, lo[2] + m)
                parts = [
                    _grid_flat([lo[0], hi[0]], np.arange(lo[1], hi[1] + 1),
                               np.arange(lo[2], hi[2] + 1), st),
                    _grid_flat(np.arange(lo[0] + 1, hi[0]), [lo[1], hi[1]],
                               np.arange(lo[2], hi[2] + 1), st),
                    _grid_flat(np.arange(lo[0] + 1, hi[0]),
                               np.arange(lo[1] + 1, hi[1]), [lo[2], hi[2]], st),
                ]
                idx = np.concatenate(parts)
            elif c.kind == "face":
                _, a, p, sb, sc = c.key
                b, cax = {0: (1, 2), 1: (0, 2), 2: (0, 1)}[a]
                rng = [None, None, None]
                rng[a] = np.array([p * m], dtype=np.int64)
                closed_b = np.arange(sb * m, sb * m + m + 1, dtype=np.int64)
                closed_c = np.arange(sc * m, sc * m + m + 1, dtype=np.int64)
                open_b = closed_b[1:-1]
                open_c = closed_c[1:-1]
                # in-plane ring around the face extent
                ring = []
                rb = [None, None, None]
                rb[a] = rng[a]
                for eb, ec in (([closed_b[0], closed_b[-1]], closed_c),
                               (open_b, [closed_c[0], closed_c[-1]])):
                    rb[b], rb[cax] = np.asarray(eb), np.asarray(ec)
                    ring.append(_grid_flat(rb[0], rb[1], rb[2], st))
                # one layer of volume nodes on each side of the plane
                layers = []
                rb[b], rb[cax] = open_b, open_c
                for shift in (-1, 1):
                    rb[a] = rng[a] + shift
                    layers.append(_grid_flat(rb[0], rb[1], rb[2], st))
                idx = np.concatenate(ring + layers)
            elif c.kind == "edge":
                _, (a, b), pa, pb, stc = c.key
                t = 3 - a - b
                closed_t = np.arange(stc * m, stc * m + m + 1, dtype=np.int64)
                open_t = closed_t[1:-1]
                rb = [None, None, None]
                rb[t] = np.array([closed_t[0], closed_t[-1]])
                rb[a] = np.array([pa * m])
                rb[b] = np.array([pb * m])
                parts = [_grid_flat(rb[0], rb[1], rb[2], st)]
                # one parallel row of face nodes in each incident face
                for ax, p in ((a, pa), (b, pb)):
                    for shift in (-1, 1):
                        rb2 = [None, None, None]
                        rb2[t] = open_t
                        rb2[a] = np.array([pa * m])
                        rb2[b] = np.array([pb * m])
                        rb2[ax] = rb2[ax] + shift
                        parts.append(_grid_flat(rb2[0], rb2[1], rb2[2], st))
                idx = np.concatenate(parts)
            else:  # vertex
                _, px_, py_, pz_ = c.key
                p = (px_ * m) * st[0] + (py_ * m) * st[1] + (pz_ * m) * st[2]
                idx = p + np.array([-st[0], st[0], -st[1], st[1], -st[2], st[2]],
                                   dtype=np.int64)
            idx = np.unique(idx)
            ghosts.append(idx[self.cls[idx] != BOUNDARY])
        return ghosts

    # -- geometry helpers ---------------------------------------------

    def coords(self, idx):
        """Cartesian coordinates of flat node indices."""
        idx = np.asarray(idx, dtype=np.int64)
        nx, ny, nz = self.shape
        i = idx // (ny * nz)
        j = (idx // nz) % ny
        k = idx % nz
        return i * self.h[0], j * self.h[1], k * self.h[2]

    def flat(self, i, j, k):
        sx, sy, sz = self.strides
        return i * sx + j * sy + k * sz

    @property
    def non_dirichlet_idx(self):
        return np.flatnonzero(self.cls != BOUNDARY).astype(np.int64)


class GridHierarchy:
    """Immutable nested hierarchy with containers shared across levels."""

    def __init__(self, spec: PartitionSpec):
        self.spec = spec
        self.containers = self._build_containers(spec)
        self.levels = [GridLevel(spec, l, self.containers)
                       for l in range(spec.levels + 1)]
        self._owners = [np.array(c.owners, dtype=np.int64) for c in self.containers]

    @staticmethod
    def _build_containers(spec):
        px, py, pz = spec.subdomain_counts
        P = (px, py, pz)
        perp = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
        containers = []

        def sid(s):
            return (s[0] * py + s[1]) * pz + s[2]

        for sx in range(px):
            for sy in range(py):
                for sz in range(pz):
                    owner = sid((sx, sy, sz))
                    containers.append(Container(len(containers), "volume",
                                                ("volume", sx, sy, sz),
                                                (owner,), owner))
        for a in range(3):
            b, c = perp[a]
            for p in range(1, P[a]):
                for sb in range(P[b]):
                    for sc in range(P[c]):
                        s_lo = [0, 0, 0]
                        s_lo[a], s_lo[b], s_lo[c] = p - 1, sb, sc
                        s_hi = list(s_lo)
                        s_hi[a] = p
                        owners = tuple(sorted((sid(s_lo), sid(s_hi))))
                        containers.append(Container(len(containers), "face",
                                                    ("face", a, p, sb, sc),
                                                    owners, min(owners)))
        for a, b in _EDGE_AXIS_PAIRS:
            t = 3 - a - b
            for pa in range(1, P[a]):
                for pb in range(1, P[b]):
                    for stc in range(P[t]):
                        owners = []
                        for da in (pa - 1, pa):
                            for db in (pb - 1, pb):
                                s = [0, 0, 0]
                                s[a], s[b], s[t] = da, db, stc
                                owners.append(sid(s))
                        owners = tuple(sorted(owners))
                        containers.append(Container(len(containers), "edge",
                                                    ("edge", (a, b), pa, pb, stc),
                                                    owners, min(owners)))
        for vx in range(1, px):
            for vy in range(1, py):
                for vz in range(1, pz):
                    owners = tuple(sorted(
                        sid((vx - 1 + dx, vy - 1 + dy, vz - 1 + dz))
                        for dx in (0, 1) for dy in (0, 1) for dz in (0, 1)))
                    containers.append(Container(len(containers), "vertex",
                                                ("vertex", vx, vy, vz),
                                                owners, min(owners)))
        return containers

    @property
    def finest(self) -> int:
        return self.spec.levels

    def container_owners(self, index: int) -> np.ndarray:
        return self._owners[index]

    def dump_containers_csv(self, path) -> None:
        """Debug dump: one row per (level, container) with table sizes."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["level", "container", "kind", "owner", "masters", "ghosts"])
            for lv in self.levels:
                for c in self.containers:
                    w.writerow([lv.level, c.index, c.kind, c.owner,
                                lv.masters[c.index].size, lv.ghosts[c.index].size])


def build_hierarchy(spec: PartitionSpec) -> GridHierarchy:
    """Build the full hierarchy with classification and container tables."""
    return GridHierarchy(spec)


def classify_node(h: GridHierarchy, level: int, index) -> NodeClass:
    """Geometric class of the node at integer coordinates ``index``."""
    lv = h.levels[level]
    i, j, k = (int(v) for v in index)
    nx, ny, nz = lv.shape
    if not (0 <= i < nx and 0 <= j < ny and 0 <= k < nz):
        raise IndexError(f"node ({i},{j},{k}) out of range for level {level} "
                         f"shape {lv.shape}")
    p = lv.flat(i, j, k)
    code = lv.cls[p]
    if code == BOUNDARY:
        return NodeClass("boundary", None)
    return NodeClass(CLASS_NAMES[code], int(lv.cid[p]))


class RegionMask:
    """Per-level node partition into intact, interface and faulty regions."""

    def __init__(self, h: GridHierarchy, faulty):
        faulty = frozenset(int(s) for s in faulty)
        n_sub = h.spec.n_subdomains
        for s in faulty:
            if not 0 <= s < n_sub:
                raise InvalidPartition(f"faulty subdomain id {s} out of range")
        if faulty and len(faulty) == n_sub:
            raise NoHealthyRegion("every subdomain is faulty")
        self.hierarchy = h
        self.faulty = faulty

        self.container_region = np.empty(len(h.containers), dtype=np.uint8)
        for c in h.containers:
            hit = sum(1 for o in c.owners if o in faulty)
            if hit == 0:
                self.container_region[c.index] = HEALTHY
            elif hit == len(c.owners):
                self.container_region[c.index] = FAULTY
            else:
                self.container_region[c.index] = GAMMA

        self.region = []
        for lv in h.levels:
            reg = np.full(lv.n_nodes, DIRICHLET, dtype=np.uint8)
            nd = lv.cid >= 0
            reg[nd] = self.container_region[lv.cid[nd]]
            self.region.append(reg)

    def idx(self, level: int, code: int) -> np.ndarray:
        return np.flatnonzero(self.region[level] == code).astype(np.int64)

    def gamma_idx(self, level: int) -> np.ndarray:
        return self.idx(level, GAMMA)

    def faulty_idx(self, level: int) -> np.ndarray:
        return self.idx(level, FAULTY)

    def healthy_idx(self, level: int) -> np.ndarray:
        return self.idx(level, HEALTHY)

    def containers_with(self, code: int):
        return [c for c in self.hierarchy.containers
                if self.container_region[c.index] == code]


def region_masks(h: GridHierarchy, faulty) -> RegionMask:
    """Partition masks for a faulty subdomain set (may be empty)."""
    return RegionMask(h, faulty)
