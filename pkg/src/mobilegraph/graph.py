"""Edges, connected components and degree statistics of a snapshot."""
from dataclasses import dataclass
import math

import numba as nb
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ._prf import u01_prefixed, prefix3, TAG_HIGH
from .dynamics import epoch_thresholds, pair_dist
from .errors import InvalidInput
from .kernels import (threshold_core, threshold_from_coef, coef_from_pows, pows_array,
                      mean_degree_upper)


# -- union-find --------------------------------------------------------------------

class UnionFind:
    """Path compression and union by size; ties keep the smaller representative."""

    def __init__(self, n):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)

    def find(self, x):
        p = self.parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        sa, sb = self.size[ra], self.size[rb]
        if sa < sb or (sa == sb and rb < ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def roots(self):
        return np.array([self.find(i) for i in range(len(self.parent))], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class ComponentLabels:
    """``root[i]`` is the smallest vertex id in the component of ``i``."""

    root: np.ndarray
    sizes: dict

    @classmethod
    def from_labels(cls, labels):
        labels = np.asarray(labels, dtype=np.int64)
        n = labels.size
        if n == 0:
            return cls(np.zeros(0, np.int64), {})
        # smallest id per label: first occurrence in id order
        uniq, first = np.unique(labels, return_index=True)
        rep = np.empty(uniq.max() + 1, np.int64)
        rep[uniq] = first
        root = rep[labels]
        counts = np.bincount(root, minlength=n)
        reps = np.flatnonzero(counts)
        return cls(root, {int(r): int(counts[r]) for r in reps})

    @property
    def n(self):
        return self.root.size

    @property
    def num_components(self):
        return len(self.sizes)

    def _ranked(self):
        # size descending, then smaller representative first
        return sorted(self.sizes.items(), key=lambda kv: (-kv[1], kv[0]))

    @property
    def largest(self):
        r = self._ranked()
        return r[0] if r else (None, 0)

    @property
    def second_largest(self):
        r = self._ranked()
        return r[1] if len(r) > 1 else (None, 0)

    def size_of(self, i):
        return self.sizes[int(self.root[i])]

    def same(self, i, j):
        return self.root[i] == self.root[j]


def labels_from_edges(n, a, b):
    """Components via scipy's sparse connected_components."""
    if n == 0:
        return ComponentLabels.from_labels(np.zeros(0, np.int64))
    g = coo_matrix((np.ones(len(a), dtype=np.int8), (a, b)), shape=(n, n))
    _, lab = connected_components(g, directed=False)
    return ComponentLabels.from_labels(lab)


def labels_union_find(n, a, b):
    uf = UnionFind(n)
    for x, y in zip(a.tolist(), b.tolist()):
        uf.union(x, y)
    return ComponentLabels.from_labels(uf.roots())


# -- cell index ------------------------------------------------------------------

@nb.njit(cache=True)
def _cell_coords(pos, origin, h, M):
    N, d = pos.shape
    out = np.empty((N, d), np.int64)
    for i in range(N):
        for c in range(d):
            k = int(math.floor((pos[i, c] - origin[c]) / h))
            if k < 0:
                k = 0
            if k >= M[c]:
                k = M[c] - 1
            out[i, c] = k
    return out


class CellIndex:
    """Uniform grid buckets; each bucket lists its vertices ordered by ``rank``."""

    def __init__(self, pos, dom, target_occupancy=2.0, rank=None):
        pos = np.ascontiguousarray(pos, dtype=np.float64).reshape(-1, dom.dim)
        N, d = pos.shape
        self.dim = d
        self.periodic = dom.periodic
        self.side = dom.side
        if dom.periodic:
            origin = np.zeros(d)
            extent = np.full(d, dom.side)
        else:
            origin = pos.min(axis=0) if N else np.zeros(d)
            extent = (pos.max(axis=0) - origin) if N else np.ones(d)
            extent = np.maximum(extent, 1e-12)
        vol = float(np.prod(extent))
        h = (target_occupancy * vol / max(N, 1)) ** (1.0 / d)
        if dom.periodic:
            m = max(1, int(dom.side // h))
            h = dom.side / m
            M = np.full(d, m, np.int64)
        else:
            M = np.floor(extent / h).astype(np.int64) + 1
        self.h = float(h)
        self.M = M
        self.origin = origin
        coords = _cell_coords(pos, origin, self.h, M)
        flat = np.ravel_multi_index(coords.T, tuple(M)) if N else np.zeros(0, np.int64)
        self.cell_of = flat.astype(np.int64)
        if rank is None:
            rank = np.arange(N, dtype=np.int64)
        self.rank = np.asarray(rank, dtype=np.int64)
        order = np.lexsort((self.rank, self.cell_of))
        self.items = order.astype(np.int64)
        self.item_rank = self.rank[order]
        counts = np.bincount(self.cell_of, minlength=int(np.prod(M)))
        self.start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.coords = coords

    @property
    def num_cells(self):
        return int(self.start.size - 1)

    def bucket(self, cell):
        return self.items[self.start[cell]:self.start[cell + 1]]

    def candidates(self, i, radius):
        """Vertex ids in every cell that may hold a point within ``radius`` of ``i``."""
        out = _gather(i, radius, self.coords, self.h, self.M, self.periodic,
                      self.start, self.items)
        return out


@nb.njit(cache=True)
def _cell_ranges(ci, c, M, periodic, lo, n_ax):
    d = ci.size
    for ax in range(d):
        if periodic:
            if 2 * c + 1 >= M[ax]:
                lo[ax] = 0
                n_ax[ax] = M[ax]
            else:
                lo[ax] = ci[ax] - c
                n_ax[ax] = 2 * c + 1
        else:
            a = max(0, ci[ax] - c)
            b = min(M[ax] - 1, ci[ax] + c)
            lo[ax] = a
            n_ax[ax] = b - a + 1


@nb.njit(cache=True)
def _flat_cell(lo, off, M, periodic):
    f = 0
    for ax in range(lo.size):
        k = lo[ax] + off[ax]
        if periodic:
            k = k % M[ax]
        f = f * M[ax] + k
    return f


@nb.njit(cache=True)
def _next_offset(off, n_ax):
    ax = off.size - 1
    while ax >= 0:
        off[ax] += 1
        if off[ax] < n_ax[ax]:
            return True
        off[ax] = 0
        ax -= 1
    return False


@nb.njit(cache=True)
def _gather(i, radius, coords, h, M, periodic, start, items):
    d = coords.shape[1]
    c = int(radius * (1.0 + 1e-9) / h) + 1
    lo = np.empty(d, np.int64)
    n_ax = np.empty(d, np.int64)
    _cell_ranges(coords[i], c, M, periodic, lo, n_ax)
    off = np.zeros(d, np.int64)
    total = 0
    while True:
        f = _flat_cell(lo, off, M, periodic)
        total += start[f + 1] - start[f]
        if not _next_offset(off, n_ax):
            break
    out = np.empty(total, np.int64)
    k = 0
    off[:] = 0
    while True:
        f = _flat_cell(lo, off, M, periodic)
        for s in range(start[f], start[f + 1]):
            out[k] = items[s]
            k += 1
        if not _next_offset(off, n_ax):
            break
    return out


@nb.njit(cache=True)
def _high_scan(key, n, q0, pos, marks, rank, reach_r, side, periodic,
               coords, h, M, start, items, item_rank, prm):
    """High-level edge claims: for each i, partners of higher rank within reach(q0, u_i)."""
    N, d = pos.shape
    cap = 64
    EA = np.empty(cap, np.int64)
    EB = np.empty(cap, np.int64)
    cnt = 0
    lo = np.empty(d, np.int64)
    n_ax = np.empty(d, np.int64)
    off = np.zeros(d, np.int64)
    P = pows_array(marks, prm)
    hh = prefix3(key, TAG_HIGH, n)
    # vertex data in bucket order, so the inner loop reads contiguous memory
    ipos = np.empty((N, d))
    imark = np.empty(N)
    iP = np.empty((N, 2))
    for s in range(N):
        j = items[s]
        for c in range(d):
            ipos[s, c] = pos[j, c]
        imark[s] = marks[j]
        iP[s, 0] = P[j, 0]
        iP[s, 1] = P[j, 1]
    for i in range(N):
        r = reach_r[i]
        if r <= 0.0:
            continue
        c = int(r * (1.0 + 1e-9) / h) + 1
        _cell_ranges(coords[i], c, M, periodic, lo, n_ax)
        off[:] = 0
        ri = rank[i]
        ui = marks[i]
        p1 = P[i, 0]
        p2 = P[i, 1]
        while True:
            f = _flat_cell(lo, off, M, periodic)
            s0 = start[f]
            s1 = start[f + 1]
            # first item of higher rank (items sorted by rank within a cell)
            a_ = s0
            b_ = s1
            while a_ < b_:
                mid = (a_ + b_) // 2
                if item_rank[mid] <= ri:
                    a_ = mid + 1
                else:
                    b_ = mid
            for s in range(a_, s1):
                acc = 0.0
                for cc in range(d):
                    dx = abs(pos[i, cc] - ipos[s, cc])
                    if periodic:
                        dx = min(dx, side - dx)
                    acc += dx * dx
                dist = math.sqrt(acc)
                if dist >= r:
                    continue
                j = items[s]
                a = min(i, j)
                b = max(i, j)
                U = q0 + (1.0 - q0) * u01_prefixed(hh, a, b, 0)
                ck, cf = coef_from_pows(ui, p1, p2, imark[s], iP[s, 0], iP[s, 1], prm)
                if dist < threshold_from_coef(U, ck, cf, prm):
                    if cnt == cap:
                        cap *= 2
                        A2 = np.empty(cap, np.int64)
                        B2 = np.empty(cap, np.int64)
                        A2[:cnt] = EA[:cnt]
                        B2[:cnt] = EB[:cnt]
                        EA, EB = A2, B2
                    EA[cnt] = a
                    EB[cnt] = b
                    cnt += 1
            if not _next_offset(off, n_ax):
                break
    return EA[:cnt].copy(), EB[:cnt].copy()


def mark_rank(marks):
    """Rank by (mark, id), so the smaller-mark endpoint of a pair has the lower rank."""
    order = np.lexsort((np.arange(len(marks)), marks))
    rank = np.empty(len(marks), np.int64)
    rank[order] = np.arange(len(marks))
    return rank


def _reach_radii(orc, marks, q, cap=None):
    prm = orc.kernel.packed
    out = np.array([threshold_core(q, m, m, prm) for m in marks]) if len(marks) < 64 else None
    if out is None:
        out = _reach_vec(np.ascontiguousarray(marks, dtype=np.float64), q, prm)
    if cap is not None:
        out = np.minimum(out, cap)
    return out


@nb.njit(cache=True)
def _reach_vec(marks, q, prm):
    out = np.empty(marks.size)
    for i in range(marks.size):
        out[i] = threshold_core(q, marks[i], marks[i], prm)
    return out


def snapshot_edges(snap, orc, trunc_radius=None):
    """Edge list (a < b, sorted, unique) of the snapshot via low pairs plus the cell scan.

    With ``trunc_radius`` the high-pair search is capped at that distance and
    long high edges may be missed.
    """
    if snap.n != orc.n_ids:
        raise InvalidInput("snapshot does not match the oracle size")
    N = snap.n
    if N < 2:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    pos = np.ascontiguousarray(snap.pos, dtype=np.float64)
    marks = np.ascontiguousarray(snap.marks, dtype=np.float64)
    la, lb = orc.low_edges(snap)
    parts_a, parts_b = [la], [lb]
    q0 = orc.split
    if q0 < 1.0:
        reach_r = _reach_radii(orc, marks, q0, cap=trunc_radius)
        rank = mark_rank(marks)
        idx = CellIndex(pos, snap.domain, rank=rank)
        ha, hb = _high_scan(orc.key, np.int64(snap.epoch), q0, pos, marks, rank, reach_r,
                            snap.domain.side, snap.domain.periodic, idx.coords, idx.h,
                            idx.M, idx.start, idx.items, idx.item_rank, orc.kernel.packed)
        parts_a.append(ha)
        parts_b.append(hb)
    a = np.concatenate(parts_a)
    b = np.concatenate(parts_b)
    code = np.unique(a * N + b)
    return code // N, code % N


@nb.njit(cache=True)
def _table_edges(pos, table, side, periodic):
    N = pos.shape[0]
    cap = 64
    EA = np.empty(cap, np.int64)
    EB = np.empty(cap, np.int64)
    cnt = 0
    for i in range(N):
        for j in range(i + 1, N):
            if pair_dist(pos, i, j, side, periodic) < table[i, j]:
                if cnt == cap:
                    cap *= 2
                    A2 = np.empty(cap, np.int64)
                    B2 = np.empty(cap, np.int64)
                    A2[:cnt] = EA[:cnt]
                    B2[:cnt] = EB[:cnt]
                    EA, EB = A2, B2
                EA[cnt] = i
                EB[cnt] = j
                cnt += 1
    return EA[:cnt].copy(), EB[:cnt].copy()


def exact_edges(snap, orc):
    """All-pairs edge list from the dense threshold table."""
    table = epoch_thresholds(orc, snap)
    if snap.n < 2:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return _table_edges(np.ascontiguousarray(snap.pos, dtype=np.float64), table,
                        snap.domain.side, snap.domain.periodic)


def components_exact(snap, orc):
    """Union-find over all N(N-1)/2 pairs; raises ResourceLimit above the exact limit."""
    a, b = exact_edges(snap, orc)
    return labels_union_find(snap.n, a, b)


def missed_edge_bound(snap, orc, trunc_radius):
    """Expected number of edges longer than ``trunc_radius`` (N/2 times the degree tail)."""
    kp = orc.kernel
    lam = snap.cloud.intensity
    full = mean_degree_upper(kp, lam)
    inside = mean_degree_upper(kp, lam, r_max=trunc_radius)
    return 0.5 * snap.n * max(0.0, full - inside)


def components_fast(snap, orc, trunc_radius=None):
    """Cell-list components; returns (labels, missed-edge bound).

    Without ``trunc_radius`` every pair that can be an edge is examined (the
    bound is 0 and the labels equal :func:`components_exact`).
    """
    if trunc_radius is not None and not trunc_radius > 0:
        raise InvalidInput("trunc_radius must be positive")
    bound = 0.0
    cap = trunc_radius
    if trunc_radius is not None:
        marks = snap.marks
        max_reach = float(_reach_radii(orc, marks, orc.split).max()) if snap.n else 0.0
        if orc.split >= 1.0 or trunc_radius >= snap.domain.diameter or trunc_radius >= max_reach:
            cap = None
        else:
            bound = missed_edge_bound(snap, orc, trunc_radius)
    a, b = snapshot_edges(snap, orc, trunc_radius=cap)
    return labels_from_edges(snap.n, a, b), bound


# -- degrees -------------------------------------------------------------------------

@dataclass(frozen=True)
class DegreeStats:
    degrees: np.ndarray
    histogram: np.ndarray
    mean: float


def degree_stats(snap, orc, edges=None):
    if edges is None:
        edges = snapshot_edges(snap, orc)
    a, b = edges
    deg = np.bincount(np.concatenate([a, b]), minlength=snap.n) if snap.n else np.zeros(0, np.int64)
    hist = np.bincount(deg) if deg.size else np.zeros(0, np.int64)
    mean = float(deg.mean()) if deg.size else 0.0
    return DegreeStats(deg, hist, mean)


def neighbors(edges, i):
    a, b = edges
    return np.sort(np.concatenate([b[a == i], a[b == i]]))


COMPONENT_CSV_HEADER = ("time", "N", "num_components", "largest", "second_largest", "mean_degree")


def component_summary(snap, orc):
    """One row of the component summary CSV."""
    a, b = snapshot_edges(snap, orc)
    lab = labels_from_edges(snap.n, a, b)
    ds = degree_stats(snap, orc, edges=(a, b))
    return (snap.time, snap.n, lab.num_components, lab.largest[1], lab.second_largest[1], ds.mean)
