"""Vertex motion, snapshots and the pair-epoch edge oracle.

Brownian paths are keyed: the displacement of vertex ``i`` at time ``t`` is a
pure function of (motion key, i, t).  Unit increments Z_k over [k, k+1) come
from the counter PRF; inside an epoch the path is refined by a dyadic Brownian
bridge whose midpoint noise is keyed by (epoch, level, index).  Any grid thus
observes the same realisation, and refining a grid only adds observations.

Edge uniforms use a two-level construction.  For row ``a`` (the smaller id)
and epoch ``n``, a geometric skip stream selects each partner ``b > a``
independently with probability ``q0`` ("low" pairs); those get
``U = q0 * V`` and all other pairs ``U = q0 + (1 - q0) * V`` with fresh keyed
uniforms ``V``.  The marginal of ``U`` is exactly uniform and pairs are
independent.  Low pairs can be listed per epoch in O(N^2 q0) work, and a high
pair can only be an edge within ``reach(q0, u)`` of its smaller-mark endpoint,
which bounds the spatial search.
"""
from dataclasses import dataclass
import math

import numba as nb
import numpy as np

from . import _prf
from ._prf import (u01, u01_prefixed, prefix3, derive_key,
                   TAG_SKIP, TAG_LOW, TAG_HIGH, TAG_STEP, TAG_BRIDGE)
from .errors import InvalidInput, ResourceLimit
from .kernels import (threshold_core, threshold_from_coef, coef_from_pows, pows_array,
                      reach_moment)

MOTION_LABEL = 1
EDGE_LABEL = 2
BRIDGE_DEPTH = 40


# -- Brownian paths --------------------------------------------------------------

@nb.njit(cache=True)
def _normal(key, tag, w1, w2, w3, coord):
    # Box-Muller on two keyed uniforms
    u1 = u01(key, tag, w1, w2, w3, 2 * coord)
    u2 = u01(key, tag, w1, w2, w3, 2 * coord + 1)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@nb.njit(cache=True)
def _advance(key, ids, n_from, n_to, W):
    for i in range(ids.size):
        for c in range(W.shape[1]):
            acc = W[i, c]
            for k in range(n_from, n_to):
                acc += _normal(key, TAG_STEP, ids[i], k, 0, c)
            W[i, c] = acc


@nb.njit(cache=True)
def _bridge(key, ids, n, f, W, out):
    """out = W(n) + bridge value at fraction f of epoch n."""
    for i in range(ids.size):
        for c in range(W.shape[1]):
            if f == 0.0:
                out[i, c] = W[i, c]
                continue
            left = 0.0
            right = _normal(key, TAG_STEP, ids[i], n, 0, c)
            lo = 0.0
            hi = 1.0
            index = 0
            val = right
            for level in range(BRIDGE_DEPTH + 1):
                if f == lo:
                    val = left
                    break
                if f == hi:
                    val = right
                    break
                if level == BRIDGE_DEPTH:
                    val = left + (right - left) * (f - lo) / (hi - lo)
                    break
                h = hi - lo
                mid = 0.5 * (lo + hi)
                z = _normal(key, TAG_BRIDGE, ids[i], n, (1 << level) + index, c)
                xm = 0.5 * (left + right) + 0.5 * math.sqrt(h) * z
                if f < mid:
                    hi = mid
                    right = xm
                    index = 2 * index
                else:
                    lo = mid
                    left = xm
                    index = 2 * index + 1
            out[i, c] = W[i, c] + val


class BrownianPaths:
    """Keyed standard Brownian motions for a fixed set of path ids."""

    def __init__(self, key, path_ids, dim):
        self.key = np.uint64(key & _prf.MASK64)
        self.path_ids = np.ascontiguousarray(path_ids, dtype=np.int64)
        self.dim = int(dim)
        self._epoch = 0
        self._W = np.zeros((self.path_ids.size, self.dim))

    def displacement(self, t):
        """B(t) - B(0) for every path; t must not move backwards across epochs."""
        if t < 0:
            raise InvalidInput("time must be nonnegative")
        n = int(math.floor(t))
        if n < self._epoch:
            self._epoch = 0
            self._W[:] = 0.0
        if n > self._epoch:
            _advance(self.key, self.path_ids, self._epoch, n, self._W)
            self._epoch = n
        out = np.empty_like(self._W)
        _bridge(self.key, self.path_ids, n, float(t - n), self._W, out)
        return out


def motion_ids(cloud):
    """Path ids: original ids survive thinning so parts keep their trajectories."""
    return np.asarray(cloud.meta.get("orig_ids", cloud.ids), dtype=np.int64)


@dataclass(frozen=True, eq=False)
class Snapshot:
    time: float
    epoch: int
    pos: np.ndarray
    cloud: object

    @property
    def marks(self):
        return self.cloud.marks

    @property
    def domain(self):
        return self.cloud.domain

    @property
    def n(self):
        return self.cloud.n


def check_grid(t_grid):
    g = np.asarray(t_grid, dtype=float).ravel()
    if g.size == 0:
        raise InvalidInput("empty time grid")
    if not np.all(np.isfinite(g)) or g[0] < 0:
        raise InvalidInput("time grid must be finite and start at t >= 0")
    if np.any(np.diff(g) <= 0):
        raise InvalidInput("time grid must be strictly increasing")
    return g


def evolve(cloud, t_grid, seed):
    """Yield a :class:`Snapshot` at each grid time; deterministic in (seed, grid)."""
    grid = check_grid(t_grid)
    paths = BrownianPaths(derive_key(seed, MOTION_LABEL), motion_ids(cloud), cloud.domain.dim)
    for t in grid:
        pos = cloud.pos + paths.displacement(t)
        pos = cloud.domain.wrap(pos)
        pos.setflags(write=False)
        yield Snapshot(float(t), int(math.floor(t)), pos, cloud)


def snapshot_at(cloud, t, seed):
    return next(evolve(cloud, [t], seed))


# -- edge oracle --------------------------------------------------------------------

@nb.njit(cache=True)
def pair_dist(pos, i, j, side, periodic):
    s = 0.0
    for c in range(pos.shape[1]):
        dx = abs(pos[i, c] - pos[j, c])
        if periodic:
            dx = min(dx, side - dx)
        s += dx * dx
    return math.sqrt(s)


@nb.njit(cache=True)
def pair_uniform_core(key, n, a, b, q0):
    if a > b:
        a, b = b, a
    if q0 >= 1.0:
        return u01(key, TAG_LOW, n, a, b, 0)
    lq = math.log1p(-q0)
    j = a
    k = 0
    low = False
    while True:
        g = math.log(u01(key, TAG_SKIP, n, a, k, 0)) / lq
        k += 1
        if g >= b - j:
            break
        j += 1 + int(g)
        if j == b:
            low = True
            break
    if low:
        return q0 * u01(key, TAG_LOW, n, a, b, 0)
    return q0 + (1.0 - q0) * u01(key, TAG_HIGH, n, a, b, 0)


@nb.njit(cache=True)
def _low_pairs(key, n, N, q0, marks, prm):
    P = pows_array(marks, prm)
    hs = prefix3(key, TAG_SKIP, n)
    hl = prefix3(key, TAG_LOW, n)
    cap = 64
    A = np.empty(cap, np.int64)
    B = np.empty(cap, np.int64)
    R = np.empty(cap, np.float64)
    cnt = 0
    full = q0 >= 1.0
    lq = math.log1p(-q0) if not full else 0.0
    for a in range(N):
        j = a
        k = 0
        while True:
            if full:
                j += 1
            else:
                g = math.log(u01_prefixed(hs, a, k, 0)) / lq
                k += 1
                if g >= N - 1 - j:
                    break
                j += 1 + int(g)
            if j >= N:
                break
            U = u01_prefixed(hl, a, j, 0)
            if not full:
                U = q0 * U
            c, cf = coef_from_pows(marks[a], P[a, 0], P[a, 1], marks[j], P[j, 0], P[j, 1], prm)
            r = threshold_from_coef(U, c, cf, prm)
            if r > 0.0:
                if cnt == cap:
                    cap *= 2
                    A2 = np.empty(cap, np.int64)
                    B2 = np.empty(cap, np.int64)
                    R2 = np.empty(cap, np.float64)
                    A2[:cnt] = A[:cnt]
                    B2[:cnt] = B[:cnt]
                    R2[:cnt] = R[:cnt]
                    A, B, R = A2, B2, R2
                A[cnt] = a
                B[cnt] = j
                R[cnt] = r
                cnt += 1
    return A[:cnt].copy(), B[:cnt].copy(), R[:cnt].copy()


@nb.njit(cache=True)
def _threshold_table(key, n, N, q0, marks, prm, out):
    full = q0 >= 1.0
    lq = math.log1p(-q0) if not full else 0.0
    low = np.zeros(N, np.bool_)
    for a in range(N):
        out[a, a] = 0.0
        low[:] = full
        if not full:
            j = a
            k = 0
            while True:
                g = math.log(u01(key, TAG_SKIP, n, a, k, 0)) / lq
                k += 1
                if g >= N - 1 - j:
                    break
                j += 1 + int(g)
                low[j] = True
        for b in range(a + 1, N):
            if low[b]:
                U = u01(key, TAG_LOW, n, a, b, 0)
                if not full:
                    U = q0 * U
            else:
                U = q0 + (1.0 - q0) * u01(key, TAG_HIGH, n, a, b, 0)
            r = threshold_core(U, marks[a], marks[b], prm)
            out[a, b] = r
            out[b, a] = r


@nb.njit(cache=True)
def _low_edges(pos, A, B, R, side, periodic):
    keep = np.zeros(A.size, np.bool_)
    for k in range(A.size):
        keep[k] = pair_dist(pos, A[k], B[k], side, periodic) < R[k]
    return keep


def optimal_split(kernel, intensity, n_ids, volume=None, weight=1.0):
    """Split level q0 balancing low-pair listing against the high-pair search.

    Work per epoch is about N (A q0 + B q0^{-1/δ}) with A = N/2 and
    B = λ E[V_d reach(1, u)^d (1 - u)]; the minimiser is
    q0 = (w B / (δ A))^{δ/(δ+1)}, capped at 1.
    """
    if n_ids < 2:
        return 1.0
    b = intensity * reach_moment(kernel, 1.0, cap=volume)
    a = n_ids / 2.0
    q0 = (weight * b / (kernel.delta * a)) ** (kernel.delta / (kernel.delta + 1))
    return float(min(1.0, q0))


class EdgeOracle:
    """Deterministic epoch uniforms U^n_{i,j} plus the kernel.

    ``split`` is the low/high level q0 (see module docstring); it is part of
    the oracle's identity, so two oracles agree only if seed and split agree.
    """

    def __init__(self, seed, kernel, n_ids, split=1.0, exact_limit=3000):
        if not 0 < split <= 1:
            raise InvalidInput("split level must lie in (0, 1]")
        self.seed = int(seed)
        self.kernel = kernel
        self.n_ids = int(n_ids)
        self.split = float(split)
        self.exact_limit = int(exact_limit)
        self.key = np.uint64(derive_key(seed, EDGE_LABEL))
        self._prm = kernel.packed
        self._cache = None

    @classmethod
    def for_cloud(cls, cloud, kernel, seed, split=None, **kw):
        if split is None:
            split = optimal_split(kernel, cloud.intensity, cloud.n, cloud.domain.volume)
        return cls(seed, kernel, cloud.n, split=split, **kw)

    def _check_id(self, i):
        if not 0 <= i < self.n_ids:
            raise InvalidInput(f"vertex id {i} outside the oracle's range")

    def pair_uniform(self, i, j, epoch):
        i, j = int(i), int(j)
        if i == j:
            raise InvalidInput("a pair needs two distinct vertices")
        self._check_id(i)
        self._check_id(j)
        return float(pair_uniform_core(self.key, int(epoch), i, j, self.split))

    def threshold(self, i, j, epoch, marks):
        U = self.pair_uniform(i, j, epoch)
        return float(threshold_core(U, marks[i], marks[j], self._prm))

    def low_pairs(self, epoch, marks):
        """Low pairs of the epoch with positive threshold: (a, b, r*) arrays, a < b."""
        c = self._cache
        if c is not None and c[0] == epoch and c[1] is marks:
            return c[2]
        if len(marks) != self.n_ids:
            raise InvalidInput("mark array does not match the oracle size")
        res = _low_pairs(self.key, int(epoch), self.n_ids, self.split,
                         np.ascontiguousarray(marks, dtype=np.float64), self._prm)
        self._cache = (epoch, marks, res)
        return res

    def low_edges(self, snap):
        A, B, R = self.low_pairs(snap.epoch, snap.marks)
        dom = snap.domain
        keep = _low_edges(np.ascontiguousarray(snap.pos), A, B, R, dom.side, dom.periodic)
        return A[keep], B[keep]


def has_edge(orc, snap, i, j):
    """[distance(i, j) < r*(U^n_{ij}, u_i, u_j)] at the snapshot."""
    if int(i) == int(j):
        raise InvalidInput("has_edge needs two distinct vertices")
    r = orc.threshold(i, j, snap.epoch, snap.marks)
    dom = snap.domain
    return bool(pair_dist(np.ascontiguousarray(snap.pos), int(i), int(j), dom.side, dom.periodic) < r)


def epoch_thresholds(orc, snap):
    """Dense symmetric N x N table of r* for the snapshot's epoch."""
    N = snap.n
    if N > orc.exact_limit:
        raise ResourceLimit(f"{N} vertices exceed the exact limit {orc.exact_limit}; "
                            "use the cell-list path (components_fast)")
    if N != orc.n_ids:
        raise InvalidInput("snapshot does not match the oracle size")
    out = np.zeros((N, N))
    if N:
        _threshold_table(orc.key, snap.epoch, N, orc.split,
                         np.ascontiguousarray(snap.marks, dtype=np.float64), orc._prm, out)
    return out


@nb.njit(cache=True)
def _pair_flags(key, n, q0, pos, marks, prm, side, periodic, I, J, out):
    for k in range(I.size):
        i = I[k]
        j = J[k]
        U = pair_uniform_core(key, n, i, j, q0)
        r = threshold_core(U, marks[i], marks[j], prm)
        out[k] = pair_dist(pos, i, j, side, periodic) < r


def edge_flags(orc, snap, I, J):
    """Vectorised :func:`has_edge` over id arrays ``I``, ``J`` (bitwise the same answers)."""
    I = np.ascontiguousarray(I, dtype=np.int64)
    J = np.ascontiguousarray(J, dtype=np.int64)
    if I.shape != J.shape:
        raise InvalidInput("id arrays differ in shape")
    if np.any(I == J):
        raise InvalidInput("has_edge needs two distinct vertices")
    out = np.zeros(I.size, dtype=np.bool_)
    if I.size:
        dom = snap.domain
        _pair_flags(orc.key, np.int64(snap.epoch), orc.split, np.ascontiguousarray(snap.pos),
                    np.ascontiguousarray(snap.marks, dtype=np.float64), orc._prm,
                    dom.side, dom.periodic, I.ravel(), J.ravel(), out)
    return out.reshape(I.shape)


@nb.njit(cache=True)
def _bfs_scan(key, n, q0, pos, marks, prm, side, periodic, seeds, target):
    """Component of ``seeds`` by all-pairs scanning; stops early on reaching ``target``."""
    N = pos.shape[0]
    seen = np.zeros(N, np.bool_)
    queue = np.empty(N, np.int64)
    head = 0
    tail = 0
    for s in seeds:
        if not seen[s]:
            seen[s] = True
            queue[tail] = s
            tail += 1
            if target[s]:
                return seen, True
    while head < tail:
        v = queue[head]
        head += 1
        for j in range(N):
            if seen[j]:
                continue
            U = pair_uniform_core(key, n, v, j, q0)
            if pair_dist(pos, v, j, side, periodic) < threshold_core(U, marks[v], marks[j], prm):
                seen[j] = True
                queue[tail] = j
                tail += 1
                if target[j]:
                    return seen, True
    return seen, False


def component_of(orc, snap, seeds, target=None):
    """(mask of vertices reached from ``seeds``, whether ``target`` was hit).

    With a ``target`` mask the search stops at the first target vertex, so the
    returned mask is then only a partial component.
    """
    N = snap.n
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.int64))
    tmask = np.zeros(N, np.bool_) if target is None else np.asarray(target, dtype=np.bool_)
    dom = snap.domain
    if orc.split >= 1.0:
        return _bfs_scan(orc.key, np.int64(snap.epoch), orc.split, np.ascontiguousarray(snap.pos),
                         np.ascontiguousarray(snap.marks, dtype=np.float64), orc._prm,
                         dom.side, dom.periodic, seeds, tmask)
    # sparse route: materialise the snapshot's edges once
    from .graph import snapshot_edges, labels_from_edges
    a, b = snapshot_edges(snap, orc)
    lab = labels_from_edges(N, a, b)
    comp = np.isin(lab.root, lab.root[seeds])
    return comp, bool(np.any(comp & tmask))
