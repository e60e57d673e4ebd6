"""Constructive evenly-spread subgraph: nested boxes linked through connectors.

Layer k = 0..k_p tessellates the cube into boxes A_{k,v} of side 2^k; the
layer-k box keeps its smallest-mark vertex with mark in
(e^{-(k+1)θd}/2, e^{-kθd}/2) as representative.  Top-layer boxes are chained
along a boustrophedon path, and each lower box hangs off its parent.  A box is
good when its chain predecessor (or parent) is good, it has a representative,
and some unused vertex of mark >= 1/2 inside the box is adjacent to both
representatives.
"""
from dataclasses import dataclass, field
import itertools
import math

import numpy as np

from ..dynamics import edge_flags
from ..errors import InvalidInput
from ..graph import UnionFind


def spread_scales(K, eps_theta, dim):
    """(k_p, n_p) for a cube of volume K."""
    if not K >= 1:
        raise InvalidInput("K must be at least 1")
    k_p = int(math.floor(eps_theta * math.log(K) / dim))
    n_p = int(math.floor(K ** ((1.0 - eps_theta * math.log(2.0)) / dim) + 1e-9))
    return max(k_p, 0), n_p


def snake_order(n, d):
    """Boustrophedon enumeration of {0..n-1}^d; consecutive entries are adjacent."""
    out = []
    for idx in range(n ** d):
        digits = []
        x = idx
        for _ in range(d):
            digits.append(x % n)
            x //= n
        digits = digits[::-1]      # most significant first
        v = []
        parity = 0
        for dig in digits:
            v.append(n - 1 - dig if parity % 2 else dig)
            parity += v[-1]         # parity of the emitted prefix, not of the raw digits
        out.append(tuple(v))
    return out


def default_b(dim, k0=2):
    return 2.0 ** (-k0 * dim)


@dataclass(eq=False)
class SpreadSubgraph:
    K: float
    k_p: int
    n_p: int
    side: float
    corner: np.ndarray
    theta: float
    b: float
    good: dict = field(default_factory=dict)          # (k, v) -> representative id
    links: list = field(default_factory=list)         # (connector, child rep, parent rep, k, v)
    top_boxes: int = 0

    @property
    def distinguished(self):
        return np.array(sorted(self.good.values()), dtype=np.int64)

    @property
    def count(self):
        return len(self.good)

    @property
    def bottom(self):
        return np.array(sorted(r for (k, _), r in self.good.items() if k == self.k_p),
                        dtype=np.int64)

    @property
    def clause_count(self):
        return self.count >= self.b * self.K

    @property
    def clause_bottom(self):
        return self.top_boxes > 0 and len(self.bottom) == self.top_boxes

    @property
    def success(self):
        return bool(self.clause_count and self.clause_bottom)

    @property
    def connectors(self):
        return np.array([z for z, *_ in self.links], dtype=np.int64)

    def window(self, k, dim):
        td = self.theta * dim
        return 0.5 * math.exp(-(k + 1) * td), 0.5 * math.exp(-k * td)


def _relative(pos, dom, corner):
    rel = np.asarray(pos, dtype=float) - corner
    if dom.periodic:
        rel = np.mod(rel, dom.side)
    return rel


def build_spread_subgraph(snap, orc, corner, K, theta, eps_theta, b=None):
    """Run the box-tree construction inside the cube ``corner + [0, K^{1/d})^d``."""
    kp = orc.kernel
    dom = snap.domain
    d = dom.dim
    if not kp.ultrasmall:
        raise InvalidInput("construction needs gamma > delta / (delta + 1)")
    if not 0 < eps_theta < 1 / math.log(2):
        raise InvalidInput("eps_theta must lie in (0, 1/log 2)")
    k_p, n_p = spread_scales(K, eps_theta, d)
    if n_p < 1:
        raise InvalidInput("cube too small for a single top-layer box")
    side = n_p * 2 ** k_p
    if side > K ** (1.0 / d) * (1 + 1e-9) or (dom.periodic and side > dom.side):
        raise InvalidInput("cube too small for the tessellation")
    corner = np.atleast_1d(np.asarray(corner, dtype=float))
    b = default_b(d) if b is None else float(b)
    sg = SpreadSubgraph(float(K), k_p, n_p, float(side), corner, float(theta), b,
                        top_boxes=n_p ** d)
    if snap.n == 0:
        return sg

    rel = _relative(snap.pos, dom, corner)
    inside = np.all((rel >= 0) & (rel < side), axis=1)
    marks = snap.marks
    ids = np.arange(snap.n)

    # representatives per layer
    reps = []
    for k in range(k_p + 1):
        lo, hi = sg.window(k, d)
        sel = inside & (marks > lo) & (marks < hi)
        cells = np.floor(rel[sel] / 2 ** k).astype(np.int64)
        table = {}
        for vid, cell in zip(ids[sel], map(tuple, cells)):
            cur = table.get(cell)
            if cur is None or marks[vid] < marks[cur] or (marks[vid] == marks[cur] and vid < cur):
                table[cell] = int(vid)
        reps.append(table)

    # connector pool: mark >= 1/2, bucketed per layer cell, in id order
    conn_ids = ids[inside & (marks >= 0.5)]
    pools = []
    for k in range(k_p + 1):
        cells = np.floor(rel[conn_ids] / 2 ** k).astype(np.int64)
        pool = {}
        for vid, cell in zip(conn_ids, map(tuple, cells)):
            pool.setdefault(cell, []).append(int(vid))
        pools.append(pool)
    used = set()

    def connect(k, v, x, y):
        cand = [z for z in pools[k].get(v, ()) if z not in used]
        if not cand:
            return None
        cand = np.array(cand, dtype=np.int64)
        ok = edge_flags(orc, snap, cand, np.full(cand.size, x)) & \
            edge_flags(orc, snap, cand, np.full(cand.size, y))
        hit = np.flatnonzero(ok)
        if hit.size == 0:
            return None
        z = int(cand[hit[0]])
        used.add(z)
        return z

    # top layer along the snake path
    prev_ok, prev_rep = False, None
    for i, v in enumerate(snake_order(n_p, d)):
        rep = reps[k_p].get(v)
        if i == 0:
            ok = rep is not None
        else:
            ok = False
            if prev_ok and rep is not None:
                z = connect(k_p, v, rep, prev_rep)
                if z is not None:
                    sg.links.append((z, rep, prev_rep, k_p, v))
                    ok = True
        if ok:
            sg.good[(k_p, v)] = rep
        prev_ok, prev_rep = ok, rep

    # lower layers hang off their parents
    for k in range(k_p - 1, -1, -1):
        m = n_p * 2 ** (k_p - k)
        for v in itertools.product(range(m), repeat=d):
            parent = tuple(x // 2 for x in v)
            prep = sg.good.get((k + 1, parent))
            rep = reps[k].get(v)
            if prep is None or rep is None:
                continue
            z = connect(k, v, rep, prep)
            if z is not None:
                sg.links.append((z, rep, prep, k, v))
                sg.good[(k, v)] = rep
    return sg


def verify_spread(sg, snap, orc):
    """List of violated properties (empty when the subgraph checks out)."""
    problems = []
    dom = snap.domain
    d = dom.dim
    marks = snap.marks
    rel = _relative(snap.pos, dom, sg.corner)

    def in_box(vid, k, v):
        cell = np.floor(rel[vid] / 2 ** k).astype(np.int64)
        return bool(np.all(rel[vid] >= 0) and np.all(rel[vid] < sg.side) and tuple(cell) == tuple(v))

    for (k, v), rep in sg.good.items():
        lo, hi = sg.window(k, d)
        if not lo < marks[rep] < hi:
            problems.append(f"representative {rep} of box {(k, v)} outside its mark window")
        if not in_box(rep, k, v):
            problems.append(f"representative {rep} not located in box {(k, v)}")
    bottom_cap = 0.5 * math.exp(-sg.k_p * sg.theta * d)
    for r in sg.bottom:
        if not marks[r] < bottom_cap:
            problems.append(f"bottom vertex {r} has mark {marks[r]} >= {bottom_cap}")
    conns = [z for z, *_ in sg.links]
    if len(set(conns)) != len(conns):
        problems.append("a connector is used twice")
    if sg.links:
        z = np.array(conns, dtype=np.int64)
        x = np.array([l[1] for l in sg.links], dtype=np.int64)
        y = np.array([l[2] for l in sg.links], dtype=np.int64)
        ex = edge_flags(orc, snap, z, x)
        ey = edge_flags(orc, snap, z, y)
        for idx, (zz, xx, yy, k, v) in enumerate(sg.links):
            if marks[zz] < 0.5:
                problems.append(f"connector {zz} has mark below 1/2")
            if not (ex[idx] and ey[idx]):
                problems.append(f"connector {zz} not adjacent to both {xx} and {yy}")
            if not in_box(zz, k, v):
                problems.append(f"connector {zz} not inside box {(k, v)}")
    dist = sg.distinguished
    if dist.size:
        ends = [v for link in sg.links for v in link[:3]]
        ids = np.unique(np.concatenate([dist, np.array(ends, dtype=np.int64)]))
        nodes = {int(v): i for i, v in enumerate(ids)}
        uf = UnionFind(len(nodes))
        for zz, xx, yy, *_ in sg.links:
            uf.union(nodes[zz], nodes[xx])
            uf.union(nodes[zz], nodes[yy])
        roots = {uf.find(nodes[int(v)]) for v in dist}
        if len(roots) != 1:
            problems.append(f"distinguished vertices split into {len(roots)} pieces")
    return problems
