from collections import deque

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mobilegraph import graph
from mobilegraph.dynamics import EdgeOracle, Snapshot, has_edge, snapshot_at
from mobilegraph.errors import ResourceLimit
from mobilegraph.geometry import Domain, distance
from mobilegraph.graph import (CellIndex, ComponentLabels, UnionFind, component_summary,
                               components_exact, components_fast, degree_stats, labels_from_edges,
                               labels_union_find, missed_edge_bound, neighbors, snapshot_edges)
from mobilegraph.kernels import AGERCM, GENERIC, SOFTBOOLEAN, KernelParams, mean_degree_upper
from mobilegraph.pointprocess import PointCloud, sample_ppp


def bfs_labels(n, adj):
    root = np.full(n, -1)
    for s in range(n):
        if root[s] >= 0:
            continue
        root[s] = s
        q = deque([s])
        while q:
            v = q.popleft()
            for w in adj[v]:
                if root[w] < 0:
                    root[w] = s
                    q.append(w)
    return root


def brute_adjacency(snap, orc):
    adj = [[] for _ in range(snap.n)]
    for i in range(snap.n):
        for j in range(i + 1, snap.n):
            if has_edge(orc, snap, i, j):
                adj[i].append(j)
                adj[j].append(i)
    return adj


# -- union-find and labels ---------------------------------------------------------

def test_union_find_tie_break_and_sizes():
    uf = UnionFind(6)
    assert uf.union(3, 1) == 1          # equal sizes: smaller id wins
    assert uf.union(4, 1) == 1          # larger set wins
    uf.union(5, 0)
    assert uf.union(0, 3) == 1          # size 3 beats size 2
    assert uf.size[1] == 5
    assert uf.roots().tolist() == [1, 1, 2, 1, 1, 1]


@given(st.integers(1, 40), st.lists(st.tuples(st.integers(0, 39), st.integers(0, 39)), max_size=80))
def test_label_routes_agree(n, pairs):
    pairs = [(a % n, b % n) for a, b in pairs if a % n != b % n]
    a = np.array([p[0] for p in pairs], dtype=np.int64)
    b = np.array([p[1] for p in pairs], dtype=np.int64)
    l1 = labels_from_edges(n, a, b)
    l2 = labels_union_find(n, a, b)
    adj = [[] for _ in range(n)]
    for x, y in pairs:
        adj[x].append(y)
        adj[y].append(x)
    ref = bfs_labels(n, adj)
    np.testing.assert_array_equal(l1.root, ref)
    np.testing.assert_array_equal(l2.root, ref)
    assert sum(l1.sizes.values()) == n
    assert l1.largest[1] >= l1.second_largest[1]
    # idempotent: the root of a root is itself
    np.testing.assert_array_equal(l1.root[l1.root], l1.root)


def test_labels_empty_and_ranking():
    lab = ComponentLabels.from_labels(np.zeros(0, np.int64))
    assert lab.num_components == 0 and lab.largest == (None, 0)
    lab = ComponentLabels.from_labels([7, 7, 2, 2, 5])
    assert lab.root.tolist() == [0, 0, 2, 2, 4]
    assert lab.largest == (0, 2) and lab.second_largest == (2, 2)
    assert lab.size_of(3) == 2 and lab.same(0, 1) and not lab.same(0, 4)


# -- cell index ----------------------------------------------------------------------

@given(st.integers(0, 300), st.integers(1, 3), st.booleans(), st.integers(0, 2**32))
def test_cell_index_buckets(n, d, periodic, seed):
    rng = np.random.default_rng(seed)
    dom = Domain.torus(9.0 ** d, d) if periodic else Domain.box(9.0, d)
    pos = rng.random((n, d)) * dom.side
    if not periodic and n:
        pos[0] = -3.0                       # box mode lets vertices leave
    idx = CellIndex(pos, dom)
    seen = np.concatenate([idx.bucket(c) for c in range(idx.num_cells)]) if n else np.zeros(0)
    assert sorted(seen.tolist()) == list(range(n))
    for c in range(idx.num_cells):
        for v in idx.bucket(c):
            assert idx.cell_of[v] == c


@given(st.integers(2, 200), st.integers(1, 2), st.booleans(), st.floats(0.1, 6.0),
       st.integers(0, 2**32))
def test_cell_candidates_cover_ball(n, d, periodic, radius, seed):
    rng = np.random.default_rng(seed)
    dom = Domain.torus(10.0 ** d, d) if periodic else Domain.box(10.0, d)
    pos = rng.random((n, d)) * dom.side
    idx = CellIndex(pos, dom)
    for i in range(min(n, 10)):
        cand = set(idx.candidates(i, radius).tolist())
        near = np.flatnonzero(distance(pos[i], pos, dom) <= radius)
        assert set(near.tolist()) <= cand


# -- components --------------------------------------------------------------------

def test_no_edges_gives_singletons():
    c = sample_ppp(Domain.torus(100), 1.0, seed=0)
    orc = EdgeOracle(0, KernelParams(alpha=1e-300), c.n)
    snap = snapshot_at(c, 0.0, 0)
    for lab in (components_exact(snap, orc), components_fast(snap, orc)[0]):
        assert lab.num_components == c.n
        assert sum(lab.sizes.values()) == c.n


def test_hand_instance_with_forced_thresholds(monkeypatch):
    # five vertices on a line; thresholds chosen so that {0,1,3} and {2,4} connect
    pos = np.array([[0.0], [1.0], [5.0], [2.5], [9.0]])
    cloud = PointCloud(Domain.box(10.0), np.arange(5), pos, np.full(5, 0.5), 1.0)
    table = np.zeros((5, 5))

    def put(i, j, r):
        table[i, j] = table[j, i] = r

    put(0, 1, 1.5)      # d=1.0 -> edge
    put(1, 3, 1.6)      # d=1.5 -> edge
    put(0, 2, 4.0)      # d=5.0 -> no edge
    put(2, 4, 4.5)      # d=4.0 -> edge
    put(3, 2, 2.5)      # d=2.5 -> not strictly less, no edge
    monkeypatch.setattr(graph, "epoch_thresholds", lambda orc, snap: table)
    snap = Snapshot(0.0, 0, cloud.pos, cloud)
    lab = components_exact(snap, EdgeOracle(0, KernelParams(), 5))
    assert lab.root.tolist() == [0, 0, 2, 0, 2]
    assert lab.sizes == {0: 3, 2: 2}


def test_exact_route_enforces_limit():
    c = sample_ppp(Domain.torus(100), 1.0, seed=0)
    orc = EdgeOracle(0, KernelParams(), c.n, exact_limit=20)
    with pytest.raises(ResourceLimit):
        components_exact(snapshot_at(c, 0.0, 0), orc)


def _instance(k):
    rng = np.random.default_rng(1000 + k)
    d = int(rng.integers(1, 3))
    variant = [GENERIC, SOFTBOOLEAN, AGERCM][k % 3]
    periodic = k % 2 == 0
    n_target = int(rng.integers(2, 500))
    vol = n_target / 2.0
    dom = Domain.torus(vol, d) if periodic else Domain.box(vol ** (1 / d), d)
    kp = KernelParams(variant, gamma=float(rng.uniform(0.5, 0.9)), delta=float(rng.uniform(1.2, 3)),
                      alpha=float(rng.uniform(0.3, 1)), kappa1=float(rng.uniform(0.01, 1)),
                      beta=float(rng.uniform(0.05, 1)), dim=d)
    c = sample_ppp(dom, 2.0, palm=True, rng=rng)
    split = [1.0, 0.3, 0.02, None][k % 4]
    orc = EdgeOracle.for_cloud(c, kp, k, split=split)
    snap = snapshot_at(c, float(rng.uniform(0, 5)), k)
    return snap, orc


@pytest.mark.parametrize("k", range(0, 100, 9))
def test_fast_equals_exact_equals_bfs(k):
    snap, orc = _instance(k)
    assert snap.n <= 600
    exact = components_exact(snap, orc)
    fast, bound = components_fast(snap, orc)
    assert bound == 0.0
    np.testing.assert_array_equal(fast.root, exact.root)
    np.testing.assert_array_equal(exact.root, bfs_labels(snap.n, brute_adjacency(snap, orc)))


def test_trunc_radius_beyond_diameter_is_exact():
    snap, orc = _instance(5)
    lab, bound = components_fast(snap, orc, trunc_radius=snap.domain.diameter * 1.01)
    assert bound == 0.0
    np.testing.assert_array_equal(lab.root, components_exact(snap, orc).root)


def test_truncation_bound_and_refinement():
    c = sample_ppp(Domain.torus(2000), 2.0, seed=3)
    orc = EdgeOracle(3, KernelParams(), c.n, split=0.05)
    snap = snapshot_at(c, 0.0, 3)
    a_full, b_full = snapshot_edges(snap, orc)
    lab_t, bound = components_fast(snap, orc, trunc_radius=2.0)
    assert bound > 0
    assert bound == pytest.approx(missed_edge_bound(snap, orc, 2.0))
    a_t, b_t = snapshot_edges(snap, orc, trunc_radius=2.0)
    full = set(zip(a_full.tolist(), b_full.tolist()))
    assert set(zip(a_t.tolist(), b_t.tolist())) <= full
    exact = labels_from_edges(c.n, a_full, b_full)
    # truncated components refine the exact ones
    assert np.all(exact.root[lab_t.root] == exact.root)


def test_missed_bound_zero_when_thresholds_short():
    kp = KernelParams(kappa1=1e-6)
    c = sample_ppp(Domain.torus(200), 1.0, seed=0)
    orc = EdgeOracle(0, kp, c.n, split=0.5)
    snap = snapshot_at(c, 0.0, 0)
    big = float(graph._reach_radii(orc, c.marks, orc.split).max()) * 1.01
    assert components_fast(snap, orc, trunc_radius=big)[1] == 0.0


# -- degrees --------------------------------------------------------------------------

def test_mean_degree_matches_quadrature():
    kp = KernelParams()
    dom = Domain.torus(10_000)
    oracle_value = mean_degree_upper(kp, 1.0, r_max=dom.side / 2)
    means = []
    for s in range(50):
        c = sample_ppp(dom, 1.0, rng=np.random.default_rng(s))
        orc = EdgeOracle.for_cloud(c, kp, s)
        means.append(degree_stats(snapshot_at(c, 0.0, s), orc).mean)
    assert abs(np.mean(means) / oracle_value - 1) < 0.05


def test_degree_edge_cases_and_symmetry():
    dom = Domain.torus(10)
    empty = PointCloud(dom, np.zeros(0, np.int64), np.zeros((0, 1)), np.zeros(0), 1.0)
    ds = degree_stats(Snapshot(0.0, 0, empty.pos, empty), EdgeOracle(0, KernelParams(), 0))
    assert ds.histogram.size == 0 and ds.mean == 0.0
    c = sample_ppp(Domain.torus(300), 2.0, seed=1)
    orc = EdgeOracle.for_cloud(c, KernelParams(), 1)
    snap = snapshot_at(c, 0.2, 1)
    edges = snapshot_edges(snap, orc)
    for i in range(0, c.n, 17):
        for j in neighbors(edges, i):
            assert i in neighbors(edges, j)
    ds = degree_stats(snap, orc)
    assert ds.histogram.sum() == c.n and ds.degrees.sum() == 2 * len(edges[0])


def test_component_summary_row():
    c = sample_ppp(Domain.torus(300), 2.0, seed=1)
    orc = EdgeOracle.for_cloud(c, KernelParams(), 1)
    t, n, k, big, second, mean = component_summary(snapshot_at(c, 0.5, 1), orc)
    assert t == 0.5 and n == c.n and big >= second and 1 <= k <= n and mean > 0
