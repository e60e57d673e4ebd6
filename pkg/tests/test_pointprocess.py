import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from _stats import poisson_chi2_pvalue
from mobilegraph.errors import InvalidInput
from mobilegraph.geometry import Domain
from mobilegraph.pointprocess import (MarkLayers, PointCloud, dumps_jsonl, layer_of, loads_jsonl,
                                      read_jsonl, sample_ppp, subcube_counts, thin, write_jsonl)


def test_rejects_bad_intensity():
    with pytest.raises(InvalidInput):
        sample_ppp(Domain.torus(10), 0.0)
    with pytest.raises(InvalidInput):
        sample_ppp(Domain.torus(10), -1.0)


def test_count_mean_and_dispersion():
    rng = np.random.default_rng(2)
    dom = Domain.torus(1000)
    counts = np.array([sample_ppp(dom, 1.0, rng=rng).n for _ in range(10_000)])
    assert 990 <= counts.mean() <= 1010
    disp = counts.var(ddof=1) / counts.mean()
    assert 0.95 <= disp <= 1.05


def test_palm_origin_vertex():
    for dom in (Domain.torus(100, 2), Domain.box(30, 2)):
        c = sample_ppp(dom, 0.5, palm=True, rng=np.random.default_rng(0))
        np.testing.assert_array_equal(c.pos[0], dom.origin)
        assert c.palm and c.ids[0] == 0
        assert 0 < c.marks[0] < 1


def test_pinned_origin_mark():
    c = sample_ppp(Domain.torus(10), 1.0, palm=True, origin_mark=0.999, rng=np.random.default_rng(1))
    assert c.marks[0] == 0.999
    with pytest.raises(InvalidInput):
        sample_ppp(Domain.torus(10), 1.0, palm=True, origin_mark=1.0)


def test_marks_and_positions_valid():
    c = sample_ppp(Domain.torus(64, 2), 3.0, rng=np.random.default_rng(3))
    assert np.all((c.marks > 0) & (c.marks < 1))
    assert np.all(c.domain.contains(c.pos))
    np.testing.assert_array_equal(c.ids, np.arange(c.n))
    assert abs(c.marks.mean() - 0.5) < 4 * math.sqrt(1 / 12 / c.n)


def test_cloud_is_immutable():
    c = sample_ppp(Domain.torus(10), 1.0, rng=np.random.default_rng(0))
    with pytest.raises(ValueError):
        c.pos[0, 0] = 1.0


def test_subcube_counts_are_poisson():
    rng = np.random.default_rng(4)
    dom = Domain.torus(400, 2)
    cells = 4            # subvolume 25
    counts = np.concatenate([subcube_counts(sample_ppp(dom, 0.4, rng=rng).pos, dom, cells)
                             for _ in range(150)])
    assert poisson_chi2_pvalue(counts, 0.4 * 25) > 0.01


# -- mark layers ---------------------------------------------------------------

def test_layer_examples():
    lay = MarkLayers(theta=0.6, eps_theta=0.5, t_scale=1e4, dim=1)
    assert layer_of(0.75, lay) == -1
    assert layer_of(0.4, lay) == 0
    lo, hi = lay.bounds(0)
    assert lo == pytest.approx(0.27441, abs=5e-6) and hi == 0.5
    bottom = 0.5 * math.exp(-(lay.k_max + 1) * 0.6)
    assert layer_of(bottom * 0.9, lay) is None


def test_layer_boundary_is_none():
    lay = MarkLayers(theta=0.6, eps_theta=0.5, t_scale=1e4, dim=1)
    assert layer_of(0.5, lay) is None
    assert layer_of(lay.bounds(1)[1], lay) is None


def test_k_max_formula():
    lay = MarkLayers(theta=0.6, eps_theta=0.1, t_scale=1e6, dim=2)
    assert lay.k_max == math.floor(0.1 * math.log(1e6) / 2)


@given(st.floats(0.55, 0.69), st.floats(0.05, 1.4), st.integers(1, 3),
       st.floats(1e-6, 1 - 1e-9))
def test_layers_partition(theta, eps, d, u):
    lay = MarkLayers(theta, eps, 1e5, d)
    iv = sorted(lay.intervals.values())
    for (a_lo, a_hi), (b_lo, b_hi) in zip(iv, iv[1:]):
        assert a_hi <= b_lo
    k = layer_of(u, lay)
    hits = [kk for kk, (lo, hi) in lay.intervals.items() if lo < u < hi]
    assert hits == ([] if k is None else [k])
    assert lay.classify(np.array([u]))[0] == (-2 if k is None else k)


# -- thinning -----------------------------------------------------------------

def _cloud(n, rng, dom=Domain.torus(1000)):
    pos = rng.random((n, dom.dim)) * dom.side
    marks = rng.random(n) * 0.98 + 0.01
    return PointCloud(dom, np.arange(n), pos, marks, n / dom.volume)


def test_thin_size_concentration():
    c = _cloud(10_000, np.random.default_rng(0))
    e, r = thin(c, 0.5, np.random.default_rng(1))
    assert abs(e.n - 5000) <= 3 * math.sqrt(10_000 * 0.25)
    assert e.intensity == pytest.approx(5.0) and r.intensity == pytest.approx(5.0)


@given(st.integers(0, 400), st.floats(0.01, 0.99), st.integers(0, 2**32))
def test_thin_partitions(n, eps, seed):
    rng = np.random.default_rng(seed)
    c = _cloud(n, rng)
    e, r = thin(c, eps, rng)
    ids = np.concatenate([e.meta["orig_ids"], r.meta["orig_ids"]])
    assert sorted(ids.tolist()) == list(range(n))
    assert e.n + r.n == n
    np.testing.assert_array_equal(e.pos, c.pos[e.meta["orig_ids"]])
    np.testing.assert_array_equal(r.marks, c.marks[r.meta["orig_ids"]])


def test_thin_origin_placement():
    c = sample_ppp(Domain.torus(100), 1.0, palm=True, rng=np.random.default_rng(0))
    e, r = thin(c, 0.3, np.random.default_rng(1))
    assert r.palm and not e.palm and r.meta["orig_ids"][0] == 0
    e, r = thin(c, 0.3, np.random.default_rng(1), origin_to="eps")
    assert e.palm and e.meta["orig_ids"][0] == 0
    with pytest.raises(InvalidInput):
        thin(c, 1.0, np.random.default_rng(0))


def test_thinned_parts_independent():
    # pooled over 10 disjoint subcubes x 1000 replicas
    rng = np.random.default_rng(5)
    dom = Domain.torus(100)
    xs, ys = [], []
    for _ in range(1000):
        c = sample_ppp(dom, 1.0, rng=rng)
        e, r = thin(c, 0.4, rng)
        xs.append(subcube_counts(e.pos, dom, 10))
        ys.append(subcube_counts(r.pos, dom, 10))
    rho = np.corrcoef(np.concatenate(xs), np.concatenate(ys))[0, 1]
    assert abs(rho) < 0.05


def test_thin_union_restores_intensity():
    rng = np.random.default_rng(6)
    dom = Domain.torus(400)
    counts = []
    for _ in range(120):
        c = sample_ppp(dom, 0.5, rng=rng)
        e, r = thin(c, 0.3, rng)
        counts.append(subcube_counts(e.pos, dom, 20) + subcube_counts(r.pos, dom, 20))
    assert poisson_chi2_pvalue(np.concatenate(counts), 0.5 * 20) > 0.01


# -- serialization --------------------------------------------------------------

@given(st.integers(0, 2**32), st.booleans(), st.integers(1, 3))
def test_jsonl_round_trip_bit_exact(seed, palm, d):
    dom = Domain.torus(50.0, d)
    c = sample_ppp(dom, 0.7, palm=palm, rng=np.random.default_rng(seed), seed=seed)
    back = loads_jsonl(dumps_jsonl(c))
    assert back.domain == c.domain and back.palm == c.palm and back.seed == seed
    assert back.intensity == c.intensity
    np.testing.assert_array_equal(back.ids, c.ids)
    assert back.pos.tobytes() == c.pos.tobytes()
    assert back.marks.tobytes() == c.marks.tobytes()


def test_jsonl_file_and_time_field(tmp_path):
    c = sample_ppp(Domain.box(20, 2), 1.0, rng=np.random.default_rng(0), seed=0)
    p = tmp_path / "c.jsonl"
    write_jsonl(c, p, positions=c.pos + 1.0, time=2.5)
    lines = p.read_text().splitlines()
    assert '"time": 2.5' in lines[0] and '"time": 2.5' in lines[1]
    back = read_jsonl(p)
    np.testing.assert_array_equal(back.pos, c.pos + 1.0)
    with pytest.raises(InvalidInput):
        loads_jsonl("")
