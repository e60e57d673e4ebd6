import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mobilegraph.errors import InvalidInput
from mobilegraph.geometry import Domain, brownian_step, distance


def test_torus_wraparound_distance():
    dom = Domain.torus(100, 2)
    assert dom.side == pytest.approx(10.0)
    assert distance([1, 1], [9, 9], dom) == pytest.approx(math.sqrt(8))


def test_box_distance_is_euclidean():
    assert distance([1.0], [9.0], Domain.box(10, 1)) == pytest.approx(8.0)


def test_distance_to_self_is_zero():
    dom = Domain.torus(50, 3)
    a = np.array([1.0, 2.5, 3.0])
    assert distance(a, a, dom) == 0.0


def test_dimension_mismatch_rejected():
    with pytest.raises(InvalidInput):
        distance([1.0, 2.0], [1.0], Domain.torus(100, 2))


def test_negative_dt_rejected():
    with pytest.raises(InvalidInput):
        brownian_step(np.zeros(1), -0.1, np.random.default_rng(0), Domain.torus(10))


def test_zero_dt_leaves_position():
    p = np.array([3.3, 1.0])
    out = brownian_step(p, 0.0, np.random.default_rng(0), Domain.torus(100, 2))
    np.testing.assert_array_equal(out, p)


class _FixedNormal:
    def __init__(self, value):
        self.value = value

    def normal(self, loc, scale, size):
        return np.full(size, self.value)


def test_step_wraps_on_torus():
    out = brownian_step(np.array([9.9]), 1.0, _FixedNormal(0.3), Domain.torus(10))
    assert out[0] == pytest.approx(0.2)


def test_box_mode_does_not_wrap():
    out = brownian_step(np.array([9.9]), 1.0, _FixedNormal(0.3), Domain.box(10))
    assert out[0] == pytest.approx(10.2)


def test_unit_step_variance():
    rng = np.random.default_rng(11)
    dom = Domain.box(1e9)
    p0 = np.zeros((100_000, 1))
    v = brownian_step(p0, 1.0, rng, dom).var()
    assert 0.97 <= v <= 1.03


@pytest.mark.parametrize("t", [0.25, 2.0])
def test_variance_within_three_se(t):
    n = 100_000
    rng = np.random.default_rng(int(t * 100))
    disp = brownian_step(np.zeros((n, 1)), t, rng, Domain.box(1e9))[:, 0]
    se = t * math.sqrt(2.0 / (n - 1))
    assert abs(disp.var(ddof=1) - t) < 3 * se


coords = st.floats(min_value=-50, max_value=50, allow_nan=False)


@given(st.lists(coords, min_size=6, max_size=6), st.integers(1, 3))
def test_torus_shift_invariance(vals, d):
    dom = Domain.torus(7.0 ** d, d)
    a = np.array(vals[:d])
    b = np.array(vals[3:3 + d])
    s = np.array(vals[1:1 + d]) * 0.37
    base = distance(dom.wrap(a), dom.wrap(b), dom)
    shifted = distance(dom.wrap(a + s), dom.wrap(b + s), dom)
    assert shifted == pytest.approx(base, abs=1e-9)


@given(st.lists(coords, min_size=9, max_size=9))
def test_triangle_inequality_and_symmetry(vals):
    dom = Domain.torus(20.0 ** 3, 3)
    a, b, c = (dom.wrap(np.array(vals[i:i + 3])) for i in (0, 3, 6))
    ab, bc, ac = distance(a, b, dom), distance(b, c, dom), distance(a, c, dom)
    assert ab == distance(b, a, dom)
    assert ac <= ab + bc + 1e-9


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=1, max_size=20))
def test_wrapped_positions_in_range(vals):
    dom = Domain.torus(13.0)
    w = dom.wrap(np.array(vals)[:, None])
    assert np.all((w >= 0) & (w < dom.side))


def test_domain_validation_and_round_trip():
    with pytest.raises(InvalidInput):
        Domain.torus(-1)
    with pytest.raises(InvalidInput):
        Domain("sphere", 1, 1.0)
    dom = Domain.box(12.5, 2)
    assert Domain.from_dict(dom.to_dict()) == dom
    np.testing.assert_array_equal(Domain.torus(16, 2).origin, [0, 0])
    np.testing.assert_array_equal(dom.origin, [6.25, 6.25])
