import math
import os

import numpy as np
import pytest

from mobilegraph import config as cfgmod
from mobilegraph import studies

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def test_survival_curve_counts_censored_as_infinite():
    s = studies.survival_curve([0.0, 2.0, math.inf, 1.0], [0, 1, 2, 3])
    assert s.tolist() == [0.75, 0.5, 0.25, 0.25]


def test_fit_tail_degenerate_curves():
    grid = np.arange(10.0)
    for surv in (np.zeros(10), np.ones(10)):
        fit = studies.fit_tail(grid, surv)
        assert math.isnan(fit.loglog_slope) and not fit.stretched_better


def test_fit_tail_recovers_stretched_exponential():
    t = np.arange(0, 100.0)
    fit = studies.fit_tail(t, np.exp(-0.3 * t ** 0.5))
    assert fit.stretched_a == pytest.approx(0.3, rel=1e-4)
    assert fit.stretched_b == pytest.approx(0.5, rel=1e-4)
    assert fit.loglog_slope == pytest.approx(0.5, rel=1e-6)
    assert fit.stretched_better


def test_fit_tail_prefers_power_law_on_power_law():
    t = np.arange(0, 200.0)
    fit = studies.fit_tail(t, np.maximum(t, 1) ** -0.7)
    assert not fit.stretched_better
    assert fit.power_a == pytest.approx(0.7, rel=1e-3)


def test_nested():
    assert studies.nested([1.0, 0.5, 0.25, 0.125])
    assert studies.nested([1.0])
    assert not studies.nested([1.0, 0.4])


def test_normalizer():
    n = 1024.0
    assert studies.normalizer(n, 0.5) == pytest.approx(math.log(n) * math.sqrt(math.log(math.log(n))))


def test_run_jobs_preserves_order():
    jobs = list(range(23))
    assert studies.run_jobs(abs, jobs, workers=3) == jobs


def test_replica_seeds_are_distinct():
    seeds = {studies.replica_seed(1, 10, v, r) for v in (256, 512) for r in range(100)}
    assert len(seeds) == 200


def test_spread_cube_fits_in_k():
    for K in (64, 256, 1024, 4096):
        assert studies.spread_cube(K, 1.0, 1) <= K


def test_broadcast_refinement_is_monotone_per_replica():
    cfg = cfgmod.override(cfgmod.load(os.path.join(CONFIGS, "convergence.toml")), replicas=5)
    _, monotone, summary = studies.convergence(cfg)
    assert monotone.all()
    med = [row["median_t_bc"] for row in summary]
    assert all(b <= a for a, b in zip(med, med[1:]))


@pytest.mark.xfail(strict=True, reason="median broadcast time keeps falling as the grid is "
                   "refined; it has not settled by dt=0.125 (see README, observation grid)")
def test_broadcast_time_settles_under_refinement():
    cfg = cfgmod.load(os.path.join(CONFIGS, "convergence.toml"))
    _, _, summary = studies.convergence(cfg)
    assert summary[-1]["rel_change"] < 0.10
