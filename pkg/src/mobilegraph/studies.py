"""Replicated experiments behind the CLI subcommands.

Every replica derives its own seed from the run seed and its labels, so
results do not depend on how replicas are scheduled over workers.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import itertools
import math
import warnings

import numpy as np
from scipy.optimize import curve_fit

from ._prf import derive_key
from .analysis import (build_spread_subgraph, connector_bracket, connector_counts,
                       density_check, membership_experiment, spread_scales, verify_spread)
from .dynamics import EdgeOracle, evolve
from .geometry import Domain
from .pointprocess import MarkLayers, sample_ppp
from .propagation import run_broadcast, run_percolation_proxy

# labels for seed derivation, one per study
_BROADCAST, _PERC, _SPREAD, _CONNECT, _DENSITY, _CONVERGE = 10, 11, 12, 13, 14, 15


def replica_seed(seed, *labels):
    return derive_key(seed, *labels)


def run_jobs(fn, jobs, workers=1):
    """``[fn(j) for j in jobs]``, optionally over a process pool; order is preserved."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def _t_or_inf(t):
    return math.inf if t is None else float(t)


# -- broadcast scaling -------------------------------------------------------------

def normalizer(n, eps):
    """log n (log log n)^eps."""
    return math.log(n) * math.log(math.log(n)) ** eps


@dataclass(frozen=True, eq=False)
class BroadcastResult:
    volume: float
    replica: int
    n: int
    t_bc: float            # inf when not reached by t_max
    trace: list


def _broadcast_job(job):
    cfg, volume, replica = job
    s = replica_seed(cfg.seed, _BROADCAST, int(round(volume)), replica)
    dom = Domain.torus(volume, cfg.dim)
    cloud = sample_ppp(dom, cfg.intensity, palm=True, rng=np.random.default_rng(s),
                       origin_mark=cfg.origin_mark, seed=s)
    orc = EdgeOracle.for_cloud(cloud, cfg.kernel, s)
    tr = run_broadcast(cloud, orc, cfg.t_grid())
    return BroadcastResult(volume, replica, cloud.n, _t_or_inf(tr.t_bc), tr.rows())


def broadcast_scaling(cfg):
    jobs = [(cfg, v, r) for v in cfg.volumes for r in range(cfg.replicas)]
    res = run_jobs(_broadcast_job, jobs, cfg.workers)
    summary = []
    for v in cfg.volumes:
        t = np.array([r.t_bc for r in res if r.volume == v])
        med = float(np.median(t))
        summary.append({
            "volume": v, "replicas": t.size, "censored": int(np.isinf(t).sum()),
            "median_t_bc": med,
            "median_normalized": med / normalizer(v, cfg.log_eps),
            "median_over_n02": med / v ** 0.2,
        })
    return res, summary


# -- percolation tail --------------------------------------------------------------

def _perc_job(job):
    cfg, replica = job
    s = replica_seed(cfg.seed, _PERC, replica)
    dom = Domain.box(cfg.side, cfg.dim)
    cloud = sample_ppp(dom, cfg.intensity, palm=True, rng=np.random.default_rng(s),
                       origin_mark=cfg.origin_mark, seed=s)
    orc = EdgeOracle.for_cloud(cloud, cfg.kernel, s)
    tr = run_percolation_proxy(cloud, orc, cfg.t_grid(), rho=cfg.rho)
    return replica, cloud.n, _t_or_inf(tr.t_perc), tr


def survival_curve(t_perc, grid):
    """P̂(T > t) on the grid; censored replicas count as T = inf."""
    t = np.asarray(t_perc, dtype=float)
    return np.array([(t > g).mean() for g in grid])


@dataclass(frozen=True)
class TailFit:
    stretched_a: float
    stretched_b: float
    stretched_rss: float
    power_c: float
    power_a: float
    power_rss: float
    loglog_slope: float
    points: int

    @property
    def stretched_better(self):
        return self.stretched_rss < self.power_rss


def fit_tail(grid, surv):
    """Least-squares fits of exp(-a t^b) and c t^{-a} to the survival curve.

    Fitted on grid points with t > 0 and P̂ > 0; the slope is the linear
    regression of log(-log P̂) on log t over points with 0 < P̂ < 1.
    """
    grid = np.asarray(grid, dtype=float)
    surv = np.asarray(surv, dtype=float)
    nan = float("nan")
    sel = (grid > 0) & (surv > 0)
    inner = sel & (surv < 1)
    if inner.sum() < 2:
        return TailFit(nan, nan, nan, nan, nan, nan, nan, int(sel.sum()))
    t, s = grid[sel], surv[sel]
    lt, lls = np.log(grid[inner]), np.log(-np.log(surv[inner]))
    slope, icept = np.polyfit(lt, lls, 1)

    def stretched(x, la, b):
        return np.exp(-np.exp(la) * x ** b)

    def power(x, lc, a):
        return np.exp(lc) * x ** (-a)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            ps, _ = curve_fit(stretched, t, s, p0=(icept, max(slope, 0.1)), maxfev=20000)
        except RuntimeError:
            ps = (icept, slope)
        pp0 = np.polyfit(np.log(t), np.log(s), 1)
        try:
            pp, _ = curve_fit(power, t, s, p0=(pp0[1], -pp0[0]), maxfev=20000)
        except RuntimeError:
            pp = (pp0[1], -pp0[0])
    rss_s = float(np.sum((stretched(t, *ps) - s) ** 2))
    rss_p = float(np.sum((power(t, *pp) - s) ** 2))
    return TailFit(float(np.exp(ps[0])), float(ps[1]), rss_s, float(np.exp(pp[0])),
                   float(pp[1]), rss_p, float(slope), int(sel.sum()))


def perc_tail(cfg):
    res = run_jobs(_perc_job, [(cfg, r) for r in range(cfg.replicas)], cfg.workers)
    grid = np.asarray(cfg.t_grid())
    surv = survival_curve([r[2] for r in res], grid)
    return res, grid, surv, fit_tail(grid, surv)


# -- convergence -------------------------------------------------------------------

def _convergence_job(job):
    cfg, replica = job
    s = replica_seed(cfg.seed, _CONVERGE, replica)
    dom = Domain.torus(cfg.volume, cfg.dim)
    cloud = sample_ppp(dom, cfg.intensity, palm=True, rng=np.random.default_rng(s),
                       origin_mark=cfg.origin_mark, seed=s)
    orc = EdgeOracle.for_cloud(cloud, cfg.kernel, s)
    out = []
    for dt in cfg.dt_list:
        tr = run_broadcast(cloud, orc, cfg.t_grid(dt))
        out.append(_t_or_inf(tr.t_bc))
    return replica, cloud.n, out


def nested(dt_list):
    """True when every grid refines the previous one."""
    return all(abs(a / b - round(a / b)) < 1e-9 for a, b in zip(dt_list, dt_list[1:]))


def convergence(cfg):
    res = run_jobs(_convergence_job, [(cfg, r) for r in range(cfg.replicas)], cfg.workers)
    table = np.array([r[2] for r in res])             # replica x dt
    monotone = np.all(np.diff(table, axis=1) <= 0, axis=1)
    med = np.median(table, axis=0)
    summary = []
    for k, dt in enumerate(cfg.dt_list):
        rel = math.nan
        if k > 0 and np.isfinite(med[k - 1]) and med[k - 1] > 0:
            rel = float(abs(med[k] - med[k - 1]) / med[k - 1])
        summary.append({"dt": dt, "median_t_bc": float(med[k]), "rel_change": rel})
    return res, monotone, summary


# -- diagnostics -------------------------------------------------------------------

def spread_cube(K, eps_theta, dim):
    k_p, n_p = spread_scales(K, eps_theta, dim)
    return n_p * 2 ** k_p


def _spread_job(job):
    cfg, K, replica, with_membership = job
    eps = cfg.spread_eps_theta or cfg.eps_theta
    s = replica_seed(cfg.seed, _SPREAD, int(round(K)), replica)
    side = spread_cube(K, eps, cfg.dim)
    dom = Domain.box(side, cfg.dim)
    rng = np.random.default_rng(s)
    cloud = sample_ppp(dom, cfg.intensity, rng=rng, seed=s)
    orc = EdgeOracle(s, cfg.kernel, cloud.n, split=1.0)
    corner = np.zeros(cfg.dim)
    # two snapshots in different epochs
    s1, s2 = evolve(cloud, [0.0, 1.5], s)
    g1 = build_spread_subgraph(s1, orc, corner, K, cfg.theta, eps, b=cfg.b)
    problems = verify_spread(g1, s1, orc)
    row = {"K": K, "replica": replica, "N": cloud.n, "success": int(g1.success),
           "distinguished": g1.count, "bottom": len(g1.bottom), "top_boxes": g1.top_boxes,
           "verified": int(not problems), "single": "", "shared": ""}
    if with_membership and g1.success and cloud.n:
        g2 = build_spread_subgraph(s2, orc, corner, K, cfg.theta, eps, b=cfg.b)
        probe = int(rng.integers(cloud.n))
        res = membership_experiment((s1, s2 if g2.success else None), orc, (g1, g2), probe)
        row["single"] = int(res.single)
        row["shared"] = "" if res.shared is None else int(res.shared)
    return row, problems


def spread_study(cfg, with_membership=True):
    jobs = [(cfg, K, r, with_membership) for K in cfg.K for r in range(cfg.replicas)]
    out = run_jobs(_spread_job, jobs, cfg.workers)
    rows = [r for r, _ in out]
    problems = [p for _, ps in out for p in ps]
    summary = []
    for K in cfg.K:
        rk = [r for r in rows if r["K"] == K]
        single = [r["single"] for r in rk if r["single"] != ""]
        shared = [r["shared"] for r in rk if r["shared"] != ""]
        summary.append({
            "K": K, "replicas": len(rk),
            "success_fraction": float(np.mean([r["success"] for r in rk])),
            "all_verified": int(all(r["verified"] for r in rk)),
            "membership_single": float(np.mean(single)) if single else math.nan,
            "membership_shared": float(np.mean(shared)) if shared else math.nan,
            "membership_n": len(single),
        })
    return rows, summary, problems


CONNECTOR_GRID = {"u": (0.05, 0.15, 0.3), "v": (0.05, 0.15, 0.3), "r": (1.0, 4.0, 16.0)}


def _connector_job(job):
    cfg, idx, u, v, r = job
    s = replica_seed(cfg.seed, _CONNECT, idx)
    c = connector_counts(cfg.kernel, cfg.intensity, u, v, r, cfg.connector_replicas, s,
                         volume=cfg.connector_volume)
    mean = float(c.mean())
    var = float(c.var(ddof=1)) if c.size > 1 else math.nan
    kp = cfg.kernel
    br = connector_bracket(u, v, r, kp.gamma, kp.delta, kp.dim)
    return {"u": u, "v": v, "r": r, "replicas": c.size, "mean": mean, "variance": var,
            "dispersion": var / mean if mean > 0 else math.nan, "bracket": br,
            "ratio": mean / br}


def connector_study(cfg, grid=None):
    g = CONNECTOR_GRID if grid is None else grid
    combos = list(itertools.product(g["u"], g["v"], g["r"]))
    rows = run_jobs(_connector_job, [(cfg, i, *c) for i, c in enumerate(combos)], cfg.workers)
    fitted_c = min(r["ratio"] for r in rows)
    return rows, fitted_c


def density_study(cfg):
    """Density check over ``density_steps`` integer times on a cube of the run domain."""
    s = replica_seed(cfg.seed, _DENSITY)
    dom = cfg.domain()
    cloud = sample_ppp(dom, cfg.intensity, rng=np.random.default_rng(s), seed=s)
    side = math.floor(dom.side / cfg.ell) * cfg.ell
    layers = MarkLayers(cfg.theta, cfg.eps_theta, float(cfg.density_steps), cfg.dim)
    snaps = evolve(cloud, np.arange(cfg.density_steps, dtype=float), s)
    return density_check(snaps, np.zeros(cfg.dim), side, cfg.ell, cfg.alpha_dense, layers,
                         intensity=cfg.intensity)
