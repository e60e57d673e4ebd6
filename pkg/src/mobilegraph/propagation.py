"""Broadcast on the torus and the percolation-time proxy on a box."""
from dataclasses import dataclass

import numpy as np

from .dynamics import evolve, check_grid
from .errors import InvalidInput
from .graph import components_fast


@dataclass(frozen=True, eq=False)
class BroadcastTrace:
    times: np.ndarray
    informed: np.ndarray
    n: int
    t_bc: float | None

    def rows(self):
        return [(float(t), int(k), self.n) for t, k in zip(self.times, self.informed)]


@dataclass(frozen=True, eq=False)
class PercTrace:
    times: np.ndarray
    origin_comp: np.ndarray
    giant: np.ndarray
    n: int
    t_perc: float | None


def _labels(snap, orc, components):
    if components is None:
        lab, _ = components_fast(snap, orc)
        return lab
    return components(snap, orc)


def run_broadcast(cloud, orc, t_grid, stop_when_done=True, components=None):
    """Flood a message from the origin through whole components at each grid time.

    The informed set starts as the origin's component at the first grid time
    and is replaced at every grid time by the union of components meeting it.
    With ``stop_when_done`` the trace ends at T_bc.
    """
    if not cloud.palm:
        raise InvalidInput("broadcast needs a Palm cloud with an origin vertex")
    if not cloud.domain.periodic:
        raise InvalidInput("broadcast is defined on the torus")
    grid = check_grid(t_grid)
    n = cloud.n
    informed = np.zeros(n, dtype=bool)
    informed[0] = True
    times, counts = [], []
    t_bc = None
    for snap in evolve(cloud, grid, orc.seed):
        if n > 1:
            lab = _labels(snap, orc, components)
            hit = np.zeros(n, dtype=bool)
            hit[lab.root[informed]] = True
            informed = hit[lab.root]
        k = int(informed.sum())
        times.append(snap.time)
        counts.append(k)
        if k == n and t_bc is None:
            t_bc = snap.time
            if stop_when_done:
                break
    return BroadcastTrace(np.array(times), np.array(counts, dtype=np.int64), n, t_bc)


def run_percolation_proxy(cloud, orc, t_grid, rho=0.25, stop_when_done=True, components=None):
    """First grid time at which the origin sits in a largest component of size >= rho N."""
    if cloud.domain.periodic:
        raise InvalidInput("the percolation proxy is defined on a box")
    if not cloud.palm:
        raise InvalidInput("percolation proxy needs a Palm cloud with an origin vertex")
    if not 0 < rho < 1:
        raise InvalidInput("rho must lie in (0, 1)")
    grid = check_grid(t_grid)
    n = cloud.n
    times, oc, gi = [], [], []
    t_perc = None
    for snap in evolve(cloud, grid, orc.seed):
        lab = _labels(snap, orc, components)
        s0 = lab.size_of(0)
        big = lab.largest[1]
        times.append(snap.time)
        oc.append(s0)
        gi.append(big)
        if t_perc is None and s0 == big and s0 >= rho * n:
            t_perc = snap.time
            if stop_when_done:
                break
    return PercTrace(np.array(times), np.array(oc, dtype=np.int64),
                     np.array(gi, dtype=np.int64), n, t_perc)
