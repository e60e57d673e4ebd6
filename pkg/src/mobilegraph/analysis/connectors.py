"""Common neighbours of mark >= 1/2 ("connectors") for a pair of powerful vertices."""
from dataclasses import dataclass

import numpy as np

from ..dynamics import EdgeOracle, Snapshot, edge_flags
from ..errors import InvalidInput
from ..geometry import distance, Domain
from ..kernels import unit_ball_volume
from ..pointprocess import PointCloud
from .._prf import derive_key


def connector_bracket(u, v, r, gamma, delta, dim):
    """u^{-γ} (1 ∧ v^{-γδ} (r + u^{-γ/d})^{-dδ})."""
    return u ** (-gamma) * min(1.0, v ** (-gamma * delta) * (r + u ** (-gamma / dim)) ** (-dim * delta))


@dataclass(frozen=True)
class ConnectorCount:
    count: int
    bracket: float


def two_connector_count(snap, orc, i, j):
    marks = snap.marks
    if not (marks[i] < 0.5 and marks[j] < 0.5):
        raise InvalidInput("both endpoints need marks below 1/2")
    if i == j:
        raise InvalidInput("need two distinct vertices")
    z = np.flatnonzero(marks >= 0.5)
    z = z[(z != i) & (z != j)]
    both = edge_flags(orc, snap, z, np.full(z.size, i)) & edge_flags(orc, snap, z, np.full(z.size, j))
    kp = orc.kernel
    r = float(distance(snap.pos[i], snap.pos[j], snap.domain))
    return ConnectorCount(int(both.sum()),
                          connector_bracket(marks[i], marks[j], r, kp.gamma, kp.delta, kp.dim))


def proof_constant(kp, lam):
    """λ V_d α^2 (1 ∧ κ1) / 2 with the variant's lower-bound constants."""
    a, k1 = kp.lower_bound_constants()
    return lam * unit_ball_volume(kp.dim) * a * a * min(1.0, k1) / 2.0


def connector_counts(kp, lam, u, v, r, replicas, seed, volume=256.0):
    """Connector counts for a fixed pair (marks u, v at distance r) over fresh Poisson clouds.

    Replica ``k`` draws its own cloud and uses epoch ``k`` of one edge oracle.
    """
    dom = Domain.torus(volume, kp.dim)
    rng = np.random.default_rng(derive_key(seed, 11))
    x = np.zeros(kp.dim)
    y = np.zeros(kp.dim)
    y[0] = r
    out = np.empty(replicas, dtype=np.int64)
    # only vertices of mark >= 1/2 can be connectors, so the cloud is thinned up front
    lam_hi = lam * 0.5
    for k in range(replicas):
        n = rng.poisson(lam_hi * dom.volume)
        pos = np.vstack([x, y, rng.random((n, kp.dim)) * dom.side])
        marks = np.concatenate([[u, v], 0.5 + 0.5 * (1.0 - rng.random(n))])
        marks = np.minimum(marks, np.nextafter(1.0, 0.0))
        cloud = PointCloud(dom, np.arange(n + 2), dom.wrap(pos), marks, lam, palm=True)
        orc = EdgeOracle(seed, kp, n + 2, split=1.0)
        snap = Snapshot(float(k), k, cloud.pos, cloud)
        out[k] = two_connector_count(snap, orc, 0, 1).count
    return out
