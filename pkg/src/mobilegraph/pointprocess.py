"""Marked Poisson point processes, Palm origin, mark layers and thinning."""
from dataclasses import dataclass, field, replace
import json
import logging
import math

import numpy as np

from .errors import InvalidInput
from .geometry import Domain

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Vertices at time 0.

    ``ids`` are unique nonnegative integers; every simulation routine assumes
    ``ids == arange(N)`` (sampling guarantees it, thinning renumbers).  When
    ``palm`` is true, vertex 0 is the origin vertex.
    """

    domain: Domain
    ids: np.ndarray
    pos: np.ndarray
    marks: np.ndarray
    intensity: float
    palm: bool = False
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.ids)
        if self.pos.shape != (n, self.domain.dim) or self.marks.shape != (n,):
            raise InvalidInput("ids, positions and marks disagree in shape")
        if n and not (np.all(self.marks > 0) and np.all(self.marks < 1)):
            raise InvalidInput("marks must lie strictly inside (0, 1)")
        for a in (self.ids, self.pos, self.marks):
            a.setflags(write=False)

    def __len__(self):
        return len(self.ids)

    @property
    def n(self):
        return len(self.ids)

    def subset(self, mask, palm=None):
        """Restrict to ``mask`` and renumber ids contiguously (original ids kept in meta)."""
        mask = np.asarray(mask, dtype=bool)
        orig = self.meta.get("orig_ids", self.ids)
        return PointCloud(
            self.domain, np.arange(int(mask.sum()), dtype=np.int64),
            self.pos[mask].copy(), self.marks[mask].copy(), self.intensity,
            palm=self.palm if palm is None else palm, seed=self.seed,
            meta={**self.meta, "orig_ids": np.asarray(orig)[mask]},
        )


def _open_uniform(rng, size):
    # rng.random() is on [0, 1); reject the (astronomically rare) zero
    u = rng.random(size)
    while np.any(u == 0.0):
        bad = u == 0.0
        u[bad] = rng.random(int(bad.sum()))
    return u


def sample_ppp(dom, lam, palm=False, rng=None, origin_mark=None, seed=None):
    """Poisson(λ) points, uniform positions and uniform marks on ``dom``.

    With ``palm`` an origin vertex (id 0) is prepended at ``dom.origin``; its
    mark is uniform unless pinned with ``origin_mark``.
    """
    if not lam > 0 or not math.isfinite(lam):
        raise InvalidInput("intensity must be positive")
    if not dom.volume > 0:
        raise InvalidInput("domain volume must be positive")
    if rng is None:
        rng = np.random.default_rng(seed)
    n = rng.poisson(lam * dom.volume)
    pos = rng.random((n, dom.dim)) * dom.side
    marks = _open_uniform(rng, n)
    if palm:
        if origin_mark is None:
            m0 = _open_uniform(rng, 1)
        else:
            if not 0 < origin_mark < 1:
                raise InvalidInput("origin mark must lie in (0, 1)")
            m0 = np.array([float(origin_mark)])
        pos = np.vstack([dom.origin[None, :], pos])
        marks = np.concatenate([m0, marks])
    n_all = len(marks)
    return PointCloud(dom, np.arange(n_all, dtype=np.int64), pos, marks,
                      float(lam), palm=bool(palm), seed=seed)


@dataclass(frozen=True)
class MarkLayers:
    """Mark windows I_{-1} = (1/2, 1) and I_k = (e^{-(k+1)θd}/2, e^{-kθd}/2), k = 0..k_max."""

    theta: float
    eps_theta: float
    t_scale: float
    dim: int = 1

    def __post_init__(self):
        if not self.theta > 0:
            raise InvalidInput("theta must be positive")
        if not self.eps_theta > 0:
            raise InvalidInput("eps_theta must be positive")
        if not self.t_scale >= 1:
            raise InvalidInput("t_scale must be at least 1")

    @property
    def k_max(self):
        return int(math.floor(self.eps_theta * math.log(self.t_scale) / self.dim))

    def bounds(self, k):
        if k == -1:
            return 0.5, 1.0
        td = self.theta * self.dim
        return 0.5 * math.exp(-(k + 1) * td), 0.5 * math.exp(-k * td)

    @property
    def intervals(self):
        return {k: self.bounds(k) for k in range(-1, self.k_max + 1)}

    def width(self, k):
        lo, hi = self.bounds(k)
        return hi - lo

    def classify(self, marks):
        """Vectorised :func:`layer_of`; unclassified marks get -2."""
        marks = np.asarray(marks, dtype=float)
        out = np.full(marks.shape, -2, dtype=np.int64)
        for k, (lo, hi) in self.intervals.items():
            out[(marks > lo) & (marks < hi)] = k
        return out


def layer_of(u, layers):
    """Index k of the open window containing ``u``, or None."""
    if not 0 < u < 1:
        raise InvalidInput("mark must lie in (0, 1)")
    if u > 0.5:
        return -1
    if u == 0.5:
        log.debug("mark %r on a layer boundary", u)
        return None
    k = int(math.floor(-math.log(2.0 * u) / (layers.theta * layers.dim)))
    # guard against rounding in the log near a boundary
    for kk in (k - 1, k, k + 1):
        if 0 <= kk <= layers.k_max:
            lo, hi = layers.bounds(kk)
            if lo < u < hi:
                return kk
            if u == lo or u == hi:
                log.debug("mark %r on a layer boundary", u)
                return None
    return None


def thin(cloud, eps, rng, origin_to="rest"):
    """Split into an ε-part and a (1-ε)-part by independent coin flips.

    Returns ``(eps_part, rest_part)``.  Each part is renumbered from 0 with the
    original ids kept in ``meta['orig_ids']``; the origin vertex goes to the
    part named by ``origin_to`` ('rest' or 'eps') and stays first there.
    """
    if not 0 < eps < 1:
        raise InvalidInput("eps must lie in (0, 1)")
    if origin_to not in ("rest", "eps"):
        raise InvalidInput("origin_to must be 'rest' or 'eps'")
    coin = rng.random(cloud.n) < eps
    if cloud.palm and cloud.n:
        coin[0] = origin_to == "eps"
    eps_part = cloud.subset(coin, palm=cloud.palm and origin_to == "eps")
    rest_part = cloud.subset(~coin, palm=cloud.palm and origin_to == "rest")
    eps_part = replace(eps_part, intensity=cloud.intensity * eps)
    rest_part = replace(rest_part, intensity=cloud.intensity * (1 - eps))
    return eps_part, rest_part


def subcube_counts(pos, dom, cells_per_axis):
    """Counts of points in each of ``cells_per_axis**d`` equal subcubes (points outside ignored)."""
    pos = np.asarray(pos, dtype=float).reshape(-1, dom.dim)
    m = int(cells_per_axis)
    idx = np.floor(pos / dom.side * m).astype(np.int64)
    inside = np.all((idx >= 0) & (idx < m), axis=1)
    flat = np.ravel_multi_index(idx[inside].T, (m,) * dom.dim)
    return np.bincount(flat, minlength=m ** dom.dim)


# -- JSONL -----------------------------------------------------------------

def dumps_jsonl(cloud, positions=None, time=None):
    """JSONL text: a header line, then one ``{id, pos, mark}`` line per vertex.

    ``positions`` overrides the stored time-0 positions (snapshot dumps), in
    which case every vertex line also carries ``time``.
    """
    pos = cloud.pos if positions is None else np.asarray(positions)
    header = {
        "domain": cloud.domain.to_dict(),
        "intensity": cloud.intensity,
        "seed": cloud.seed,
        "palm": cloud.palm,
        "n": cloud.n,
    }
    if time is not None:
        header["time"] = float(time)
    lines = [json.dumps(header)]
    for i in range(cloud.n):
        rec = {"id": int(cloud.ids[i]), "pos": [float(x) for x in pos[i]],
               "mark": float(cloud.marks[i])}
        if time is not None:
            rec["time"] = float(time)
        lines.append(json.dumps(rec))
    return "\n".join(lines) + "\n"


def write_jsonl(cloud, path, positions=None, time=None):
    with open(path, "w") as fh:
        fh.write(dumps_jsonl(cloud, positions, time))


def loads_jsonl(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidInput("empty point-cloud document")
    head = json.loads(lines[0])
    dom = Domain.from_dict(head["domain"])
    recs = [json.loads(ln) for ln in lines[1:]]
    ids = np.array([r["id"] for r in recs], dtype=np.int64)
    pos = np.array([r["pos"] for r in recs], dtype=float).reshape(len(recs), dom.dim)
    marks = np.array([r["mark"] for r in recs], dtype=float)
    return PointCloud(dom, ids, pos, marks, float(head["intensity"]),
                      palm=bool(head["palm"]), seed=head.get("seed"))


def read_jsonl(path):
    with open(path) as fh:
        return loads_jsonl(fh.read())
