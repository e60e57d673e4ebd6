"""Empirical density check: per-cell, per-layer vertex counts against thresholds."""
from dataclasses import dataclass, field
import math

import numpy as np

from ..errors import InvalidInput


@dataclass(frozen=True, eq=False)
class DensityReport:
    corner: np.ndarray
    side: float
    ell: float
    alpha: float
    thresholds: dict            # layer k -> (1 - alpha) λ |I_k| ell^d
    times: np.ndarray
    passed: np.ndarray          # per time
    min_ratio: np.ndarray       # per time, min over cells/layers of count / threshold
    counts: list = field(repr=False, default_factory=list)

    @property
    def dense_fraction(self):
        return float(self.passed.mean()) if self.passed.size else 0.0

    def to_dict(self):
        return {
            "corner": [float(x) for x in self.corner],
            "side": self.side,
            "ell": self.ell,
            "alpha": self.alpha,
            "thresholds": {str(k): v for k, v in self.thresholds.items()},
            "times": [float(t) for t in self.times],
            "passed": [bool(p) for p in self.passed],
            "min_ratio": [float(r) for r in self.min_ratio],
            "dense_fraction": self.dense_fraction,
        }


def layer_counts(pos, marks, dom, corner, side, ell, layers):
    """Array (layer, cell) of vertex counts inside the cube ``corner + [0, side)^d``."""
    d = dom.dim
    m = int(round(side / ell))
    rel = np.asarray(pos, dtype=float) - corner
    if dom.periodic:
        rel = np.mod(rel, dom.side)
    cell = np.floor(rel / ell).astype(np.int64)
    inside = np.all((rel >= 0) & (cell < m), axis=1)
    lay = layers.classify(marks)
    keys = sorted(layers.intervals)
    out = np.zeros((len(keys), m ** d), dtype=np.int64)
    flat = np.ravel_multi_index(cell[inside].T, (m,) * d) if inside.any() else np.zeros(0, np.int64)
    lay_in = lay[inside]
    for row, k in enumerate(keys):
        out[row] = np.bincount(flat[lay_in == k], minlength=m ** d)
    return out


def density_check(snapshots, corner, side, ell, alpha, layers, intensity=None):
    """Per-time test that every ell-subcube holds at least (1-α)λ|I_k|ell^d vertices of each layer."""
    if not 0 <= alpha <= 1:
        raise InvalidInput("alpha must lie in [0, 1]")
    if not (side > 0 and ell > 0):
        raise InvalidInput("side and ell must be positive")
    ratio = side / ell
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
        raise InvalidInput("ell must divide the cube side")
    corner = np.atleast_1d(np.asarray(corner, dtype=float))
    snapshots = list(snapshots)
    keys = sorted(layers.intervals)
    thresholds = {}
    times, passed, min_ratio, all_counts = [], [], [], []
    for snap in snapshots:
        lam = snap.cloud.intensity if intensity is None else intensity
        if not thresholds:
            d = snap.domain.dim
            thresholds = {k: (1 - alpha) * lam * layers.width(k) * ell ** d for k in keys}
        c = layer_counts(snap.pos, snap.marks, snap.domain, corner, side, ell, layers)
        thr = np.array([thresholds[k] for k in keys])[:, None]
        ok = bool(np.all(c >= thr))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(thr > 0, c / np.where(thr > 0, thr, 1.0), np.inf)
        times.append(snap.time)
        passed.append(ok)
        min_ratio.append(float(r.min()) if r.size else math.inf)
        all_counts.append(c)
    return DensityReport(corner, float(side), float(ell), float(alpha), thresholds,
                         np.array(times), np.array(passed, dtype=bool), np.array(min_ratio),
                         all_counts)
