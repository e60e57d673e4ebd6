"""Domains, metric and Brownian displacement."""
from dataclasses import dataclass
import math

import numpy as np

from .errors import InvalidInput

TORUS = "torus"
BOX = "box"


@dataclass(frozen=True)
class Domain:
    """A d-dimensional torus of given volume, or an axis-aligned box [0, side]^d.

    Box mode stands in for R^d: nothing wraps and vertices are allowed to
    leave the box.
    """

    kind: str
    dim: int
    side: float

    def __post_init__(self):
        if self.kind not in (TORUS, BOX):
            raise InvalidInput(f"unknown domain kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidInput("dimension must be a positive integer")
        if not self.side > 0 or not math.isfinite(self.side):
            raise InvalidInput("domain side must be positive and finite")

    @classmethod
    def torus(cls, volume, dim=1):
        if not volume > 0:
            raise InvalidInput("torus volume must be positive")
        return cls(TORUS, int(dim), float(volume) ** (1.0 / dim))

    @classmethod
    def box(cls, side, dim=1):
        return cls(BOX, int(dim), float(side))

    @property
    def periodic(self):
        return self.kind == TORUS

    @property
    def volume(self):
        return self.side ** self.dim

    @property
    def origin(self):
        """Location of the Palm vertex: 0 on the torus, the centre of a box."""
        if self.periodic:
            return np.zeros(self.dim)
        return np.full(self.dim, self.side / 2.0)

    @property
    def diameter(self):
        if self.periodic:
            return math.sqrt(self.dim) * self.side / 2.0
        return math.sqrt(self.dim) * self.side

    def wrap(self, pos):
        pos = np.asarray(pos, dtype=float)
        if not self.periodic:
            return pos
        out = np.mod(pos, self.side)
        # mod can round up to exactly `side` for tiny negative inputs
        out[out >= self.side] = 0.0
        return out

    def contains(self, pos):
        pos = np.asarray(pos, dtype=float)
        if self.periodic:
            return np.all((pos >= 0) & (pos < self.side), axis=-1)
        return np.all((pos >= 0) & (pos <= self.side), axis=-1)

    def displacement(self, a, b):
        """b - a, taking the minimal image on the torus."""
        diff = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.periodic:
            diff = diff - self.side * np.round(diff / self.side)
        return diff

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "side": self.side}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], int(d["dim"]), float(d["side"]))


def _check_dim(arr, dom):
    if arr.shape[-1] != dom.dim:
        raise InvalidInput(f"position has dimension {arr.shape[-1]}, domain has {dom.dim}")


def distance(a, b, dom):
    """Euclidean distance; per-axis minimum image on the torus.

    Broadcasts over leading axes of ``a`` and ``b`` (shape ``(..., d)``).
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    _check_dim(a, dom)
    _check_dim(b, dom)
    diff = np.abs(b - a)
    if dom.periodic:
        diff = np.minimum(diff, dom.side - diff)
    return np.sqrt(np.sum(diff * diff, axis=-1))


def brownian_step(p, dt, rng, dom):
    """Advance positions by independent Normal(0, dt) increments per coordinate."""
    if dt < 0:
        raise InvalidInput("dt must be nonnegative")
    p = np.asarray(p, dtype=float)
    _check_dim(np.atleast_1d(p), dom)
    if dt == 0:
        return p.copy()
    step = rng.normal(0.0, math.sqrt(dt), size=p.shape)
    return dom.wrap(p + step)
