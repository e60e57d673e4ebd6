"""Keyed counter-based pseudorandom function.

Every random quantity that has to be reproducible independently of the order
in which it is evaluated (pair uniforms, skip streams, Brownian increments)
is a pure function of a 64-bit key, a stream tag and four integer counters.
The mixer is the SplitMix64 finaliser applied once per input word.
"""
import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S11 = np.uint64(11)
_S27 = np.uint64(27)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_INV53 = 1.0 / 9007199254740992.0

# stream tags
TAG_SKIP = 1
TAG_LOW = 2
TAG_HIGH = 3
TAG_STEP = 4
TAG_BRIDGE = 5
TAG_SEED = 6

MASK64 = (1 << 64) - 1


@nb.njit(nb.uint64(nb.uint64), cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(cache=True)
def prefix3(key, tag, w1):
    """Hash state after absorbing (key, tag, w1); reusable across many w2..w4."""
    h = mix64(nb.uint64(key) + _GOLDEN)
    h = mix64(h ^ (nb.uint64(tag) + _GOLDEN))
    return mix64(h ^ (nb.uint64(w1) + _GOLDEN))


@nb.njit(cache=True)
def finish3(h, w2, w3, w4):
    h = mix64(h ^ (nb.uint64(w2) + _GOLDEN))
    h = mix64(h ^ (nb.uint64(w3) + _GOLDEN))
    return mix64(h ^ (nb.uint64(w4) + _GOLDEN))


@nb.njit(cache=True)
def hash6(key, tag, w1, w2, w3, w4):
    return finish3(prefix3(key, tag, w1), w2, w3, w4)


@nb.njit(cache=True)
def to_unit(h):
    return (np.float64(h >> _S11) + 0.5) * _INV53


@nb.njit(cache=True)
def u01(key, tag, w1, w2, w3, w4):
    """Uniform on the open interval (0, 1) with 53 random bits."""
    return to_unit(hash6(key, tag, w1, w2, w3, w4))


@nb.njit(cache=True)
def u01_prefixed(h3, w2, w3, w4):
    """Same value as ``u01`` for the words absorbed into ``h3``."""
    return to_unit(finish3(h3, w2, w3, w4))


@nb.njit(cache=True)
def _u01_fill(key, tag, w1, w2, w3, w4, out):
    for k in range(out.size):
        out[k] = u01(key, tag, w1[k], w2[k], w3[k], w4[k])


def uniform(key, tag, *words):
    """Vectorised :func:`u01` over broadcast integer counter arrays (at most four)."""
    if len(words) > 4:
        raise ValueError("at most four counter words")
    words = list(words) + [0] * (4 - len(words))
    arrs = np.broadcast_arrays(*[np.asarray(w, dtype=np.int64) for w in words])
    shape = arrs[0].shape
    flat = [np.ascontiguousarray(a).ravel() for a in arrs]
    out = np.empty(flat[0].size, dtype=np.float64)
    _u01_fill(np.uint64(key & MASK64), np.uint64(tag), flat[0], flat[1], flat[2], flat[3], out)
    return out.reshape(shape)


def derive_key(seed, *labels):
    """Deterministic 64-bit subkey for a seed and a tuple of small integers."""
    h = int(seed) & MASK64
    for lab in labels:
        h = int(hash6(np.uint64(h), np.uint64(TAG_SEED), np.uint64(int(lab) & MASK64), 0, 0, 0))
    return h
