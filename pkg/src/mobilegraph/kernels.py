"""Connection kernels and their inversion in the distance.

All three variants share the form ``p(r, u, v) = c * min(1, A / r^{δd})``
with a pair coefficient ``A = r0^{δd}`` depending on the marks:

=========== ===== ==============================================
variant      c     A
=========== ===== ==============================================
generic      α     κ1 (u∧v)^{-δγ}
softboolean  1     (u^{-γ/d} + v^{-γ/d})^{δd}
agercm       1     β^δ (u∧v)^{-γδ} (u∨v)^{-(1-γ)δ}
=========== ===== ==============================================

so that an epoch uniform ``U`` produces an edge iff ``r < r*(U)`` with
``r*(U) = (A c / U)^{1/(δd)}`` for ``U < c`` and ``r* = 0`` otherwise.
"""
from dataclasses import dataclass
import logging
import math

import numba as nb
import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .errors import InvalidInput

log = logging.getLogger(__name__)

GENERIC = "generic"
SOFTBOOLEAN = "softboolean"
AGERCM = "agercm"
VARIANTS = (GENERIC, SOFTBOOLEAN, AGERCM)
_CODE = {GENERIC: 0, SOFTBOOLEAN: 1, AGERCM: 2}


@dataclass(frozen=True)
class KernelParams:
    variant: str = GENERIC
    gamma: float = 0.8
    delta: float = 1.5
    alpha: float = 1.0
    kappa1: float = 1.0
    beta: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidInput(f"unknown kernel variant {self.variant!r}")
        if not 0 < self.gamma < 1:
            raise InvalidInput("gamma must lie in (0, 1)")
        if not self.delta > 1:
            raise InvalidInput("delta must exceed 1")
        if not 0 < self.alpha <= 1:
            raise InvalidInput("alpha must lie in (0, 1]")
        if not self.kappa1 > 0:
            raise InvalidInput("kappa1 must be positive")
        if not self.beta > 0:
            raise InvalidInput("beta must be positive")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidInput("dimension must be a positive integer")

    @property
    def ultrasmall(self):
        return self.gamma > self.delta / (self.delta + 1)

    @property
    def packed(self):
        return np.array([_CODE[self.variant], self.gamma, self.delta, self.alpha,
                         self.kappa1, self.beta, self.dim], dtype=np.float64)

    @property
    def c_max(self):
        """sup_r p(r, u, v)."""
        return self.alpha if self.variant == GENERIC else 1.0

    def lower_bound_constants(self):
        """(α, κ1) for which the variant dominates α min(1, κ1 (u∧v)^{-δγ} r^{-δd})."""
        if self.variant == GENERIC:
            return self.alpha, self.kappa1
        if self.variant == SOFTBOOLEAN:
            return 1.0, 1.0
        return 1.0, self.beta ** self.delta

    def to_dict(self):
        return {"variant": self.variant, "gamma": self.gamma, "delta": self.delta,
                "alpha": self.alpha, "kappa1": self.kappa1, "beta": self.beta}


def unit_ball_volume(d):
    return math.pi ** (d / 2) / gamma_fn(d / 2 + 1)


# -- compiled core -----------------------------------------------------------

@nb.njit(cache=True)
def vertex_pows(u, prm):
    """Per-vertex powers of the mark entering the pair coefficient."""
    code = int(prm[0])
    g = prm[1]
    dl = prm[2]
    if code == 0:
        return u ** (-dl * g), 0.0
    if code == 1:
        return u ** (-g / prm[6]), 0.0
    return u ** (-g * dl), u ** (-(1.0 - g) * dl)


@nb.njit(cache=True)
def coef_from_pows(u, pu1, pu2, v, pv1, pv2, prm):
    """(c, A) from precomputed :func:`vertex_pows`; bitwise equal to :func:`pair_coef`."""
    code = int(prm[0])
    if code == 0:
        if u <= v:
            return prm[3], prm[4] * pu1
        return prm[3], prm[4] * pv1
    if code == 1:
        return 1.0, (pu1 + pv1) ** (prm[2] * prm[6])
    if u <= v:
        return 1.0, prm[5] ** prm[2] * pu1 * pv2
    return 1.0, prm[5] ** prm[2] * pv1 * pu2


@nb.njit(cache=True)
def pair_coef(u, v, prm):
    """(c, A) for marks u, v; see module docstring."""
    pu1, pu2 = vertex_pows(u, prm)
    pv1, pv2 = vertex_pows(v, prm)
    return coef_from_pows(u, pu1, pu2, v, pv1, pv2, prm)


@nb.njit(cache=True)
def prob_core(r, u, v, prm):
    c, a = pair_coef(u, v, prm)
    if r <= 0.0:
        return c
    x = a * r ** (-prm[2] * prm[6])
    return c * min(1.0, x)


@nb.njit(cache=True)
def threshold_from_coef(U, c, a, prm):
    if U >= c:
        return 0.0
    return (a * c / U) ** (1.0 / (prm[2] * prm[6]))


@nb.njit(cache=True)
def threshold_core(U, u, v, prm):
    c, a = pair_coef(u, v, prm)
    return threshold_from_coef(U, c, a, prm)


@nb.njit(cache=True)
def pows_array(marks, prm):
    P = np.empty((marks.size, 2))
    for i in range(marks.size):
        p1, p2 = vertex_pows(marks[i], prm)
        P[i, 0] = p1
        P[i, 1] = p2
    return P


@nb.njit(cache=True)
def lower_bound_core(r, u, v, alpha, kappa1, prm):
    m = min(u, v)
    if r <= 0.0:
        return alpha
    return alpha * min(1.0, kappa1 * m ** (-prm[2] * prm[1]) * r ** (-prm[2] * prm[6]))


@nb.njit(cache=True)
def _vec4(fn_code, x, u, v, prm, out):
    for k in range(out.size):
        if fn_code == 0:
            out[k] = prob_core(x[k], u[k], v[k], prm)
        else:
            out[k] = threshold_core(x[k], u[k], v[k], prm)


def _apply(code, x, u, v, kp):
    arrs = np.broadcast_arrays(*[np.asarray(a, dtype=np.float64) for a in (x, u, v)])
    shape = arrs[0].shape
    flat = [np.ascontiguousarray(a).ravel() for a in arrs]
    out = np.empty(flat[0].size)
    _vec4(code, flat[0], flat[1], flat[2], kp.packed, out)
    return out.reshape(shape) if shape else float(out[0])


def _check_marks(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(~((u > 0) & (u < 1))) or np.any(~((v > 0) & (v < 1))):
        raise InvalidInput("marks must lie in (0, 1)")


def connection_prob(r, u, v, kp):
    """Edge probability at distance ``r`` between marks ``u`` and ``v`` (broadcasts)."""
    if np.any(np.asarray(r) < 0):
        raise InvalidInput("distance must be nonnegative")
    _check_marks(u, v)
    return _apply(0, r, u, v, kp)


def threshold_radius(U, u, v, kp):
    """r* = sup{r : connection_prob(r, u, v) > U}; 0 when U >= sup p."""
    U_ = np.asarray(U, dtype=float)
    if np.any(~((U_ > 0) & (U_ < 1))):
        raise InvalidInput("U must lie in (0, 1)")
    _check_marks(u, v)
    return _apply(1, U, u, v, kp)


def soft_radius(u, kp):
    """Soft Boolean radius R = u^{-γ/d}; Pareto with P(R > r) = r^{-d/γ}, r >= 1."""
    _check_marks(u, u)
    return np.asarray(u, dtype=float) ** (-kp.gamma / kp.dim)


def reach(q, u, kp):
    """Largest r*(q, u, v) over partners with v >= u.

    Every variant's threshold is maximised at v = u given u∧v = u.
    """
    return threshold_radius(q, u, u, kp)


def lower_bound_prob(r, u, v, kp):
    """α min(1, κ1 (u∧v)^{-δγ} r^{-δd}) with the variant's constants."""
    a, k1 = kp.lower_bound_constants()
    r = np.asarray(r, dtype=float)
    m = np.minimum(u, v)
    with np.errstate(divide="ignore", over="ignore"):
        x = k1 * m ** (-kp.delta * kp.gamma) * r ** (-kp.delta * kp.dim)
    return a * np.minimum(1.0, x)


# -- mean degree ---------------------------------------------------------------

def _ball_integral(c, a, kp, r_max):
    """∫_{|y|<r_max} c min(1, a |y|^{-δd}) dy over R^d."""
    d = kp.dim
    vd = unit_ball_volume(d)
    r0d = a ** (1.0 / kp.delta)      # r0^d
    if r_max is None:
        return c * vd * r0d * kp.delta / (kp.delta - 1)
    rmd = r_max ** d
    if rmd <= r0d:
        return c * vd * rmd
    tail = (1.0 - (r0d / rmd) ** (kp.delta - 1)) / (kp.delta - 1)
    return c * vd * r0d * (1.0 + tail)


def mean_degree_upper(kp, lam, r_max=None):
    """Expected degree λ E_{u,v} ∫ p(|y|, u, v) dy of a typical vertex.

    ``r_max`` truncates the spatial integral to a ball (e.g. half the torus
    side in d = 1).  Evaluated by quadrature over the ordered marks
    m = u∧v, M = u∨v after substituting m = w^{1/(1-γ)}, which removes the
    m^{-γ} singularity.
    """
    if not kp.delta > 1 or not kp.gamma < 1:
        raise InvalidInput("mean degree diverges for delta <= 1 or gamma >= 1")
    if not lam > 0:
        raise InvalidInput("intensity must be positive")
    prm = kp.packed
    g = kp.gamma
    p = 1.0 / (1.0 - g)

    def inner(M, w):
        m = w ** p
        c, a = pair_coef(m, M, prm)
        # jacobian dm/dw = p w^{p-1}; factor 2 for the two orderings
        return 2.0 * _ball_integral(c, a, kp, r_max) * p * w ** (p - 1.0)

    val, _ = integrate.dblquad(inner, 0.0, 1.0, lambda w: w ** p, lambda w: 1.0,
                               epsabs=1e-10, epsrel=1e-8)
    return lam * val


def reach_moment(kp, q=1.0, cap=None):
    """∫_0^1 min(V_d reach(q, u)^d, cap) (1 - u) du; the high-scan cost per unit intensity."""
    vd = unit_ball_volume(kp.dim)
    prm = kp.packed
    g = kp.gamma
    p = 1.0 / (1.0 - g)

    def f(w):
        u = w ** p
        c, a = pair_coef(u, u, prm)
        # untruncated in q so that the q^{-1/δ} scaling stays exact
        vol = vd * (a * c / q) ** (1.0 / kp.delta)
        if cap is not None:
            vol = min(vol, cap)
        return vol * (1.0 - u) * p * w ** (p - 1.0)

    val, _ = integrate.quad(f, 0.0, 1.0, limit=200)
    return val
