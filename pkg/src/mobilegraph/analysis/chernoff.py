"""Chernoff-type tail bounds used to size Monte Carlo experiments."""
import math

from ..errors import InvalidInput


def chernoff_poisson(lam, eps):
    """(lower, upper) bounds on P(P < (1-ε)λ) and P(P > (1+ε)λ) for P ~ Poisson(λ)."""
    if not lam > 0:
        raise InvalidInput("lambda must be positive")
    if not 0 < eps < 1:
        raise InvalidInput("eps must lie in (0, 1)")
    return math.exp(-lam * eps * eps / 2.0), math.exp(-lam * eps * eps / 4.0)


def chernoff_binomial(n, p, a):
    """Bound on P(B >= np + a) for B ~ Binomial(n, p)."""
    if not a > 0:
        raise InvalidInput("a must be positive")
    if not (n > 0 and 0 < p <= 1):
        raise InvalidInput("need n > 0 and p in (0, 1]")
    mu = n * p
    return math.exp(a - (mu + a) * math.log1p(a / mu))


def poisson_sample_size(lam_per_unit, eps, target):
    """Smallest λ-multiple for which the Poisson lower-tail bound drops below ``target``."""
    if not 0 < target < 1:
        raise InvalidInput("target must lie in (0, 1)")
    need = 2.0 * math.log(1.0 / target) / (eps * eps)
    return need / lam_per_unit
