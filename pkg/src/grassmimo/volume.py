"""Closed-form normalized hyperball volumes on G(k, n).

The normalized volume of a ball of radius ``delta`` equals the CDF of the
distance between two independent Haar-uniform points, so every function
here is also a distance CDF.

Supported cases, after reducing ``k`` to ``min(k, n - k)``:

============  ================  ==========================================
k'            metric            radius
============  ================  ==========================================
1             either            any (both metrics coincide)
2             projective-F      any, piecewise at delta = 1
any           projective-2      any
>= 3          projective-F      delta <= 1 only
============  ================  ==========================================
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import special

__all__ = [
    "Metric",
    "VolumeQuery",
    "Unsupported",
    "volume",
    "volume_curve",
    "max_radius",
    "dualize",
    "volume_k1",
    "correlation_cdf",
    "correlation_pdf",
    "expected_sq_correlation",
    "volume_k2_pf",
    "volume_p2_general",
    "volume_pf_general_small_delta",
]


class Unsupported(ValueError):
    """The requested (k, n, metric, delta) has no closed form here."""


class Metric(str, enum.Enum):
    PROJECTIVE_F = "pf"
    PROJECTIVE_2 = "p2"

    @classmethod
    def parse(cls, value) -> "Metric":
        if isinstance(value, cls):
            return value
        v = str(value).lower().replace("-", "").replace("_", "")
        if v in ("pf", "projectivef", "frobenius"):
            return cls.PROJECTIVE_F
        if v in ("p2", "projective2", "spectral"):
            return cls.PROJECTIVE_2
        raise ValueError(f"unknown metric {value!r}; use 'pf' or 'p2'")


@dataclass(frozen=True)
class VolumeQuery:
    k: int
    n: int
    delta: float
    metric: Metric = Metric.PROJECTIVE_F

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric.parse(self.metric))
        if int(self.k) != self.k or int(self.n) != self.n:
            raise TypeError("k and n must be integers")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")


def dualize(k: int, n: int) -> tuple[int, int]:
    """Map G(k, n) to the isometric G(min(k, n-k), n)."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    return min(k, n - k), n


def max_radius(k: int, n: int, metric) -> float:
    """Largest attainable distance on G(k, n) for the metric."""
    kd, _ = dualize(k, n)
    if Metric.parse(metric) is Metric.PROJECTIVE_2:
        return 1.0 if kd > 0 else 0.0
    return math.sqrt(kd)


def _pow(delta: float, exponent: float) -> float:
    # delta**exponent through the log so huge exponents underflow cleanly to 0
    if delta == 0.0:
        return 0.0 if exponent > 0 else 1.0
    return math.exp(exponent * math.log(delta))


def volume_k1(n: int, delta: float) -> float:
    """Ball volume in G(1, n): ``delta^(2n-2)``."""
    if n < 2:
        raise ValueError(f"G(1, n) needs n >= 2, got {n}")
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    return _pow(delta, 2 * n - 2)


def correlation_cdf(n: int, c: float) -> float:
    """P(|<v1, v2>| <= c) for independent uniform unit vectors in C^n."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"c must lie in [0, 1], got {c}")
    return -math.expm1((n - 1) * math.log1p(-c * c)) if c < 1.0 else 1.0


def correlation_pdf(n: int, x: float) -> float:
    """Density ``2(n-1) x (1-x^2)^(n-2)`` of the correlation coefficient."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    return 2.0 * (n - 1) * x * (1.0 - x * x) ** (n - 2)


def expected_sq_correlation(n: int) -> float:
    """E[|<v1, v2>|^2] = (n-1) B(2, n-1), which is 1/n."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return (n - 1) * special.beta(2, n - 1)


def volume_k2_pf(n: int, delta: float) -> float:
    """Projective-F ball volume in G(2, n), n >= 4, 0 <= delta <= sqrt(2).

    Writing x = sin^2 of the two canonical angles, the ball splits into the
    triangle ``x2 <= x1 <= delta^2/2`` (giving ``(delta^2/2)^(2n-4)``) plus a
    strip whose integral reduces to three incomplete beta terms:

        M delta^(4n-8) [ T(n-3, n)/(n-1) + T(n-1, n-2)/(n-3) - 2 T(n-2, n-1)/(n-2) ]

    with ``M = (n-1)(n-2)^2(n-3)`` and ``T(a, b)`` the integral of
    ``y^(a-1)(1-y)^(b-1)`` over ``[1/2, 1]`` when delta <= 1, or over
    ``[1/2, 1/delta^2]`` when delta > 1.
    """
    return min(1.0, k2_pf_unclipped(n, delta))


def k2_pf_unclipped(n: int, delta: float) -> float:
    """``volume_k2_pf`` before clipping to 1; exposes rounding at the top radius."""
    if n < 4:
        raise ValueError(f"G(2, n) projective-F volume needs n >= 4, got {n}")
    root2 = math.sqrt(2.0)
    if delta < 0 or delta > root2 * (1 + 1e-12):
        raise ValueError(f"delta must lie in [0, sqrt(2)], got {delta}")
    delta = min(delta, root2)
    if delta == 0.0:
        return 0.0
    lead = _pow(delta * delta / 2.0, 2 * n - 4)

    # B(n-3, n) = B(n-1, n-2) (n-1)/(n-3) and B(n-2, n-1) = B(n-1, n-2); factor
    # the common beta out so the bracket holds only regularized tails
    upper = 1.0 if delta <= 1.0 else 1.0 / (delta * delta)

    def tail(m, q):
        return (special.regularized_complement(0.5, m, q)
                - special.regularized_complement(upper, m, q))

    bracket = ((tail(n - 3, n) + tail(n - 1, n - 2)) / (n - 3)
               - 2.0 * tail(n - 2, n - 1) / (n - 2))
    if bracket <= 0.0:
        return lead
    log_scale = (math.log((n - 1) * (n - 2) ** 2 * (n - 3))
                 + (4 * n - 8) * math.log(delta)
                 + special.log_beta(n - 1, n - 2))
    return lead + bracket * math.exp(log_scale)


def volume_p2_general(k: int, n: int, delta: float) -> float:
    """Projective-2 ball volume, ``delta^(2kn - 2k^2)``, for n >= 2k."""
    if n < 2 * k:
        raise ValueError(f"needs n >= 2k (dualize first), got k={k}, n={n}")
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    return _pow(delta, 2 * k * n - 2 * k * k)


def pf_small_delta_log_coefficient(k: int, n: int) -> float:
    """log of ``CGamma_k(n) / (Gamma(kn - k^2 + 1) CGamma_k(k))``."""
    num = special.log_complex_multivariate_gamma(k, n)
    den = special.log_complex_multivariate_gamma(k, k)
    return num.log_magnitude - den.log_magnitude - math.lgamma(k * n - k * k + 1)


def volume_pf_general_small_delta(k: int, n: int, delta: float) -> float:
    """Projective-F ball volume for delta <= 1 and n >= 2k.

    ``delta^(2kn-2k^2) CGamma_k(n) / (Gamma(kn-k^2+1) CGamma_k(k))``.  For
    delta <= 1 the constraint ``sum sin^2 <= delta^2`` already keeps each
    sin^2 below one, so the ball is a scaled simplex and a Selberg-type
    integral closes it.
    """
    if n < 2 * k:
        raise ValueError(f"needs n >= 2k (dualize first), got k={k}, n={n}")
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    if delta > 1.0:
        raise Unsupported(
            f"projective-F volume with delta > 1 has no closed form here (k={k}, n={n})")
    if delta == 0.0:
        return 0.0
    return min(1.0, math.exp((2 * k * n - 2 * k * k) * math.log(delta)
                             + pf_small_delta_log_coefficient(k, n)))


def volume(q: VolumeQuery) -> float:
    """Normalized volume of the radius-``delta`` ball, i.e. P(d <= delta)."""
    kd, n = dualize(q.k, q.n)
    if kd == 0:
        return 1.0  # G(n, n) is a single point
    delta = float(q.delta)
    if delta >= max_radius(q.k, q.n, q.metric):
        return 1.0
    if delta == 0.0:
        return 0.0
    if q.metric is Metric.PROJECTIVE_2 or kd == 1:
        return volume_p2_general(kd, n, delta)
    if kd == 2:
        return volume_k2_pf(n, delta)
    if delta <= 1.0:
        return volume_pf_general_small_delta(kd, n, delta)
    raise Unsupported(
        f"projective-F ball volume on G({q.k},{q.n}) (reduced k={kd} >= 3) "
        f"is only available for delta <= 1, got delta={delta}")


def volume_curve(k: int, n: int, deltas, metric) -> np.ndarray:
    """``volume`` evaluated at each radius in ``deltas``."""
    metric = Metric.parse(metric)
    return np.array([volume(VolumeQuery(k, n, float(d), metric)) for d in deltas])
