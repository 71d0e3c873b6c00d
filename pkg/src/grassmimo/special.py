"""Beta-family and complex multivariate gamma functions for integer arguments.

Every closed form in this package only ever needs beta functions with
positive integer parameters, so the incomplete beta function is evaluated
as a finite binomial tail sum instead of a continued fraction.  Small
cases are done in exact integer arithmetic; large cases go through the
log domain to stay clear of overflow in the factorials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "LogScaled",
    "beta",
    "log_beta",
    "regularized_incomplete_beta",
    "regularized_complement",
    "incomplete_beta",
    "beta_difference",
    "incomplete_beta_difference",
    "complex_multivariate_gamma",
    "log_complex_multivariate_gamma",
]

# m + n - 1 at or below this uses exact integer factorials
EXACT_LIMIT = 20


@dataclass(frozen=True)
class LogScaled:
    """A nonnegative number stored as its natural logarithm.

    ``is_zero`` marks an exact zero, in which case ``log_magnitude`` is
    meaningless.
    """

    log_magnitude: float
    is_zero: bool = False

    @classmethod
    def from_value(cls, x: float) -> "LogScaled":
        if x < 0:
            raise ValueError("LogScaled only represents nonnegative values")
        if x == 0:
            return cls(-math.inf, True)
        return cls(math.log(x))

    def __mul__(self, other: "LogScaled") -> "LogScaled":
        if self.is_zero or other.is_zero:
            return LogScaled(-math.inf, True)
        return LogScaled(self.log_magnitude + other.log_magnitude)

    def __truediv__(self, other: "LogScaled") -> "LogScaled":
        if other.is_zero:
            raise ZeroDivisionError("division by a LogScaled zero")
        if self.is_zero:
            return self
        return LogScaled(self.log_magnitude - other.log_magnitude)

    def value(self) -> float:
        """Exponentiate, raising ``OverflowError`` if not representable."""
        if self.is_zero:
            return 0.0
        if self.log_magnitude > 709.782712893384:
            raise OverflowError(
                f"exp({self.log_magnitude:.6g}) overflows double precision")
        return math.exp(self.log_magnitude)

    def __float__(self) -> float:
        return self.value()


def _check_positive_int(name: str, v) -> int:
    if isinstance(v, bool) or int(v) != v:
        raise TypeError(f"{name} must be an integer, got {v!r}")
    v = int(v)
    if v < 1:
        raise ValueError(f"{name} must be >= 1, got {v}")
    return v


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def log_beta(m: int, n: int) -> float:
    """Natural log of B(m, n) for positive integers."""
    m = _check_positive_int("m", m)
    n = _check_positive_int("n", n)
    if m + n - 1 <= EXACT_LIMIT:
        return math.log(_beta_exact(m, n))
    return math.lgamma(m) + math.lgamma(n) - math.lgamma(m + n)


def _beta_exact(m: int, n: int) -> Fraction:
    return Fraction(math.factorial(m - 1) * math.factorial(n - 1),
                    math.factorial(m + n - 1))


def beta(m: int, n: int) -> float:
    """Beta function ``(m-1)!(n-1)!/(m+n-1)!`` for positive integers.

    Symmetric in its arguments bit for bit: the lgamma terms are summed in
    a canonical order.
    """
    m = _check_positive_int("m", m)
    n = _check_positive_int("n", n)
    m, n = min(m, n), max(m, n)
    if m + n - 1 <= EXACT_LIMIT:
        return float(_beta_exact(m, n))
    return LogScaled(log_beta(m, n)).value()


def _binomial_tail(alpha: float, lo: int, hi: int, total: int) -> float:
    """Sum of C(total, j) alpha^j (1-alpha)^(total-j) for j in [lo, hi]."""
    if lo > hi:
        return 0.0
    if alpha == 0.0:
        return 1.0 if lo == 0 else 0.0
    if alpha == 1.0:
        return 1.0 if hi == total else 0.0
    if total <= EXACT_LIMIT:
        q = 1.0 - alpha
        return math.fsum(math.comb(total, j) * alpha**j * q**(total - j)
                         for j in range(lo, hi + 1))
    la = math.log(alpha)
    lq = math.log1p(-alpha)
    return math.fsum(
        math.exp(math.log(math.comb(total, j)) + j * la + (total - j) * lq)
        for j in range(lo, hi + 1))


def regularized_incomplete_beta(alpha: float, m: int, n: int) -> float:
    """Regularized incomplete beta ``I_alpha(m, n)`` via the binomial sum.

    Parameters
    ----------
    alpha : float
        Upper integration limit in [0, 1].
    m, n : int
        Positive integer shape parameters.
    """
    alpha = _check_alpha(alpha)
    m = _check_positive_int("m", m)
    n = _check_positive_int("n", n)
    return _split_tails(alpha, m, n)[0]


def _split_tails(alpha: float, m: int, n: int):
    """``(I_alpha(m, n), 1 - I_alpha(m, n))``.

    The smaller tail is summed directly and the larger one taken as its
    complement, which keeps both monotone in alpha down to the last ulp.
    """
    total = m + n - 1
    upper = _binomial_tail(alpha, m, total, total)
    if upper <= 0.5:
        return upper, 1.0 - upper
    lower = _binomial_tail(alpha, 0, m - 1, total)
    return max(0.0, 1.0 - lower), lower


def regularized_complement(alpha: float, m: int, n: int) -> float:
    """``1 - I_alpha(m, n)`` without cancellation when it is small."""
    alpha = _check_alpha(alpha)
    m = _check_positive_int("m", m)
    n = _check_positive_int("n", n)
    return _split_tails(alpha, m, n)[1]


def incomplete_beta(alpha: float, m: int, n: int) -> float:
    """Incomplete beta ``B(alpha, m, n) = int_0^alpha x^(m-1)(1-x)^(n-1) dx``."""
    return regularized_incomplete_beta(alpha, m, n) * beta(m, n)


def beta_difference(alpha: float, m: int, n: int) -> float:
    """``B(m, n) - B(alpha, m, n)``, the integral from alpha up to 1."""
    alpha = _check_alpha(alpha)
    m = _check_positive_int("m", m)
    n = _check_positive_int("n", n)
    return regularized_complement(alpha, m, n) * beta(m, n)


def incomplete_beta_difference(alpha: float, m: int, n: int) -> float:
    """``beta_difference(alpha) - beta_difference(1/2)``.

    Equals ``B(1/2, m, n) - B(alpha, m, n)``, which is nonpositive for
    ``alpha >= 1/2``.
    """
    alpha = _check_alpha(alpha)
    m = _check_positive_int("m", m)
    n = _check_positive_int("n", n)
    total = m + n - 1
    return beta(m, n) * (_binomial_tail(alpha, 0, m - 1, total)
                         - _binomial_tail(0.5, 0, m - 1, total))


def log_complex_multivariate_gamma(k: int, n: int) -> LogScaled:
    """``log(pi^(k(k-1)/2) prod_{i=1..k} Gamma(n-i+1))`` as a LogScaled."""
    k = _check_positive_int("k", k)
    n = _check_positive_int("n", n)
    if n < k:
        raise ValueError(f"complex multivariate gamma needs n >= k, got k={k}, n={n}")
    log_val = 0.5 * k * (k - 1) * math.log(math.pi)
    log_val += math.fsum(math.lgamma(n - i + 1) for i in range(1, k + 1))
    return LogScaled(log_val)


complex_multivariate_gamma = log_complex_multivariate_gamma
