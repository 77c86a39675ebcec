"""Scalar numerical primitives used throughout the package.

Everything here is deliberately boring: exact table lookups where exactness
is cheap, lgamma where it is not, and a small signed-log value type for
products and differences whose magnitudes leave the double range long
before the final result does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import gammaincc

from .errors import DomainError

# Factorials up to here fit comfortably in exact integer arithmetic at import
# time; taking log of the exact value keeps the table correct to the last bit
# of the conversion.
_EXACT_TABLE_SIZE = 257

_LOG_FACTORIAL_TABLE = [0.0] * _EXACT_TABLE_SIZE
_acc = 1
for _n in range(1, _EXACT_TABLE_SIZE):
    _acc *= _n
    _LOG_FACTORIAL_TABLE[_n] = math.log(_acc)
del _acc, _n

# Below this operand count a running sum of logs beats lgamma cancellation.
_SUM_PATH_LIMIT = 64


def log_factorial(n: int) -> float:
    """Natural log of n!.

    Exact-table path for n < 257, lgamma above. Accurate to well over 12
    significant digits through n = 1e7.
    """
    if n < 0 or n != int(n):
        raise DomainError(f"log_factorial requires a nonnegative integer, got {n!r}")
    n = int(n)
    if n < _EXACT_TABLE_SIZE:
        return _LOG_FACTORIAL_TABLE[n]
    return math.lgamma(n + 1.0)


def log_binomial_coeff(m: int, n: int) -> float:
    """Natural log of C(m, n).

    For small n (or small m - n) the product form sum(log(m - i)) - log(n!)
    avoids the catastrophic cancellation of lgamma(m+1) - lgamma(n+1) -
    lgamma(m-n+1) when m is large and n tiny; otherwise the lgamma form is
    used.
    """
    if m < 0 or m != int(m):
        raise DomainError(f"log_binomial_coeff requires integer m >= 0, got m={m!r}")
    if n < 0 or n != int(n):
        raise DomainError(f"log_binomial_coeff requires integer n >= 0, got n={n!r}")
    m = int(m)
    n = int(n)
    if n > m:
        raise DomainError(f"log_binomial_coeff requires n <= m, got n={n} > m={m}")
    k = min(n, m - n)
    if k == 0:
        return 0.0
    if k <= _SUM_PATH_LIMIT:
        s = 0.0
        for i in range(k):
            s += math.log(m - i)
        return s - log_factorial(k)
    return log_factorial(m) - log_factorial(n) - log_factorial(m - n)


def log1m(x: float) -> float:
    """ln(1 - x) for x in [0, 1), computed without forming 1 - x."""
    if not 0.0 <= x < 1.0:
        raise DomainError(f"log1m requires x in [0, 1), got {x!r}")
    return math.log1p(-x)


def gaussian_tail_delta(n_pulses: float, delta: float) -> float:
    """Two-sided Gaussian tail mass outside a relative window of half-width delta.

    Computed as erfc(sqrt(N/2) * delta). erfc keeps full relative accuracy in
    the far tail where 1 - erf would return exactly 0.
    """
    if n_pulses <= 0:
        raise DomainError(f"gaussian_tail_delta requires N > 0, got {n_pulses!r}")
    if delta < 0:
        raise DomainError(f"gaussian_tail_delta requires delta >= 0, got {delta!r}")
    return math.erfc(math.sqrt(n_pulses / 2.0) * delta)


def poisson_cdf(x: float, mean: float) -> float:
    """P[Poisson(mean) <= floor(x)].

    Uses the regularized upper incomplete gamma identity
    Q(k + 1, mean) = P[Poisson(mean) <= k], which stays accurate in both
    tails where summing pmf terms would not.
    """
    if mean <= 0:
        raise DomainError(f"poisson_cdf requires mean > 0, got {mean!r}")
    if x < 0:
        return 0.0
    k = math.floor(x)
    return float(gammaincc(k + 1.0, mean))


def binary_entropy(x: float) -> float:
    """Shannon entropy of a bit with bias x, in bits. Endpoints map to 0."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary_entropy requires x in [0, 1], got {x!r}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -(x * math.log2(x) + (1.0 - x) * math.log2(1.0 - x))


@dataclass(frozen=True)
class LogValue:
    """A real number held as (sign, log magnitude).

    sign is -1, 0, or +1; log_mag is the natural log of |value| and is
    ignored when sign is 0. Multiplication adds logs, so products of
    thousands of sub-underflow factors stay exact in range; addition uses
    the usual max-factored form. This is the carrier for alternating-sign
    coefficient sums whose terms individually overflow or underflow doubles.
    """

    sign: int
    log_mag: float

    @staticmethod
    def zero() -> "LogValue":
        return LogValue(0, -math.inf)

    @staticmethod
    def from_float(x: float) -> "LogValue":
        if x == 0.0:
            return LogValue.zero()
        if math.isnan(x):
            raise DomainError("LogValue cannot represent NaN")
        return LogValue(1 if x > 0 else -1, math.log(abs(x)))

    @staticmethod
    def from_log(sign: int, log_mag: float) -> "LogValue":
        if sign == 0 or log_mag == -math.inf:
            return LogValue.zero()
        if sign not in (-1, 1):
            raise DomainError(f"LogValue sign must be -1, 0, or 1, got {sign!r}")
        return LogValue(sign, log_mag)

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        mag = math.exp(self.log_mag)
        return mag if self.sign > 0 else -mag

    def mul(self, other: "LogValue") -> "LogValue":
        if self.sign == 0 or other.sign == 0:
            return LogValue.zero()
        return LogValue(self.sign * other.sign, self.log_mag + other.log_mag)

    def neg(self) -> "LogValue":
        return LogValue(-self.sign, self.log_mag)

    def add(self, other: "LogValue") -> "LogValue":
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.log_mag >= other.log_mag else (other, self)
        d = lo.log_mag - hi.log_mag
        if self.sign == other.sign:
            return LogValue(self.sign, hi.log_mag + math.log1p(math.exp(d)))
        r = math.exp(d)
        if r == 1.0:
            return LogValue.zero()
        return LogValue(hi.sign, hi.log_mag + math.log1p(-r))

    def sub(self, other: "LogValue") -> "LogValue":
        return self.add(other.neg())

    def abs_gt(self, other: "LogValue") -> bool:
        if self.sign == 0:
            return False
        if other.sign == 0:
            return True
        return self.log_mag > other.log_mag
