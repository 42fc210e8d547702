"""Combinatorial and Euler Gamma/Beta helpers.

Factorials, double factorials and binomials are returned as :class:`LogReal`
so that the normalization sums can be evaluated for large lobe exponents
(e.g. 65) without overflow. Small arguments keep an exact integer alongside
the log magnitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .exceptions import DomainError

# Largest n for which n! fits in a signed 64-bit integer.
EXACT_FACTORIAL_MAX = 20
# Largest n for which n!! fits in a signed 64-bit integer.
EXACT_DOUBLE_FACTORIAL_MAX = 33
# Largest n for which every C(n, k) fits in a signed 64-bit integer.
EXACT_BINOMIAL_MAX = 62


@dataclass(frozen=True)
class LogReal:
    """Real number stored as ``sign * exp(log_magnitude)``.

    ``exact`` carries the integer value when it is known exactly.
    """

    sign: int
    log_magnitude: float
    exact: int | None = None

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign!r}")

    @classmethod
    def from_float(cls, x: float) -> LogReal:
        if x == 0.0:
            return cls(0, -math.inf)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_int(cls, n: int) -> LogReal:
        if n == 0:
            return cls(0, -math.inf, 0)
        return cls(1 if n > 0 else -1, math.log(abs(n)), n)

    def __float__(self) -> float:
        if self.exact is not None:
            return float(self.exact)
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_magnitude)

    def __mul__(self, other: LogReal) -> LogReal:
        if not isinstance(other, LogReal):
            return NotImplemented
        exact = None
        if self.exact is not None and other.exact is not None:
            exact = self.exact * other.exact
        if self.sign == 0 or other.sign == 0:
            return LogReal(0, -math.inf, 0 if exact is not None else None)
        return LogReal(self.sign * other.sign, self.log_magnitude + other.log_magnitude, exact)

    def __truediv__(self, other: LogReal) -> LogReal:
        if not isinstance(other, LogReal):
            return NotImplemented
        if other.sign == 0:
            raise ZeroDivisionError("LogReal division by zero")
        exact = None
        if self.exact is not None and other.exact is not None and self.exact % other.exact == 0:
            exact = self.exact // other.exact
        if self.sign == 0:
            return LogReal(0, -math.inf, exact)
        return LogReal(self.sign * other.sign, self.log_magnitude - other.log_magnitude, exact)


def _check_nonnegative_int(n, name="n"):
    if isinstance(n, bool) or not isinstance(n, int):
        if isinstance(n, float) and n.is_integer():
            n = int(n)
        else:
            raise DomainError(f"{name} must be a nonnegative integer, got {n!r}")
    if n < 0:
        raise DomainError(f"{name} must be a nonnegative integer, got {n!r}")
    return n


def lgamma(x: float) -> float:
    """Natural log of ``|Gamma(x)|``."""
    return math.lgamma(x)


def factorial(n: int) -> LogReal:
    """n!, with 0! = 1."""
    n = _check_nonnegative_int(n)
    if n <= EXACT_FACTORIAL_MAX:
        return LogReal.from_int(math.factorial(n))
    return LogReal(1, lgamma(n + 1.0))


def _log_double_factorial(n: int) -> float:
    if n % 2 == 0:
        # (2m)!! = 2^m m!
        m = n // 2
        return m * math.log(2.0) + lgamma(m + 1.0)
    # (2m+1)!! = (2m+1)! / (2^m m!)
    m = (n - 1) // 2
    return lgamma(n + 1.0) - m * math.log(2.0) - lgamma(m + 1.0)


def double_factorial(n: int) -> LogReal:
    """n!! = n (n-2) (n-4) ..., with 0!! = 1."""
    n = _check_nonnegative_int(n)
    if n <= EXACT_DOUBLE_FACTORIAL_MAX:
        value = 1
        for k in range(n, 0, -2):
            value *= k
        return LogReal.from_int(value)
    return LogReal(1, _log_double_factorial(n))


def binomial(n: int, k: int) -> LogReal:
    n = _check_nonnegative_int(n)
    k = _check_nonnegative_int(k, "k")
    if k > n:
        raise DomainError(f"binomial requires k <= n, got n={n}, k={k}")
    if n <= EXACT_BINOMIAL_MAX:
        return LogReal.from_int(math.comb(n, k))
    return LogReal(1, lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0))


def beta(x: float, y: float) -> float:
    """Euler Beta function B(x, y) = Gamma(x) Gamma(y) / Gamma(x + y)."""
    if not (x > 0 and y > 0):
        raise DomainError(f"beta requires positive arguments, got ({x!r}, {y!r})")
    return math.exp(lgamma(x) + lgamma(y) - lgamma(x + y))
