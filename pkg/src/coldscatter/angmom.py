"""Angular momentum algebra: Wigner 3-j and 6-j symbols, Clebsch-Gordan
coefficients, and spherical-tensor matrix elements.

All quantum numbers are integers (the collision problem never involves
half-integer angular momenta).  Symbols are evaluated from the Racah
formulas using exact integer arithmetic (`fractions.Fraction`), so there is
no cancellation error; the only rounding is the final float conversion.
Selection-rule violations return 0 rather than raising.

Phase conventions are Condon-Shortley throughout:
    <j1 m1; j2 m2 | j3 m3> = (-1)^(j1-j2+m3) sqrt(2 j3 + 1)
                             * 3j(j1 j2 j3; m1 m2 -m3)
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, isqrt, sqrt

__all__ = ["AngMom", "wigner3j", "wigner6j", "clebsch", "c_tensor_element"]


@dataclass(frozen=True)
class AngMom:
    """An integer angular momentum, stored as twice its value.

    Kept as 2j for interface stability; this package only ever uses even
    two_j (integer j).
    """

    two_j: int

    def __post_init__(self):
        if self.two_j < 0:
            raise ValueError("two_j must be nonnegative")
        if self.two_j % 2:
            raise ValueError("half-integer angular momenta are not supported")

    @property
    def j(self) -> int:
        return self.two_j // 2


def _triangle_ok(a: int, b: int, c: int) -> bool:
    return abs(a - b) <= c <= a + b


def _delta2(a: int, b: int, c: int) -> Fraction:
    """Squared triangle coefficient Delta(abc)^2 as an exact rational."""
    return Fraction(
        factorial(a + b - c) * factorial(a - b + c) * factorial(-a + b + c),
        factorial(a + b + c + 1),
    )


def _sqrt_fraction(f: Fraction) -> float:
    """sqrt of a nonnegative rational, taking exact integer square roots
    where possible to avoid double rounding."""
    num, den = f.numerator, f.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn == num and rd * rd == den:
        return rn / rd
    return sqrt(num / den)


@lru_cache(maxsize=None)
def wigner3j(j1: int, j2: int, j3: int, m1: int, m2: int, m3: int) -> float:
    """Wigner 3-j symbol (j1 j2 j3; m1 m2 m3) for integer arguments."""
    for j in (j1, j2, j3):
        if j < 0:
            raise ValueError("angular momenta must be nonnegative")
    if m1 + m2 + m3 != 0:
        return 0.0
    if not _triangle_ok(j1, j2, j3):
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0

    t_min = max(0, j2 - j3 - m1, j1 - j3 + m2)
    t_max = min(j1 + j2 - j3, j1 - m1, j2 + m2)
    total = Fraction(0)
    for t in range(t_min, t_max + 1):
        den = (
            factorial(t)
            * factorial(j3 - j2 + t + m1)
            * factorial(j3 - j1 + t - m2)
            * factorial(j1 + j2 - j3 - t)
            * factorial(j1 - t - m1)
            * factorial(j2 - t + m2)
        )
        total += Fraction(-1 if t % 2 else 1, den)
    if total == 0:
        return 0.0

    pref = _delta2(j1, j2, j3) * Fraction(
        factorial(j1 + m1)
        * factorial(j1 - m1)
        * factorial(j2 + m2)
        * factorial(j2 - m2)
        * factorial(j3 + m3)
        * factorial(j3 - m3)
    )
    # total^2 * pref is exact; a single sqrt keeps the error at one ulp
    sign = -1.0 if ((j1 - j2 - m3) % 2 == 1) != (total < 0) else 1.0
    return sign * _sqrt_fraction(total * total * pref)


@lru_cache(maxsize=None)
def wigner6j(j1: int, j2: int, j3: int, j4: int, j5: int, j6: int) -> float:
    """Wigner 6-j symbol {j1 j2 j3; j4 j5 j6} for integer arguments."""
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    for a, b, c in triads:
        if min(a, b, c) < 0:
            raise ValueError("angular momenta must be nonnegative")
        if not _triangle_ok(a, b, c):
            return 0.0

    t_min = max(j1 + j2 + j3, j1 + j5 + j6, j4 + j2 + j6, j4 + j5 + j3)
    t_max = min(j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4)
    total = Fraction(0)
    for t in range(t_min, t_max + 1):
        num = factorial(t + 1)
        den = (
            factorial(t - j1 - j2 - j3)
            * factorial(t - j1 - j5 - j6)
            * factorial(t - j4 - j2 - j6)
            * factorial(t - j4 - j5 - j3)
            * factorial(j1 + j2 + j4 + j5 - t)
            * factorial(j2 + j3 + j5 + j6 - t)
            * factorial(j3 + j1 + j6 + j4 - t)
        )
        total += Fraction(-num if t % 2 else num, den)
    if total == 0:
        return 0.0

    pref = Fraction(1)
    for a, b, c in triads:
        pref *= _delta2(a, b, c)
    sign = 1.0 if total > 0 else -1.0
    return sign * _sqrt_fraction(total * total * pref)


@lru_cache(maxsize=None)
def clebsch(j1: int, m1: int, j2: int, m2: int, j3: int, m3: int) -> float:
    """Clebsch-Gordan coefficient <j1 m1; j2 m2 | j3 m3>."""
    if m1 + m2 != m3:
        return 0.0
    sign = -1.0 if (j1 - j2 + m3) % 2 else 1.0
    return sign * sqrt(2 * j3 + 1) * wigner3j(j1, j2, j3, m1, m2, -m3)


@lru_cache(maxsize=None)
def c_tensor_element(l: int, m: int, k: int, q: int, lp: int, mp: int) -> float:
    """Matrix element <l m| C^k_q |l' m'> of the Racah spherical tensor
    C^k_q = sqrt(4 pi/(2k+1)) Y_kq between spherical harmonics."""
    if m != mp + q:
        return 0.0
    return (
        sqrt((2 * lp + 1) / (2 * l + 1))
        * clebsch(lp, 0, k, 0, l, 0)
        * clebsch(lp, mp, k, q, l, m)
    )
