"""
Exact arithmetic and combinatorial primitives
- Rational is fractions.Fraction (always reduced, positive denominator)
- Weak compositions, multinomials, rising factorials
- Stirling numbers of the second kind by recurrence and by explicit sum
- Complete homogeneous symmetric functions
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Sequence, Tuple, Union

logger = logging.getLogger(__name__)

Rational = Fraction
Number = Union[int, Fraction, float]

# Above this degree the homogeneous symmetric function uses the recurrence
ENUMERATION_MAX_DEGREE = 8


class ParameterError(ValueError):
    """Invalid parameters passed to a constructor, evaluator or verifier"""


@dataclass(frozen=True)
class Composition:
    """Ordered weak composition (i_1, ..., i_n) of its total"""

    parts: Tuple[int, ...]

    def __post_init__(self):
        if any(p < 0 for p in self.parts):
            raise ParameterError(f"composition parts must be nonnegative: {self.parts}")

    @property
    def total(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)


def to_rational(value: Union[str, Number], name: str = "value") -> Fraction:
    """Parse an exact rational from "p/q", an integer string, a decimal string or a number"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ParameterError(f"{name}: booleans are not rationals")
    if isinstance(value, (int, float)):
        if isinstance(value, float) and not math.isfinite(value):
            raise ParameterError(f"{name}: non-finite value {value!r}")
        return Fraction(value)
    token = str(value).strip()
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ParameterError(f"{name}: cannot parse {token!r} as a rational") from None


def format_rational(value: Fraction) -> str:
    """Serialize a rational as a "p/q" string"""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def is_integral(value: Number) -> bool:
    if isinstance(value, int):
        return True
    if isinstance(value, Fraction):
        return value.denominator == 1
    return float(value).is_integer()


def factorial(k: int) -> int:
    """k!, exact"""
    if k < 0:
        raise ParameterError(f"factorial of negative integer {k}")
    return math.factorial(k)


def multinomial(total: int, parts: Composition) -> int:
    """total! / (i_1! ... i_n!), built from successive binomials"""
    if parts.total != total:
        raise ParameterError(f"composition {parts.parts} does not sum to {total}")
    result = 1
    running = 0
    for part in parts:
        running += part
        result *= math.comb(running, part)
    return result


def rising_factorial_ratio(alpha: int, i: int) -> int:
    """(alpha+i-1)!/(alpha-1)! = alpha (alpha+1) ... (alpha+i-1)"""
    if alpha < 1 or i < 0:
        raise ParameterError(f"rising factorial needs alpha >= 1 and i >= 0, got ({alpha}, {i})")
    return math.perm(alpha + i - 1, i)


def rising_factorial(x: Number, i: int) -> Number:
    """x (x+1) ... (x+i-1) for any rational or real x; exact for Fraction input"""
    if i < 0:
        raise ParameterError(f"rising factorial order must be nonnegative, got {i}")
    if isinstance(x, float):
        return math.prod((x + k for k in range(i)), start=1.0)
    x = Fraction(x)
    if x.denominator == 1 and x >= 1:
        return rising_factorial_ratio(int(x), i)
    return math.prod((x + k for k in range(i)), start=Fraction(1))


def compositions(m: int, n: int) -> Iterator[Composition]:
    """Yield every weak composition of m into n parts, first part descending"""
    if n < 1:
        raise ParameterError(f"compositions need at least one part, got n={n}")
    if m < 0:
        raise ParameterError(f"compositions of a negative total {m}")
    for parts in _weak_compositions(m, n):
        yield Composition(parts)


def _weak_compositions(m: int, n: int) -> Iterator[Tuple[int, ...]]:
    if n == 1:
        yield (m,)
        return
    for first in range(m, -1, -1):
        for rest in _weak_compositions(m - first, n - 1):
            yield (first,) + rest


def stirling2_recurrence(k: int, j: int) -> int:
    """
    S(k, j) by dynamic programming over S(k, j) = j S(k-1, j) + S(k-1, j-1).

    Out-of-range arguments follow the usual convention instead of raising:
    S(0, 0) = 1, S(k, 0) = 0 for k > 0 and S(k, j) = 0 for j > k.
    """
    if k < 0 or j < 0:
        raise ParameterError(f"Stirling numbers need nonnegative arguments, got ({k}, {j})")
    if j > k:
        return 0
    # row[c] holds S(r, c) for the current row r
    row = [1] + [0] * j
    for r in range(1, k + 1):
        for c in range(min(r, j), 0, -1):
            row[c] = c * row[c] + row[c - 1]
        row[0] = 0
    return row[j]


def stirling2_explicit(m: int, n: int) -> Fraction:
    """S(m+n, n) from (1/n!) sum_i (-1)^(n-i) C(n, i) i^(m+n)"""
    if n < 1 or m < 0:
        raise ParameterError(f"explicit Stirling formula needs m >= 0 and n >= 1, got ({m}, {n})")
    total = sum((-1) ** (n - i) * math.comb(n, i) * i ** (m + n) for i in range(n + 1))
    return Fraction(total, factorial(n))


def homogeneous_symmetric(r: int, xs: Sequence[Number]) -> Fraction:
    """h_r(x_1, ..., x_n); h_0 = 1 and h_r = 0 for r < 0"""
    if not xs:
        raise ParameterError("homogeneous symmetric function needs at least one variable")
    if r < 0:
        return Fraction(0)
    if r > ENUMERATION_MAX_DEGREE:
        return homogeneous_symmetric_recursive(r, xs)
    return homogeneous_symmetric_enumerated(r, xs)


def homogeneous_symmetric_enumerated(r: int, xs: Sequence[Number]) -> Fraction:
    """Sum of every degree-r monomial, one per weak composition of r"""
    if r < 0:
        return Fraction(0)
    values = [to_rational(x, "x") for x in xs]
    return sum(
        (math.prod((x ** e for x, e in zip(values, comp)), start=Fraction(1))
         for comp in compositions(r, len(values))),
        Fraction(0),
    )


def homogeneous_symmetric_recursive(r: int, xs: Sequence[Number]) -> Fraction:
    """h_r by the variable-at-a-time recurrence h_r(x..x_k) = h_r(x..x_{k-1}) + x_k h_{r-1}(x..x_k)"""
    if r < 0:
        return Fraction(0)
    h: List[Fraction] = [Fraction(1)] + [Fraction(0)] * r
    for x in (to_rational(v, "x") for v in xs):
        for degree in range(1, r + 1):
            h[degree] += x * h[degree - 1]
    return h[r]


def require_distinct(values: Sequence[Fraction], what: str = "values") -> None:
    """Raise if any two values coincide (exact comparison)"""
    if len(set(values)) != len(values):
        raise ParameterError(f"{what} must be distinct: {[format_rational(v) for v in values]}")
