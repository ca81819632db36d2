# Polynomials with exact rational coefficients.
#
# A polynomial is a tuple of coefficients, lowest degree first, e.g.
# (1, 10, 5) is 1 + 10x + 5x**2. Trailing zeros are removed by normalize(),
# so the zero polynomial is ().

import math
from fractions import Fraction
from typing import Sequence, Tuple, Union

Poly = Tuple[Fraction, ...]
Scalar = Union[int, Fraction, float]


def normalize(p: Sequence[Scalar]) -> Poly:
    """Strip trailing zero coefficients"""
    n = len(p)
    while n and not p[n - 1]:
        n -= 1
    return tuple(Fraction(c) for c in p[:n])


def plus(a: Poly, b: Poly) -> Poly:
    if len(a) < len(b):
        a, b = b, a
    res = list(a)
    for i, c in enumerate(b):
        res[i] += c
    return normalize(res)


def scale(a: Poly, factor: Scalar) -> Poly:
    return normalize([c * factor for c in a])


def times(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return ()
    res = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        for j, cb in enumerate(b):
            res[i + j] += ca * cb
    return normalize(res)


def monomial(power: int, coeff: Scalar = 1) -> Poly:
    """coeff * x**power"""
    return normalize([0] * power + [coeff])


def shifted_power(shift: Scalar, degree: int) -> Poly:
    """(x - shift)**degree expanded by the binomial theorem"""
    return normalize([math.comb(degree, d) * (-Fraction(shift)) ** (degree - d) for d in range(degree + 1)])


def translate(p: Poly, offset: Scalar) -> Poly:
    """q(x) = p(x - offset)"""
    result: Poly = ()
    for power, c in enumerate(p):
        result = plus(result, scale(shifted_power(offset, power), c))
    return result


def evaluate(p: Poly, x: Scalar) -> Scalar:
    """Horner evaluation; exact for rational x, float for float x"""
    y: Scalar = 0
    for c in reversed(p):
        y = y * x + (float(c) if isinstance(x, float) else c)
    return y


def antiderivative(p: Poly) -> Poly:
    """Primitive with zero constant term"""
    return normalize([Fraction(0)] + [c / (k + 1) for k, c in enumerate(p)])


def integrate(p: Poly, lo: Scalar, hi: Scalar) -> Scalar:
    prim = antiderivative(p)
    return evaluate(prim, hi) - evaluate(prim, lo)


def to_strings(p: Poly):
    return [f"{c.numerator}/{c.denominator}" for c in p]
