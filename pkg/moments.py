"""
Raw moments of the three summation families by two routes:
multinomial expansion over per-summand moments, and integration of the
closed-form density.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Union

from core_numeric import (
    Number,
    ParameterError,
    compositions,
    factorial,
    is_integral,
    multinomial,
    rising_factorial,
    rising_factorial_ratio,
)
from densities import (
    EXACT,
    FLOAT,
    GammaParams,
    GammaSeries,
    PiecewisePoly,
    RateParams,
    UniformParams,
    gamma_series,
    hypoexp_density,
    uniform_density,
)

logger = logging.getLogger(__name__)

FAMILIES = ("exp", "gamma", "uniform")
Params = Union[RateParams, GammaParams, UniformParams]


@dataclass(frozen=True)
class MomentPair:
    order: int
    by_expansion: Number
    by_density: Number
    mode: str

    @property
    def agree(self) -> bool:
        return self.by_expansion == self.by_density


@dataclass(frozen=True)
class SeriesMoment:
    """Partial-sum moment from the gamma series plus its tail envelope"""

    value: Number
    envelope: float
    order: int
    deficit: float
    truncated: bool


def _summand_moments(family: str, params: Params) -> List[Callable[[int], Number]]:
    if family == "exp":
        return [lambda i, lam=lam: Fraction(factorial(i)) / lam ** i for lam in params.rates]
    if family == "gamma":
        return [lambda i, a=a, b=b: _gamma_summand_moment(a, b, i) for a, b in zip(params.shapes, params.scales)]
    if family == "uniform":
        return [lambda i, a=a: a ** i / (i + 1) for a in params.lengths]
    raise ParameterError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")


def _gamma_summand_moment(alpha: Number, beta: Number, i: int) -> Number:
    """beta^i alpha (alpha+1) ... (alpha+i-1)"""
    if isinstance(alpha, Fraction) and is_integral(alpha):
        return rising_factorial_ratio(int(alpha), i) * beta ** i
    return rising_factorial(alpha, i) * beta ** i


def moment_by_expansion(family: str, params: Params, m: int) -> Number:
    """sum over compositions of m: multinomial(m; i) * prod_j E[X_j^(i_j)]"""
    if m < 0:
        raise ParameterError(f"moment order must be nonnegative, got {m}")
    per_summand = _summand_moments(family, params)
    total: Number = Fraction(0)
    for comp in compositions(m, len(per_summand)):
        term: Number = multinomial(m, comp)
        for moment_of, i in zip(per_summand, comp):
            if i:
                term *= moment_of(i)
        total += term
    return total


def hypoexp_moment_closed(params: RateParams, m: int) -> Fraction:
    """sum_k (m!/lambda_k^m) prod_{l != k} lambda_l/(lambda_l - lambda_k)"""
    if m < 0:
        raise ParameterError(f"moment order must be nonnegative, got {m}")
    rates = params.rates
    total = Fraction(0)
    for k, lam in enumerate(rates):
        others = rates[:k] + rates[k + 1:]
        weight = math.prod((other / (other - lam) for other in others), start=Fraction(1))
        total += Fraction(factorial(m)) / lam ** m * weight
    return total


def piecewise_moment(density: PiecewisePoly, m: int) -> Fraction:
    return density.moment(m)


def gamma_moment_by_series(series: GammaSeries, m: int) -> SeriesMoment:
    """
    rho * beta1^m * sum_{j<=J} delta_j (A+j)(A+j+1)...(A+j+m-1).

    rho * delta_j is the probability that the mixing index equals j, so the
    dropped tail is beta1^m E[(A+K)_m; K > J]. Cauchy-Schwarz together with
    (x)_m^2 <= (x)_2m bounds it by sqrt(deficit * E[S^2m]); the envelope is
    that bound with E[S^2m] taken from the multinomial expansion.
    """
    if m < 1:
        raise ParameterError(f"series moments need m >= 1, got {m}")
    A = series.A
    if series.mode == EXACT:
        total = sum(
            (d * rising_factorial(A + j, m) for j, d in enumerate(series.deltas)),
            Fraction(0),
        )
        value = series.rho * series.beta1 ** m * total
    else:
        total = math.fsum(float(d) * rising_factorial(float(A) + j, m) for j, d in enumerate(series.deltas))
        value = float(series.rho) * float(series.beta1) ** m * total
    deficit = max(float(series.tail_estimate), 0.0)
    envelope = math.sqrt(deficit * float(moment_by_expansion("gamma", series.params, 2 * m))) if deficit else 0.0
    return SeriesMoment(
        value=value,
        envelope=envelope,
        order=series.order,
        deficit=series.tail_estimate,
        truncated=series.truncated,
    )


def moment_pair(family: str, params: Params, m: int, mode: str = EXACT,
                tolerance: float = 1e-9, max_order: int = 2000) -> MomentPair:
    """Both routes for one family; m = 0 is exactly 1 on each"""
    if m < 0:
        raise ParameterError(f"moment order must be nonnegative, got {m}")
    by_expansion = moment_by_expansion(family, params, m)
    if m == 0:
        return MomentPair(0, Fraction(1), Fraction(1), mode)
    if family == "exp":
        by_density = hypoexp_density(params, mode).moment(m)
    elif family == "uniform":
        by_density = piecewise_moment(uniform_density(params), m)
    elif family == "gamma":
        series = gamma_series(params, tolerance, max_order, None if mode == EXACT else FLOAT)
        by_density = gamma_moment_by_series(series, m).value
    else:
        raise ParameterError(f"unknown family {family!r}")
    if mode == FLOAT:
        by_expansion = float(by_expansion)
        by_density = float(by_density)
    return MomentPair(m, by_expansion, by_density, mode)
