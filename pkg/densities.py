"""
Closed-form densities of sums of independent random variables
- Exponential summands with distinct rates: a signed mixture of exponentials
- Gamma summands: single-kernel series driven by the delta/gamma recursion
- Uniform summands (identical or distinct lengths): exact piecewise polynomials
"""

import bisect
import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

import polynomials as poly
from core_numeric import (
    Number,
    ParameterError,
    factorial,
    format_rational,
    is_integral,
    require_distinct,
    to_rational,
)

logger = logging.getLogger(__name__)

# Relative spacing below which float-mode exponential weights are refused
CLUSTER_THRESHOLD = 1e-6
# 1 - rho * sum(deltas) cannot be resolved below this in double precision
FLOAT_DEFICIT_FLOOR = 1e-14

EXACT = "exact"
FLOAT = "float"


def serialize_number(value: Number) -> Union[str, float]:
    """Rationals as "p/q" strings, floats as floats"""
    if isinstance(value, float):
        return value
    return format_rational(Fraction(value))


def _as_number(value: Any, name: str) -> Number:
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ParameterError(f"{name}: non-finite value {value!r}")
        return value
    return to_rational(value, name)


def _log(value: Number) -> float:
    """Natural log that survives rationals far outside the float range"""
    if isinstance(value, Fraction):
        return math.log(value.numerator) - math.log(value.denominator)
    return math.log(value)


# ---------------------------------------------------------------------------
# Exponential summands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateParams:
    """Distinct positive rates lambda_1..lambda_n, n >= 2"""

    rates: Tuple[Fraction, ...]

    def __post_init__(self):
        rates = tuple(to_rational(r, "rate") for r in self.rates)
        object.__setattr__(self, "rates", rates)
        if len(rates) < 2:
            raise ParameterError(f"need at least two rates, got {len(rates)}")
        if any(r <= 0 for r in rates):
            raise ParameterError("rates must be positive")
        require_distinct(rates, "rates")

    @property
    def n(self) -> int:
        return len(self.rates)

    def to_json(self) -> Dict[str, Any]:
        return {"rates": [format_rational(r) for r in self.rates]}


@dataclass(frozen=True)
class ExpMixDensity:
    """f(x) = sum_k c_k exp(-lambda_k x) on [0, inf)"""

    atoms: Tuple[Tuple[Number, Number], ...]
    mode: str = EXACT

    @property
    def weights(self) -> Tuple[Number, ...]:
        return tuple(c for c, _ in self.atoms)

    @property
    def rates(self) -> Tuple[Number, ...]:
        return tuple(rate for _, rate in self.atoms)

    def pdf(self, x: Number) -> float:
        if x < 0:
            return 0.0
        x = float(x)
        return math.fsum(float(c) * math.exp(-float(rate) * x) for c, rate in self.atoms)

    def cdf(self, x: Number) -> float:
        if x <= 0:
            return 0.0
        x = float(x)
        return math.fsum(float(c / rate) * -math.expm1(-float(rate) * x) for c, rate in self.atoms)

    def mass(self) -> Number:
        """sum_k c_k / lambda_k; exactly 1 in exact mode"""
        return sum(c / rate for c, rate in self.atoms)

    def moment(self, m: int) -> Number:
        """Integral of x^m f(x): sum_k c_k m! / lambda_k^(m+1)"""
        if m < 0:
            raise ParameterError(f"moment order must be nonnegative, got {m}")
        return sum(c * factorial(m) / rate ** (m + 1) for c, rate in self.atoms)

    def mgf(self, t: Number) -> Number:
        """Integral of e^(tx) f(x): sum_k c_k / (lambda_k - t), t < min lambda"""
        if t >= min(self.rates):
            raise ParameterError(f"t={t} must be below the smallest rate {min(self.rates)}")
        return sum(c / (rate - t) for c, rate in self.atoms)

    def to_json(self) -> Dict[str, Any]:
        return {
            "family": "exp",
            "mode": self.mode,
            "params": {"rates": [serialize_number(r) for r in self.rates]},
            "atoms": [{"weight": serialize_number(c), "rate": serialize_number(r)} for c, r in self.atoms],
        }


def hypoexp_density(params: RateParams, mode: str = EXACT) -> ExpMixDensity:
    """Signed exponential mixture for a sum of exponentials with distinct rates"""
    rates = params.rates
    if mode == FLOAT:
        values = [float(r) for r in rates]
        spacing = min(abs(a - b) for a, b in itertools.combinations(values, 2))
        if spacing / max(values) < CLUSTER_THRESHOLD:
            raise ParameterError(
                f"rates are too clustered for float mode (relative spacing {spacing / max(values):.3g}); "
                "use exact mode"
            )
        scale = math.prod(values)
        atoms = tuple(
            (scale / math.prod(other - lam for other in values[:k] + values[k + 1:]), lam)
            for k, lam in enumerate(values)
        )
        return ExpMixDensity(atoms, FLOAT)

    scale = math.prod(rates, start=Fraction(1))
    atoms = tuple(
        (scale / math.prod((other - lam for other in rates[:k] + rates[k + 1:]), start=Fraction(1)), lam)
        for k, lam in enumerate(rates)
    )
    logger.debug("exponential mixture weights: %s", [format_rational(c) for c, _ in atoms])
    return ExpMixDensity(atoms, EXACT)


def vandermonde_zero(params: RateParams) -> Fraction:
    """sum_k (-1)^k prod_{j<l, j,l != k} (lambda_l - lambda_j); always 0"""
    rates = params.rates
    total = Fraction(0)
    for k in range(len(rates)):
        rest = rates[:k] + rates[k + 1:]
        minor = math.prod(
            (rest[l] - rest[j] for j, l in itertools.combinations(range(len(rest)), 2)),
            start=Fraction(1),
        )
        # k is 0-based here, the alternating sign starts at -1
        total += (-1) ** (k + 1) * minor
    return total


def reciprocal_product_sum(params: RateParams) -> Fraction:
    """sum_k 1 / prod_{l != k} (lambda_l - lambda_k); always 0"""
    rates = params.rates
    return sum(
        (1 / math.prod((other - lam for other in rates[:k] + rates[k + 1:]), start=Fraction(1))
         for k, lam in enumerate(rates)),
        Fraction(0),
    )


# ---------------------------------------------------------------------------
# Gamma summands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaParams:
    """Shapes alpha_i and scales beta_i of independent Gamma summands"""

    shapes: Tuple[Number, ...]
    scales: Tuple[Number, ...]

    def __post_init__(self):
        shapes = tuple(_as_number(a, "shape") for a in self.shapes)
        scales = tuple(_as_number(b, "scale") for b in self.scales)
        object.__setattr__(self, "shapes", shapes)
        object.__setattr__(self, "scales", scales)
        if len(shapes) != len(scales):
            raise ParameterError(f"{len(shapes)} shapes but {len(scales)} scales")
        if not shapes:
            raise ParameterError("need at least one Gamma summand")
        if any(a <= 0 for a in shapes) or any(b <= 0 for b in scales):
            raise ParameterError("shapes and scales must be positive")

    @property
    def n(self) -> int:
        return len(self.shapes)

    @property
    def exact_capable(self) -> bool:
        """Integer shapes and rational scales keep every series coefficient rational"""
        return (
            all(isinstance(a, Fraction) and is_integral(a) for a in self.shapes)
            and all(isinstance(b, Fraction) for b in self.scales)
        )

    def normalized(self) -> "GammaParams":
        """Move the first smallest scale to the front"""
        first = min(range(self.n), key=lambda i: (self.scales[i], i))
        order = [first] + [i for i in range(self.n) if i != first]
        return GammaParams(
            tuple(self.shapes[i] for i in order),
            tuple(self.scales[i] for i in order),
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "shapes": [serialize_number(a) for a in self.shapes],
            "scales": [serialize_number(b) for b in self.scales],
        }


@dataclass(frozen=True)
class GammaSeries:
    """Truncated single-kernel series rho * sum_j delta_j Gamma(A+j, beta1) density"""

    params: GammaParams
    rho: Number
    A: Number
    beta1: Number
    deltas: Tuple[Number, ...]
    gammas: Tuple[Number, ...]
    order: int
    deficit: Number
    tail_estimate: float
    truncated: bool
    mode: str
    deficit_trace: Tuple[float, ...] = field(default=(), compare=False, repr=False)

    def mass(self) -> Number:
        return self.rho * sum(self.deltas)

    def pdf(self, x: Number) -> float:
        return gamma_density_eval(self, x)

    def to_json(self) -> Dict[str, Any]:
        return {
            "family": "gamma",
            "mode": self.mode,
            "params": self.params.to_json(),
            "series": {
                "rho": serialize_number(self.rho),
                "A": serialize_number(self.A),
                "beta1": serialize_number(self.beta1),
                "J": self.order,
                "deltas": [serialize_number(d) for d in self.deltas],
                "gammas": [serialize_number(g) for g in self.gammas],
                "tail_estimate": self.tail_estimate,
                "truncated": self.truncated,
            },
        }


def gamma_series(params: GammaParams, tolerance: float = 1e-9, max_order: int = 2000,
                 mode: Optional[str] = None) -> GammaSeries:
    """
    Build the series up to the first order J whose mass deficit
    1 - rho * sum_{j<=J} delta_j drops below tolerance, or up to max_order.

    Exact mode needs integer shapes and rational scales; anything else runs
    in float mode. Hitting max_order sets `truncated` and logs a warning.
    """
    if tolerance <= 0:
        raise ParameterError(f"tolerance must be positive, got {tolerance}")
    if max_order < 1:
        raise ParameterError(f"max_order must be a positive integer, got {max_order}")
    params = params.normalized()
    if mode is None:
        mode = EXACT if params.exact_capable else FLOAT
    elif mode == EXACT and not params.exact_capable:
        logger.info("non-integer shapes or real scales: gamma series runs in float mode")
        mode = FLOAT

    if mode == EXACT:
        series = _exact_gamma_series(params, tolerance, max_order)
    else:
        series = _float_gamma_series(params, tolerance, max_order)

    if series.truncated:
        logger.warning(
            "gamma series hit max_order=%d with deficit %.3e (tolerance %.3e)",
            max_order, series.tail_estimate, tolerance,
        )
    else:
        logger.info("gamma series converged at J=%d, deficit %.3e", series.order, series.tail_estimate)
    return series


def _exact_gamma_series(params: GammaParams, tolerance: float, max_order: int) -> GammaSeries:
    shapes = [int(a) for a in params.shapes]
    beta1 = params.scales[0]
    ratios = [beta1 / b for b in params.scales]
    rho = math.prod((q ** a for q, a in zip(ratios, shapes)), start=Fraction(1))

    # Work with e_j = j! D^j delta_j and g_l = l gamma_l D^l, which are integers
    # once D clears the denominators of every ratio.
    D = math.lcm(*(q.denominator for q in ratios))
    bases = [int(D * (1 - q)) for q in ratios]
    g: List[int] = [0]
    e: List[int] = [1]
    denominator = 1

    deltas: List[Fraction] = [Fraction(1)]
    gammas: List[Fraction] = []
    partial = Fraction(1)
    deficit = 1 - rho * partial
    trace = [float(deficit)]

    j = 0
    while deficit >= tolerance and j < max_order:
        g.append(sum(a * b ** (j + 1) for a, b in zip(shapes, bases)))
        acc = 0
        falling = 1
        for l in range(1, j + 2):
            if l > 1:
                falling *= j + 2 - l
            acc += g[l] * e[j + 1 - l] * falling
        e.append(acc)
        j += 1
        denominator *= j * D
        delta = Fraction(acc, denominator)
        deltas.append(delta)
        gammas.append(Fraction(g[j], j * D ** j))
        partial += delta
        deficit = 1 - rho * partial
        trace.append(float(deficit))
        logger.debug("gamma series J=%d deficit=%.6e", j, trace[-1])

    return GammaSeries(
        params=params,
        rho=rho,
        A=Fraction(sum(shapes)),
        beta1=beta1,
        deltas=tuple(deltas),
        gammas=tuple(gammas),
        order=j,
        deficit=deficit,
        tail_estimate=float(deficit),
        truncated=deficit >= tolerance,
        mode=EXACT,
        deficit_trace=tuple(trace),
    )


def _float_gamma_series(params: GammaParams, tolerance: float, max_order: int) -> GammaSeries:
    shapes = np.array([float(a) for a in params.shapes])
    scales = np.array([float(b) for b in params.scales])
    beta1 = float(scales[0])
    ratios = beta1 / scales
    complements = 1.0 - ratios
    rho = math.exp(float(np.dot(shapes, np.log(ratios))))

    if tolerance < FLOAT_DEFICIT_FLOOR:
        logger.warning("float mode cannot resolve deficits below %.0e; clamping tolerance", FLOAT_DEFICIT_FLOOR)
        tolerance = FLOAT_DEFICIT_FLOOR

    weighted = [0.0]   # l * gamma_l
    deltas = [1.0]
    deficit = 1.0 - rho
    trace = [deficit]

    j = 0
    while deficit >= tolerance and j < max_order:
        weighted.append(float(np.dot(shapes, complements ** (j + 1))))
        nxt = float(np.dot(weighted[1:j + 2], deltas[j::-1])) / (j + 1)
        deltas.append(nxt)
        j += 1
        deficit = 1.0 - rho * math.fsum(deltas)
        trace.append(deficit)
        logger.debug("gamma series J=%d deficit=%.6e", j, deficit)

    return GammaSeries(
        params=params,
        rho=rho,
        A=float(shapes.sum()),
        beta1=beta1,
        deltas=tuple(deltas),
        gammas=tuple(w / l for l, w in enumerate(weighted) if l > 0),
        order=j,
        deficit=deficit,
        tail_estimate=max(deficit, 0.0),
        truncated=deficit >= tolerance,
        mode=FLOAT,
        deficit_trace=tuple(trace),
    )


def gamma_density_eval(series: GammaSeries, x: Number) -> float:
    """Truncated series density at x, each term evaluated in log space"""
    if x < 0:
        return 0.0
    A = float(series.A)
    beta1 = float(series.beta1)
    if x == 0:
        if A > 1:
            return 0.0
        if A == 1:
            return float(series.rho) * float(series.deltas[0]) / beta1
        return math.inf

    x = float(x)
    log_rho = _log(series.rho)
    orders = np.array([j for j, d in enumerate(series.deltas) if d > 0], dtype=float)
    log_deltas = np.array([_log(d) for d in series.deltas if d > 0])
    k = A + orders
    log_terms = log_rho + log_deltas + (k - 1) * math.log(x) - x / beta1 - gammaln(k) - k * math.log(beta1)
    return math.fsum(np.exp(log_terms).tolist())


# ---------------------------------------------------------------------------
# Uniform summands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformParams:
    """Right endpoints a_i of independent uniforms on [0, a_i]"""

    lengths: Tuple[Fraction, ...]

    def __post_init__(self):
        lengths = tuple(to_rational(a, "length") for a in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if not lengths:
            raise ParameterError("need at least one uniform summand")
        if any(a <= 0 for a in lengths):
            raise ParameterError("uniform lengths must be positive")

    @property
    def n(self) -> int:
        return len(self.lengths)

    def to_json(self) -> Dict[str, Any]:
        return {"lengths": [format_rational(a) for a in self.lengths]}


@dataclass(frozen=True)
class PiecewisePoly:
    """
    Exact piecewise-polynomial density.

    pieces[k] is the polynomial (in x itself, not a local variable) on
    [breakpoints[k], breakpoints[k+1]]. The density is zero off the support.
    """

    breakpoints: Tuple[Fraction, ...]
    pieces: Tuple[poly.Poly, ...]
    family: str = field(default="uniform", compare=False)
    lengths: Tuple[Fraction, ...] = field(default=(), compare=False)
    offset: Fraction = field(default=Fraction(0), compare=False)

    def __post_init__(self):
        if len(self.pieces) != len(self.breakpoints) - 1:
            raise ParameterError("need exactly one piece per interval between breakpoints")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ParameterError("breakpoints must be strictly increasing")

    @property
    def support(self) -> Tuple[Fraction, Fraction]:
        return self.breakpoints[0], self.breakpoints[-1]

    def _piece_index(self, x: Number) -> int:
        k = bisect.bisect_right(self.breakpoints, x) - 1
        return min(k, len(self.pieces) - 1)

    def pdf(self, x: Number) -> Number:
        lo, hi = self.support
        if x < lo or x > hi:
            return 0.0 if isinstance(x, float) else Fraction(0)
        return poly.evaluate(self.pieces[self._piece_index(x)], x)

    def cdf(self, x: Number) -> Number:
        lo, hi = self.support
        if x <= lo:
            return Fraction(0)
        if x >= hi:
            return Fraction(1)
        k = self._piece_index(x)
        done = sum(
            (poly.integrate(p, a, b) for p, a, b in zip(self.pieces[:k], self.breakpoints, self.breakpoints[1:])),
            Fraction(0),
        )
        return done + poly.integrate(self.pieces[k], self.breakpoints[k], x)

    def integral(self) -> Fraction:
        return self.moment(0)

    def moment(self, m: int) -> Fraction:
        """Exact integral of x^m times the density"""
        if m < 0:
            raise ParameterError(f"moment order must be nonnegative, got {m}")
        weight = poly.monomial(m)
        return sum(
            (poly.integrate(poly.times(p, weight), a, b)
             for p, a, b in zip(self.pieces, self.breakpoints, self.breakpoints[1:])),
            Fraction(0),
        )

    def is_continuous(self) -> bool:
        """Adjacent pieces agree at every interior knot"""
        return all(
            poly.evaluate(left, knot) == poly.evaluate(right, knot)
            for left, right, knot in zip(self.pieces, self.pieces[1:], self.breakpoints[1:])
        )

    def is_nonnegative_sampled(self) -> bool:
        """Nonnegative at every knot and piece midpoint"""
        for p, a, b in zip(self.pieces, self.breakpoints, self.breakpoints[1:]):
            if min(poly.evaluate(p, a), poly.evaluate(p, (a + b) / 2), poly.evaluate(p, b)) < 0:
                return False
        return True

    def shifted(self, offset: Number) -> "PiecewisePoly":
        """Density of the sum plus a constant"""
        offset = to_rational(offset, "offset")
        return PiecewisePoly(
            tuple(t + offset for t in self.breakpoints),
            tuple(poly.translate(p, offset) for p in self.pieces),
            family=self.family,
            lengths=self.lengths,
            offset=self.offset + offset,
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "params": {
                "lengths": [format_rational(a) for a in self.lengths],
                "offset": format_rational(self.offset),
            },
            "pieces": [
                {"lo": format_rational(a), "hi": format_rational(b), "coefficients": poly.to_strings(p)}
                for p, a, b in zip(self.pieces, self.breakpoints, self.breakpoints[1:])
            ],
        }


def _truncated_power_pieces(signed_knots: Dict[Fraction, int], degree: int, factor: Fraction) -> Tuple[Tuple[Fraction, ...], Tuple[poly.Poly, ...]]:
    """
    Expand factor * sum_s w(s) (x - s)_+^degree into explicit pieces.

    signed_knots maps each distinct shift s to its net signed multiplicity
    w(s); coincident shifts arrive already merged, so knots stay strictly
    increasing. On [t_k, t_{k+1}] every shift s <= t_k is active.
    """
    knots = tuple(sorted(signed_knots))
    pieces = []
    active: poly.Poly = ()
    for knot in knots[:-1]:
        active = poly.plus(active, poly.scale(poly.shifted_power(knot, degree), signed_knots[knot]))
        pieces.append(poly.scale(active, factor))
    return knots, tuple(pieces)


def iid_uniform_density(n: int, a: Number) -> PiecewisePoly:
    """Density of the sum of n I.I.D. uniforms on [0, a], knots 0, a, ..., na"""
    if n < 1:
        raise ParameterError(f"need at least one summand, got n={n}")
    a = to_rational(a, "a")
    if a <= 0:
        raise ParameterError("uniform length must be positive")
    signed = {i * a: (-1) ** i * math.comb(n, i) for i in range(n + 1)}
    factor = 1 / (a ** n * factorial(n - 1))
    knots, pieces = _truncated_power_pieces(signed, n - 1, factor)
    return PiecewisePoly(knots, pieces, family="uniform", lengths=(a,) * n)


def general_uniform_density(params: UniformParams) -> PiecewisePoly:
    """Density of the sum of uniforms on [0, a_i]; knots are the distinct subset sums"""
    lengths = params.lengths
    n = len(lengths)
    if n < 2:
        raise ParameterError("the distinct-length construction needs at least two summands")
    signed: Dict[Fraction, int] = defaultdict(int)
    for size in range(n + 1):
        for subset in itertools.combinations(lengths, size):
            signed[sum(subset, Fraction(0))] += (-1) ** size
    factor = 1 / (factorial(n - 1) * math.prod(lengths, start=Fraction(1)))
    knots, pieces = _truncated_power_pieces(dict(signed), n - 1, factor)
    return PiecewisePoly(knots, pieces, family="uniform", lengths=lengths)


def uniform_density(params: UniformParams) -> PiecewisePoly:
    """Pick the construction that fits: I.I.D. for one summand, subset sums otherwise"""
    if params.n == 1:
        return iid_uniform_density(1, params.lengths[0])
    return general_uniform_density(params)


def uniform_interval_density(intervals: Sequence[Tuple[Number, Number]]) -> PiecewisePoly:
    """Sum of uniforms on [b_i, c_i]: widths c_i - b_i, support shifted by sum b_i"""
    bounds = [(to_rational(b, "lower"), to_rational(c, "upper")) for b, c in intervals]
    if any(c <= b for b, c in bounds):
        raise ParameterError("every interval needs upper > lower")
    widths = UniformParams(tuple(c - b for b, c in bounds))
    return uniform_density(widths).shifted(sum((b for b, _ in bounds), Fraction(0)))


def truncated_power_integral(i_shift: Number, n: int, m: int, upper: Number) -> Fraction:
    """Integral of (x - s)_+^(n-1) x^m over [s, upper], by binomial expansion"""
    s = to_rational(i_shift, "i_shift")
    upper = to_rational(upper, "upper")
    if n < 1 or m < 0:
        raise ParameterError(f"need n >= 1 and m >= 0, got n={n}, m={m}")
    if s < 0:
        raise ParameterError(f"shift must be nonnegative, got {format_rational(s)}")
    if s > upper:
        return Fraction(0)
    integrand = poly.times(poly.shifted_power(s, n - 1), poly.monomial(m))
    return poly.integrate(integrand, s, upper)


def truncated_power_integral_closed(i_shift: Number, n: int, m: int, upper: Number) -> Fraction:
    """Same integral by repeated integration by parts:
    m!(n-1)!/(m+n)! sum_j (-1)^j C(m+n, m-j) (upper-s)^(n+j) upper^(m-j)"""
    s = to_rational(i_shift, "i_shift")
    upper = to_rational(upper, "upper")
    if n < 1 or m < 0:
        raise ParameterError(f"need n >= 1 and m >= 0, got n={n}, m={m}")
    if s > upper:
        return Fraction(0)
    total = sum(
        ((-1) ** j * math.comb(m + n, m - j) * (upper - s) ** (n + j) * upper ** (m - j) for j in range(m + 1)),
        Fraction(0),
    )
    return Fraction(factorial(m) * factorial(n - 1), factorial(m + n)) * total
