"""
One verifier per combinatorial identity. Each verifier computes both sides
along independent paths and returns a VerificationReport.
"""

import dataclasses
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Optional, Sequence, Tuple

from core_numeric import (
    Number,
    ParameterError,
    compositions,
    factorial,
    format_rational,
    homogeneous_symmetric,
    require_distinct,
    stirling2_explicit,
    stirling2_recurrence,
    to_rational,
)
from densities import (
    EXACT,
    FLOAT,
    GammaParams,
    RateParams,
    UniformParams,
    gamma_series,
    hypoexp_density,
    reciprocal_product_sum,
    serialize_number,
    truncated_power_integral,
    truncated_power_integral_closed,
    vandermonde_zero,
)
from moments import (
    gamma_moment_by_series,
    hypoexp_moment_closed,
    moment_by_expansion,
    moment_pair,
)

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
PASS_WITH_TRUNCATION = "pass-with-truncation"

DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class VerificationReport:
    """Both sides of one identity check and the verdict taken on them"""

    identity_id: str
    parameters: Dict[str, Any]
    lhs: Number
    rhs: Number
    mode: str
    verdict: str
    abs_gap: float
    tolerance: float
    truncation: Optional[Dict[str, Any]] = None
    seed: Optional[int] = None
    extra: Dict[str, Any] = field(default_factory=dict)
    # per-order mass deficits of the gamma series, kept out of the JSON report
    trace: Tuple[float, ...] = field(default=(), compare=False, repr=False)

    @property
    def passed(self) -> bool:
        return self.verdict in (PASS, PASS_WITH_TRUNCATION)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "identity": self.identity_id,
            "params": self.parameters,
            "lhs": serialize_number(self.lhs),
            "rhs": serialize_number(self.rhs),
            "mode": self.mode,
            "verdict": self.verdict,
            "abs_gap": self.abs_gap,
            "tolerance": self.tolerance,
            "truncation": self.truncation,
            "seed": self.seed,
            "extra": self.extra,
        }

    def with_rhs_offset(self, offset: Number) -> "VerificationReport":
        """Copy with the right side moved by offset and the verdict retaken"""
        rhs = self.rhs + (float(offset) if isinstance(self.rhs, float) else to_rational(offset, "rhs_offset"))
        if self.truncation is not None:
            verdict = _truncation_verdict(self.lhs, rhs, self.truncation["envelope"], self.tolerance)
            if self.truncation.get("capped"):
                verdict = FAIL
        elif self.mode == EXACT:
            verdict = PASS if self.lhs == rhs else FAIL
        else:
            verdict = _tolerance_verdict(self.lhs, rhs, self.tolerance, PASS)
        return dataclasses.replace(
            self,
            rhs=rhs,
            verdict=verdict,
            abs_gap=_gap(self.lhs, rhs),
            extra={**self.extra, "rhs_offset": serialize_number(offset if isinstance(offset, float) else to_rational(offset))},
        )


def _gap(lhs: Number, rhs: Number) -> float:
    return float(abs(lhs - rhs))


def _tolerance_verdict(lhs: Number, rhs: Number, tolerance: float, passing: str) -> str:
    """Relative comparison: |lhs - rhs| <= tolerance * max(1, |rhs|)"""
    return passing if _gap(lhs, rhs) <= tolerance * max(1.0, abs(float(rhs))) else FAIL


def _truncation_verdict(lhs: Number, rhs: Number, envelope: float, tolerance: float) -> str:
    """A truncated series may only fall short of rhs, and by no more than its tail envelope"""
    slack = tolerance * max(1.0, abs(float(rhs)))
    shortfall = float(rhs - lhs)
    return PASS_WITH_TRUNCATION if -slack <= shortfall <= envelope + slack else FAIL


def _serialize_params(params: Dict[str, Any]) -> Dict[str, Any]:
    out = {}
    for key, value in params.items():
        if isinstance(value, (list, tuple)):
            out[key] = [serialize_number(v) for v in value]
        elif isinstance(value, (Fraction, float)):
            out[key] = serialize_number(value)
        else:
            out[key] = value
    return out


def _report(identity_id: str, params: Dict[str, Any], lhs: Number, rhs: Number, mode: str = EXACT,
            tolerance: float = DEFAULT_TOLERANCE,
            checks: Optional[Dict[str, Tuple[Number, Number]]] = None) -> VerificationReport:
    """
    Verdict for closed-form identities. Exact mode demands lhs == rhs; float
    mode compares within tolerance. Every entry of `checks` is an extra
    (value, expected) path that must agree as well.
    """
    extra: Dict[str, Any] = {}
    paths_agree = True
    for name, (value, expected) in (checks or {}).items():
        agree = value == expected if mode == EXACT else _tolerance_verdict(value, expected, tolerance, PASS) == PASS
        paths_agree = paths_agree and agree
        extra[name] = {"value": serialize_number(value), "expected": serialize_number(expected), "agree": agree}

    if mode == EXACT:
        verdict = PASS if lhs == rhs and paths_agree else FAIL
        tolerance = 0.0
    else:
        verdict = _tolerance_verdict(lhs, rhs, tolerance, PASS) if paths_agree else FAIL
    if verdict == FAIL:
        logger.info("%s failed: lhs=%s rhs=%s", identity_id, serialize_number(lhs), serialize_number(rhs))
    return VerificationReport(
        identity_id=identity_id,
        parameters=_serialize_params(params),
        lhs=lhs,
        rhs=rhs,
        mode=mode,
        verdict=verdict,
        abs_gap=_gap(lhs, rhs),
        tolerance=tolerance,
        extra=extra,
    )


def _in_mode(values: Sequence[Fraction], mode: str):
    if mode not in (EXACT, FLOAT):
        raise ParameterError(f"mode must be {EXACT!r} or {FLOAT!r}, got {mode!r}")
    return [float(v) for v in values] if mode == FLOAT else list(values)


def _distinct_positive(xs: Sequence[Any], name: str) -> Tuple[Fraction, ...]:
    values = tuple(to_rational(x, name) for x in xs)
    if len(values) < 2:
        raise ParameterError(f"{name} needs at least two values")
    if any(v <= 0 for v in values):
        raise ParameterError(f"{name} must be positive")
    require_distinct(values, name)
    return values


def _one() -> Fraction:
    return Fraction(1)


# ---------------------------------------------------------------------------
# Exponential family identities
# ---------------------------------------------------------------------------

def verify_good(xs: Sequence[Any], mode: str = EXACT, tolerance: float = DEFAULT_TOLERANCE) -> VerificationReport:
    """sum_j prod_{i != j} (1 - x_j/x_i)^(-1) = 1"""
    xs = _distinct_positive(xs, "xs")
    vals = _in_mode(xs, mode)
    lhs = sum(
        math.prod((1 / (1 - xj / xi) for i, xi in enumerate(vals) if i != j), start=_one())
        for j, xj in enumerate(vals)
    )
    return _report("good", {"xs": xs}, lhs, _one(), mode, tolerance)


def verify_symmetric_moment(lambdas: RateParams, m: int, mode: str = EXACT,
                            tolerance: float = DEFAULT_TOLERANCE) -> VerificationReport:
    """sum_k lambda_k^(-m) prod_{l != k} lambda_l/(lambda_l - lambda_k) = sum over compositions of prod lambda_j^(-i_j)"""
    if m < 0:
        raise ParameterError(f"m must be nonnegative, got {m}")
    rates = _in_mode(lambdas.rates, mode)
    lhs = sum(
        (1 / lam ** m * math.prod((other / (other - lam) for l, other in enumerate(rates) if l != k), start=_one())
         for k, lam in enumerate(rates)),
        Fraction(0),
    )
    exact_rates = lambdas.rates
    rhs: Number = sum(
        (math.prod((1 / lam ** i for lam, i in zip(exact_rates, comp)), start=_one())
         for comp in compositions(m, len(exact_rates))),
        Fraction(0),
    )
    # m! times the normalized sum is the raw moment of the hypoexponential sum
    closed = hypoexp_moment_closed(lambdas, m) / factorial(m)
    return _report(
        "symmetric-moment", {"lambdas": exact_rates, "m": m}, lhs, rhs, mode, tolerance,
        checks={"closed_moment": (closed, rhs)},
    )


def verify_homogeneous(xs: Sequence[Any], m: int, mode: str = EXACT,
                       tolerance: float = DEFAULT_TOLERANCE) -> VerificationReport:
    """sum_j x_j^m prod_{i != j} (x_j - x_i)^(-1) = h_(m-n+1)(x)"""
    xs = tuple(to_rational(x, "xs") for x in xs)
    if len(xs) < 2:
        raise ParameterError("xs needs at least two values")
    if any(x == 0 for x in xs):
        raise ParameterError("xs must be nonzero")
    if m < 0:
        raise ParameterError(f"m must be nonnegative, got {m}")
    require_distinct(xs, "xs")
    vals = _in_mode(xs, mode)
    lhs = sum(
        (xj ** m * math.prod((1 / (xj - xi) for i, xi in enumerate(vals) if i != j), start=_one())
         for j, xj in enumerate(vals)),
        Fraction(0),
    )
    rhs = homogeneous_symmetric(m - len(xs) + 1, xs)
    return _report("homogeneous", {"xs": xs, "m": m}, lhs, rhs, mode, tolerance)


def verify_chf_partial_fraction(lambdas: RateParams, t: Any, mode: str = EXACT,
                                tolerance: float = DEFAULT_TOLERANCE) -> VerificationReport:
    """sum_k (1 - t/lambda_k)^(-1) prod_{l != k} lambda_l/(lambda_l - lambda_k) = prod_k (1 - t/lambda_k)^(-1)"""
    t = to_rational(t, "t")
    if t >= min(lambdas.rates):
        raise ParameterError(
            f"t={format_rational(t)} must be below the smallest rate {format_rational(min(lambdas.rates))}"
        )
    rates = _in_mode(lambdas.rates, mode)
    tt = float(t) if mode == FLOAT else t
    lhs = sum(
        (1 / (1 - tt / lam) * math.prod((other / (other - lam) for l, other in enumerate(rates) if l != k), start=_one())
         for k, lam in enumerate(rates)),
        Fraction(0),
    )
    rhs = math.prod((1 / (1 - tt / lam) for lam in rates), start=_one())
    density_side = hypoexp_density(lambdas, mode).mgf(tt)
    return _report(
        "chf-partial-fraction", {"lambdas": lambdas.rates, "t": t}, lhs, rhs, mode, tolerance,
        checks={"density_mgf": (density_side, rhs)},
    )


def verify_vandermonde_zero(lambdas: RateParams) -> VerificationReport:
    """Alternating sum of the Vandermonde minors is zero"""
    return _report("vandermonde-zero", {"lambdas": lambdas.rates}, vandermonde_zero(lambdas), Fraction(0))


def verify_reciprocal_product_sum(lambdas: RateParams) -> VerificationReport:
    """sum_k 1/prod_{l != k}(lambda_l - lambda_k) = 0"""
    return _report("reciprocal-product-sum", {"lambdas": lambdas.rates}, reciprocal_product_sum(lambdas), Fraction(0))


# ---------------------------------------------------------------------------
# Gamma family identities
# ---------------------------------------------------------------------------

def _verify_gamma(identity_id: str, params: GammaParams, m: int, rhs: Number,
                  tolerance: float, max_order: int) -> VerificationReport:
    series = gamma_series(params, tolerance, max_order)
    moment = gamma_moment_by_series(series, m)
    truncation: Optional[Dict[str, Any]] = {
        "J": moment.order,
        "deficit": moment.deficit,
        "envelope": moment.envelope,
        "capped": moment.truncated,
    }
    extra: Dict[str, Any] = {}
    if series.mode == EXACT and series.deficit == 0:
        # Equal scales: the series is a single Gamma term, nothing was cut off
        verdict = PASS if moment.value == rhs else FAIL
        truncation, tolerance = None, 0.0
    elif moment.truncated:
        verdict = FAIL
        extra["diagnostic"] = f"series reached max_order={max_order} before the mass deficit fell below tolerance"
    else:
        verdict = _truncation_verdict(moment.value, rhs, moment.envelope, tolerance)
        if verdict == FAIL:
            logger.warning("%s: series moment misses the expansion by more than the tail envelope %.3e",
                           identity_id, moment.envelope)
    return VerificationReport(
        identity_id=identity_id,
        parameters=_serialize_params({"alpha": params.shapes, "beta": params.scales, "m": m}),
        lhs=moment.value,
        rhs=rhs,
        mode=series.mode,
        verdict=verdict,
        abs_gap=_gap(moment.value, rhs),
        tolerance=tolerance,
        truncation=truncation,
        extra=extra,
        trace=series.deficit_trace,
    )


def verify_gamma_mean(params: GammaParams, tolerance: float = DEFAULT_TOLERANCE,
                      max_order: int = 2000) -> VerificationReport:
    """rho beta1 sum_j delta_j (A+j) = sum_i alpha_i beta_i"""
    rhs = sum((a * b for a, b in zip(params.shapes, params.scales)), Fraction(0))
    return _verify_gamma("gamma-mean", params, 1, rhs, tolerance, max_order)


def verify_gamma_moment(params: GammaParams, m: int, tolerance: float = DEFAULT_TOLERANCE,
                        max_order: int = 2000) -> VerificationReport:
    """Series moment against the multinomial expansion over rising factorials"""
    if m < 1:
        raise ParameterError(f"m must be a positive integer, got {m}")
    rhs = moment_by_expansion("gamma", params, m)
    return _verify_gamma("gamma-moment", params, m, rhs, tolerance, max_order)


# ---------------------------------------------------------------------------
# Uniform family identities
# ---------------------------------------------------------------------------

def _unit_uniform_expansion(m: int, n: int) -> Fraction:
    """gamma_{m,n} = sum over compositions of multinomial / prod (i_k + 1)"""
    return moment_by_expansion("uniform", UniformParams((Fraction(1),) * n), m)


def verify_iid_uniform_moment(n: int, m: int) -> VerificationReport:
    if n < 2 or m < 1:
        raise ParameterError(f"need n >= 2 and m >= 1, got n={n}, m={m}")
    # The i = 0 term is split off as n^(m+n)/(m+n)
    bracket = Fraction(n ** (m + n), m + n)
    for i in range(1, n + 1):
        inner = sum(
            (Fraction(math.comb(n - 1, j) * (-i) ** (n - j - 1) * (n ** (m + j + 1) - i ** (m + j + 1)), m + j + 1)
             for j in range(n)),
            Fraction(0),
        )
        bracket += (-1) ** i * math.comb(n, i) * inner
    lhs = bracket / factorial(n - 1)
    return _report("iid-uniform-moment", {"n": n, "m": m}, lhs, _unit_uniform_expansion(m, n))


def verify_stirling_link(m: int, n: int) -> VerificationReport:
    """gamma_{m,n} = S(m+n, n) / C(m+n, n)"""
    if m < 0 or n < 1:
        raise ParameterError(f"need m >= 0 and n >= 1, got m={m}, n={n}")
    rhs = Fraction(stirling2_recurrence(m + n, n), math.comb(m + n, n))
    return _report("stirling-link", {"m": m, "n": n}, _unit_uniform_expansion(m, n), rhs)


def verify_uniform_power_integral(m: int, n: int) -> VerificationReport:
    """
    Integrating the I.I.D. uniform density against x^m gives
    m!/(m+n)! sum_i (-1)^(n-i) C(n, i) i^(m+n); the right side times
    C(m+n, n) must reproduce the explicit Stirling number S(m+n, n).
    """
    if m < 1 or n < 2:
        raise ParameterError(f"need m >= 1 and n >= 2, got m={m}, n={n}")
    lhs = sum(
        ((-1) ** i * math.comb(n, i) * truncated_power_integral(i, n, m, n) for i in range(n + 1)),
        Fraction(0),
    ) / factorial(n - 1)
    rhs = Fraction(factorial(m), factorial(m + n)) * sum(
        (-1) ** (n - i) * math.comb(n, i) * i ** (m + n) for i in range(n + 1)
    )
    return _report(
        "uniform-power-integral", {"m": m, "n": n}, lhs, rhs,
        checks={"stirling_chain": (rhs * math.comb(m + n, n), stirling2_explicit(m, n))},
    )


def verify_stirling_explicit(m: int, n: int) -> VerificationReport:
    if m < 0 or n < 1:
        raise ParameterError(f"need m >= 0 and n >= 1, got m={m}, n={n}")
    return _report(
        "stirling", {"m": m, "n": n}, stirling2_explicit(m, n), Fraction(stirling2_recurrence(m + n, n)),
    )


def _subset_sum_term(s: Fraction, total: Fraction, n: int, m: int) -> Fraction:
    """sum_k C(n-1, k) (-s)^(n-1-k) (A^(k+m+1) - s^(k+m+1)) / (k+m+1)"""
    return sum(
        (math.comb(n - 1, k) * (-s) ** (n - 1 - k) * (total ** (k + m + 1) - s ** (k + m + 1)) / (k + m + 1)
         for k in range(n)),
        Fraction(0),
    )


def verify_general_uniform(params: UniformParams, m: int) -> VerificationReport:
    """
    Closed form with the subset-sum correction B(n), against the multinomial
    expansion and against exact integration of the piecewise density.
    """
    lengths = params.lengths
    n = len(lengths)
    if n < 2 or m < 1:
        raise ParameterError(f"need n >= 2 and m >= 1, got n={n}, m={m}")
    total = sum(lengths, Fraction(0))
    correction = Fraction(0)
    for i in range(1, n + 1):
        for subset in itertools.combinations(lengths, i):
            correction += (-1) ** i * _subset_sum_term(sum(subset, Fraction(0)), total, n, m)
    lhs = (total ** (m + n) / (m + n) + correction) / (
        factorial(n - 1) * math.prod(lengths, start=Fraction(1))
    )
    pair = moment_pair("uniform", params, m)
    return _report(
        "general-uniform", {"a": lengths, "m": m}, lhs, pair.by_expansion,
        checks={"density": (pair.by_density, pair.by_expansion)},
    )


def verify_truncated_power(shift: Any, n: int, m: int, upper: Any) -> VerificationReport:
    """Binomial-expansion integral against the integration-by-parts closed form"""
    s = to_rational(shift, "shift")
    u = to_rational(upper, "upper")
    if not 0 <= s <= u:
        raise ParameterError(f"need 0 <= shift <= upper, got {format_rational(s)} and {format_rational(u)}")
    return _report(
        "truncated-power", {"shift": s, "n": n, "m": m, "upper": u},
        truncated_power_integral(s, n, m, u), truncated_power_integral_closed(s, n, m, u),
    )


def verify_binomial_vanishing(m: int, n: int) -> VerificationReport:
    """The low-order part of the binomial expansion of i^(m+n) cancels under the alternating sum over i"""
    if m < 0 or n < 1:
        raise ParameterError(f"need m >= 0 and n >= 1, got m={m}, n={n}")
    lhs = sum(
        (-1) ** (n - i) * math.comb(n, i) * sum(
            (-1) ** j * math.comb(m + n, j) * (n - i) ** j * n ** (m + n - j) for j in range(n)
        )
        for i in range(n + 1)
    )
    return _report("binomial-vanishing", {"m": m, "n": n}, Fraction(lhs), Fraction(0))
