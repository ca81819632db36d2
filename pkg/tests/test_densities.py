import logging
import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from core_numeric import ParameterError
from densities import (
    EXACT,
    FLOAT,
    GammaParams,
    RateParams,
    UniformParams,
    gamma_density_eval,
    gamma_series,
    general_uniform_density,
    hypoexp_density,
    iid_uniform_density,
    reciprocal_product_sum,
    truncated_power_integral,
    truncated_power_integral_closed,
    uniform_density,
    uniform_interval_density,
    vandermonde_zero,
)
from strategies import distinct_positive, lengths


# ---------------------------------------------------------------------------
# Exponential summands
# ---------------------------------------------------------------------------

def test_rate_params_validation():
    with pytest.raises(ParameterError, match="distinct"):
        RateParams(("1", "2/2"))
    with pytest.raises(ParameterError):
        RateParams((1,))
    with pytest.raises(ParameterError):
        RateParams((1, -2))
    assert RateParams(("1/2", 3)).to_json() == {"rates": ["1/2", "3/1"]}


def test_hypoexp_weights():
    assert hypoexp_density(RateParams((1, 2))).weights == (2, -2)
    assert hypoexp_density(RateParams((1, 2, 3))).weights == (3, -6, 3)


@given(distinct_positive(2, 5))
def test_weight_mass_is_exactly_one(rates):
    density = hypoexp_density(RateParams(rates))
    assert density.mass() == 1


def test_two_rate_density_vanishes_at_zero():
    density = hypoexp_density(RateParams((1, 2)))
    assert density.pdf(0) == 0.0
    assert density.pdf(-1) == 0.0
    # f(x) = 2e^-x - 2e^-2x
    assert density.pdf(1) == pytest.approx(2 * math.exp(-1) - 2 * math.exp(-2))


def test_cdf_and_moment():
    density = hypoexp_density(RateParams((1, 2)))
    assert density.cdf(0) == 0.0
    assert density.cdf(60) == pytest.approx(1.0)
    assert density.moment(1) == Fraction(3, 2)
    assert density.moment(0) == 1


def test_mgf_matches_product_form():
    density = hypoexp_density(RateParams((1, 2)))
    assert density.mgf(Fraction(1, 2)) == Fraction(8, 3)
    with pytest.raises(ParameterError):
        density.mgf(1)


def test_float_mode_weights_and_cluster_guard():
    density = hypoexp_density(RateParams((1, 2, 3)), FLOAT)
    assert density.mode == FLOAT
    assert density.weights == pytest.approx((3.0, -6.0, 3.0))
    with pytest.raises(ParameterError, match="clustered"):
        hypoexp_density(RateParams((1, Fraction(1) + Fraction(1, 10 ** 9))), FLOAT)


@given(distinct_positive(2, 5))
def test_vanishing_sums(rates):
    params = RateParams(rates)
    assert vandermonde_zero(params) == 0
    assert reciprocal_product_sum(params) == 0


def test_exp_to_json():
    data = hypoexp_density(RateParams((1, 2))).to_json()
    assert data["family"] == "exp"
    assert data["atoms"] == [{"weight": "2/1", "rate": "1/1"}, {"weight": "-2/1", "rate": "2/1"}]


# ---------------------------------------------------------------------------
# Gamma summands
# ---------------------------------------------------------------------------

def test_gamma_params_validation():
    with pytest.raises(ParameterError):
        GammaParams((1, 2), (1,))
    with pytest.raises(ParameterError):
        GammaParams((), ())
    with pytest.raises(ParameterError):
        GammaParams((0,), (1,))
    assert GammaParams((1, 2), (3, 1)).normalized().scales == (1, 3)
    assert not GammaParams((1.5,), (1,)).exact_capable


def test_series_for_two_exponentials():
    series = gamma_series(GammaParams((1, 1), (1, 2)), tolerance=1e-12)
    assert series.mode == EXACT
    assert series.rho == Fraction(1, 2)
    assert series.deltas[:4] == (1, Fraction(1, 2), Fraction(1, 4), Fraction(1, 8))
    assert series.deficit == Fraction(1, 2 ** (series.order + 1))
    assert not series.truncated


def test_equal_scales_collapse_to_single_term():
    series = gamma_series(GammaParams((2, 3), (2, 2)))
    assert series.order == 0
    assert series.deficit == 0
    assert series.mass() == 1


@pytest.mark.parametrize("shapes, scales", [
    ((1, 2), (1, 3)),
    ((2, 1, 1), (Fraction(1, 2), 1, Fraction(3, 2))),
    ((3, 4), (Fraction(1, 2), 2)),
])
def test_deficit_trace_is_nonincreasing(shapes, scales):
    series = gamma_series(GammaParams(shapes, scales), tolerance=1e-8)
    trace = series.deficit_trace
    assert len(trace) == series.order + 1
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    assert trace[-1] < 1e-8
    assert series.order <= 500


def test_float_series_agrees_with_exact():
    params = GammaParams((1, 2), (1, 3))
    exact = gamma_series(params, tolerance=1e-10)
    approx = gamma_series(params, tolerance=1e-10, mode=FLOAT)
    assert approx.mode == FLOAT
    for d_exact, d_float in zip(exact.deltas, approx.deltas):
        assert d_float == pytest.approx(float(d_exact), rel=1e-9)


def test_non_integer_shapes_fall_back_to_float(caplog):
    with caplog.at_level(logging.INFO, logger="densities"):
        series = gamma_series(GammaParams((Fraction(3, 2), 2), (1, 2)), mode=EXACT)
    assert series.mode == FLOAT
    assert "float mode" in caplog.text


def test_truncation_cap_sets_flag_and_warns(caplog):
    with caplog.at_level(logging.WARNING, logger="densities"):
        series = gamma_series(GammaParams((1, 1), (1, 10)), tolerance=1e-12, max_order=3)
    assert series.truncated
    assert series.order == 3
    assert "max_order=3" in caplog.text


def test_delta_recursion_matches_stored_coefficients():
    params = GammaParams((1, 2, 3), (Fraction(1, 2), 1, 3))
    series = gamma_series(params, tolerance=1e-12)
    beta1 = Fraction(1, 2)
    for l, gamma_l in enumerate(series.gammas, start=1):
        assert gamma_l == sum(a * (1 - beta1 / b) ** l for a, b in zip(params.shapes, params.scales)) / l
    assert series.deltas[0] == 1
    for j in range(series.order):
        expected = sum(l * series.gammas[l - 1] * series.deltas[j + 1 - l] for l in range(1, j + 2)) / (j + 1)
        assert series.deltas[j + 1] == expected


def test_gamma_density_matches_exponential_mixture():
    series = gamma_series(GammaParams((1, 1), (Fraction(1, 4), 4)))
    mixture = hypoexp_density(RateParams((4, Fraction(1, 4))))
    for k in range(50):
        x = 40 * k / 49
        assert abs(series.pdf(x) - mixture.pdf(x)) <= series.tail_estimate + 1e-12
    close = gamma_series(GammaParams((1, 1), (1, 2)), tolerance=1e-14)
    assert close.pdf(1.0) == pytest.approx(hypoexp_density(RateParams((1, Fraction(1, 2)))).pdf(1.0), rel=1e-9)


def test_gamma_density_at_zero():
    assert gamma_density_eval(gamma_series(GammaParams((1, 1), (1, 2))), 0) == 0.0
    single = gamma_series(GammaParams((1,), (2,)))
    assert gamma_density_eval(single, 0) == pytest.approx(0.5)
    assert gamma_density_eval(gamma_series(GammaParams((0.5,), (1.0,))), 0) == math.inf
    assert gamma_density_eval(single, -1) == 0.0


# ---------------------------------------------------------------------------
# Uniform summands
# ---------------------------------------------------------------------------

def test_triangle_density():
    density = iid_uniform_density(2, 1)
    assert density.breakpoints == (0, 1, 2)
    assert [density.pdf(Fraction(k, 2)) for k in range(5)] == [0, Fraction(1, 2), 1, Fraction(1, 2), 0]
    assert density.pdf(3) == 0
    assert density.cdf(1) == Fraction(1, 2)
    assert density.is_continuous()
    assert density.is_nonnegative_sampled()


@given(st.integers(1, 5), st.fractions(min_value=Fraction(1, 10), max_value=5, max_denominator=10))
def test_iid_density_integrates_to_one(n, a):
    density = iid_uniform_density(n, a)
    assert density.integral() == 1
    assert density.moment(1) == n * a / 2


@given(lengths(2, 4))
def test_general_density_integrates_to_one(a):
    density = general_uniform_density(UniformParams(a))
    assert density.integral() == 1
    assert density.moment(1) == sum(a) / 2
    assert density.is_nonnegative_sampled()
    assert density.is_continuous()


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("a", [Fraction(1), Fraction(3, 2)])
def test_general_equals_iid_for_equal_lengths(n, a):
    assert general_uniform_density(UniformParams((a,) * n)) == iid_uniform_density(n, a)


def test_general_density_moments_match_sympy():
    density = general_uniform_density(UniformParams((1, 2, 3)))
    x = sympy.Symbol("x")
    for m in range(4):
        expected = 0
        for p, lo, hi in zip(density.pieces, density.breakpoints, density.breakpoints[1:]):
            expr = sum(sympy.Rational(c.numerator, c.denominator) * x ** k for k, c in enumerate(p))
            expected += sympy.integrate(expr * x ** m, (x, sympy.Rational(lo.numerator, lo.denominator), sympy.Rational(hi.numerator, hi.denominator)))
        got = density.moment(m)
        assert sympy.Rational(got.numerator, got.denominator) == expected


def test_single_uniform_and_intervals():
    single = uniform_density(UniformParams((2,)))
    assert single.pdf(1) == Fraction(1, 2)
    shifted = uniform_interval_density([(1, 2), (0, 1)])
    assert shifted.support == (1, 3)
    assert shifted.moment(1) == 2
    assert shifted.integral() == 1
    with pytest.raises(ParameterError):
        uniform_interval_density([(1, 1)])


def test_piecewise_to_json():
    data = iid_uniform_density(2, 1).to_json()
    assert data["params"] == {"lengths": ["1/1", "1/1"], "offset": "0/1"}
    assert data["pieces"][0] == {"lo": "0/1", "hi": "1/1", "coefficients": ["0/1", "1/1"]}


def test_truncated_power_integral_value():
    assert truncated_power_integral(1, 2, 1, 2) == Fraction(5, 6)
    assert truncated_power_integral(3, 2, 1, 2) == 0
    with pytest.raises(ParameterError):
        truncated_power_integral(-1, 2, 1, 2)


@given(st.fractions(min_value=0, max_value=3, max_denominator=4), st.integers(1, 5), st.integers(0, 6))
def test_truncated_power_closed_form(shift, n, m):
    assert truncated_power_integral(shift, n, m, 3) == truncated_power_integral_closed(shift, n, m, 3)
