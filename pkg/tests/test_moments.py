from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from core_numeric import ParameterError
from densities import FLOAT, GammaParams, RateParams, UniformParams, gamma_series
from moments import (
    gamma_moment_by_series,
    hypoexp_moment_closed,
    moment_by_expansion,
    moment_pair,
)
from strategies import distinct_positive, lengths


def test_expansion_small_values():
    assert moment_by_expansion("exp", RateParams((1, 2)), 1) == Fraction(3, 2)
    assert moment_by_expansion("uniform", UniformParams((1, 1)), 2) == Fraction(7, 6)
    assert moment_by_expansion("uniform", UniformParams((1, 1, 1)), 2) == Fraction(5, 2)
    assert moment_by_expansion("gamma", GammaParams((1, 1), (1, 2)), 1) == 3
    assert moment_by_expansion("gamma", GammaParams((1, 1), (1, 2)), 2) == 14
    assert moment_by_expansion("gamma", GammaParams((2,), (3,)), 2) == 54


def test_expansion_rejects_bad_input():
    with pytest.raises(ParameterError):
        moment_by_expansion("exp", RateParams((1, 2)), -1)
    with pytest.raises(ParameterError, match="unknown family"):
        moment_by_expansion("cauchy", RateParams((1, 2)), 1)


def test_non_integer_gamma_shape_uses_rising_factorial():
    # E[X^2] = beta^2 alpha (alpha + 1)
    assert moment_by_expansion("gamma", GammaParams((Fraction(1, 2),), (2,)), 2) == 3


@given(distinct_positive(2, 4), st.integers(0, 6))
def test_exponential_routes_agree(rates, m):
    params = RateParams(rates)
    assert moment_by_expansion("exp", params, m) == hypoexp_moment_closed(params, m)
    pair = moment_pair("exp", params, m)
    assert pair.agree


@given(lengths(1, 4), st.integers(0, 6))
def test_uniform_routes_agree(a, m):
    pair = moment_pair("uniform", UniformParams(a), m)
    assert pair.agree
    assert pair.by_expansion == pair.by_density


def test_zeroth_moment_is_one():
    pair = moment_pair("gamma", GammaParams((1, 2), (1, 3)), 0)
    assert pair.by_expansion == pair.by_density == 1


def test_gamma_series_moment():
    series = gamma_series(GammaParams((1, 1), (1, 2)), tolerance=1e-14)
    result = gamma_moment_by_series(series, 2)
    assert float(result.value) == pytest.approx(14, rel=1e-9)
    assert result.order == series.order
    assert 0 < result.envelope
    assert not result.truncated
    with pytest.raises(ParameterError):
        gamma_moment_by_series(series, 0)


def test_float_mode_pair():
    pair = moment_pair("gamma", GammaParams((1, 2), (1, 3)), 2, mode=FLOAT, tolerance=1e-12)
    assert pair.mode == FLOAT
    assert isinstance(pair.by_density, float)
    assert pair.by_density == pytest.approx(pair.by_expansion, rel=1e-8)


def test_series_moment_rises_toward_expansion():
    params = GammaParams((1, 2), (1, 3))
    exact = moment_by_expansion("gamma", params, 3)
    results = [gamma_moment_by_series(gamma_series(params, tol), 3) for tol in (1e-2, 1e-4, 1e-6, 1e-8, 1e-10)]
    orders = [r.order for r in results]
    assert orders == sorted(orders)
    assert all(a.value <= b.value for a, b in zip(results, results[1:]))
    for result in results:
        assert 0 < exact - result.value <= result.envelope
