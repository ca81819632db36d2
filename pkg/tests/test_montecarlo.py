import numpy as np
import pytest

from core_numeric import ParameterError
from densities import GammaParams, RateParams, UniformParams
from moments import moment_by_expansion
from montecarlo import (
    FAIL,
    PASS,
    MomentEstimate,
    SampleSpec,
    estimate_moment,
    mc_check,
    monte_carlo_companion,
    sample_sum,
)

SEED = 20240601


def test_sample_spec_validation():
    with pytest.raises(ParameterError):
        SampleSpec("cauchy", {"rates": (1,)}, 1000, SEED)
    with pytest.raises(ParameterError):
        SampleSpec("exp", {}, 1000, SEED)
    with pytest.raises(ParameterError):
        SampleSpec("gamma", {"shapes": (1, 2), "scales": (1,)}, 1000, SEED)
    with pytest.raises(ParameterError):
        SampleSpec("uniform", {"lengths": (1,)}, 0, SEED)


def test_streams_are_deterministic():
    spec = SampleSpec("exp", {"rates": (1, 2)}, 5000, SEED, chunk_size=1000)
    first = sample_sum(spec)
    assert np.array_equal(first, sample_sum(spec))
    assert not np.array_equal(first, sample_sum(SampleSpec("exp", {"rates": (1, 2)}, 5000, SEED + 1, chunk_size=1000)))


def test_worker_count_does_not_change_stream():
    spec = SampleSpec("gamma", {"shapes": (1.5, 2), "scales": (1, 3)}, 4500, SEED, chunk_size=1000)
    assert np.array_equal(sample_sum(spec, workers=1), sample_sum(spec, workers=3))


def test_uniform_support():
    values = sample_sum(SampleSpec("uniform", {"lengths": (1,)}, 100_000, SEED))
    assert values.size == 100_000
    assert values.min() >= 0.0 and values.max() <= 1.0


def test_exponential_mean():
    estimate = estimate_moment(SampleSpec("exp", {"rates": (1, 2)}, 200_000, SEED), 1)
    assert abs(estimate.mean_of_powers - 1.5) <= 5 * estimate.std_error


def test_zeroth_moment_is_exact():
    estimate = estimate_moment(SampleSpec("exp", {"rates": (1, 2)}, 1000, SEED), 0)
    assert estimate == MomentEstimate(0, 1.0, 0.0, 1000)


def test_estimate_moment_order_cap():
    with pytest.raises(ParameterError):
        estimate_moment(SampleSpec("exp", {"rates": (1, 2)}, 1000, SEED), 13)


def test_uniform_and_gamma_moments():
    uniform = estimate_moment(SampleSpec("uniform", {"lengths": (1, 1)}, 200_000, SEED), 1)
    assert mc_check(1, uniform, z=5) == PASS
    analytic = moment_by_expansion("gamma", GammaParams((1, 1), (1, 2)), 2)
    gamma = estimate_moment(SampleSpec("gamma", {"shapes": (1, 1), "scales": (1, 2)}, 200_000, SEED), 2)
    assert mc_check(analytic, gamma, z=5) == PASS


def test_mc_check_contract():
    estimate = MomentEstimate(1, 2.0, 0.01, 10_000)
    assert mc_check(2.0, estimate) == PASS
    assert mc_check(2.0 + 10 * 0.01, estimate) == FAIL
    assert mc_check(1.0, MomentEstimate(0, 1.0, 0.0, 10_000)) == PASS
    assert mc_check(1.5, MomentEstimate(1, 1.0, 0.0, 10_000)) == FAIL
    with pytest.raises(ParameterError):
        mc_check(2.0, estimate, z=0)
    with pytest.raises(ParameterError):
        mc_check(2.0, MomentEstimate(1, 2.0, 0.01, 999))


def test_companions():
    spec, m, analytic = monte_carlo_companion(
        "symmetric-moment", {"lambdas": RateParams((1, 2)), "m": 2}, 7 / 4, 1000, SEED,
    )
    assert (spec.family, m, analytic) == ("exp", 2, 3.5)
    spec, m, _ = monte_carlo_companion("general-uniform", {"params": UniformParams((1, 2)), "m": 3}, 1, 1000, SEED)
    assert spec.params == {"lengths": (1.0, 2.0)} and m == 3
    spec, m, _ = monte_carlo_companion("gamma-mean", {"params": GammaParams((1, 2), (1, 3))}, 7, 1000, SEED)
    assert spec.family == "gamma" and m == 1
    assert monte_carlo_companion("stirling", {"m": 2, "n": 3}, 25, 1000, SEED) is None
    assert monte_carlo_companion("iid-uniform-moment", {"n": 2, "m": 20}, 1, 1000, SEED) is None


@pytest.mark.slow
@pytest.mark.parametrize("family, params, sampled", [
    ("exp", RateParams((1, 2, 3)), {"rates": (1, 2, 3)}),
    ("gamma", GammaParams((1, 2), (1, 3)), {"shapes": (1, 2), "scales": (1, 3)}),
    ("uniform", UniformParams((1, 2)), {"lengths": (1, 2)}),
])
def test_concordance_million_samples(family, params, sampled):
    spec = SampleSpec(family, sampled, 1_000_000, SEED)
    for m in range(1, 5):
        estimate = estimate_moment(spec, m)
        assert mc_check(moment_by_expansion(family, params, m), estimate, z=5) == PASS
