"""
Seeded Monte Carlo oracle for the three summation families.

Samples are cut into chunks of `chunk_size`. Chunk k draws from a Philox
generator seeded with the k-th child of SeedSequence(seed), so a run is
reproducible from its seed no matter how many worker threads draw chunks.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from core_numeric import Number, ParameterError, factorial, is_integral

logger = logging.getLogger(__name__)

FAMILIES = ("exp", "gamma", "uniform")
MAX_MOMENT_ORDER = 12
MIN_VERDICT_SAMPLES = 1000
DEFAULT_Z = 5.0
DEFAULT_CHUNK_SIZE = 100_000

PASS = "pass"
FAIL = "fail"


@dataclass(frozen=True)
class SampleSpec:
    """
    family: "exp" (params rates), "gamma" (shapes, scales) or "uniform" (lengths)
    params: family parameters as real numbers
    """

    family: str
    params: Dict[str, Tuple[float, ...]]
    sample_count: int
    seed: int
    chunk_size: int = field(default=DEFAULT_CHUNK_SIZE, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        required = {"exp": ("rates",), "gamma": ("shapes", "scales"), "uniform": ("lengths",)}[self.family]
        params = {}
        for name in required:
            if name not in self.params:
                raise ParameterError(f"{self.family} sampling needs {name!r}")
            values = tuple(float(v) for v in self.params[name])
            if not values or any(not math.isfinite(v) or v <= 0 for v in values):
                raise ParameterError(f"{name} must be finite positive numbers")
            params[name] = values
        if self.family == "gamma" and len(params["shapes"]) != len(params["scales"]):
            raise ParameterError("gamma sampling needs as many scales as shapes")
        object.__setattr__(self, "params", params)
        if self.sample_count < 1:
            raise ParameterError(f"sample_count must be positive, got {self.sample_count}")
        if self.chunk_size < 1:
            raise ParameterError(f"chunk_size must be positive, got {self.chunk_size}")


@dataclass(frozen=True)
class MomentEstimate:
    m: int
    mean_of_powers: float
    std_error: float
    sample_count: int


def _chunk_sizes(spec: SampleSpec) -> List[int]:
    full, rest = divmod(spec.sample_count, spec.chunk_size)
    return [spec.chunk_size] * full + ([rest] if rest else [])


def _exponentials(gen: np.random.Generator, shape) -> np.ndarray:
    """Unit-rate exponentials by inverse CDF; 1 - U keeps the log argument in (0, 1]"""
    return -np.log(1.0 - gen.random(shape))


def _draw_chunk(spec: SampleSpec, size: int, seed_seq: np.random.SeedSequence) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(seed_seq))
    total = np.zeros(size)
    if spec.family == "exp":
        for lam in spec.params["rates"]:
            total += _exponentials(gen, size) / lam
    elif spec.family == "uniform":
        for a in spec.params["lengths"]:
            total += a * gen.random(size)
    else:
        for alpha, beta in zip(spec.params["shapes"], spec.params["scales"]):
            if is_integral(alpha):
                total += beta * _exponentials(gen, (int(alpha), size)).sum(axis=0)
            else:
                total += beta * gen.standard_gamma(alpha, size)
    return total


def sample_chunks(spec: SampleSpec, workers: int = 1) -> Iterator[np.ndarray]:
    """Yield the sample stream chunk by chunk, always in chunk order"""
    sizes = _chunk_sizes(spec)
    children = np.random.SeedSequence(spec.seed).spawn(len(sizes))
    logger.debug("sampling %s: %d chunks from seed %d", spec.family, len(sizes), spec.seed)
    if workers <= 1:
        for size, child in zip(sizes, children):
            yield _draw_chunk(spec, size, child)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(lambda job: _draw_chunk(spec, *job), zip(sizes, children))


def sample_sum(spec: SampleSpec, workers: int = 1) -> np.ndarray:
    """All sample_count draws of X_1 + ... + X_n"""
    return np.concatenate(list(sample_chunks(spec, workers)))


def estimate_moment(spec: SampleSpec, m: int, workers: int = 1) -> MomentEstimate:
    """Empirical m-th raw moment with std_error = sample std of X^m / sqrt(N)"""
    if m < 0 or m > MAX_MOMENT_ORDER:
        raise ParameterError(f"Monte Carlo moments need 0 <= m <= {MAX_MOMENT_ORDER}, got {m}")
    if m == 0:
        return MomentEstimate(0, 1.0, 0.0, spec.sample_count)
    powers = sample_sum(spec, workers) ** m
    n = powers.size
    std_error = float(powers.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    return MomentEstimate(m, float(powers.mean()), std_error, n)


def mc_check(analytic: Number, estimate: MomentEstimate, z: float = DEFAULT_Z) -> str:
    if z <= 0:
        raise ParameterError(f"z must be positive, got {z}")
    if estimate.m and estimate.sample_count < MIN_VERDICT_SAMPLES:
        raise ParameterError(
            f"a Monte Carlo verdict needs at least {MIN_VERDICT_SAMPLES} samples, got {estimate.sample_count}"
        )
    gap = abs(float(analytic) - estimate.mean_of_powers)
    if estimate.std_error == 0:
        return PASS if gap == 0 else FAIL
    return PASS if gap <= z * estimate.std_error else FAIL


def monte_carlo_companion(identity_id: str, params: Dict[str, Any], analytic: Number,
                          sample_count: int, seed: int,
                          chunk_size: int = DEFAULT_CHUNK_SIZE) -> Optional[Tuple[SampleSpec, int, float]]:
    """
    Map a verified identity onto a moment of a sampled sum.

    `params` holds the parsed verifier arguments and `analytic` the value the
    identity certifies. Returns None when the identity is not a moment
    statement or its order is beyond MAX_MOMENT_ORDER.
    """
    m = params.get("m", 1)
    if identity_id == "symmetric-moment":
        family, sampled = "exp", {"rates": params["lambdas"].rates}
        analytic = factorial(m) * analytic
    elif identity_id in ("gamma-mean", "gamma-moment"):
        family = "gamma"
        sampled = {"shapes": params["params"].shapes, "scales": params["params"].scales}
    elif identity_id in ("iid-uniform-moment", "stirling-link"):
        family, sampled = "uniform", {"lengths": (1.0,) * params["n"]}
    elif identity_id == "general-uniform":
        family, sampled = "uniform", {"lengths": params["params"].lengths}
    else:
        return None
    if m < 1 or m > MAX_MOMENT_ORDER:
        return None
    spec = SampleSpec(family, sampled, sample_count, seed, chunk_size)
    return spec, m, float(analytic)
