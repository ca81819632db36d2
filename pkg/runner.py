"""
Identity registry and batch execution shared by `verify` and `sweep`.
"""

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

from tqdm import tqdm

import identities
from config import ConfigError, Settings, SweepConfig
from core_numeric import ParameterError, is_integral, to_rational
from densities import FLOAT, GammaParams, RateParams, UniformParams
from identities import VerificationReport
from montecarlo import estimate_moment, mc_check, monte_carlo_companion

logger = logging.getLogger(__name__)

# Composition enumeration grows like C(m+n-1, n-1); keep requests at desk scale
MAX_MOMENT_ORDER = 32

VECTOR = "vector"
RATIONAL = "rational"
INTEGER = "int"


@dataclass(frozen=True)
class IdentityEntry:
    """
    verifier: function returning a VerificationReport
    schema: parameter name -> kind (vector, rational or int), all required
    build: turns parsed parameters plus settings into verifier keyword arguments
    """

    verifier: Callable[..., VerificationReport]
    schema: Dict[str, str]
    build: Callable[[Dict[str, Any], Settings], Dict[str, Any]]
    summary: str = ""


def _plain(parsed: Dict[str, Any], settings: Settings) -> Dict[str, Any]:
    return dict(parsed)


def _with_mode(parsed: Dict[str, Any], settings: Settings) -> Dict[str, Any]:
    return {**parsed, "mode": settings.mode, "tolerance": settings.tolerance}


def _rates(parsed: Dict[str, Any], settings: Settings, with_mode: bool = True) -> Dict[str, Any]:
    kwargs = dict(parsed)
    kwargs["lambdas"] = RateParams(parsed["lambdas"])
    if with_mode:
        kwargs.update(mode=settings.mode, tolerance=settings.tolerance)
    return kwargs


def _gamma(parsed: Dict[str, Any], settings: Settings) -> Dict[str, Any]:
    shapes, scales = parsed["alpha"], parsed["beta"]
    if settings.mode == FLOAT:
        shapes = tuple(float(a) for a in shapes)
        scales = tuple(float(b) for b in scales)
    kwargs = {k: v for k, v in parsed.items() if k not in ("alpha", "beta")}
    kwargs.update(params=GammaParams(shapes, scales), tolerance=settings.tolerance, max_order=settings.max_order)
    return kwargs


def _uniform(parsed: Dict[str, Any], settings: Settings) -> Dict[str, Any]:
    return {"params": UniformParams(parsed["a"]), "m": parsed["m"]}


REGISTRY: Dict[str, IdentityEntry] = {
    "good": IdentityEntry(
        identities.verify_good, {"xs": VECTOR}, _with_mode,
        "sum_j prod_{i!=j} (1 - x_j/x_i)^-1 = 1",
    ),
    "symmetric-moment": IdentityEntry(
        identities.verify_symmetric_moment, {"lambdas": VECTOR, "m": INTEGER}, _rates,
        "partial-fraction moment sum equals the composition sum",
    ),
    "homogeneous": IdentityEntry(
        identities.verify_homogeneous, {"xs": VECTOR, "m": INTEGER}, _with_mode,
        "divided-difference sum equals h_(m-n+1)",
    ),
    "gamma-mean": IdentityEntry(
        identities.verify_gamma_mean, {"alpha": VECTOR, "beta": VECTOR}, _gamma,
        "gamma series mean equals sum alpha_i beta_i",
    ),
    "gamma-moment": IdentityEntry(
        identities.verify_gamma_moment, {"alpha": VECTOR, "beta": VECTOR, "m": INTEGER}, _gamma,
        "gamma series moment equals the multinomial expansion",
    ),
    "iid-uniform-moment": IdentityEntry(
        identities.verify_iid_uniform_moment, {"n": INTEGER, "m": INTEGER}, _plain,
        "I.I.D. uniform moment by density integration equals the composition sum",
    ),
    "stirling-link": IdentityEntry(
        identities.verify_stirling_link, {"m": INTEGER, "n": INTEGER}, _plain,
        "composition sum equals S(m+n, n) / C(m+n, n)",
    ),
    "uniform-power-integral": IdentityEntry(
        identities.verify_uniform_power_integral, {"m": INTEGER, "n": INTEGER}, _plain,
        "truncated-power integrals collapse to the alternating power sum",
    ),
    "stirling": IdentityEntry(
        identities.verify_stirling_explicit, {"m": INTEGER, "n": INTEGER}, _plain,
        "explicit alternating sum equals the Stirling recurrence",
    ),
    "general-uniform": IdentityEntry(
        identities.verify_general_uniform, {"a": VECTOR, "m": INTEGER}, _uniform,
        "closed form with subset-sum correction equals the expansion and the density moment",
    ),
    "chf-partial-fraction": IdentityEntry(
        identities.verify_chf_partial_fraction, {"lambdas": VECTOR, "t": RATIONAL}, _rates,
        "partial-fraction transform equals the product of exponential transforms",
    ),
    "vandermonde-zero": IdentityEntry(
        identities.verify_vandermonde_zero, {"lambdas": VECTOR},
        lambda parsed, settings: _rates(parsed, settings, with_mode=False),
        "alternating sum of Vandermonde minors vanishes",
    ),
    "truncated-power": IdentityEntry(
        identities.verify_truncated_power,
        {"shift": RATIONAL, "n": INTEGER, "m": INTEGER, "upper": RATIONAL}, _plain,
        "truncated-power integral by expansion equals the integration-by-parts form",
    ),
    "binomial-vanishing": IdentityEntry(
        identities.verify_binomial_vanishing, {"m": INTEGER, "n": INTEGER}, _plain,
        "low-order binomial terms cancel under the alternating sum",
    ),
    "reciprocal-product-sum": IdentityEntry(
        identities.verify_reciprocal_product_sum, {"lambdas": VECTOR},
        lambda parsed, settings: _rates(parsed, settings, with_mode=False),
        "sum_k 1 / prod_{l!=k}(lambda_l - lambda_k) vanishes",
    ),
}


def _parse_vector(raw: Any, name: str) -> Tuple[Fraction, ...]:
    items = raw if isinstance(raw, (list, tuple)) else str(raw).split(",")
    if not items or any(str(item).strip() == "" for item in items):
        raise ParameterError(f"{name}: malformed vector {raw!r}")
    return tuple(to_rational(item, name) for item in items)


def _parse_integer(raw: Any, name: str) -> int:
    value = to_rational(raw, name)
    if not is_integral(value):
        raise ParameterError(f"{name}: {raw!r} is not an integer")
    return int(value)


def parse_params(identity_id: str, raw_params: Dict[str, Any]) -> Dict[str, Any]:
    """Check names against the schema and parse every token exactly"""
    entry = REGISTRY.get(identity_id)
    if entry is None:
        raise ParameterError(f"unknown identity {identity_id!r}; expected one of {', '.join(REGISTRY)}")
    given = {k: v for k, v in raw_params.items() if v is not None}
    unknown = set(given) - set(entry.schema)
    if unknown:
        raise ParameterError(f"{identity_id} does not take {', '.join(sorted(unknown))}")
    missing = [name for name in entry.schema if name not in given]
    if missing:
        raise ParameterError(f"{identity_id} needs {', '.join('--' + m for m in missing)}")

    parsed: Dict[str, Any] = {}
    for name, kind in entry.schema.items():
        raw = given[name]
        if kind == VECTOR:
            parsed[name] = _parse_vector(raw, name)
        elif kind == INTEGER:
            parsed[name] = _parse_integer(raw, name)
        else:
            parsed[name] = to_rational(raw, name)
    if parsed.get("m", 0) > MAX_MOMENT_ORDER:
        raise ParameterError(f"m={parsed['m']} exceeds the moment order cap {MAX_MOMENT_ORDER}")
    return parsed


def attach_monte_carlo(report: VerificationReport, kwargs: Dict[str, Any],
                       settings: Settings) -> VerificationReport:
    companion = monte_carlo_companion(
        report.identity_id, kwargs, report.rhs, settings.samples, settings.seed, settings.chunk_size,
    )
    if companion is None:
        logger.info("%s has no Monte Carlo companion", report.identity_id)
        return report
    spec, m, analytic = companion
    estimate = estimate_moment(spec, m, workers=settings.workers)
    verdict = mc_check(analytic, estimate, settings.z)
    mc = {
        "m": m,
        "mean": estimate.mean_of_powers,
        "std_error": estimate.std_error,
        "z": settings.z,
        "samples": estimate.sample_count,
        "seed": settings.seed,
        "verdict": verdict,
    }
    if verdict != identities.PASS:
        logger.warning("Monte Carlo disagrees for %s: analytic %.6g, estimate %.6g +- %.2g",
                       report.identity_id, analytic, estimate.mean_of_powers, estimate.std_error)
    return dataclasses.replace(report, seed=settings.seed, extra={**report.extra, "mc": mc})


def run_identity(identity_id: str, raw_params: Dict[str, Any], settings: Settings,
                 rhs_offset: Optional[Fraction] = None) -> VerificationReport:
    """Parse, dispatch, optionally perturb the right side and attach Monte Carlo"""
    parsed = parse_params(identity_id, raw_params)
    entry = REGISTRY[identity_id]
    kwargs = entry.build(parsed, settings)
    report = entry.verifier(**kwargs)
    if rhs_offset is not None:
        report = report.with_rhs_offset(rhs_offset)
    if settings.mc:
        report = attach_monte_carlo(report, kwargs, settings)
    logger.debug("%s %s -> %s", identity_id, report.parameters, report.verdict)
    return report


def mc_failed(report: VerificationReport) -> bool:
    mc = report.extra.get("mc")
    return bool(mc) and mc["verdict"] != identities.PASS


def _run_job(job: Tuple[str, Dict[str, str], Settings, Optional[Fraction]]) -> VerificationReport:
    identity_id, point, settings, offset = job
    return run_identity(identity_id, point, settings, offset)


def run_sweep(config: SweepConfig, settings: Settings, progress: bool = True) -> List[VerificationReport]:
    """
    Run every grid point of every run. Reports come back in grid order
    (runs in file order, points in key order) whatever the worker count.
    """
    jobs = []
    for run in config.runs:
        for point in run.points():
            try:
                parse_params(run.identity_id, point)
            except ParameterError as e:
                raise ConfigError(f"{run.identity_id} {point}: {e}") from None
            jobs.append((run.identity_id, point, settings, run.rhs_offset))
    if not jobs:
        raise ConfigError("sweep has no grid points")
    logger.info("sweep: %d grid points, %d workers", len(jobs), settings.workers)

    if settings.workers > 1:
        # Each process draws its Monte Carlo chunks serially
        single = dataclasses.replace(settings, workers=1)
        jobs = [(i, p, single, o) for i, p, _, o in jobs]
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            reports = list(tqdm(pool.map(_run_job, jobs), total=len(jobs), desc="Verifying", disable=not progress))
    else:
        reports = [_run_job(job) for job in tqdm(jobs, desc="Verifying", disable=not progress)]

    failed = sum(1 for r in reports if not r.passed)
    logger.info("sweep finished: %d reports, %d failed", len(reports), failed)
    return reports

