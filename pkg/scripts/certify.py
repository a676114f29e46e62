"""
Error bounds from residual dual norms.

lower = c_B * ||r||_(inner)'   and   upper = C_B * ||r||_(outer)'

for elliptic problems (analytic constants from coefficient bounds) and for
space-time problems (constants supplied by the user), plus parameter sweeps
on a worker pool.
"""

import asyncio
import math
import time
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgError

from approximant import Field
from config import Config, get_config
from errors import CertifyError, ConfigurationError, NotCoerciveError, NumericalError
from geometry import Embedding, Polygon, Rect, locate_subregion, poincare_bound
from logger import get_phase_logger, logger
import oracle
from quadrature import QuadRule, gauss_legendre, gauss_rect_rule, map_interval, polygon_rule
from residual import (
    CoefficientBounds,
    EllipticProblem,
    SpaceTimeProblem,
    elliptic_residual_inner,
    elliptic_residual_outer,
    sample_bounds,
    spacetime_dual_norm,
)
from spectral import dual_norm, gram_system

Order = Tuple[int, int]


@dataclass(frozen=True)
class StabilityConstants:
    """Multipliers of the error-residual relation c_B ||r|| <= ||e|| <= C_B ||r||."""

    c_B: float
    C_B: float
    provenance: str
    a0: Optional[float] = None
    norm_A: Optional[float] = None
    norm_b: Optional[float] = None
    norm_c: Optional[float] = None
    s_PF: Optional[float] = None

    def __post_init__(self):
        if not (0.0 < self.c_B <= self.C_B < math.inf):
            raise NumericalError("Stability constants need 0 < c_B <= C_B < inf",
                                 {"c_B": self.c_B, "C_B": self.C_B})


def elliptic_constants(a0: float, norm_A: float, norm_b: float, norm_c: float,
                       s_PF: float) -> StabilityConstants:
    """
    Constants of a coercive elliptic operator in the gradient norm.

    c_B = 1 / (||A|| + s_PF ||b|| + s_PF^2 ||c||) and C_B = 1 / a0.

    Raises:
        NotCoerciveError: if a0 <= 0
    """
    if not a0 > 0:
        raise NotCoerciveError(f"Coercivity constant a0={a0} must be positive")
    if min(norm_A, norm_b, norm_c) < 0 or not s_PF > 0:
        raise NotCoerciveError("Coefficient norms must be non-negative and s_PF positive")
    continuity = norm_A + s_PF * norm_b + s_PF ** 2 * norm_c
    return StabilityConstants(
        c_B=1.0 / continuity,
        C_B=1.0 / a0,
        provenance="analytic-elliptic",
        a0=a0, norm_A=norm_A, norm_b=norm_b, norm_c=norm_c, s_PF=s_PF,
    )


def parabolic_constants(lower: Optional[float], upper: Optional[float]) -> StabilityConstants:
    """User-supplied constants for a space-time problem; there is no default."""
    if lower is None or upper is None:
        raise ConfigurationError(
            "Space-time problems need stability constants: set parabolic_constants "
            "{\"lower\": c_B, \"upper\": C_B} in the run config"
        )
    return StabilityConstants(float(lower), float(upper), provenance="user-config")


@dataclass(frozen=True)
class QuadratureSettings:
    inner_points: int = 32
    triangle_order: int = 10
    refine_levels: int = 3
    time_points: int = 16

    @classmethod
    def from_config(cls, config: Config) -> "QuadratureSettings":
        return cls(config.inner_points, config.triangle_order, config.refine_levels, config.time_points)


@dataclass(frozen=True)
class CertifySettings:
    """Resolution and reporting options shared by every row of a sweep."""

    inner_order: Order = (12, 12)
    outer_order: Order = (12, 12)
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    oracle: bool = False
    oracle_levels: int = 3
    domain_reference: bool = False
    report_tolerance: float = 1e-8

    @classmethod
    def from_config(cls, config: Optional[Config] = None, **overrides) -> "CertifySettings":
        config = config or get_config()
        settings = cls(
            inner_order=config.inner_order,
            outer_order=config.outer_order,
            quadrature=QuadratureSettings.from_config(config),
            oracle_levels=config.oracle_levels,
            report_tolerance=config.report_tolerance,
        )
        return replace(settings, **overrides)


@dataclass
class BoundReport:
    """One certified parameter; numbers are None when the row failed."""

    param_index: int
    mu: Tuple[float, ...]
    dual_inner: Optional[float] = None
    dual_outer: Optional[float] = None
    lower_bound: Optional[float] = None
    upper_bound: Optional[float] = None
    constants: Optional[StabilityConstants] = None
    ref_error: Optional[float] = None
    ref_slack: Optional[float] = None
    ref_kind: str = ""
    t_inner_s: float = 0.0
    t_outer_s: float = 0.0
    t_oracle_s: float = 0.0
    dual_domain: Optional[float] = None
    lower_domain: Optional[float] = None
    upper_domain: Optional[float] = None
    inner_order: Optional[Order] = None
    outer_order: Optional[Order] = None
    quadrature: Dict[str, int] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def eff_lower(self) -> Optional[float]:
        if self.ref_error is None or self.lower_bound is None or self.ref_error <= 0:
            return None
        return self.lower_bound / self.ref_error

    @property
    def eff_upper(self) -> Optional[float]:
        if self.ref_error is None or self.upper_bound is None or self.ref_error <= 0:
            return None
        return self.upper_bound / self.ref_error

    def validate(self, tolerance: float) -> None:
        """Raise NumericalError unless entries are finite, >= 0 and lower <= upper (1 + tolerance)."""
        values = {"dual_inner": self.dual_inner, "dual_outer": self.dual_outer,
                  "lower_bound": self.lower_bound, "upper_bound": self.upper_bound}
        for name, value in values.items():
            if value is None or not math.isfinite(value) or value < 0:
                raise NumericalError(f"Invalid {name}", values)
        if self.lower_bound > self.upper_bound * (1.0 + tolerance) + 1e-14:
            raise NumericalError("Lower bound exceeds upper bound",
                                 {"lower": self.lower_bound, "upper": self.upper_bound, "mu": self.mu})

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["eff_lower"] = self.eff_lower
        data["eff_upper"] = self.eff_upper
        return data


@lru_cache(maxsize=16)
def inner_rule(rect: Rect, n_points: int, domain: Polygon) -> QuadRule:
    """Tensor Gauss rule on the inner rectangle, tagged with domain subregions."""
    rule = gauss_rect_rule(rect, n_points)
    return QuadRule(rule.points, rule.weights, rule.exactness_degree,
                    tags=locate_subregion(domain, rule.points))


@lru_cache(maxsize=16)
def domain_rule(domain: Polygon, order: int, refine_levels: int) -> QuadRule:
    return polygon_rule(domain, order, refine_levels)


def time_rule(T: float, n_points: int) -> QuadRule:
    return map_interval(gauss_legendre(n_points), 0.0, T)


def constants_for(problem: EllipticProblem, mu: np.ndarray, embedding: Embedding,
                  rule: QuadRule) -> StabilityConstants:
    """Analytic constants from declared bounds, or from sampled coefficients."""
    if problem.bounds is not None:
        bounds: CoefficientBounds = problem.bounds(mu)
    else:
        bounds = sample_bounds(problem, mu, rule.points, rule.tags)
        logger.debug(f"{problem.name}: coefficient bounds sampled at {len(rule)} points: {bounds}")
    return elliptic_constants(bounds.a0, bounds.norm_A, bounds.norm_b, bounds.norm_c,
                              poincare_bound(embedding.outer))


def _settings_meta(settings: CertifySettings) -> Dict[str, Any]:
    q = settings.quadrature
    return {
        "inner_order": tuple(settings.inner_order),
        "outer_order": tuple(settings.outer_order),
        "quadrature": {"inner_points": q.inner_points, "triangle_order": q.triangle_order,
                       "refine_levels": q.refine_levels, "time_points": q.time_points},
    }


def certify_elliptic(problem: EllipticProblem, field: Field, mu: Sequence[float], embedding: Embedding,
                     settings: Optional[CertifySettings] = None,
                     constants: Optional[StabilityConstants] = None,
                     param_index: int = 0) -> BoundReport:
    """
    Lower and upper error bounds for a steady approximant.

    Args:
        problem: Elliptic problem on embedding.domain
        field: Approximant with zero trace on the domain boundary
        mu: Parameter vector
        embedding: Inner rectangle, domain and outer rectangle
        settings: Orders and quadrature (defaults from the environment config)
        constants: Override for the analytic constants
        param_index: Row index stored in the report

    Returns:
        BoundReport with lower = c_B * inner dual norm and upper = C_B * outer dual norm
    """
    settings = settings or CertifySettings.from_config()
    q = settings.quadrature
    mu = problem.parameters.check(mu)
    outer_quad = domain_rule(embedding.domain, q.triangle_order, q.refine_levels)
    constants = constants or constants_for(problem, mu, embedding, outer_quad)

    inner_log = get_phase_logger("inner")
    start = time.perf_counter()
    system_in = gram_system(embedding.inner, tuple(settings.inner_order))
    F_in = elliptic_residual_inner(problem, field, mu, system_in.space,
                                   inner_rule(embedding.inner, q.inner_points, embedding.domain))
    eta_in, _ = dual_norm(system_in, F_in)
    t_inner = time.perf_counter() - start
    inner_log.debug(f"{problem.name} mu={mu.tolist()}: inner dual norm {eta_in:.6e} in {t_inner:.3f}s")

    outer_log = get_phase_logger("outer")
    start = time.perf_counter()
    system_out = gram_system(embedding.outer, tuple(settings.outer_order))
    F_out = elliptic_residual_outer(problem, field, mu, system_out.space, outer_quad)
    eta_out, _ = dual_norm(system_out, F_out)
    t_outer = time.perf_counter() - start
    outer_log.debug(f"{problem.name} mu={mu.tolist()}: outer dual norm {eta_out:.6e} in {t_outer:.3f}s")

    report = BoundReport(
        param_index=param_index,
        mu=tuple(float(m) for m in mu),
        dual_inner=eta_in,
        dual_outer=eta_out,
        lower_bound=constants.c_B * eta_in,
        upper_bound=constants.C_B * eta_out,
        constants=constants,
        t_inner_s=t_inner,
        t_outer_s=t_outer,
        **_settings_meta(settings),
    )
    report.validate(settings.report_tolerance)
    return report


def certify_parabolic(problem: SpaceTimeProblem, field: Field, mu: Sequence[float], embedding: Embedding,
                      constants: Optional[StabilityConstants],
                      settings: Optional[CertifySettings] = None,
                      rule_in_time: Optional[QuadRule] = None,
                      param_index: int = 0) -> BoundReport:
    """
    Space-time bounds: lower = c_B * L2(I; inner dual) norm, upper = C_B * L2(I; outer dual) norm.

    Raises:
        ConfigurationError: if constants are missing
    """
    if constants is None:
        parabolic_constants(None, None)
    settings = settings or CertifySettings.from_config()
    q = settings.quadrature
    mu = problem.parameters.check(mu)
    times = rule_in_time or time_rule(problem.T, q.time_points)

    start = time.perf_counter()
    system_in = gram_system(embedding.inner, tuple(settings.inner_order))
    eta_in = spacetime_dual_norm(problem, field, mu, "inner", system_in.space,
                                 inner_rule(embedding.inner, q.inner_points, embedding.domain), times)
    t_inner = time.perf_counter() - start
    get_phase_logger("inner").debug(f"{problem.name} mu={mu.tolist()}: space-time inner {eta_in:.6e}")

    start = time.perf_counter()
    system_out = gram_system(embedding.outer, tuple(settings.outer_order))
    eta_out = spacetime_dual_norm(problem, field, mu, "outer", system_out.space,
                                  domain_rule(embedding.domain, q.triangle_order, q.refine_levels), times)
    t_outer = time.perf_counter() - start
    get_phase_logger("outer").debug(f"{problem.name} mu={mu.tolist()}: space-time outer {eta_out:.6e}")

    report = BoundReport(
        param_index=param_index,
        mu=tuple(float(m) for m in mu),
        dual_inner=eta_in,
        dual_outer=eta_out,
        lower_bound=constants.c_B * eta_in,
        upper_bound=constants.C_B * eta_out,
        constants=constants,
        t_inner_s=t_inner,
        t_outer_s=t_outer,
        **_settings_meta(settings),
    )
    report.validate(settings.report_tolerance)
    return report


# ============================================================================
# Sweeps
# ============================================================================

@dataclass(frozen=True, eq=False)
class Instance:
    """Everything needed to certify one parameter value."""

    problem: Union[EllipticProblem, SpaceTimeProblem]
    embedding: Embedding
    field: Field
    constants: Optional[StabilityConstants] = None
    exact_solution: Optional[Field] = None


Instantiate = Callable[[np.ndarray], Instance]


def attach_reference(report: BoundReport, instance: Instance, mu: np.ndarray,
                     settings: CertifySettings) -> BoundReport:
    """Fill in the reference error (exact or estimated) and the domain Riesz bounds."""
    problem = instance.problem
    if isinstance(problem, SpaceTimeProblem):
        return report
    start = time.perf_counter()
    q = settings.quadrature
    if instance.exact_solution is not None:
        rule = domain_rule(instance.embedding.domain, q.triangle_order, q.refine_levels)
        report.ref_error = oracle.exact_h1_error(instance.field, instance.exact_solution, rule, mu)
        report.ref_slack = 0.0
        report.ref_kind = "exact"
    elif settings.oracle:
        report.ref_error, report.ref_slack = oracle.reference_error(
            problem, instance.field, mu, settings.oracle_levels
        )
        report.ref_kind = "estimated"
    if settings.domain_reference:
        mesh = oracle.cached_mesh(instance.embedding.domain, settings.oracle_levels)
        report.dual_domain = oracle.domain_dual_norm(problem, instance.field, mu, mesh)
        report.lower_domain = report.constants.c_B * report.dual_domain
        report.upper_domain = report.constants.C_B * report.dual_domain
    report.t_oracle_s = time.perf_counter() - start
    return report


def certify_instance(instance: Instance, mu: Sequence[float], settings: CertifySettings,
                     param_index: int = 0) -> BoundReport:
    """Certify one parameter; dispatches on the problem kind and attaches references."""
    mu = instance.problem.parameters.check(mu)
    if isinstance(instance.problem, SpaceTimeProblem):
        report = certify_parabolic(instance.problem, instance.field, mu, instance.embedding,
                                   instance.constants, settings, param_index=param_index)
    else:
        report = certify_elliptic(instance.problem, instance.field, mu, instance.embedding,
                                  settings, instance.constants, param_index=param_index)
    return attach_reference(report, instance, mu, settings)


def _certify_row(instantiate: Instantiate, index: int, mu: Sequence[float],
                 settings: CertifySettings) -> BoundReport:
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    try:
        return certify_instance(instantiate(mu_arr), mu_arr, settings, param_index=index)
    except (CertifyError, LinAlgError, FloatingPointError) as e:
        get_phase_logger("sweep").warning(f"Row {index} mu={mu_arr.tolist()} failed: {e}")
        logger.warning(f"Row {index} failed: {e}")
        return BoundReport(param_index=index, mu=tuple(float(m) for m in mu_arr),
                           error=f"{type(e).__name__}: {e}")


@dataclass
class SweepResult:
    reports: List[BoundReport]
    summary: Dict[str, Any]


def summarize(reports: Sequence[BoundReport]) -> Dict[str, Any]:
    """Counts and min/median/max effectivities of a sweep."""
    ok = [r for r in reports if r.ok]
    summary: Dict[str, Any] = {"rows": len(reports), "succeeded": len(ok), "failed": len(reports) - len(ok)}
    for name in ("eff_lower", "eff_upper"):
        values = np.array([getattr(r, name) for r in ok if getattr(r, name) is not None], dtype=float)
        if len(values):
            summary[name] = {"min": float(values.min()), "median": float(np.median(values)),
                             "max": float(values.max())}
    if ok:
        summary["max_lower_over_upper"] = max(
            r.lower_bound / r.upper_bound if r.upper_bound > 0 else 0.0 for r in ok
        )
    return summary


async def sweep_async(instantiate: Instantiate, parameters: Sequence[Sequence[float]],
                      settings: CertifySettings, workers: int = 1,
                      on_row: Optional[Callable[[BoundReport], None]] = None) -> List[BoundReport]:
    """
    Certify every parameter on a pool of `workers` threads.

    Rows come back in parameter order whatever the completion order.
    """
    semaphore = asyncio.Semaphore(max(1, workers))

    async def run_row(index: int, mu: Sequence[float]) -> BoundReport:
        async with semaphore:
            report = await asyncio.to_thread(_certify_row, instantiate, index, mu, settings)
        if on_row:
            on_row(report)
        return report

    tasks = [run_row(i, mu) for i, mu in enumerate(parameters)]
    return list(await asyncio.gather(*tasks))


def sweep(instantiate: Instantiate, parameters: Sequence[Sequence[float]],
          settings: Optional[CertifySettings] = None, workers: int = 1, serial: bool = False,
          on_row: Optional[Callable[[BoundReport], None]] = None) -> SweepResult:
    """
    Certify a list of parameters; failures are recorded per row.

    Args:
        instantiate: Builds the problem, embedding and field for a parameter
        parameters: Non-empty list of parameter vectors
        settings: Resolution options
        workers: Thread pool size (ignored when serial)
        serial: Run rows one after another in this thread
        on_row: Callback invoked as each row finishes

    Returns:
        SweepResult with one report per parameter, in order
    """
    if len(parameters) == 0:
        raise ConfigurationError("Sweep needs at least one parameter value")
    settings = settings or CertifySettings.from_config()
    sweep_log = get_phase_logger("sweep")
    sweep_log.info(f"Sweeping {len(parameters)} parameters ({'serial' if serial else f'{workers} workers'})")
    start = time.perf_counter()
    if serial or workers <= 1:
        reports = []
        for i, mu in enumerate(parameters):
            report = _certify_row(instantiate, i, mu, settings)
            if on_row:
                on_row(report)
            reports.append(report)
    else:
        reports = asyncio.run(sweep_async(instantiate, parameters, settings, workers, on_row))
    summary = summarize(reports)
    summary["elapsed_s"] = time.perf_counter() - start
    sweep_log.info(f"Sweep done: {summary['succeeded']}/{summary['rows']} rows in {summary['elapsed_s']:.2f}s")
    return SweepResult(reports, summary)
