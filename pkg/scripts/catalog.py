"""
Problem catalog: the saw-blade, notched-square, heat and transport problems,
plus user-defined polygons with constant coefficients, and the fields that
can be certified against them.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from approximant import (
    AnalyticField,
    Field,
    MLPField,
    MLPWeights,
    SeparableField,
    ZeroField,
    bump_field,
    build_adf,
    masked_field,
    mlp_load,
)
from errors import ConfigurationError, NotCoerciveError
from geometry import (
    Embedding,
    Polygon,
    Rect,
    l_shaped_domain,
    notched_square,
    sawblade_domain,
)
import oracle
from residual import CoefficientBounds, EllipticProblem, ParameterDomain, SpaceTimeProblem

Problem = Union[EllipticProblem, SpaceTimeProblem]

NOTCH_A = np.array([[0.5, 0.25], [0.25, 0.5]])
NOTCH_B = np.array([10.0, -3.0])
TRANSPORT_K = np.array([[1.0, 0.0], [0.0, 0.1]])


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    """A problem family indexed by mu, with its default embedding rectangles."""

    name: str
    summary: str
    parameters: ParameterDomain
    space_time: bool
    problem_for: Callable[[np.ndarray], Problem]
    inner: Rect
    outer: Rect
    sample_mu: Tuple[float, ...]
    default_counts: Tuple[int, ...]
    domain_text: str
    coefficients_text: Dict[str, str]
    constants_text: Dict[str, str]
    exact: Optional[Field] = None

    def embedding_for(self, problem: Problem, inner: Optional[Rect] = None,
                      outer: Optional[Rect] = None) -> Embedding:
        domain = problem.spatial.domain if isinstance(problem, SpaceTimeProblem) else problem.domain
        return Embedding(inner or self.inner, domain, outer or self.outer)

    def default_parameters(self) -> List[Tuple[float, ...]]:
        """Tensor grid of equidistant values, default_counts points per parameter."""
        if self.parameters.dim == 0:
            return [()]
        axes = [
            np.linspace(lo, hi, n) if n > 1 else np.array([0.5 * (lo + hi)])
            for lo, hi, n in zip(self.parameters.lower, self.parameters.upper, self.default_counts)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return [tuple(float(v) for v in row) for row in np.column_stack([m.ravel() for m in mesh])]


def _constant_matrix(A: np.ndarray) -> Callable:
    def diffusion(x, y, mu, tags):
        return np.broadcast_to(A, (len(x), 2, 2))
    return diffusion


def _constant(value: float) -> Callable:
    def fn(x, y, mu, *rest):
        return np.full(len(x), float(value))
    return fn


# ============================================================================
# Saw-blade
# ============================================================================

@lru_cache(maxsize=1)
def sawblade_polygon() -> Polygon:
    return sawblade_domain()


def _sawblade_diffusion(x, y, mu, tags):
    scale = np.where(np.asarray(tags) == "teeth", mu[0], mu[1]).astype(float)
    A = np.zeros((len(x), 2, 2))
    A[:, 0, 0] = scale
    A[:, 1, 1] = 2.0 * scale
    return A


def _sawblade_bounds(mu: np.ndarray) -> CoefficientBounds:
    return CoefficientBounds(a0=float(min(mu)), norm_A=2.0 * float(max(mu)), norm_b=0.0, norm_c=0.0)


@lru_cache(maxsize=1)
def _sawblade_problem() -> EllipticProblem:
    return EllipticProblem(
        name="sawblade",
        domain=sawblade_polygon(),
        diffusion=_sawblade_diffusion,
        source=_constant(1.0),
        parameters=ParameterDomain(("mu1", "mu2"), (0.1, 0.05), (1.0, 0.1)),
        bounds=_sawblade_bounds,
    )


@lru_cache(maxsize=1)
def _sawblade_laplace_problem() -> EllipticProblem:
    return EllipticProblem(
        name="sawblade-laplace",
        domain=sawblade_polygon(),
        diffusion=_constant_matrix(np.eye(2)),
        source=_constant(0.0),
        parameters=ParameterDomain((), (), ()),
        bounds=lambda mu: CoefficientBounds(1.0, 1.0, 0.0, 0.0),
        exact_solution=ZeroField(),
    )


# ============================================================================
# Notched square
# ============================================================================

@lru_cache(maxsize=64)
def _notch_problem(mu: float) -> EllipticProblem:
    return EllipticProblem(
        name="notch",
        domain=notched_square(mu),
        diffusion=_constant_matrix(NOTCH_A),
        advection=lambda x, y, m: np.broadcast_to(NOTCH_B, (len(x), 2)),
        reaction=lambda x, y, m: x * y + 1.0,
        advection_divergence=_constant(0.0),
        source=_constant(10.0),
        parameters=ParameterDomain(("mu",), (0.0,), (0.5 * math.pi,)),
        # sup of xy + 1 over the unit square
        bounds=lambda m: CoefficientBounds(0.25, 0.75, float(np.linalg.norm(NOTCH_B)), 2.0),
    )


# ============================================================================
# Heat equation with a manufactured solution
# ============================================================================

def _heat_value(x, y, mu, t):
    return (t or 0.0) * np.sin(np.pi * x) * np.sin(np.pi * y)


def _heat_grad(x, y, mu, t):
    t = t or 0.0
    return (t * np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
            t * np.pi * np.sin(np.pi * x) * np.cos(np.pi * y))


def _heat_dt(x, y, mu, t):
    return np.sin(np.pi * x) * np.sin(np.pi * y)


def _heat_source(x, y, mu, t):
    t = t or 0.0
    return np.sin(np.pi * x) * np.sin(np.pi * y) * (1.0 + 2.0 * np.pi ** 2 * mu[0] * t)


HEAT_TRUTH = AnalyticField(_heat_value, _heat_grad, _heat_dt, name="heat-truth")


@lru_cache(maxsize=1)
def _heat_problem() -> SpaceTimeProblem:
    spatial = EllipticProblem(
        name="heat-square",
        domain=Rect(0.0, 1.0, 0.0, 1.0).to_polygon(),
        diffusion=lambda x, y, mu, tags: mu[0] * np.broadcast_to(np.eye(2), (len(x), 2, 2)),
        source=_heat_source,
        parameters=ParameterDomain(("mu",), (0.5,), (2.0,)),
        bounds=lambda mu: CoefficientBounds(float(mu[0]), float(mu[0]), 0.0, 0.0),
    )
    return SpaceTimeProblem(spatial, T=1.0, exact_solution=HEAT_TRUTH)


# ============================================================================
# Transport-dominated parabolic problem on an L-shaped polygon
# ============================================================================

def _transport_advection(x, y, mu):
    scale = 31.0 - mu[0]
    return np.column_stack([scale * np.sin(2.0 * y) ** 2, scale * np.cos((x + 1.0) ** (mu[0] / 4.0))])


def _transport_bounds(mu: np.ndarray) -> CoefficientBounds:
    # |b| <= (31 - mu) sqrt(2); c = xy + 1 <= 1 + 1.2 on the outer rectangle
    return CoefficientBounds(0.1, 1.0, (31.0 - float(mu[0])) * math.sqrt(2.0), 2.2)


@lru_cache(maxsize=4)
def _transport_problem(domain: Optional[Polygon] = None) -> SpaceTimeProblem:
    spatial = EllipticProblem(
        name="transport",
        domain=domain or l_shaped_domain(),
        diffusion=_constant_matrix(TRANSPORT_K),
        advection=_transport_advection,
        # both components depend only on the other coordinate
        advection_divergence=_constant(0.0),
        reaction=lambda x, y, mu: x * y + 1.0,
        source=_constant(1.0),
        parameters=ParameterDomain(("mu",), (1.0,), (10.0,)),
        bounds=_transport_bounds,
    )
    return SpaceTimeProblem(spatial, T=1.0)


# ============================================================================
# Registry
# ============================================================================

CATALOG: Dict[str, CatalogEntry] = {
    "sawblade": CatalogEntry(
        name="sawblade",
        summary="Piecewise diffusion on a saw-blade, teeth and blade with separate coefficients",
        parameters=_sawblade_problem().parameters,
        space_time=False,
        problem_for=lambda mu: _sawblade_problem(),
        inner=Rect(0.0, 4.0, 0.0, 0.5),
        outer=Rect(0.0, 4.0, 0.0, 1.0),
        sample_mu=(1.0, 0.1),
        default_counts=(7, 7),
        domain_text="Blade (0,4)x(0,1/2) with 8 triangular teeth of height 1/2 tiling the top edge",
        coefficients_text={"A": "mu1 diag(1,2) on the teeth, mu2 diag(1,2) on the blade",
                           "b": "0", "c": "0", "f": "1"},
        constants_text={"c_B": "1 / (2 max(mu1, mu2))", "C_B": "1 / min(mu1, mu2)"},
    ),
    "sawblade-laplace": CatalogEntry(
        name="sawblade-laplace",
        summary="Laplace equation with zero source on the saw-blade; the exact solution is 0",
        parameters=_sawblade_laplace_problem().parameters,
        space_time=False,
        problem_for=lambda mu: _sawblade_laplace_problem(),
        inner=Rect(0.0, 4.0, 0.0, 0.5),
        outer=Rect(0.0, 4.0, 0.0, 1.0),
        sample_mu=(),
        default_counts=(),
        domain_text="Saw-blade as for 'sawblade'",
        coefficients_text={"A": "I", "b": "0", "c": "0", "f": "0"},
        constants_text={"c_B": "1", "C_B": "1"},
        exact=ZeroField(),
    ),
    "notch": CatalogEntry(
        name="notch",
        summary="Advection-diffusion-reaction on the unit square with a wedge recess of angle mu",
        parameters=_notch_problem(0.0).parameters,
        space_time=False,
        problem_for=lambda mu: _notch_problem(float(mu[0])),
        inner=Rect(0.0, 1.0, 0.25, 1.0),
        outer=Rect(0.0, 1.0, 0.0, 1.0),
        sample_mu=(0.25 * math.pi,),
        default_counts=(9,),
        domain_text="Unit square minus a wedge with apex (0.5, 0.25) opening onto the bottom edge",
        coefficients_text={"A": "[[1/2, 1/4], [1/4, 1/2]]", "b": "(10, -3)", "c": "xy + 1", "f": "10"},
        constants_text={"c_B": "1 / (||A|| + s_PF ||b|| + s_PF^2 ||c||)", "C_B": "1 / lambda_min(A) = 4"},
    ),
    "heat-square": CatalogEntry(
        name="heat-square",
        summary="Heat equation on the unit square with exact solution t sin(pi x) sin(pi y)",
        parameters=_heat_problem().parameters,
        space_time=True,
        problem_for=lambda mu: _heat_problem(),
        inner=Rect(0.25, 0.75, 0.25, 0.75),
        outer=Rect(0.0, 1.0, 0.0, 1.0),
        sample_mu=(1.0,),
        default_counts=(4,),
        domain_text="Unit square, I = (0, 1)",
        coefficients_text={"A": "mu I", "b": "0", "c": "0",
                           "f": "(1 + 2 pi^2 mu t) sin(pi x) sin(pi y)"},
        constants_text={"c_B": "user-config", "C_B": "user-config"},
        exact=HEAT_TRUTH,
    ),
    "transport": CatalogEntry(
        name="transport",
        summary="Parabolic transport problem with non-affine advection on an L-shaped polygon",
        parameters=_transport_problem().parameters,
        space_time=True,
        problem_for=lambda mu: _transport_problem(),
        inner=Rect(0.0, 0.6, 0.0, 1.0),
        outer=Rect(0.0, 1.2, 0.0, 1.0),
        sample_mu=(5.5,),
        default_counts=(10,),
        domain_text="(0,1.2)x(0,1) minus its upper-right quarter block, I = (0, 1)",
        coefficients_text={"A": "diag(1, 0.1)", "b": "(31 - mu) (sin^2(2y), cos((x+1)^(mu/4)))",
                           "c": "xy + 1", "f": "1"},
        constants_text={"c_B": "user-config", "C_B": "user-config"},
    ),
}


def get_entry(name: str) -> CatalogEntry:
    if name not in CATALOG:
        raise ConfigurationError(f"Unknown problem {name!r}. Catalog: {', '.join(sorted(CATALOG))}")
    return CATALOG[name]


def transport_entry(domain: Polygon, inner: Rect, outer: Rect) -> CatalogEntry:
    """Transport problem on a user polygon (for instance loaded from JSON)."""
    base = CATALOG["transport"]
    problem = _transport_problem(domain)
    return CatalogEntry(
        name="transport",
        summary=base.summary,
        parameters=base.parameters,
        space_time=True,
        problem_for=lambda mu: problem,
        inner=inner,
        outer=outer,
        sample_mu=base.sample_mu,
        default_counts=base.default_counts,
        domain_text="User polygon",
        coefficients_text=base.coefficients_text,
        constants_text=base.constants_text,
    )


def custom_entry(domain: Polygon, inner: Rect, outer: Rect, A: List[List[float]],
                 b: Optional[List[float]] = None, c: float = 0.0, f: float = 1.0) -> CatalogEntry:
    """
    Elliptic problem with constant coefficients on a user polygon.

    Raises:
        NotCoerciveError: if A is not positive definite or c < 0
    """
    A = np.asarray(A, dtype=float).reshape(2, 2)
    b_vec = np.zeros(2) if b is None else np.asarray(b, dtype=float).reshape(2)
    a0 = float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])
    if a0 <= 0:
        raise NotCoerciveError(f"Diffusion matrix {A.tolist()} is not positive definite")
    if c < 0:
        raise NotCoerciveError(f"Reaction coefficient {c} is negative")
    bounds = CoefficientBounds(a0, float(np.linalg.norm(A, 2)), float(np.linalg.norm(b_vec)), abs(float(c)))
    problem = EllipticProblem(
        name="custom",
        domain=domain,
        diffusion=_constant_matrix(A),
        advection=None if not np.any(b_vec) else (lambda x, y, mu: np.broadcast_to(b_vec, (len(x), 2))),
        reaction=None if c == 0 else _constant(c),
        advection_divergence=_constant(0.0),
        source=_constant(f),
        parameters=ParameterDomain((), (), ()),
        bounds=lambda mu: bounds,
    )
    return CatalogEntry(
        name="custom",
        summary="Constant-coefficient problem on a user polygon",
        parameters=problem.parameters,
        space_time=False,
        problem_for=lambda mu: problem,
        inner=inner,
        outer=outer,
        sample_mu=(),
        default_counts=(),
        domain_text=f"User polygon with {len(domain.vertices)} vertices",
        coefficients_text={"A": str(A.tolist()), "b": str(b_vec.tolist()), "c": f"{c:g}", "f": f"{f:g}"},
        constants_text={"c_B": "1 / (||A|| + s_PF ||b|| + s_PF^2 |c|)", "C_B": "1 / lambda_min(A)"},
    )


# ============================================================================
# Fields
# ============================================================================

FIELD_KINDS = ("mlp", "zero", "truth", "truth-minus-bump", "perturbed", "separable")

TIME_PROFILES: Dict[str, Tuple[Callable[[float], float], Callable[[float], float]]] = {
    "t": (lambda t: t, lambda t: 1.0),
    "one": (lambda t: 1.0, lambda t: 0.0),
    "sin": (lambda t: math.sin(math.pi * t), lambda t: math.pi * math.cos(math.pi * t)),
}


@dataclass(frozen=True)
class FieldSpec:
    """Which approximant to certify."""

    kind: str = "truth-minus-bump"
    path: Optional[str] = None
    amplitude: float = 1.0
    epsilon: float = 0.1
    sigma: str = "t"

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ConfigurationError(f"Unknown field kind {self.kind!r}; expected one of {FIELD_KINDS}")
        if self.kind == "mlp" and not self.path:
            raise ConfigurationError("Field kind 'mlp' needs a weight file path")
        if self.sigma not in TIME_PROFILES:
            raise ConfigurationError(f"Unknown time profile {self.sigma!r}; expected one of {sorted(TIME_PROFILES)}")


@lru_cache(maxsize=8)
def load_weights(path: str) -> MLPWeights:
    return mlp_load(path)


def _wave(x, y, mu, t):
    return np.sin(2.0 * np.pi * x) * np.sin(np.pi * y) + 0.5


def _wave_grad(x, y, mu, t):
    return (2.0 * np.pi * np.cos(2.0 * np.pi * x) * np.sin(np.pi * y),
            np.pi * np.sin(2.0 * np.pi * x) * np.cos(np.pi * y))


def truth_for(entry: CatalogEntry, problem: Problem, mu: np.ndarray, oracle_levels: int) -> Tuple[Field, bool]:
    """
    The exact solution when known, otherwise a P1 solution one level coarser
    than the oracle mesh, so reference errors still see its discretization error.

    Returns:
        Tuple of (field, is_exact)
    """
    if entry.exact is not None:
        return entry.exact, True
    if isinstance(problem, SpaceTimeProblem):
        raise ConfigurationError(
            f"Problem {entry.name!r} has no exact solution; use field kind 'mlp', 'zero' or 'separable'"
        )
    return oracle.reference_solution(problem, mu, max(oracle_levels - 1, 0)), False


def build_field(spec: FieldSpec, entry: CatalogEntry, problem: Problem, embedding: Embedding,
                mu: np.ndarray, oracle_levels: int = 3) -> Tuple[Field, Optional[Field]]:
    """
    Build the approximant for one parameter.

    Returns:
        Tuple of (field, exact solution or None when only a reference estimate exists)
    """
    space_time = isinstance(problem, SpaceTimeProblem)
    sigma, dsigma = TIME_PROFILES[spec.sigma]
    exact = entry.exact

    if spec.kind == "zero":
        return ZeroField(), exact
    if spec.kind == "mlp":
        weights = load_weights(spec.path)
        raw = MLPField(weights, space_time=space_time)
        return masked_field(raw, build_adf(embedding.domain)), exact

    bump = bump_field(embedding.inner, spec.amplitude)
    if spec.kind == "separable":
        if not space_time:
            raise ConfigurationError("Field kind 'separable' needs a space-time problem")
        return SeparableField(sigma, dsigma, bump), exact

    truth, is_exact = truth_for(entry, problem, mu, oracle_levels)
    if spec.kind == "truth":
        return truth, truth if is_exact else None
    if spec.kind == "truth-minus-bump":
        error = SeparableField(sigma, dsigma, bump) if space_time else bump
        return truth - error, truth if is_exact else None

    wave = masked_field(AnalyticField(_wave, _wave_grad, name="wave"), build_adf(embedding.domain))
    perturbation = SeparableField(sigma, dsigma, wave) if space_time else wave
    return truth + spec.epsilon * perturbation, truth if is_exact else None
