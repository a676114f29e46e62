"""
Variational residuals of linear elliptic and parabolic problems.

For an approximant u the residual tested against a spectral mode phi_i is

    F_i = integral [ (f - du/dt - b . grad u - c u) phi_i - (A grad u) . grad phi_i ]

taken over the inner rectangle (lower bound) or over the physical domain
with modes of the outer rectangle (upper bound). The du/dt term is present
only for space-time problems.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from approximant import Field
from errors import NotCoerciveError, NumericalError, ParameterDomainError
from geometry import EDGE_TOL, Polygon, locate_subregion
from logger import logger
from quadrature import QuadRule
from spectral import SpectralSpace, dual_norm, gram_system

REGIONS = ("inner", "outer")

# (x, y, mu, tags) -> (m, 2, 2)
DiffusionFn = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]
# (x, y, mu) -> (m, 2) or (m,)
VectorFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
# (x, y, mu, t) -> (m,)
SourceFn = Callable[[np.ndarray, np.ndarray, np.ndarray, Optional[float]], np.ndarray]


class CoefficientBounds(NamedTuple):
    """Coercivity a0 and sup-norms of A, b, c over the domain."""

    a0: float
    norm_A: float
    norm_b: float
    norm_c: float


@dataclass(frozen=True)
class ParameterDomain:
    """Box of admissible parameters."""

    names: Tuple[str, ...]
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        if not (len(self.names) == len(self.lower) == len(self.upper)):
            raise ValueError("ParameterDomain needs one bound pair per name")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError(f"ParameterDomain has lower > upper: {self.lower} vs {self.upper}")

    @property
    def dim(self) -> int:
        return len(self.names)

    def check(self, mu: Sequence[float], tol: float = 1e-12) -> np.ndarray:
        """Return mu as an array or raise ParameterDomainError."""
        mu = np.atleast_1d(np.asarray(() if mu is None else mu, dtype=float))
        if len(mu) != self.dim:
            raise ParameterDomainError(f"Expected {self.dim} parameters {self.names}, got {len(mu)}")
        for name, value, lo, hi in zip(self.names, mu, self.lower, self.upper):
            scale = max(1.0, abs(lo), abs(hi))
            if not np.isfinite(value) or value < lo - tol * scale or value > hi + tol * scale:
                raise ParameterDomainError(f"Parameter {name}={value} outside [{lo}, {hi}]")
        return mu

    def sample(self) -> np.ndarray:
        """A representative parameter: the upper corner of the box."""
        return np.array(self.upper, dtype=float)


@dataclass(frozen=True, eq=False)
class EllipticProblem:
    """
    -div(A grad u) + b . grad u + c u = f in the domain, u = 0 on its boundary.

    The diffusion callable receives per-point subregion tags so piecewise
    coefficients can be expressed. `bounds` returns the coefficient bounds for
    a parameter; when it is None they are estimated from quadrature samples.
    """

    name: str
    domain: Polygon
    diffusion: DiffusionFn
    source: SourceFn
    parameters: ParameterDomain
    advection: Optional[VectorFn] = None
    reaction: Optional[VectorFn] = None
    bounds: Optional[Callable[[np.ndarray], CoefficientBounds]] = None
    advection_divergence: Optional[VectorFn] = None
    exact_solution: Optional[Field] = None
    description: Dict[str, str] = field(default_factory=dict)

    def coefficients(self, points: np.ndarray, mu: np.ndarray, tags: np.ndarray):
        """Evaluate (A (m,2,2), b (m,2), c (m,)) at points."""
        x, y = points[:, 0], points[:, 1]
        m = len(points)
        A = np.broadcast_to(self.diffusion(x, y, mu, tags), (m, 2, 2))
        b = np.zeros((m, 2)) if self.advection is None else np.broadcast_to(self.advection(x, y, mu), (m, 2))
        c = np.zeros(m) if self.reaction is None else np.broadcast_to(self.reaction(x, y, mu), (m,))
        return A, b, c

    def check_structure(self, mu: Sequence[float], points: np.ndarray) -> float:
        """
        Sample c - div(b) / 2 >= 0 at points and return its minimum.

        Raises:
            NotCoerciveError: if the condition fails at a sample
        """
        mu = self.parameters.check(mu)
        pts = np.atleast_2d(points)
        x, y = pts[:, 0], pts[:, 1]
        c = np.zeros(len(pts)) if self.reaction is None else np.broadcast_to(self.reaction(x, y, mu), (len(pts),))
        if self.advection_divergence is None:
            if self.advection is not None:
                logger.warning(f"{self.name}: advection divergence not declared, checking c >= 0 only")
            div = np.zeros(len(pts))
        else:
            div = np.broadcast_to(self.advection_divergence(x, y, mu), (len(pts),))
        margin = float(np.min(c - 0.5 * div))
        if margin < -1e-12:
            raise NotCoerciveError(f"{self.name}: c - div(b)/2 = {margin:.3e} < 0 at some sample point")
        return margin


@dataclass(frozen=True, eq=False)
class SpaceTimeProblem:
    """du/dt + L u = f on (0, T) x domain, u(0) = 0, with L from an elliptic problem."""

    spatial: EllipticProblem
    T: float = 1.0
    exact_solution: Optional[Field] = None
    initial_zero: bool = True

    def __post_init__(self):
        if not self.T > 0:
            raise ParameterDomainError(f"Final time must be positive, got {self.T}")

    @property
    def name(self) -> str:
        return self.spatial.name

    @property
    def parameters(self) -> ParameterDomain:
        return self.spatial.parameters


@dataclass(frozen=True, eq=False)
class FunctionalVector:
    """Residual values on the modes of a test space."""

    values: np.ndarray
    region: str
    quadrature: str
    t: Optional[float] = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("Residual functional has non-finite entries",
                                 {"region": self.region, "t": self.t})

    def __len__(self) -> int:
        return len(self.values)


def sample_bounds(problem: EllipticProblem, mu: np.ndarray, points: np.ndarray,
                  tags: np.ndarray) -> CoefficientBounds:
    """Coefficient bounds estimated from samples (not guaranteed)."""
    A, b, c = problem.coefficients(points, mu, tags)
    eig = np.linalg.eigvalsh(0.5 * (A + np.transpose(A, (0, 2, 1))))
    norm_A = float(np.max(np.linalg.norm(A, ord=2, axis=(1, 2))))
    return CoefficientBounds(
        a0=float(eig[:, 0].min()),
        norm_A=norm_A,
        norm_b=float(np.max(np.linalg.norm(b, axis=1))) if len(b) else 0.0,
        norm_c=float(np.max(np.abs(c))) if len(c) else 0.0,
    )


def point_tags(rule: QuadRule, domain: Polygon) -> np.ndarray:
    """Subregion tags of a rule's points, located in the domain when the rule has none."""
    if rule.tags is not None:
        return rule.tags
    return locate_subregion(domain, rule.points)


def _assemble(space: SpectralSpace, points: np.ndarray, S: np.ndarray, G: np.ndarray) -> np.ndarray:
    """F_ij = sum_m S_m phi_ij(x_m) + G_m . grad phi_ij(x_m), using the tensor structure of the modes."""
    vx, dx = space.axis_basis(0, points[:, 0])
    vy, dy = space.axis_basis(1, points[:, 1])
    F = (vx * S) @ vy.T + (dx * G[:, 0]) @ vy.T + (vx * G[:, 1]) @ dy.T
    return F.ravel()


def _residual(problem: EllipticProblem, field: Field, mu: np.ndarray, space: SpectralSpace,
              quad: QuadRule, region: str, t: Optional[float], with_time: bool) -> FunctionalVector:
    if region not in REGIONS:
        raise ValueError(f"Unknown region {region!r}; expected one of {REGIONS}")
    pts = quad.points
    if not np.all(space.rect.contains(pts, tol=EDGE_TOL * max(1.0, space.rect.width, space.rect.height))):
        raise ParameterDomainError(f"{region} quadrature points leave the test-space rectangle")
    tags = point_tags(quad, problem.domain)
    s = field.evaluate(pts, mu, t)
    A, b, c = problem.coefficients(pts, mu, tags)
    f = np.broadcast_to(problem.source(pts[:, 0], pts[:, 1], mu, t), (len(pts),))
    zeroth = f - np.einsum("md,md->m", b, s.grad) - c * s.value
    if with_time:
        zeroth = zeroth - s.dt
    flux = np.einsum("mij,mj->mi", A, s.grad)
    w = quad.weights
    values = _assemble(space, pts, w * zeroth, -w[:, None] * flux)
    label = f"{len(quad)} points, degree {quad.exactness_degree}"
    return FunctionalVector(values, region, label, t)


def elliptic_residual_inner(problem: EllipticProblem, field: Field, mu: Sequence[float],
                            space_on_inner: SpectralSpace, quad: QuadRule) -> FunctionalVector:
    """
    Residual against the inner-rectangle modes (restriction to the inner rectangle).

    Args:
        problem: Elliptic problem
        field: Approximant
        mu: Parameter vector, checked against the problem's parameter box
        space_on_inner: Spectral space on the inner rectangle
        quad: Rule on the inner rectangle

    Returns:
        FunctionalVector with region "inner"
    """
    mu = problem.parameters.check(mu)
    return _residual(problem, field, mu, space_on_inner, quad, "inner", None, False)


def elliptic_residual_outer(problem: EllipticProblem, field: Field, mu: Sequence[float],
                            space_on_outer: SpectralSpace, quad: QuadRule) -> FunctionalVector:
    """
    Residual of the domain integral tested with outer-rectangle modes.

    The modes need not vanish on the domain boundary; the integral runs over
    the domain only, which defines one extension of the domain residual.
    """
    mu = problem.parameters.check(mu)
    return _residual(problem, field, mu, space_on_outer, quad, "outer", None, False)


def parabolic_residual_at_time(problem: SpaceTimeProblem, field: Field, mu: Sequence[float], t: float,
                               space: SpectralSpace, quad: QuadRule, region: str = "inner") -> FunctionalVector:
    """Spatial residual functional at time t, including the -du/dt term."""
    mu = problem.parameters.check(mu)
    if not (0.0 <= t <= problem.T):
        raise ParameterDomainError(f"Time {t} outside (0, {problem.T})")
    return _residual(problem.spatial, field, mu, space, quad, region, float(t), True)


def spacetime_dual_norm(problem: SpaceTimeProblem, field: Field, mu: Sequence[float], region: str,
                        space: SpectralSpace, quad: QuadRule, time_rule: QuadRule) -> float:
    """
    sqrt(sum_q w_q ||r(t_q)||^2) over a Gauss rule in time.

    Args:
        problem: Space-time problem
        field: Space-time approximant
        mu: Parameter vector
        region: "inner" or "outer"
        space: Spectral space on the matching rectangle
        quad: Spatial rule (inner rectangle or domain)
        time_rule: Rule on (0, T)

    Returns:
        Discrete L2(0, T; dual) norm of the residual
    """
    if time_rule.points.min() < -EDGE_TOL or time_rule.points.max() > problem.T + EDGE_TOL:
        raise ParameterDomainError(f"Time rule is not on (0, {problem.T})")
    system = gram_system(space.rect, space.order)
    total = 0.0
    for t, w in zip(time_rule.points, time_rule.weights):
        F = parabolic_residual_at_time(problem, field, mu, float(t), space, quad, region)
        norm, _ = dual_norm(system, F)
        total += w * norm ** 2
    return float(np.sqrt(total))
