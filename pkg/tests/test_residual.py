import numpy as np
import pytest

from approximant import bump_field
from catalog import CATALOG, HEAT_TRUTH
from errors import NotCoerciveError, ParameterDomainError
from geometry import Rect
from quadrature import gauss_rect_rule, map_interval, gauss_legendre, polygon_rule
from residual import (
    EllipticProblem,
    ParameterDomain,
    SpaceTimeProblem,
    elliptic_residual_inner,
    elliptic_residual_outer,
    parabolic_residual_at_time,
    spacetime_dual_norm,
)
from spectral import build_space, dual_norm

BLADE = Rect(0.0, 4.0, 0.0, 0.5)
BOX = Rect(0.0, 4.0, 0.0, 1.0)


@pytest.fixture(scope="module")
def laplace():
    return CATALOG["sawblade-laplace"].problem_for(np.array([]))


def test_bump_error_has_unit_inner_dual_norm(laplace):
    # exact solution is 0, so the residual of -bump is (grad bump, grad v)
    field = -bump_field(BLADE)
    space = build_space(BLADE, (4, 4))
    F = elliptic_residual_inner(laplace, field, (), space, gauss_rect_rule(BLADE, 8))
    norm, _ = dual_norm(space, F)
    assert F.region == "inner"
    assert norm == pytest.approx(1.0, abs=1e-12)


def test_bump_error_outer_dual_norm_is_at_most_one(laplace):
    field = -bump_field(BLADE)
    space = build_space(BOX, (10, 10))
    # total degree 28 integrates bump gradients against order-10 mode gradients exactly
    quad = polygon_rule(laplace.domain, 28, 0)
    norm, _ = dual_norm(space, elliptic_residual_outer(laplace, field, (), space, quad))
    assert 0.5 < norm <= 1.0 + 1e-10


def test_outer_points_must_lie_in_test_rectangle(laplace):
    space = build_space(BLADE, 3)
    quad = polygon_rule(laplace.domain, 2, 0)
    with pytest.raises(ParameterDomainError):
        elliptic_residual_outer(laplace, -bump_field(BLADE), (), space, quad)


def test_parameter_outside_box_is_rejected():
    problem = CATALOG["sawblade"].problem_for(np.array([1.0, 0.1]))
    space = build_space(BLADE, 3)
    with pytest.raises(ParameterDomainError):
        elliptic_residual_inner(problem, bump_field(BLADE), (2.0, 0.1), space, gauss_rect_rule(BLADE, 4))
    with pytest.raises(ParameterDomainError):
        elliptic_residual_inner(problem, bump_field(BLADE), (0.5,), space, gauss_rect_rule(BLADE, 4))


def test_parameter_domain_rejects_inverted_box():
    with pytest.raises(ValueError):
        ParameterDomain(("mu",), (1.0,), (0.0,))


def test_notch_structure_margin():
    problem = CATALOG["notch"].problem_for(np.array([0.3]))
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 0.5]])
    assert problem.check_structure((0.3,), pts) == pytest.approx(1.0)


def test_negative_reaction_is_not_coercive(unit_square):
    problem = EllipticProblem(
        name="bad",
        domain=unit_square,
        diffusion=lambda x, y, mu, tags: np.broadcast_to(np.eye(2), (len(x), 2, 2)),
        source=lambda x, y, mu, t: np.ones(len(x)),
        reaction=lambda x, y, mu: -np.ones(len(x)),
        parameters=ParameterDomain((), (), ()),
    )
    with pytest.raises(NotCoerciveError):
        problem.check_structure((), np.array([[0.5, 0.5]]))


def test_coefficients_follow_subregion_tags():
    problem = CATALOG["sawblade"].problem_for(np.array([0.5, 0.08]))
    pts = np.array([[1.0, 0.2], [1.0, 0.2]])
    A, b, c = problem.coefficients(pts, np.array([0.5, 0.08]), np.array(["blade", "teeth"], dtype=object))
    np.testing.assert_allclose(A[0], [[0.08, 0.0], [0.0, 0.16]])
    np.testing.assert_allclose(A[1], [[0.5, 0.0], [0.0, 1.0]])
    assert np.all(b == 0.0) and np.all(c == 0.0)


# ============================================================================
# Space-time residuals
# ============================================================================

@pytest.fixture(scope="module")
def heat():
    return CATALOG["heat-square"].problem_for(np.array([1.0]))


def test_exact_heat_solution_has_zero_residual(heat):
    inner = Rect(0.25, 0.75, 0.25, 0.75)
    space = build_space(inner, 6)
    times = map_interval(gauss_legendre(4), 0.0, heat.T)
    norm = spacetime_dual_norm(heat, HEAT_TRUTH, (1.0,), "inner", space, gauss_rect_rule(inner, 24), times)
    assert norm < 1e-12


def test_time_outside_interval_is_rejected(heat, unit_rect):
    space = build_space(unit_rect, 3)
    with pytest.raises(ParameterDomainError):
        parabolic_residual_at_time(heat, HEAT_TRUTH, (1.0,), 1.5, space, gauss_rect_rule(unit_rect, 4))


def test_time_rule_must_fit_interval(heat, unit_rect):
    space = build_space(unit_rect, 3)
    bad = map_interval(gauss_legendre(3), 0.0, 2.0)
    with pytest.raises(ParameterDomainError):
        spacetime_dual_norm(heat, HEAT_TRUTH, (1.0,), "inner", space, gauss_rect_rule(unit_rect, 4), bad)


def test_space_time_problem_needs_positive_horizon(heat):
    with pytest.raises(ParameterDomainError):
        SpaceTimeProblem(heat.spatial, T=0.0)
