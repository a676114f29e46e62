import math

import numpy as np
import pytest

from errors import InvalidGeometryError, ParameterDomainError
from geometry import Polygon, Rect, Triangle, notched_square
from quadrature import (
    QuadRule,
    gauss_legendre,
    gauss_lobatto,
    gauss_rect_rule,
    map_interval,
    polygon_rule,
    reference_triangle_rule,
    tensor_rule,
    triangle_rule,
)


def _monomial_integral(k: int) -> float:
    """Integral of x^k over (-1, 1)."""
    return 0.0 if k % 2 else 2.0 / (k + 1)


# ============================================================================
# Interval rules
# ============================================================================

def test_gauss_legendre_closed_forms():
    r1 = gauss_legendre(1)
    np.testing.assert_allclose(r1.points, [0.0], atol=1e-15)
    np.testing.assert_allclose(r1.weights, [2.0])

    r2 = gauss_legendre(2)
    np.testing.assert_allclose(r2.points, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(r2.weights, [1.0, 1.0], atol=1e-15)

    r3 = gauss_legendre(3)
    np.testing.assert_allclose(r3.points, [-math.sqrt(0.6), 0.0, math.sqrt(0.6)], atol=1e-15)
    np.testing.assert_allclose(r3.weights, [5 / 9, 8 / 9, 5 / 9], atol=1e-15)


def test_gauss_lobatto_closed_forms():
    np.testing.assert_allclose(gauss_lobatto(2).weights, [1.0, 1.0])
    r3 = gauss_lobatto(3)
    np.testing.assert_allclose(r3.points, [-1.0, 0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(r3.weights, [1 / 3, 4 / 3, 1 / 3], atol=1e-15)
    r4 = gauss_lobatto(4)
    s = 1 / math.sqrt(5)
    np.testing.assert_allclose(r4.points, [-1.0, -s, s, 1.0], atol=1e-15)
    np.testing.assert_allclose(r4.weights, [1 / 6, 5 / 6, 5 / 6, 1 / 6], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13, 20, 32])
def test_gauss_legendre_exactness(n):
    rule = gauss_legendre(n)
    assert rule.exactness_degree == 2 * n - 1
    for k in range(2 * n):
        assert rule.integrate(rule.points ** k) == pytest.approx(_monomial_integral(k), abs=1e-12)
    assert np.all(np.diff(rule.points) > 0)
    assert np.all(rule.weights > 0)


@pytest.mark.parametrize("n", [2, 3, 4, 7, 12, 20])
def test_gauss_lobatto_exactness(n):
    rule = gauss_lobatto(n)
    assert rule.points[0] == -1.0 and rule.points[-1] == 1.0
    for k in range(2 * n - 2):
        assert rule.integrate(rule.points ** k) == pytest.approx(_monomial_integral(k), abs=1e-12)


def test_invalid_rule_sizes():
    with pytest.raises(ParameterDomainError):
        gauss_legendre(0)
    with pytest.raises(ParameterDomainError):
        gauss_lobatto(1)


def test_map_interval_scales_weights():
    rule = map_interval(gauss_legendre(4), 2.0, 5.0)
    assert rule.measure == pytest.approx(3.0)
    assert rule.integrate(rule.points ** 3) == pytest.approx((5 ** 4 - 2 ** 4) / 4, abs=1e-11)
    with pytest.raises(ParameterDomainError):
        map_interval(gauss_legendre(2), 1.0, 1.0)


def test_rule_length_mismatch():
    with pytest.raises(ValueError):
        QuadRule(np.zeros(3), np.ones(2), 1)


# ============================================================================
# Rectangle rules
# ============================================================================

def test_midpoint_on_unit_square(unit_rect):
    rule = gauss_rect_rule(unit_rect, 1)
    np.testing.assert_allclose(rule.points, [[0.5, 0.5]])
    np.testing.assert_allclose(rule.weights, [1.0])


def test_two_by_two_integrates_xy(unit_rect):
    rule = gauss_rect_rule(unit_rect, 2)
    x, y = rule.points.T
    assert rule.integrate(x * y) == pytest.approx(0.25, abs=1e-15)


def test_sine_product_on_long_rectangle():
    rule = gauss_rect_rule(Rect(0, 4, 0, 1), 8)
    x, y = rule.points.T
    value = rule.integrate(np.sin(np.pi * x / 4) * np.sin(np.pi * y))
    assert value == pytest.approx(16 / np.pi ** 2, abs=1e-10)


def test_tensor_rule_point_ordering(unit_rect):
    rx, ry = gauss_legendre(2), gauss_legendre(3)
    rule = tensor_rule(rx, ry, unit_rect)
    assert len(rule) == 6
    # (i, j) -> i * n_y + j: y varies fastest
    assert rule.points[0, 0] == rule.points[2, 0]
    assert rule.points[0, 1] < rule.points[1, 1] < rule.points[2, 1]
    assert rule.exactness_degree == 3


@pytest.mark.parametrize("n", [3, 6, 10])
def test_rect_rule_tensor_exactness(n, rng):
    rect = Rect(-0.5, 1.5, 0.25, 2.0)
    rule = gauss_rect_rule(rect, n)
    x, y = rule.points.T
    for _ in range(5):
        i, j = rng.integers(0, 2 * n, size=2)
        exact = ((1.5 ** (i + 1) - (-0.5) ** (i + 1)) / (i + 1)) * ((2.0 ** (j + 1) - 0.25 ** (j + 1)) / (j + 1))
        assert rule.integrate(x ** i * y ** j) == pytest.approx(exact, rel=1e-12, abs=1e-12)


# ============================================================================
# Triangle and polygon rules
# ============================================================================

def test_reference_triangle_area():
    assert reference_triangle_rule(1).measure == pytest.approx(0.5, abs=1e-15)


def test_reference_triangle_second_moment():
    rule = reference_triangle_rule(2)
    assert rule.integrate(rule.points[:, 0] ** 2) == pytest.approx(1 / 12, abs=1e-12)


@pytest.mark.parametrize("order", [1, 2, 4, 7, 10, 15])
def test_triangle_rule_total_degree_exactness(order):
    rule = reference_triangle_rule(order)
    x, y = rule.points.T
    for a in range(order + 1):
        for b in range(order + 1 - a):
            # integral of x^a y^b over the reference triangle = a! b! / (a + b + 2)!
            exact = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
            assert rule.integrate(x ** a * y ** b) == pytest.approx(exact, abs=1e-12)


def test_mapped_triangles_integrate_area(rng):
    for _ in range(10):
        verts = rng.uniform(-2, 2, size=(3, 2))
        tri = Triangle(verts)
        if tri.area < 1e-3:
            continue
        rule = triangle_rule(3, tri)
        assert rule.measure == pytest.approx(tri.area, rel=1e-12)
        # linear functions integrate to area * value at the centroid
        assert rule.integrate(rule.points[:, 0]) == pytest.approx(tri.area * tri.centroid[0], rel=1e-10, abs=1e-12)


def test_degenerate_triangle_rejected():
    with pytest.raises(InvalidGeometryError):
        triangle_rule(2, Triangle([(0, 0), (1, 1), (2, 2)]))


def test_unit_square_polygon_rule(unit_square):
    for order in (1, 4, 9):
        assert polygon_rule(unit_square, order, 1).measure == pytest.approx(1.0, abs=1e-13)


def test_sawblade_subregion_measure(sawblade):
    rule = polygon_rule(sawblade, 4, 1)
    assert rule.tag_measure("blade") == pytest.approx(2.0, abs=1e-12)
    assert rule.tag_measure("teeth") == pytest.approx(1.0, abs=1e-12)


def test_notch_measure_matches_shoelace():
    poly = notched_square(math.pi / 4)
    rule = polygon_rule(poly, 6, 2)
    assert rule.measure == pytest.approx(poly.area, abs=1e-10)


def test_polygon_rule_exact_for_polynomials():
    poly = Polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
    rule = polygon_rule(poly, 5, 0)
    x, y = rule.points.T
    # integral of x^2 y^3 over the L-shape: full square minus the (1,2)^2 block
    full = (8 / 3) * (16 / 4)
    block = ((8 - 1) / 3) * ((16 - 1) / 4)
    assert rule.integrate(x ** 2 * y ** 3) == pytest.approx(full - block, rel=1e-12)
