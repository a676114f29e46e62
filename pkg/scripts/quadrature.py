"""
Quadrature rules: Gauss rules on intervals, tensor rules on rectangles, and
collapsed-coordinate rules on triangles and polygons.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from errors import InvalidGeometryError, NumericalError, ParameterDomainError
from geometry import AREA_RTOL, EDGE_TOL, Polygon, Rect, Triangle, refine, triangulate
from logger import logger

NEWTON_TOL = 1e-15
NEWTON_MAX_ITER = 100


@dataclass(frozen=True, eq=False)
class QuadRule:
    """
    Quadrature points and weights.

    points is (n,) for interval rules and (n, 2) for planar rules. Polygon
    rules carry the subregion tag of every point.
    """

    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int
    tags: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if len(pts) != len(w):
            raise ValueError(f"QuadRule has {len(pts)} points but {len(w)} weights")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if self.tags is not None:
            tags = np.asarray(self.tags, dtype=object)
            if len(tags) != len(w):
                raise ValueError("QuadRule needs one tag per point")
            object.__setattr__(self, "tags", tags)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return 1 if self.points.ndim == 1 else self.points.shape[1]

    @property
    def measure(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Apply the rule to values sampled at the points (first axis)."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))

    def tag_measure(self, tag: str) -> float:
        """Total weight carried by points with the given subregion tag."""
        if self.tags is None:
            raise ValueError("Rule has no subregion tags")
        return float(np.sum(self.weights[self.tags == tag]))


def _legendre_pair(n: int, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Values of (P_n, P_{n-1}) at x by the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    if n == 0:
        return p_prev, np.zeros_like(x)
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p, p_prev


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> QuadRule:
    """
    Gauss-Legendre rule on (-1, 1).

    Nodes are roots of P_n found by Newton iteration from the usual cosine
    guesses.

    Args:
        n: Number of points (>= 1)

    Returns:
        Rule exact for polynomials of degree <= 2n - 1
    """
    if n < 1:
        raise ParameterDomainError(f"Gauss-Legendre needs n >= 1, got {n}")
    i = np.arange(1, n + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(NEWTON_MAX_ITER):
        p, p_prev = _legendre_pair(n, x)
        dp = n * (x * p - p_prev) / (x * x - 1.0)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) <= NEWTON_TOL:
            break
    x = np.sort(x)
    # enforce the symmetry of the rule exactly
    x = 0.5 * (x - x[::-1])
    p, p_prev = _legendre_pair(n, x)
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    w = 0.5 * (w + w[::-1])
    return QuadRule(x, w, 2 * n - 1)


@lru_cache(maxsize=64)
def gauss_lobatto(n: int) -> QuadRule:
    """
    Gauss-Lobatto rule on (-1, 1), endpoints included.

    Args:
        n: Number of points (>= 2)

    Returns:
        Rule exact for polynomials of degree <= 2n - 3
    """
    if n < 2:
        raise ParameterDomainError(f"Gauss-Lobatto needs n >= 2, got {n}")
    N = n - 1
    x = np.cos(np.pi * np.arange(n) / N)
    for _ in range(NEWTON_MAX_ITER):
        p, p_prev = _legendre_pair(N, x)
        dx = (x * p - p_prev) / (n * p)
        x = x - dx
        if np.max(np.abs(dx)) <= NEWTON_TOL:
            break
    x = np.sort(x)
    x = 0.5 * (x - x[::-1])
    x[0], x[-1] = -1.0, 1.0
    p, _ = _legendre_pair(N, x)
    w = 2.0 / (N * n * p * p)
    w = 0.5 * (w + w[::-1])
    return QuadRule(x, w, 2 * n - 3)


def map_interval(rule: QuadRule, a: float, b: float) -> QuadRule:
    """Affine map of a rule on (-1, 1) to (a, b)."""
    if not b > a:
        raise ParameterDomainError(f"Interval needs a < b, got ({a}, {b})")
    half = 0.5 * (b - a)
    return QuadRule(a + (rule.points + 1.0) * half, rule.weights * half, rule.exactness_degree)


def tensor_rule(rule_x: QuadRule, rule_y: QuadRule, rect: Rect) -> QuadRule:
    """
    Product rule on a rectangle; point (i, j) has flat index i * n_y + j.

    Args:
        rule_x: 1D rule on (-1, 1) for the x direction
        rule_y: 1D rule on (-1, 1) for the y direction
        rect: Target rectangle

    Returns:
        2D rule whose weights sum to the rectangle's area
    """
    fx = map_interval(rule_x, rect.x0, rect.x1)
    fy = map_interval(rule_y, rect.y0, rect.y1)
    X, Y = np.meshgrid(fx.points, fy.points, indexing="ij")
    W = np.outer(fx.weights, fy.weights)
    return QuadRule(
        np.column_stack([X.ravel(), Y.ravel()]),
        W.ravel(),
        min(rule_x.exactness_degree, rule_y.exactness_degree),
    )


def gauss_rect_rule(rect: Rect, n_points: int) -> QuadRule:
    """n_points x n_points Gauss-Legendre rule on a rectangle."""
    rule = gauss_legendre(n_points)
    return tensor_rule(rule, rule, rect)


@lru_cache(maxsize=32)
def reference_triangle_rule(order: int) -> QuadRule:
    """
    Rule on the triangle (0,0), (1,0), (0,1) from a collapsed tensor Gauss rule.

    With x = u and y = (1 - u) v the Jacobian is (1 - u), so total degree
    `order` needs order + 1 in u and order in v.
    """
    if order < 1:
        raise ParameterDomainError(f"Triangle rule order must be >= 1, got {order}")
    n_u = math.ceil((order + 2) / 2)
    n_v = math.ceil((order + 1) / 2)
    ru = map_interval(gauss_legendre(n_u), 0.0, 1.0)
    rv = map_interval(gauss_legendre(n_v), 0.0, 1.0)
    U, V = np.meshgrid(ru.points, rv.points, indexing="ij")
    W = np.outer(ru.weights, rv.weights) * (1.0 - U)
    pts = np.column_stack([U.ravel(), ((1.0 - U) * V).ravel()])
    return QuadRule(pts, W.ravel(), order)


def triangle_rule(order: int, tri: Triangle) -> QuadRule:
    """
    Rule on an arbitrary triangle, exact for total degree <= order.

    Raises:
        InvalidGeometryError: if the triangle is degenerate
    """
    a, b, c = tri.vertices
    e1, e2 = b - a, c - a
    det = e1[0] * e2[1] - e1[1] * e2[0]
    scale = max(np.linalg.norm(e1), np.linalg.norm(e2), 1.0)
    if abs(det) <= EDGE_TOL * scale * scale:
        raise InvalidGeometryError(f"Degenerate triangle {tri.vertices.tolist()}")
    ref = reference_triangle_rule(order)
    pts = a + ref.points[:, 0:1] * e1 + ref.points[:, 1:2] * e2
    return QuadRule(pts, ref.weights * abs(det), order, tags=np.full(len(ref), tri.tag, dtype=object))


def polygon_rule(poly: Polygon, order: int, refine_levels: int) -> QuadRule:
    """
    Composite triangle rule over a refined triangulation of the polygon.

    Args:
        poly: Polygon, optionally partitioned into subregions
        order: Total-degree exactness of every triangle rule
        refine_levels: Uniform midpoint refinement levels

    Returns:
        Rule with one subregion tag per point; weights sum to the polygon area
    """
    tris = refine(triangulate(poly), refine_levels)
    ref = reference_triangle_rule(order)
    c = tris.corners
    a = c[:, 0]
    e1 = c[:, 1] - a
    e2 = c[:, 2] - a
    det = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    if np.any(det <= EDGE_TOL * EDGE_TOL):
        raise InvalidGeometryError("Refined triangulation contains a degenerate triangle")
    pts = (
        a[:, None, :]
        + ref.points[None, :, 0:1] * e1[:, None, :]
        + ref.points[None, :, 1:2] * e2[:, None, :]
    )
    weights = det[:, None] * ref.weights[None, :]
    tags = np.repeat(np.array(tris.tags, dtype=object), len(ref))
    rule = QuadRule(pts.reshape(-1, 2), weights.ravel(), order, tags=tags)
    if abs(rule.measure - poly.area) > AREA_RTOL * poly.area:
        raise NumericalError(
            "Polygon rule weights do not sum to the polygon area",
            {"measure": rule.measure, "area": poly.area},
        )
    logger.debug(
        f"Polygon rule: {len(tris)} triangles x {len(ref)} points (order {order}, {refine_levels} levels)"
    )
    return rule
