"""
Polygonal domains, the embedding triple and triangulations.

The certifier works with three nested regions: an inner rectangle (lower
bound), a polygonal physical domain, and an outer rectangle (upper bound).
Everything here is immutable once constructed and safe to share between
sweep workers.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import InvalidGeometryError, ParameterDomainError
from logger import logger

# Points closer than this to an edge count as on the edge (and thus inside)
EDGE_TOL = 1e-12
AREA_RTOL = 1e-10
DEFAULT_REGION = "omega"

PointLike = Union[Sequence[float], np.ndarray]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle (x0, x1) x (y0, y1)."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        for name in ("x0", "x1", "y0", "y1"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidGeometryError(f"Rect coordinate {name}={value} is not finite")
            object.__setattr__(self, name, value)
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise InvalidGeometryError(
                f"Rect needs x0 < x1 and y0 < y1, got ({self.x0}, {self.x1}) x ({self.y0}, {self.y1})"
            )

    @classmethod
    def from_bounds(cls, bounds: Sequence[float]) -> "Rect":
        """Build from [x0, x1, y0, y1]."""
        if len(bounds) != 4:
            raise InvalidGeometryError(f"Rect bounds need 4 numbers, got {list(bounds)}")
        return cls(*bounds)

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> np.ndarray:
        return np.array([0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)])

    def corners(self) -> np.ndarray:
        """Corners in counter-clockwise order."""
        return np.array([
            [self.x0, self.y0], [self.x1, self.y0], [self.x1, self.y1], [self.x0, self.y1]
        ])

    def edge_midpoints(self) -> np.ndarray:
        c = self.corners()
        return 0.5 * (c + np.roll(c, -1, axis=0))

    def contains(self, points: np.ndarray, tol: float = EDGE_TOL) -> np.ndarray:
        """Closed containment test for an (n, 2) array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (
            (pts[:, 0] >= self.x0 - tol) & (pts[:, 0] <= self.x1 + tol)
            & (pts[:, 1] >= self.y0 - tol) & (pts[:, 1] <= self.y1 + tol)
        )

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform random points in the rectangle."""
        u = rng.random((n, 2))
        return np.column_stack([
            self.x0 + u[:, 0] * self.width, self.y0 + u[:, 1] * self.height
        ])

    def to_polygon(self) -> "Polygon":
        return Polygon(self.corners())

    def to_list(self) -> List[float]:
        return [self.x0, self.x1, self.y0, self.y1]


def polygon_area(vertices: np.ndarray) -> float:
    """Signed shoelace area (positive for counter-clockwise order)."""
    v = np.asarray(vertices, dtype=float)
    w = np.roll(v, -1, axis=0)
    return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))


def _orient(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Twice the signed area of (a, b, c); broadcasts over leading axes."""
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def _on_segment(p: np.ndarray, q: np.ndarray, r: np.ndarray, tol: float) -> bool:
    """Whether r (known to be collinear with p, q) lies within the segment's box."""
    return (
        min(p[0], q[0]) - tol <= r[0] <= max(p[0], q[0]) + tol
        and min(p[1], q[1]) - tol <= r[1] <= max(p[1], q[1]) + tol
    )


def _segments_intersect(p, q, r, s, tol: float) -> bool:
    o1, o2 = _orient(p, q, r), _orient(p, q, s)
    o3, o4 = _orient(r, s, p), _orient(r, s, q)
    if o1 * o2 < -tol and o3 * o4 < -tol:
        return True
    area_tol = tol * max(np.linalg.norm(q - p), np.linalg.norm(s - r), 1.0)
    if abs(o1) <= area_tol and _on_segment(p, q, r, tol):
        return True
    if abs(o2) <= area_tol and _on_segment(p, q, s, tol):
        return True
    if abs(o3) <= area_tol and _on_segment(r, s, p, tol):
        return True
    if abs(o4) <= area_tol and _on_segment(r, s, q, tol):
        return True
    return False


def _check_simple(vertices: np.ndarray) -> None:
    n = len(vertices)
    scale = max(float(np.ptp(vertices, axis=0).max()), 1.0)
    tol = EDGE_TOL * scale
    nxt = np.roll(vertices, -1, axis=0)
    lengths = np.linalg.norm(nxt - vertices, axis=1)
    if np.any(lengths <= tol):
        i = int(np.argmin(lengths))
        raise InvalidGeometryError(f"Degenerate polygon: repeated consecutive vertices at index {i}")
    # adjacent edges must not fold back onto each other
    prv = np.roll(vertices, 1, axis=0)
    cross = _orient(prv, vertices, nxt)
    dot = np.sum((vertices - prv) * (nxt - vertices), axis=1)
    folded = (np.abs(cross) <= tol * scale) & (dot < 0)
    if np.any(folded):
        raise InvalidGeometryError(f"Degenerate polygon: edge folds back at vertex {int(np.argmax(folded))}")
    for i in range(n):
        p, q = vertices[i], nxt[i]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_intersect(p, q, vertices[j], nxt[j], tol):
                raise InvalidGeometryError(f"Polygon is not simple: edges {i} and {j} intersect")


def _as_vertex_array(raw: Any) -> np.ndarray:
    pts = np.array(raw, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidGeometryError(f"Vertices must be a list of [x, y] pairs, got shape {pts.shape}")
    if len(pts) < 3:
        raise InvalidGeometryError(f"Polygon needs at least 3 vertices, got {len(pts)}")
    if not np.all(np.isfinite(pts)):
        raise InvalidGeometryError("Polygon vertices must be finite")
    return pts


@dataclass(frozen=True, eq=False)
class Polygon:
    """
    Simple polygon with optional named subregions partitioning it.

    Vertices are stored counter-clockwise; clockwise input is reversed.
    Each subregion name maps to one or more simple polygons (the saw teeth,
    for instance, are several disjoint triangles sharing a name).
    """

    vertices: np.ndarray
    subregions: Dict[str, Tuple["Polygon", ...]] = field(default_factory=dict)

    def __post_init__(self):
        pts = _as_vertex_array(self.vertices)
        if polygon_area(pts) < 0:
            pts = pts[::-1].copy()
        _check_simple(pts)
        if polygon_area(pts) <= EDGE_TOL:
            raise InvalidGeometryError("Polygon has zero area")
        pts.setflags(write=False)
        object.__setattr__(self, "vertices", pts)

        normalized: Dict[str, Tuple[Polygon, ...]] = {}
        for name, pieces in dict(self.subregions).items():
            if isinstance(pieces, Polygon):
                pieces = (pieces,)
            elif isinstance(pieces, np.ndarray) or (
                len(pieces) > 0 and np.ndim(pieces[0]) == 1
            ):
                pieces = (Polygon(pieces),)
            else:
                pieces = tuple(p if isinstance(p, Polygon) else Polygon(p) for p in pieces)
            if not pieces:
                raise InvalidGeometryError(f"Subregion {name!r} is empty")
            normalized[str(name)] = pieces
        object.__setattr__(self, "subregions", normalized)
        if normalized:
            self._check_partition()

    def _check_partition(self) -> None:
        total = 0.0
        for name, pieces in self.subregions.items():
            for piece in pieces:
                if piece.subregions:
                    raise InvalidGeometryError(f"Subregion {name!r} must not have subregions itself")
                if not np.all(points_in_polygon(self, piece.vertices)):
                    raise InvalidGeometryError(f"Subregion {name!r} is not contained in the polygon")
                total += piece.area
        if abs(total - self.area) > AREA_RTOL * self.area:
            raise InvalidGeometryError(
                f"Subregions do not partition the polygon: areas {total:.12g} vs {self.area:.12g}"
            )

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    @property
    def edges(self) -> Tuple[np.ndarray, np.ndarray]:
        """Edge start and end points, each (n, 2)."""
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    @property
    def region_names(self) -> Tuple[str, ...]:
        return tuple(self.subregions) if self.subregions else (DEFAULT_REGION,)

    def bounding_rect(self) -> Rect:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return Rect(lo[0], hi[0], lo[1], hi[1])

    def pieces(self) -> List[Tuple[str, "Polygon"]]:
        """(tag, polygon) pairs to triangulate; the polygon itself if unpartitioned."""
        if not self.subregions:
            return [(DEFAULT_REGION, self)]
        return [(name, piece) for name, pcs in self.subregions.items() for piece in pcs]


def segment_distances(points: np.ndarray, starts: np.ndarray, ends: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Euclidean distance from every point to every segment.

    Args:
        points: (n, 2) query points
        starts: (E, 2) segment start points
        ends: (E, 2) segment end points

    Returns:
        Tuple of (distances (n, E), offsets (n, E, 2)) where offsets are
        point minus nearest segment point
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = ends - starts
    length2 = np.sum(d * d, axis=1)
    rel = pts[:, None, :] - starts[None, :, :]
    t = np.clip(np.sum(rel * d[None, :, :], axis=-1) / length2[None, :], 0.0, 1.0)
    offsets = rel - t[..., None] * d[None, :, :]
    return np.linalg.norm(offsets, axis=-1), offsets


def boundary_distance(poly: Polygon, points: np.ndarray) -> np.ndarray:
    """Distance of each point to the polygon boundary."""
    starts, ends = poly.edges
    dist, _ = segment_distances(points, starts, ends)
    return dist.min(axis=1)


def points_in_polygon(poly: Polygon, points: np.ndarray) -> np.ndarray:
    """
    Vectorized even-odd test; points within EDGE_TOL of an edge are inside.

    Args:
        poly: Simple polygon
        points: (n, 2) query points

    Returns:
        Boolean array of length n
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    v, w = poly.edges
    x, y = pts[:, 0:1], pts[:, 1:2]
    xi, yi = v[None, :, 0], v[None, :, 1]
    xj, yj = w[None, :, 0], w[None, :, 1]
    crosses = (yi > y) != (yj > y)
    dy = np.where(crosses, yj - yi, 1.0)
    x_cross = xi + (y - yi) * (xj - xi) / dy
    inside = (np.count_nonzero(crosses & (x < x_cross), axis=1) % 2) == 1
    return inside | (boundary_distance(poly, pts) <= EDGE_TOL)


def point_in_polygon(poly: Polygon, p: PointLike) -> bool:
    """
    Whether p lies in the polygon.

    Strict interior points and points within 1e-12 of an edge (tie rule)
    return True.
    """
    return bool(points_in_polygon(poly, np.asarray(p, dtype=float).reshape(1, 2))[0])


def locate_subregion(poly: Polygon, points: np.ndarray) -> np.ndarray:
    """
    Subregion tag of each point; the first matching piece wins on interfaces.

    Points outside every piece get an empty tag.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tags = np.full(len(pts), "", dtype=object)
    if not poly.subregions:
        tags[points_in_polygon(poly, pts)] = DEFAULT_REGION
        return tags
    for name, piece in poly.pieces():
        free = tags == ""
        if not np.any(free):
            break
        hit = np.zeros(len(pts), dtype=bool)
        hit[free] = points_in_polygon(piece, pts[free])
        tags[hit] = name
    return tags


@dataclass(frozen=True, eq=False)
class Triangle:
    """A single triangle with the tag of the subregion it belongs to."""

    vertices: np.ndarray
    tag: str = DEFAULT_REGION

    def __post_init__(self):
        pts = np.array(self.vertices, dtype=float).reshape(3, 2)
        object.__setattr__(self, "vertices", pts)

    @property
    def signed_area(self) -> float:
        a, b, c = self.vertices
        return 0.5 * float(_orient(a, b, c))

    @property
    def area(self) -> float:
        return abs(self.signed_area)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Triangles stored as an (m, 3, 2) corner array with per-triangle tags."""

    corners: np.ndarray
    tags: Tuple[str, ...]

    def __post_init__(self):
        corners = np.asarray(self.corners, dtype=float).reshape(-1, 3, 2)
        if len(self.tags) != len(corners):
            raise InvalidGeometryError("Triangulation needs one tag per triangle")
        object.__setattr__(self, "corners", corners)
        object.__setattr__(self, "tags", tuple(self.tags))

    def __len__(self) -> int:
        return len(self.corners)

    def __iter__(self) -> Iterator[Triangle]:
        for corners, tag in zip(self.corners, self.tags):
            yield Triangle(corners, tag)

    @property
    def signed_areas(self) -> np.ndarray:
        c = self.corners
        return 0.5 * _orient(c[:, 0], c[:, 1], c[:, 2])

    @property
    def area(self) -> float:
        return float(np.sum(np.abs(self.signed_areas)))


def _point_in_triangle(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray, tol: float) -> np.ndarray:
    """Closed containment of points p (k, 2) in the CCW triangle (a, b, c)."""
    return (_orient(a, b, p) >= -tol) & (_orient(b, c, p) >= -tol) & (_orient(c, a, p) >= -tol)


def _ear_clip(vertices: np.ndarray) -> List[Tuple[int, int, int]]:
    """
    Ear clipping of a simple counter-clockwise polygon.

    Collinear vertices are kept (they are never clipped as ears), so edges
    shared with neighbouring subregions keep their vertices.
    """
    scale = max(float(np.ptp(vertices, axis=0).max()), 1.0)
    tol = EDGE_TOL * scale * scale
    idx = list(range(len(vertices)))
    triangles: List[Tuple[int, int, int]] = []
    while len(idx) > 3:
        n = len(idx)
        for k in range(n):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % n]
            a, b, c = vertices[i0], vertices[i1], vertices[i2]
            if _orient(a, b, c) <= tol:
                continue
            others = [j for j in idx if j not in (i0, i1, i2)]
            if others and np.any(_point_in_triangle(vertices[others], a, b, c, tol)):
                continue
            triangles.append((i0, i1, i2))
            idx.pop(k)
            break
        else:
            raise InvalidGeometryError("Ear clipping found no ear; polygon is not simple")
    a, b, c = (vertices[i] for i in idx)
    if _orient(a, b, c) <= tol:
        raise InvalidGeometryError("Ear clipping left a degenerate triangle")
    triangles.append((idx[0], idx[1], idx[2]))
    return triangles


def triangulate(poly: Polygon) -> Triangulation:
    """
    Triangulate a polygon by ear clipping, each subregion on its own.

    Args:
        poly: Simple polygon, optionally partitioned into subregions

    Returns:
        Triangulation whose triangles carry their subregion tag
    """
    corners = []
    tags = []
    for tag, piece in poly.pieces():
        verts = piece.vertices
        for i0, i1, i2 in _ear_clip(verts):
            corners.append(verts[[i0, i1, i2]])
            tags.append(tag)
    tris = Triangulation(np.array(corners), tuple(tags))
    if abs(tris.area - poly.area) > AREA_RTOL * poly.area:
        raise InvalidGeometryError(
            f"Triangulation area {tris.area:.15g} does not match polygon area {poly.area:.15g}"
        )
    logger.debug(f"Triangulated polygon with {len(poly.vertices)} vertices into {len(tris)} triangles")
    return tris


def refine(tris: Triangulation, levels: int) -> Triangulation:
    """
    Uniform midpoint subdivision: every level splits each triangle into 4.

    Args:
        tris: Triangulation to refine
        levels: Number of subdivision levels (>= 0)

    Returns:
        Refined triangulation; children of a triangle are contiguous
    """
    if levels < 0:
        raise ParameterDomainError(f"refine levels must be >= 0, got {levels}")
    c = tris.corners
    for _ in range(levels):
        a, b, d = c[:, 0], c[:, 1], c[:, 2]
        ab, bd, da = 0.5 * (a + b), 0.5 * (b + d), 0.5 * (d + a)
        c = np.stack([
            np.stack([a, ab, da], axis=1),
            np.stack([ab, b, bd], axis=1),
            np.stack([da, bd, d], axis=1),
            np.stack([ab, bd, da], axis=1),
        ], axis=1).reshape(-1, 3, 2)
    factor = 4 ** levels
    tags = tuple(tag for tag in tris.tags for _ in range(factor))
    return Triangulation(c, tags)


def sample_polygon(poly: Polygon, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random points in the polygon (area-weighted over its triangles)."""
    tris = triangulate(poly)
    areas = np.abs(tris.signed_areas)
    which = rng.choice(len(tris), size=n, p=areas / areas.sum())
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    c = tris.corners[which]
    return (
        (1.0 - r1)[:, None] * c[:, 0]
        + (r1 * (1.0 - r2))[:, None] * c[:, 1]
        + (r1 * r2)[:, None] * c[:, 2]
    )


def _dedupe(points: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
    out: List[Tuple[float, float]] = []
    for p in points:
        if out and math.hypot(p[0] - out[-1][0], p[1] - out[-1][1]) <= EDGE_TOL:
            continue
        out.append(p)
    while len(out) > 1 and math.hypot(out[0][0] - out[-1][0], out[0][1] - out[-1][1]) <= EDGE_TOL:
        out.pop()
    return out


def sawblade_domain(
    n_teeth: int = 8,
    blade_height: float = 0.5,
    tooth_height: float = 0.5,
    length: float = 4.0,
    tooth_base: Optional[float] = None,
) -> Polygon:
    """
    Saw-blade domain: a rectangular blade with triangular teeth on top.

    The blade (0, length) x (0, blade_height) is subregion "blade"; the teeth
    are subregion "teeth". Each tooth is an isosceles triangle centred in its
    slot of width length / n_teeth; by default the teeth tile the top edge.

    Args:
        n_teeth: Number of teeth (>= 1)
        blade_height: Height of the blade rectangle
        tooth_height: Height of every tooth
        length: Blade length
        tooth_base: Base width of a tooth (defaults to the slot width)

    Returns:
        Polygon partitioned into "teeth" and "blade"
    """
    if n_teeth < 1:
        raise ParameterDomainError(f"n_teeth must be >= 1, got {n_teeth}")
    if blade_height <= 0 or tooth_height <= 0 or length <= 0:
        raise ParameterDomainError("blade_height, tooth_height and length must be positive")
    slot = length / n_teeth
    base = slot if tooth_base is None else float(tooth_base)
    if base <= 0:
        raise ParameterDomainError(f"tooth_base must be positive, got {base}")
    if n_teeth * base > length * (1.0 + 1e-12):
        raise InvalidGeometryError(
            f"{n_teeth} teeth of base {base} overlap on a blade of length {length}"
        )
    h, t = float(blade_height), float(tooth_height)

    teeth = []
    for k in range(n_teeth):
        centre = (k + 0.5) * slot
        left, right = centre - 0.5 * base, centre + 0.5 * base
        if k == 0 and abs(left) <= EDGE_TOL:
            left = 0.0
        if teeth and abs(left - teeth[-1][2]) <= EDGE_TOL:
            left = teeth[-1][2]
        if k == n_teeth - 1 and abs(right - length) <= EDGE_TOL:
            right = float(length)
        teeth.append((left, centre, right))

    top = [(float(length), h)]
    for left, centre, right in reversed(teeth):
        top += [(right, h), (centre, h + t), (left, h)]
    top.append((0.0, h))

    outer = _dedupe([(0.0, 0.0), (float(length), 0.0)] + top)
    blade = _dedupe([(0.0, 0.0), (float(length), 0.0)] + [p for p in top if p[1] == h])
    tooth_polys = tuple(
        Polygon([(left, h), (right, h), (centre, h + t)]) for left, centre, right in teeth
    )
    return Polygon(outer, {"teeth": tooth_polys, "blade": (Polygon(blade),)})


def notched_square(mu: float, depth: float = 0.25) -> Polygon:
    """
    Unit square with a wedge-shaped recess cut into its bottom edge.

    The wedge apex sits at (0.5, depth) and the opening angle at the apex is
    mu, symmetric about x = 0.5. mu = 0 gives the full square. The default
    depth keeps (0, 1) x (0.25, 1) inside the domain for every mu.

    Args:
        mu: Opening angle in [0, pi/2]
        depth: Height of the apex above the bottom edge

    Returns:
        Polygon of the notched square
    """
    if not (-1e-14 <= mu <= 0.5 * math.pi + 1e-14):
        raise ParameterDomainError(f"Recess angle must lie in [0, pi/2], got {mu}")
    if not (0.0 < depth < 1.0):
        raise ParameterDomainError(f"Recess depth must lie in (0, 1), got {depth}")
    half = depth * math.tan(0.5 * min(max(mu, 0.0), 0.5 * math.pi))
    if half <= EDGE_TOL:
        return Polygon([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    if half >= 0.5:
        raise InvalidGeometryError(f"Recess of half-width {half} does not fit the unit square")
    verts = _dedupe([
        (0.0, 0.0), (0.5 - half, 0.0), (0.5, depth), (0.5 + half, 0.0),
        (1.0, 0.0), (1.0, 1.0), (0.0, 1.0),
    ])
    return Polygon(verts)


def l_shaped_domain(width: float = 1.2, height: float = 1.0, arm: float = 0.5) -> Polygon:
    """L-shaped hexagon: the rectangle (0, width) x (0, height) minus its upper-right block."""
    x_arm = width * arm
    y_arm = height * arm
    return Polygon([
        (0.0, 0.0), (width, 0.0), (width, y_arm), (x_arm, y_arm), (x_arm, height), (0.0, height)
    ])


def poincare_bound(outer: Rect) -> float:
    """
    Poincare constant of the rectangle, 1 / sqrt(pi^2 (1/a^2 + 1/b^2)).

    Zero extension makes it an upper bound for any domain inside the rectangle.
    """
    a, b = outer.width, outer.height
    return 1.0 / math.sqrt(math.pi ** 2 * (1.0 / a ** 2 + 1.0 / b ** 2))


@dataclass(frozen=True, eq=False)
class Embedding:
    """The triple inner rectangle in domain in outer rectangle."""

    inner: Rect
    domain: Polygon
    outer: Rect

    def __post_init__(self):
        checkpoints = np.vstack([self.inner.corners(), self.inner.edge_midpoints(), self.inner.center[None, :]])
        if not np.all(points_in_polygon(self.domain, checkpoints)):
            raise InvalidGeometryError(f"Inner rectangle {self.inner.to_list()} is not inside the domain")
        if not np.all(self.outer.contains(self.domain.vertices)):
            raise InvalidGeometryError(f"Domain is not inside the outer rectangle {self.outer.to_list()}")


def verify_embedding(embedding: Embedding, n_samples: int = 1000, seed: int = 0) -> None:
    """
    Sampling check of the embedding triple.

    Raises:
        InvalidGeometryError: if a sampled inner point leaves the domain or a
            sampled domain point leaves the outer rectangle
    """
    rng = np.random.default_rng(seed)
    inner_pts = embedding.inner.sample(n_samples, rng)
    outside = np.count_nonzero(~points_in_polygon(embedding.domain, inner_pts))
    if outside:
        raise InvalidGeometryError(f"{outside} of {n_samples} inner samples lie outside the domain")
    domain_pts = sample_polygon(embedding.domain, n_samples, rng)
    outside = np.count_nonzero(~embedding.outer.contains(domain_pts))
    if outside:
        raise InvalidGeometryError(f"{outside} of {n_samples} domain samples lie outside the outer rectangle")


def polygon_from_dict(data: Dict[str, Any]) -> Polygon:
    """Build a polygon from {"vertices": [[x, y], ...], "subregions": {...}}."""
    if "vertices" not in data:
        raise InvalidGeometryError("Polygon data needs a 'vertices' entry")
    subregions = {}
    for name, raw in (data.get("subregions") or {}).items():
        if np.ndim(raw) == 2:
            subregions[name] = (Polygon(raw),)
        else:
            subregions[name] = tuple(Polygon(piece) for piece in raw)
    return Polygon(data["vertices"], subregions)


def polygon_to_dict(poly: Polygon) -> Dict[str, Any]:
    data: Dict[str, Any] = {"vertices": poly.vertices.tolist()}
    if poly.subregions:
        data["subregions"] = {
            name: [p.vertices.tolist() for p in pieces] if len(pieces) > 1 else pieces[0].vertices.tolist()
            for name, pieces in poly.subregions.items()
        }
    return data


def load_polygon(path: Union[str, Path]) -> Polygon:
    """
    Load a polygon from a JSON file.

    Args:
        path: File with {"vertices": [[x, y], ...], "subregions": {"name": [[x, y], ...]}}

    Returns:
        Validated polygon
    """
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidGeometryError(f"Cannot read polygon file {path}: {e}")
    return polygon_from_dict(data)
