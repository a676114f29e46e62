"""
Independent P1 finite elements on a triangulation of the domain.

Used for reference solutions (the estimated true error), reference Riesz
dual norms on the domain itself, and cross-checks of the spectral solver.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve
from scipy.spatial import cKDTree

from approximant import Field, FieldSample
from errors import ConditioningError, NumericalError, ParameterDomainError
from geometry import Polygon, boundary_distance, refine, triangulate
from logger import get_phase_logger
from quadrature import QuadRule, reference_triangle_rule
from residual import EllipticProblem

MERGE_TOL = 1e-12
BOUNDARY_TOL = 1e-10
ASSEMBLY_ORDER = 4
ERROR_ORDER = 6
REFERENCE_SLACK_FACTOR = 3.0


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangle mesh with boundary-vertex flags and per-triangle subregion tags."""

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    tags: Tuple[str, ...]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @cached_property
    def corners(self) -> np.ndarray:
        return self.vertices[self.triangles]

    @cached_property
    def dets(self) -> np.ndarray:
        """Twice the signed triangle areas."""
        c = self.corners
        e1, e2 = c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]
        return e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]

    @cached_property
    def hat_gradients(self) -> np.ndarray:
        """Constant gradients of the three barycentric functions per triangle, (M, 3, 2)."""
        c = self.corners
        x, y = c[..., 0], c[..., 1]
        g = np.empty((len(c), 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            g[:, i, 0] = y[:, j] - y[:, k]
            g[:, i, 1] = x[:, k] - x[:, j]
        return g / self.dets[:, None, None]

    @cached_property
    def laplace_stiffness(self) -> sparse.csr_matrix:
        """(grad lambda_i, grad lambda_j) over the whole mesh."""
        area = 0.5 * np.abs(self.dets)
        g = self.hat_gradients
        local = area[:, None, None] * np.einsum("mid,mjd->mij", g, g)
        return self._scatter(local)

    def _scatter(self, local: np.ndarray) -> sparse.csr_matrix:
        rows = np.broadcast_to(self.triangles[:, :, None], local.shape).ravel()
        cols = np.broadcast_to(self.triangles[:, None, :], local.shape).ravel()
        n = self.n_vertices
        return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    def quadrature(self, order: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Points (M, Q, 2), weights (M, Q) and barycentric values (Q, 3) of a per-triangle rule."""
        ref = reference_triangle_rule(order)
        c = self.corners
        e1, e2 = c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]
        pts = (c[:, None, 0] + ref.points[None, :, 0:1] * e1[:, None, :]
               + ref.points[None, :, 1:2] * e2[:, None, :])
        weights = np.abs(self.dets)[:, None] * ref.weights[None, :]
        lam = np.column_stack([1.0 - ref.points[:, 0] - ref.points[:, 1], ref.points[:, 0], ref.points[:, 1]])
        return pts, weights, lam


def merge_vertices(points: np.ndarray, tol: float = MERGE_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """Merge points closer than tol (transitively); returns the kept points and the index map into them."""
    pairs = cKDTree(points).query_pairs(tol, output_type="ndarray")
    n = len(points)
    links = sparse.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(links, directed=False)
    _, first = np.unique(labels, return_index=True)
    return points[first], labels


def mesh_polygon(poly: Polygon, refine_levels: int) -> Mesh:
    """
    Ear-clip triangulation, uniformly refined, with vertices merged within 1e-12.

    Args:
        poly: Domain polygon
        refine_levels: Midpoint refinement levels

    Returns:
        Conforming mesh
    """
    tris = refine(triangulate(poly), refine_levels)
    vertices, inverse = merge_vertices(tris.corners.reshape(-1, 2))
    triangles = inverse.reshape(-1, 3)
    boundary = boundary_distance(poly, vertices) <= BOUNDARY_TOL
    mesh = Mesh(vertices, triangles, boundary, tris.tags)
    if np.any(np.abs(mesh.dets) <= 0.0):
        raise NumericalError("Mesh has a zero-area triangle", {"levels": refine_levels})
    get_phase_logger("oracle").debug(
        f"Mesh: {len(triangles)} triangles, {len(vertices)} vertices, {int(boundary.sum())} on the boundary"
    )
    return mesh


@lru_cache(maxsize=16)
def cached_mesh(poly: Polygon, refine_levels: int) -> Mesh:
    return mesh_polygon(poly, refine_levels)


def _coefficients_at(problem: EllipticProblem, mesh: Mesh, mu: np.ndarray, pts: np.ndarray):
    M, Q = pts.shape[:2]
    flat = pts.reshape(-1, 2)
    tags = np.repeat(np.array(mesh.tags, dtype=object), Q)
    A, b, c = problem.coefficients(flat, mu, tags)
    f = np.broadcast_to(problem.source(flat[:, 0], flat[:, 1], mu, None), (len(flat),))
    return A.reshape(M, Q, 2, 2), b.reshape(M, Q, 2), c.reshape(M, Q), f.reshape(M, Q)


def assemble_p1(problem: EllipticProblem, mu: Sequence[float], mesh: Mesh) -> Tuple[sparse.csr_matrix, np.ndarray]:
    """Stiffness matrix and load vector of the full bilinear form over all vertices."""
    mu = problem.parameters.check(mu)
    pts, w, lam = mesh.quadrature(ASSEMBLY_ORDER)
    A, b, c, f = _coefficients_at(problem, mesh, mu, pts)
    g = mesh.hat_gradients
    local = np.einsum("mq,mqab,mjb,mia->mij", w, A, g, g)
    local += np.einsum("mq,mqb,mjb,qi->mij", w, b, g, lam)
    local += np.einsum("mq,mq,qj,qi->mij", w, c, lam, lam)
    K = mesh._scatter(local)
    load_local = np.einsum("mq,mq,qi->mi", w, f, lam)
    F = np.bincount(mesh.triangles.ravel(), weights=load_local.ravel(), minlength=mesh.n_vertices)
    return K, F


def _solve_interior(K: sparse.csr_matrix, F: np.ndarray, interior: np.ndarray) -> np.ndarray:
    if len(interior) == 0:
        return np.zeros(0)
    K_ii = K[interior][:, interior].tocsc()
    x = np.atleast_1d(spsolve(K_ii, F[interior]))
    if not np.all(np.isfinite(x)):
        diag = K_ii.diagonal()
        raise ConditioningError("P1 system is singular", float(np.min(np.abs(diag))))
    return x


def p1_solve(problem: EllipticProblem, mu: Sequence[float], mesh: Mesh) -> np.ndarray:
    """
    Galerkin P1 solution with homogeneous Dirichlet values.

    Returns:
        Nodal values on all vertices (zero on boundary vertices)
    """
    K, F = assemble_p1(problem, mu, mesh)
    u = np.zeros(mesh.n_vertices)
    u[mesh.interior] = _solve_interior(K, F, mesh.interior)
    get_phase_logger("oracle").debug(
        f"{problem.name}: P1 solve with {len(mesh.interior)} unknowns, max |u| {np.max(np.abs(u)):.4e}"
    )
    return u


def p1_dual_norm(mesh: Mesh, F: np.ndarray) -> float:
    """
    Dual norm of a functional given on the hat functions, in the gradient norm.

    F may hold values for all vertices (boundary entries are ignored) or for
    the interior vertices only.
    """
    F = np.asarray(F, dtype=float)
    interior = mesh.interior
    if len(F) == mesh.n_vertices:
        F = F[interior]
    elif len(F) != len(interior):
        raise ParameterDomainError(
            f"Functional has {len(F)} entries; mesh has {mesh.n_vertices} vertices, {len(interior)} interior"
        )
    if not len(F) or not np.any(F):
        return 0.0
    g = _solve_interior(mesh.laplace_stiffness, _embed(F, interior, mesh.n_vertices), interior)
    return float(np.sqrt(max(F @ g, 0.0)))


def _embed(values: np.ndarray, index: np.ndarray, n: int) -> np.ndarray:
    full = np.zeros(n)
    full[index] = values
    return full


def p1_residual(problem: EllipticProblem, field: Field, mu: Sequence[float], mesh: Mesh,
                order: int = ERROR_ORDER) -> np.ndarray:
    """Residual of a field tested against every hat function."""
    mu = problem.parameters.check(mu)
    pts, w, lam = mesh.quadrature(order)
    M, Q = w.shape
    A, b, c, f = _coefficients_at(problem, mesh, mu, pts)
    s = field.evaluate(pts.reshape(-1, 2), mu, None)
    u = s.value.reshape(M, Q)
    du = s.grad.reshape(M, Q, 2)
    zeroth = w * (f - np.einsum("mqd,mqd->mq", b, du) - c * u)
    flux = w[..., None] * np.einsum("mqab,mqb->mqa", A, du)
    local = np.einsum("mq,qi->mi", zeroth, lam) - np.einsum("mqa,mia->mi", flux, mesh.hat_gradients)
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)


def domain_dual_norm(problem: EllipticProblem, field: Field, mu: Sequence[float], mesh: Mesh) -> float:
    """Reference dual norm of the residual on the domain itself."""
    return p1_dual_norm(mesh, p1_residual(problem, field, mu, mesh))


class P1Field(Field):
    """Piecewise-linear field from nodal values; zero outside the mesh."""

    def __init__(self, mesh: Mesh, values: np.ndarray, name: str = "p1"):
        self.mesh = mesh
        self.values = np.asarray(values, dtype=float)
        if len(self.values) != mesh.n_vertices:
            raise ParameterDomainError("P1Field needs one value per mesh vertex")
        self.name = name
        self._tree = cKDTree(mesh.corners.mean(axis=1))
        g = mesh.hat_gradients
        self._grads = np.einsum("mi,mid->md", self.values[mesh.triangles], g)

    def _barycentric(self, pts: np.ndarray, tri: np.ndarray) -> np.ndarray:
        c = self.mesh.corners[tri]
        g = self.mesh.hat_gradients[tri]
        # lambda_i(p) = 1/3 + grad lambda_i . (p - centroid)
        return 1.0 / 3.0 + np.einsum("mid,md->mi", g, pts - c.mean(axis=1))

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Index of a triangle containing each point, -1 outside the mesh."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k = min(12, len(self.mesh.triangles))
        _, cand = self._tree.query(pts, k=k)
        cand = np.asarray(cand).reshape(len(pts), k)
        found = np.full(len(pts), -1)
        for j in range(k):
            todo = found < 0
            if not np.any(todo):
                break
            tri = cand[todo, j]
            lam = self._barycentric(pts[todo], tri)
            hit = np.all(lam >= -1e-12, axis=1)
            idx = np.flatnonzero(todo)[hit]
            found[idx] = tri[hit]
        for i in np.flatnonzero(found < 0):
            lam = self._barycentric(np.broadcast_to(pts[i], (len(self.mesh.triangles), 2)),
                                    np.arange(len(self.mesh.triangles)))
            hit = np.flatnonzero(np.all(lam >= -1e-12, axis=1))
            if len(hit):
                found[i] = hit[0]
        return found

    def evaluate(self, points, mu=None, t=None) -> FieldSample:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tri = self.locate(pts)
        inside = tri >= 0
        value = np.zeros(len(pts))
        grad = np.zeros((len(pts), 2))
        if np.any(inside):
            lam = self._barycentric(pts[inside], tri[inside])
            value[inside] = np.einsum("mi,mi->m", lam, self.values[self.mesh.triangles[tri[inside]]])
            grad[inside] = self._grads[tri[inside]]
        return FieldSample(value, grad, np.zeros(len(pts)))


def h1_error(field: Field, u_ref: np.ndarray, mesh: Mesh, mu: Sequence[float] = (),
             order: int = ERROR_ORDER) -> float:
    """|field - u_ref|_H1 over the mesh, with grad u_ref constant per triangle."""
    pts, w, _ = mesh.quadrature(order)
    M, Q = w.shape
    grad_ref = np.einsum("mi,mid->md", np.asarray(u_ref)[mesh.triangles], mesh.hat_gradients)
    du = field.gradient(pts.reshape(-1, 2), mu, None).reshape(M, Q, 2) - grad_ref[:, None, :]
    return float(np.sqrt(np.sum(w * np.sum(du * du, axis=-1))))


def exact_h1_error(field: Field, truth: Field, rule: QuadRule, mu: Sequence[float] = ()) -> float:
    """|field - truth|_H1 by a domain quadrature rule."""
    du = field.gradient(rule.points, mu, None) - truth.gradient(rule.points, mu, None)
    return float(np.sqrt(rule.integrate(np.sum(du * du, axis=1))))


def reference_error(problem: EllipticProblem, field: Field, mu: Sequence[float],
                    refine_levels: int) -> Tuple[float, float]:
    """
    Estimated true error |field - u|_H1 from P1 reference solutions.

    Returns:
        Tuple of (error at refine_levels, slack = 3 x change from the previous level)
    """
    log = get_phase_logger("oracle")
    fine = cached_mesh(problem.domain, refine_levels)
    err_fine = h1_error(field, p1_solve(problem, mu, fine), fine, mu)
    if refine_levels == 0:
        return err_fine, err_fine
    coarse = cached_mesh(problem.domain, refine_levels - 1)
    err_coarse = h1_error(field, p1_solve(problem, mu, coarse), coarse, mu)
    slack = REFERENCE_SLACK_FACTOR * abs(err_fine - err_coarse)
    log.debug(f"{problem.name}: reference error {err_fine:.6e} (coarse {err_coarse:.6e}, slack {slack:.2e})")
    return err_fine, slack


def reference_solution(problem: EllipticProblem, mu: Sequence[float], refine_levels: int) -> P1Field:
    """P1 reference solution wrapped as a field (stand-in for an unknown truth)."""
    mesh = cached_mesh(problem.domain, refine_levels)
    return P1Field(mesh, p1_solve(problem, mu, mesh), name="p1-reference")
