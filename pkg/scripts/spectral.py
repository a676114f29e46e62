"""
Tensor-product Dirichlet spectral spaces on rectangles and discrete Riesz solves.

Each direction uses the modal basis psi_k = L_{k+1} - L_{k-1} (k = 1..n) of
Legendre polynomials, which vanishes at both interval ends and has a
diagonal reference stiffness matrix. The 2D mode (i, j) has flat index
i * n_y + j.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import legvander
from scipy.linalg import LinAlgError, cho_factor, cho_solve, ldl

from errors import ConditioningError, NumericalError, ParameterDomainError
from geometry import Rect
from logger import logger
from quadrature import gauss_legendre, map_interval

BOUNDARY_TOL = 1e-12
GRAM_CHECK_TOL = 1e-10


def reference_stiffness(n: int) -> np.ndarray:
    """(psi_j', psi_k') on (-1, 1); diagonal with entries 2 (2k + 1)."""
    k = np.arange(1, n + 1)
    return np.diag(2.0 * (2 * k + 1))


def reference_mass(n: int) -> np.ndarray:
    """(psi_j, psi_k) on (-1, 1); pentadiagonal with zero odd off-diagonals."""
    k = np.arange(1, n + 1, dtype=float)
    M = np.diag(2.0 / (2 * k + 3) + 2.0 / (2 * k - 1))
    if n > 2:
        off = -2.0 / (2 * k[:-2] + 3)
        M += np.diag(off, 2) + np.diag(off, -2)
    return M


def basis_1d(n: int, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reference modes and their derivatives at points of [-1, 1].

    Args:
        n: Number of modes
        xi: Reference coordinates, shape (m,)

    Returns:
        Tuple of (values (n, m), derivatives (n, m))
    """
    V = legvander(np.asarray(xi, dtype=float), n + 1)
    k = np.arange(1, n + 1)
    values = (V[:, k + 1] - V[:, k - 1]).T
    derivs = ((2 * k + 1)[:, None] * V[:, k].T)
    return values, derivs


def mapped_basis_1d(n: int, a: float, b: float, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Modes affinely mapped to (a, b), zero-extended outside the interval."""
    x = np.asarray(x, dtype=float)
    h = b - a
    xi = 2.0 * (x - a) / h - 1.0
    inside = (xi >= -1.0) & (xi <= 1.0)
    values, derivs = basis_1d(n, np.clip(xi, -1.0, 1.0))
    values = np.where(inside[None, :], values, 0.0)
    derivs = np.where(inside[None, :], derivs * (2.0 / h), 0.0)
    return values, derivs


@dataclass(frozen=True, eq=False)
class SpectralSpace:
    """Dirichlet test space of order (n_x, n_y) on a rectangle, with mapped 1D matrices."""

    rect: Rect
    order: Tuple[int, int]
    stiffness: Tuple[np.ndarray, np.ndarray] = field(repr=False)
    mass: Tuple[np.ndarray, np.ndarray] = field(repr=False)

    @property
    def dim(self) -> int:
        return self.order[0] * self.order[1]

    def axis_basis(self, axis: int, coords: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """1D modes along x (axis 0) or y (axis 1) at the given coordinates."""
        if axis == 0:
            return mapped_basis_1d(self.order[0], self.rect.x0, self.rect.x1, coords)
        return mapped_basis_1d(self.order[1], self.rect.y0, self.rect.y1, coords)


def build_space(rect: Rect, order: Union[int, Tuple[int, int]]) -> SpectralSpace:
    """
    Build the tensor space on a rectangle.

    Args:
        rect: Rectangle carrying the space
        order: n or (n_x, n_y), number of modes per direction

    Returns:
        SpectralSpace whose modes vanish on the rectangle boundary
    """
    if isinstance(order, (int, np.integer)):
        order = (int(order), int(order))
    nx, ny = (int(o) for o in order)
    if nx < 1 or ny < 1:
        raise ParameterDomainError(f"Spectral order must be >= 1 per direction, got {order}")
    hx, hy = rect.width, rect.height
    stiffness = (reference_stiffness(nx) * (2.0 / hx), reference_stiffness(ny) * (2.0 / hy))
    mass = (reference_mass(nx) * (0.5 * hx), reference_mass(ny) * (0.5 * hy))
    space = SpectralSpace(rect, (nx, ny), stiffness, mass)

    ends = np.array([-1.0, 1.0])
    for n in (nx, ny):
        values, _ = basis_1d(n, ends)
        if np.max(np.abs(values)) > BOUNDARY_TOL:
            raise NumericalError("Spectral modes do not vanish on the boundary",
                                 {"max": float(np.max(np.abs(values)))})
    return space


def eval_basis(space: SpectralSpace, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Values and gradients of every mode at every point.

    Points outside the rectangle get value and gradient 0 (zero extension).

    Args:
        space: Spectral space
        points: (m, 2) points

    Returns:
        Tuple of (values (dim, m), gradients (dim, m, 2))
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vx, dx = space.axis_basis(0, pts[:, 0])
    vy, dy = space.axis_basis(1, pts[:, 1])
    m = len(pts)
    values = np.einsum("im,jm->ijm", vx, vy).reshape(space.dim, m)
    grads = np.empty((space.dim, m, 2))
    grads[..., 0] = np.einsum("im,jm->ijm", dx, vy).reshape(space.dim, m)
    grads[..., 1] = np.einsum("im,jm->ijm", vx, dy).reshape(space.dim, m)
    return values, grads


@dataclass(frozen=True, eq=False)
class GramSystem:
    """Gradient Gram matrix K_x (x) M_y + M_x (x) K_y with its Cholesky factor."""

    space: SpectralSpace
    matrix: np.ndarray = field(repr=False)
    factor: Any = field(repr=False)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self.factor, rhs)


def _check_1d_matrices(n: int) -> None:
    """Compare closed-form 1D matrices against a (2n + 2)-point Gauss assembly."""
    rule = gauss_legendre(2 * n + 2)
    values, derivs = basis_1d(n, rule.points)
    K = (derivs * rule.weights) @ derivs.T
    M = (values * rule.weights) @ values.T
    err = max(
        np.max(np.abs(K - reference_stiffness(n))),
        np.max(np.abs(M - reference_mass(n))),
    )
    if err > GRAM_CHECK_TOL * max(1.0, 2.0 * (2 * n + 1)):
        raise NumericalError("Kronecker factors disagree with quadrature assembly", {"n": n, "err": err})


def assemble_gram(space: SpectralSpace) -> GramSystem:
    """
    Assemble and factorize the H1_0 Gram matrix of a space.

    Raises:
        ConditioningError: if the Cholesky factorization fails, with the
            smallest pivot of a symmetric indefinite factorization
    """
    Kx, Ky = space.stiffness
    Mx, My = space.mass
    for n in space.order:
        _check_1d_matrices(n)
    G = np.kron(Kx, My) + np.kron(Mx, Ky)
    if not np.all(np.isfinite(G)):
        raise NumericalError("Gram matrix has non-finite entries", {"order": space.order})
    try:
        factor = cho_factor(G, lower=True)
    except LinAlgError:
        _, D, _ = ldl(G)
        pivot = float(np.min(np.diag(D)))
        raise ConditioningError(f"Gram matrix of order {space.order} is not positive definite", pivot)
    diag = np.abs(np.diag(factor[0]))
    logger.debug(
        f"Gram system order {space.order} on {space.rect.to_list()}: dim {space.dim}, "
        f"pivot range [{diag.min() ** 2:.3e}, {diag.max() ** 2:.3e}]"
    )
    return GramSystem(space, G, factor)


def quadrature_gram(space: SpectralSpace, n_points: int) -> np.ndarray:
    """Brute-force (grad phi_i, grad phi_j) by an n_points x n_points Gauss rule."""
    rule = gauss_legendre(n_points)
    fx = map_interval(rule, space.rect.x0, space.rect.x1)
    fy = map_interval(rule, space.rect.y0, space.rect.y1)
    X, Y = np.meshgrid(fx.points, fy.points, indexing="ij")
    w = np.outer(fx.weights, fy.weights).ravel()
    _, grads = eval_basis(space, np.column_stack([X.ravel(), Y.ravel()]))
    return np.einsum("imd,m,jmd->ij", grads, w, grads)


@lru_cache(maxsize=32)
def gram_system(rect: Rect, order: Tuple[int, int]) -> GramSystem:
    """Cached space + Gram system, shared across sweep rows."""
    return assemble_gram(build_space(rect, order))


def dual_norm(system: Union[GramSystem, SpectralSpace], F: Any) -> Tuple[float, np.ndarray]:
    """
    Discrete dual norm of a functional given by its values on the modes.

    Args:
        system: Gram system (or a space, whose cached system is used)
        F: Functional values F_i = r(phi_i), array or FunctionalVector

    Returns:
        Tuple of (sqrt(F . g), Riesz coefficients g with G g = F)
    """
    if isinstance(system, SpectralSpace):
        system = gram_system(system.rect, system.order)
    values = np.asarray(getattr(F, "values", F), dtype=float)
    if values.shape != (system.space.dim,):
        raise ParameterDomainError(
            f"Functional has shape {values.shape}, space dimension is {system.space.dim}"
        )
    if not np.all(np.isfinite(values)):
        raise NumericalError("Functional has non-finite entries",
                             {"nonfinite": int(np.count_nonzero(~np.isfinite(values)))})
    g = system.solve(values)
    energy = float(values @ g)
    if energy < -1e-12 * max(1.0, float(values @ values)):
        raise NumericalError("Negative Riesz energy", {"energy": energy})
    return float(np.sqrt(max(energy, 0.0))), g
