"""
Black-box fields under certification.

A field is anything that can return its value, spatial gradient and time
derivative at a batch of points for a parameter vector mu. MLP fields take
mu as trailing network inputs (and t as the leading input for space-time
networks). Fields are immutable and safe to evaluate from several workers.
"""

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ParameterDomainError, WeightsLoadError
from geometry import Polygon, Rect, segment_distances
from logger import logger
from quadrature import gauss_legendre, map_interval


class FieldSample(NamedTuple):
    """Field values (m,), spatial gradients (m, 2) and time derivatives (m,)."""

    value: np.ndarray
    grad: np.ndarray
    dt: np.ndarray


def _as_points(points: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(points, dtype=float))


def _as_mu(mu: Optional[Sequence[float]]) -> np.ndarray:
    return np.atleast_1d(np.asarray(() if mu is None else mu, dtype=float))


class Field(ABC):
    """Base class for approximants u(t, x; mu)."""

    time_dependent: bool = False
    name: str = "field"

    @abstractmethod
    def evaluate(self, points: np.ndarray, mu: Optional[Sequence[float]] = None,
                 t: Optional[float] = None) -> FieldSample:
        """Evaluate at (m, 2) points."""

    def value(self, points, mu=None, t=None) -> np.ndarray:
        return self.evaluate(points, mu, t).value

    def gradient(self, points, mu=None, t=None) -> np.ndarray:
        return self.evaluate(points, mu, t).grad

    def time_derivative(self, points, mu=None, t=None) -> np.ndarray:
        return self.evaluate(points, mu, t).dt

    def __add__(self, other: "Field") -> "Field":
        return SumField([(1.0, self), (1.0, other)])

    def __sub__(self, other: "Field") -> "Field":
        return SumField([(1.0, self), (-1.0, other)])

    def __mul__(self, alpha: float) -> "Field":
        return SumField([(float(alpha), self)])

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return SumField([(-1.0, self)])


class ZeroField(Field):
    name = "zero"

    def evaluate(self, points, mu=None, t=None) -> FieldSample:
        m = len(_as_points(points))
        return FieldSample(np.zeros(m), np.zeros((m, 2)), np.zeros(m))


class SumField(Field):
    """Linear combination sum_k c_k u_k of fields."""

    def __init__(self, terms: List[Tuple[float, Field]]):
        flat: List[Tuple[float, Field]] = []
        for coef, f in terms:
            if isinstance(f, SumField):
                flat.extend((coef * c, g) for c, g in f.terms)
            else:
                flat.append((float(coef), f))
        self.terms = tuple(flat)
        self.time_dependent = any(f.time_dependent for _, f in self.terms)
        self.name = " + ".join(f"{c:g}*{f.name}" for c, f in self.terms)

    def evaluate(self, points, mu=None, t=None) -> FieldSample:
        pts = _as_points(points)
        value = np.zeros(len(pts))
        grad = np.zeros((len(pts), 2))
        dt = np.zeros(len(pts))
        for coef, f in self.terms:
            s = f.evaluate(pts, mu, t)
            value += coef * s.value
            grad += coef * s.grad
            dt += coef * s.dt
        return FieldSample(value, grad, dt)


# (x, y, mu, t) -> array; t may be None for steady fields
ScalarFn = Callable[[np.ndarray, np.ndarray, np.ndarray, Optional[float]], np.ndarray]
GradFn = Callable[[np.ndarray, np.ndarray, np.ndarray, Optional[float]], Tuple[np.ndarray, np.ndarray]]


class AnalyticField(Field):
    """Closed-form field given by value, gradient and optional time-derivative callables."""

    def __init__(self, value_fn: ScalarFn, grad_fn: GradFn, dt_fn: Optional[ScalarFn] = None,
                 name: str = "analytic", time_dependent: bool = False):
        self.value_fn = value_fn
        self.grad_fn = grad_fn
        self.dt_fn = dt_fn
        self.name = name
        self.time_dependent = time_dependent or dt_fn is not None

    def evaluate(self, points, mu=None, t=None) -> FieldSample:
        pts = _as_points(points)
        x, y = pts[:, 0], pts[:, 1]
        mu = _as_mu(mu)
        value = np.broadcast_to(self.value_fn(x, y, mu, t), x.shape).astype(float)
        gx, gy = self.grad_fn(x, y, mu, t)
        grad = np.column_stack([np.broadcast_to(gx, x.shape), np.broadcast_to(gy, x.shape)]).astype(float)
        if self.dt_fn is None:
            dt = np.zeros(len(pts))
        else:
            dt = np.broadcast_to(self.dt_fn(x, y, mu, t), x.shape).astype(float)
        return FieldSample(value, grad, dt)


# ============================================================================
# MLP inference
# ============================================================================

ACTIVATIONS: Dict[str, Tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]] = {
    "tanh": (np.tanh, lambda s: 1.0 - np.tanh(s) ** 2),
    "identity": (lambda s: s, np.ones_like),
}


@dataclass(frozen=True, eq=False)
class MLPWeights:
    """Feed-forward network; the activation is applied after every layer but the last."""

    input_dim: int
    activation: str
    layers: Tuple[Tuple[np.ndarray, np.ndarray], ...]


def mlp_from_dict(data: Dict[str, Any]) -> MLPWeights:
    """
    Validate and build network weights from the JSON layout.

    Raises:
        WeightsLoadError: on unknown activation, dimension mismatch or
            non-finite entries (naming the offending layer)
    """
    try:
        input_dim = int(data["input_dim"])
        raw_layers = data["layers"]
    except (KeyError, TypeError, ValueError) as e:
        raise WeightsLoadError(f"Weight file needs 'input_dim' and 'layers': {e}")
    activation = data.get("activation", "tanh")
    if activation not in ACTIVATIONS:
        raise WeightsLoadError(f"Unknown activation {activation!r}; supported: {sorted(ACTIVATIONS)}")
    if input_dim < 1:
        raise WeightsLoadError(f"input_dim must be >= 1, got {input_dim}")
    if not raw_layers:
        raise WeightsLoadError("Network has no layers")

    layers = []
    prev = input_dim
    for index, layer in enumerate(raw_layers):
        try:
            W = np.array(layer["W"], dtype=float)
            b = np.array(layer["b"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise WeightsLoadError(f"needs numeric 'W' and 'b': {e}", layer=index)
        if W.ndim != 2 or b.ndim != 1:
            raise WeightsLoadError(f"W must be a matrix and b a vector, got {W.shape} and {b.shape}", layer=index)
        if W.shape[1] != prev:
            raise WeightsLoadError(f"W has {W.shape[1]} columns, previous layer gives {prev}", layer=index)
        if b.shape[0] != W.shape[0]:
            raise WeightsLoadError(f"b has length {b.shape[0]}, W has {W.shape[0]} rows", layer=index)
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise WeightsLoadError("non-finite entry", layer=index)
        W.setflags(write=False)
        b.setflags(write=False)
        layers.append((W, b))
        prev = W.shape[0]
    if prev != 1:
        raise WeightsLoadError(f"output dimension must be 1, got {prev}", layer=len(layers) - 1)
    return MLPWeights(input_dim, activation, tuple(layers))


def mlp_load(path: Union[str, Path]) -> MLPWeights:
    """
    Load network weights from JSON.

    Format: {"input_dim": d, "activation": "tanh", "layers": [{"W": [[...]], "b": [...]}, ...]}
    """
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise WeightsLoadError(f"Cannot read weight file {path}: {e}")
    weights = mlp_from_dict(data)
    logger.debug(
        f"Loaded {len(weights.layers)}-layer {weights.activation} network from {path} "
        f"(input_dim {weights.input_dim})"
    )
    return weights


def _forward(w: MLPWeights, z: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    act, _ = ACTIVATIONS[w.activation]
    pre = []
    a = z
    for W, b in w.layers[:-1]:
        s = a @ W.T + b
        pre.append(s)
        a = act(s)
    W, b = w.layers[-1]
    return (a @ W.T + b)[:, 0], pre


def _batch(w: MLPWeights, z: np.ndarray) -> Tuple[np.ndarray, bool]:
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    if z.shape[1] != w.input_dim:
        raise ParameterDomainError(f"Network expects {w.input_dim} inputs, got {z.shape[1]}")
    return z, single


def mlp_eval(w: MLPWeights, z: np.ndarray) -> Union[float, np.ndarray]:
    """Forward pass for one input vector (returns a float) or a batch (m, d)."""
    z, single = _batch(w, z)
    out, _ = _forward(w, z)
    return float(out[0]) if single else out


def mlp_input_grad(w: MLPWeights, z: np.ndarray) -> np.ndarray:
    """Exact gradient of the output with respect to every input, by reverse mode."""
    z, single = _batch(w, z)
    _, pre = _forward(w, z)
    _, dact = ACTIVATIONS[w.activation]
    g = np.broadcast_to(w.layers[-1][0], (len(z), w.layers[-1][0].shape[1])).copy()
    for (W, _), s in zip(reversed(w.layers[:-1]), reversed(pre)):
        g = (g * dact(s)) @ W
    return g[0] if single else g


class MLPField(Field):
    """
    Network field; inputs are (x, y, mu...) or (t, x, y, mu...) for space-time nets.
    """

    def __init__(self, weights: MLPWeights, space_time: bool = False, name: str = "mlp"):
        self.weights = weights
        self.time_dependent = space_time
        self.name = name

    def _inputs(self, pts: np.ndarray, mu: np.ndarray, t: Optional[float]) -> np.ndarray:
        cols = [pts]
        if self.time_dependent:
            if t is None:
                raise ParameterDomainError("Space-time network needs a time value")
            cols.insert(0, np.full((len(pts), 1), float(t)))
        if len(mu):
            cols.append(np.broadcast_to(mu, (len(pts), len(mu))))
        z = np.hstack(cols)
        if z.shape[1] != self.weights.input_dim:
            raise ParameterDomainError(
                f"Network expects {self.weights.input_dim} inputs, got {z.shape[1]} "
                f"(space_time={self.time_dependent}, {len(mu)} parameters)"
            )
        return z

    def evaluate(self, points, mu=None, t=None) -> FieldSample:
        pts = _as_points(points)
        z = self._inputs(pts, _as_mu(mu), t)
        value = np.atleast_1d(mlp_eval(self.weights, z))
        g = mlp_input_grad(self.weights, z)
        if self.time_dependent:
            return FieldSample(value, g[:, 1:3], g[:, 0])
        return FieldSample(value, g[:, 0:2], np.zeros(len(pts)))


# ============================================================================
# Zero-trace enforcement
# ============================================================================

@dataclass(frozen=True, eq=False)
class ADF:
    """
    Approximate distance function of a polygon.

    Exact distances d_i to the edges are composed as (sum d_i^-2)^(-1/2),
    which vanishes exactly on every edge and is positive elsewhere.
    """

    polygon: Polygon

    def evaluate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Return (phi (m,), grad phi (m, 2))."""
        pts = _as_points(points)
        starts, ends = self.polygon.edges
        d, offsets = segment_distances(pts, starts, ends)
        edge = ends - starts
        inward = np.column_stack([-edge[:, 1], edge[:, 0]]) / np.linalg.norm(edge, axis=1)[:, None]
        on_edge = d <= 0.0
        safe_d = np.where(on_edge, 1.0, d)
        unit = np.where(on_edge[..., None], inward[None, :, :], offsets / safe_d[..., None])

        # scale by the nearest distance to keep the sums bounded
        dmin = d.min(axis=1)
        ratio = np.where(on_edge, 1.0, dmin[:, None] / safe_d)
        ratio = np.where(dmin[:, None] > 0.0, ratio, on_edge.astype(float))
        s2 = np.sum(ratio ** 2, axis=1)
        phi = dmin / np.sqrt(s2)
        grad = np.einsum("me,med->md", ratio ** 3, unit) / s2[:, None] ** 1.5
        return phi, grad


def build_adf(poly: Polygon) -> ADF:
    return ADF(poly)


class MaskedField(Field):
    """phi * raw: vanishes on the polygon boundary whatever the raw field does."""

    def __init__(self, raw: Field, adf: ADF):
        self.raw = raw
        self.adf = adf
        self.time_dependent = raw.time_dependent
        self.name = f"masked({raw.name})"

    def evaluate(self, points, mu=None, t=None) -> FieldSample:
        pts = _as_points(points)
        phi, dphi = self.adf.evaluate(pts)
        s = self.raw.evaluate(pts, mu, t)
        value = phi * s.value
        grad = phi[:, None] * s.grad + s.value[:, None] * dphi
        return FieldSample(value, grad, phi * s.dt)


def masked_field(raw: Field, adf: ADF) -> Field:
    return MaskedField(raw, adf)


class BumpField(Field):
    """
    ((x - x0)(x1 - x)(y - y0)(y1 - y))^2 on a rectangle, zero outside.

    Scaled so that its H1 seminorm over the rectangle equals `amplitude`.
    """

    def __init__(self, rect: Rect, amplitude: float = 1.0):
        self.rect = rect
        self.amplitude = float(amplitude)
        self.name = "bump"
        rule = gauss_legendre(8)
        ix = map_interval(rule, rect.x0, rect.x1)
        iy = map_interval(rule, rect.y0, rect.y1)

        def moments(r, a, b):
            p = (r.points - a) * (b - r.points)
            dp = a + b - 2.0 * r.points
            return r.integrate(p ** 4), r.integrate((2.0 * p * dp) ** 2)

        x0m, x1m = moments(ix, rect.x0, rect.x1)
        y0m, y1m = moments(iy, rect.y0, rect.y1)
        self.seminorm_raw = float(np.sqrt(x1m * y0m + x0m * y1m))
        self.scale = self.amplitude / self.seminorm_raw

    def evaluate(self, points, mu=None, t=None) -> FieldSample:
        pts = _as_points(points)
        r = self.rect
        x, y = pts[:, 0], pts[:, 1]
        inside = r.contains(pts, tol=0.0)
        px = (x - r.x0) * (r.x1 - x)
        py = (y - r.y0) * (r.y1 - y)
        dpx = r.x0 + r.x1 - 2.0 * x
        dpy = r.y0 + r.y1 - 2.0 * y
        value = np.where(inside, self.scale * px ** 2 * py ** 2, 0.0)
        gx = np.where(inside, self.scale * 2.0 * px * dpx * py ** 2, 0.0)
        gy = np.where(inside, self.scale * 2.0 * py * dpy * px ** 2, 0.0)
        return FieldSample(value, np.column_stack([gx, gy]), np.zeros(len(pts)))


def bump_field(inner: Rect, amplitude: float = 1.0) -> BumpField:
    return BumpField(inner, amplitude)


class SeparableField(Field):
    """sigma(t) * e(x) for a steady spatial field e."""

    def __init__(self, sigma: Callable[[float], float], dsigma: Callable[[float], float],
                 spatial: Field, name: str = "separable"):
        self.sigma = sigma
        self.dsigma = dsigma
        self.spatial = spatial
        self.time_dependent = True
        self.name = name

    def evaluate(self, points, mu=None, t=None) -> FieldSample:
        if t is None:
            raise ParameterDomainError("Separable field needs a time value")
        s = self.spatial.evaluate(points, mu, None)
        sig, dsig = float(self.sigma(t)), float(self.dsigma(t))
        return FieldSample(sig * s.value, sig * s.grad, dsig * s.value)


def finite_difference_gradient(field: Field, points: np.ndarray, mu=None, t: Optional[float] = None,
                               h: float = 1e-6) -> np.ndarray:
    """Central-difference spatial gradient, (m, 2)."""
    pts = _as_points(points)
    grad = np.empty((len(pts), 2))
    for axis in range(2):
        step = np.zeros(2)
        step[axis] = h
        grad[:, axis] = (field.value(pts + step, mu, t) - field.value(pts - step, mu, t)) / (2.0 * h)
    return grad
