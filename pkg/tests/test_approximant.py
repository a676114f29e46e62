import json

import numpy as np
import pytest

from approximant import (
    AnalyticField,
    MLPField,
    SeparableField,
    ZeroField,
    build_adf,
    bump_field,
    finite_difference_gradient,
    masked_field,
    mlp_eval,
    mlp_from_dict,
    mlp_input_grad,
    mlp_load,
)
from errors import ParameterDomainError, WeightsLoadError
from geometry import Polygon, Rect, boundary_distance, l_shaped_domain, sample_polygon, sawblade_domain
from quadrature import gauss_rect_rule


def _random_net(rng, sizes):
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        layers.append({
            "W": (rng.standard_normal((fan_out, fan_in)) / np.sqrt(fan_in)).tolist(),
            "b": (0.1 * rng.standard_normal(fan_out)).tolist(),
        })
    return {"input_dim": sizes[0], "activation": "tanh", "layers": layers}


def _plane():
    return AnalyticField(
        lambda x, y, mu, t: 2.0 * x + y,
        lambda x, y, mu, t: (2.0, 1.0),
        name="plane",
    )


# ============================================================================
# Networks
# ============================================================================

def test_network_gradient_matches_finite_differences(rng):
    h = 1e-5
    for _ in range(20):
        depth = int(rng.integers(1, 4))
        width = int(rng.integers(3, 12))
        dim = int(rng.integers(2, 5))
        weights = mlp_from_dict(_random_net(rng, [dim] + [width] * depth + [1]))
        z = rng.uniform(-1.0, 1.0, size=(6, dim))
        exact = mlp_input_grad(weights, z)
        fd = np.empty_like(exact)
        for k in range(dim):
            step = np.zeros(dim)
            step[k] = h
            fd[:, k] = (mlp_eval(weights, z + step) - mlp_eval(weights, z - step)) / (2.0 * h)
        np.testing.assert_allclose(exact, fd, atol=1e-6)


def test_single_input_returns_float(rng):
    weights = mlp_from_dict(_random_net(rng, [2, 4, 1]))
    assert isinstance(mlp_eval(weights, np.array([0.1, 0.2])), float)
    assert mlp_input_grad(weights, np.array([0.1, 0.2])).shape == (2,)


def test_identity_network_is_affine():
    weights = mlp_from_dict({
        "input_dim": 2,
        "activation": "identity",
        "layers": [{"W": [[1.0, 0.0], [0.0, 1.0]], "b": [0.0, 0.0]}, {"W": [[3.0, -1.0]], "b": [0.5]}],
    })
    assert mlp_eval(weights, np.array([1.0, 2.0])) == pytest.approx(1.5)
    np.testing.assert_allclose(mlp_input_grad(weights, np.array([[0.3, 0.4]])), [[3.0, -1.0]])


def test_wrong_layer_width_names_the_layer(rng):
    data = _random_net(rng, [3, 5, 4, 1])
    data["layers"][1]["W"] = np.ones((4, 6)).tolist()
    with pytest.raises(WeightsLoadError) as excinfo:
        mlp_from_dict(data)
    assert excinfo.value.layer == 1
    assert "layer 1" in str(excinfo.value)


def test_non_finite_weight_rejected(rng):
    data = _random_net(rng, [2, 3, 1])
    data["layers"][0]["b"][2] = float("nan")
    with pytest.raises(WeightsLoadError) as excinfo:
        mlp_from_dict(data)
    assert excinfo.value.layer == 0


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(activation="relu"),
    lambda d: d.pop("layers"),
    lambda d: d["layers"][-1].update(W=[[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]], b=[0.0, 0.0]),
])
def test_invalid_weight_layouts(rng, mutate):
    data = _random_net(rng, [2, 3, 1])
    mutate(data)
    with pytest.raises(WeightsLoadError):
        mlp_from_dict(data)


def test_mlp_load_missing_file(tmp_path):
    with pytest.raises(WeightsLoadError):
        mlp_load(tmp_path / "missing.json")


def test_mlp_load_round_trip(tmp_path, rng):
    data = _random_net(rng, [3, 6, 1])
    path = tmp_path / "net.json"
    path.write_text(json.dumps(data))
    weights = mlp_load(path)
    assert weights.input_dim == 3
    assert len(weights.layers) == 2


def test_mlp_field_appends_parameters(rng):
    weights = mlp_from_dict(_random_net(rng, [3, 5, 1]))
    field = MLPField(weights)
    pts = rng.uniform(0, 1, size=(4, 2))
    sample = field.evaluate(pts, mu=[0.7])
    z = np.column_stack([pts, np.full(4, 0.7)])
    np.testing.assert_allclose(sample.value, mlp_eval(weights, z))
    np.testing.assert_allclose(sample.grad, mlp_input_grad(weights, z)[:, :2])
    assert np.all(sample.dt == 0.0)
    with pytest.raises(ParameterDomainError):
        field.evaluate(pts)


def test_space_time_network_needs_time(rng):
    weights = mlp_from_dict(_random_net(rng, [3, 5, 1]))
    field = MLPField(weights, space_time=True)
    pts = rng.uniform(0, 1, size=(3, 2))
    with pytest.raises(ParameterDomainError):
        field.evaluate(pts)
    sample = field.evaluate(pts, t=0.4)
    z = np.column_stack([np.full(3, 0.4), pts])
    np.testing.assert_allclose(sample.dt, mlp_input_grad(weights, z)[:, 0])


# ============================================================================
# Distance functions and masking
# ============================================================================

def test_adf_center_and_edges(unit_square):
    adf = build_adf(unit_square)
    phi, _ = adf.evaluate(np.array([[0.5, 0.5]]))
    assert phi[0] == pytest.approx(0.25)
    edge_pts = np.array([[0.3, 0.0], [1.0, 0.6], [0.0, 0.0], [0.2, 1.0]])
    phi, grad = adf.evaluate(edge_pts)
    np.testing.assert_allclose(phi, 0.0, atol=1e-15)
    np.testing.assert_allclose(grad[0], [0.0, 1.0], atol=1e-12)


def test_adf_gradient_matches_finite_differences(rng):
    poly = l_shaped_domain()
    adf = build_adf(poly)
    field = masked_field(AnalyticField(lambda x, y, mu, t: 1.0, lambda x, y, mu, t: (0.0, 0.0)), adf)
    pts = np.array([[0.2, 0.3], [0.9, 0.2], [0.4, 0.8], [1.0, 0.3], [0.3, 0.55]])
    np.testing.assert_allclose(field.gradient(pts), finite_difference_gradient(field, pts, h=1e-7),
                               atol=1e-6)


def test_masked_field_vanishes_on_boundary(rng):
    poly = Polygon([(0, 0), (2, 0), (2, 1), (0, 1)])
    field = masked_field(_plane(), build_adf(poly))
    pts = np.array([[0.0, 0.4], [1.3, 0.0], [2.0, 0.9]])
    np.testing.assert_allclose(field.value(pts), 0.0, atol=1e-15)
    inside = rng.uniform([0.1, 0.1], [1.9, 0.9], size=(8, 2))
    np.testing.assert_allclose(field.gradient(inside), finite_difference_gradient(field, inside), atol=1e-6)


# ============================================================================
# Analytic fields
# ============================================================================

def test_bump_has_unit_seminorm():
    rect = Rect(0.25, 0.75, 0.25, 0.75)
    bump = bump_field(rect)
    rule = gauss_rect_rule(rect, 10)
    g = bump.gradient(rule.points)
    assert rule.integrate(np.sum(g ** 2, axis=1)) == pytest.approx(1.0, rel=1e-12)
    assert np.all(bump.value(np.array([[0.1, 0.5], [0.5, 0.9]])) == 0.0)


def test_bump_amplitude_scales_seminorm():
    rect = Rect(0.0, 2.0, 0.0, 1.0)
    bump = bump_field(rect, amplitude=0.3)
    rule = gauss_rect_rule(rect, 10)
    g = bump.gradient(rule.points)
    assert np.sqrt(rule.integrate(np.sum(g ** 2, axis=1))) == pytest.approx(0.3, rel=1e-12)


def test_field_algebra():
    plane = _plane()
    pts = np.array([[0.1, 0.2], [0.5, 0.5]])
    np.testing.assert_allclose((plane - plane).value(pts), 0.0)
    np.testing.assert_allclose((2.0 * plane).gradient(pts), [[4.0, 2.0], [4.0, 2.0]])
    combo = plane + (-plane) + ZeroField()
    assert len(combo.terms) == 3
    np.testing.assert_allclose(combo.value(pts), 0.0)


def test_separable_field_time_derivative():
    bump = bump_field(Rect(0.0, 1.0, 0.0, 1.0))
    field = SeparableField(lambda t: t * t, lambda t: 2.0 * t, bump)
    pts = np.array([[0.3, 0.6]])
    sample = field.evaluate(pts, t=0.5)
    base = bump.value(pts)
    np.testing.assert_allclose(sample.value, 0.25 * base)
    np.testing.assert_allclose(sample.dt, base)
    np.testing.assert_allclose(field.time_derivative(pts, t=0.5), base)
    assert field.time_dependent
    with pytest.raises(ParameterDomainError):
        field.evaluate(pts)


# ============================================================================
# Gradient consistency across field types
# ============================================================================

def _masked_net(rng, poly, space_time=False):
    sizes = [5 if space_time else 4, 8, 8, 1]
    return masked_field(MLPField(mlp_from_dict(_random_net(rng, sizes)), space_time=space_time), build_adf(poly))


def _field_case(name, rng):
    """(field, points, mu, t) with points kept away from kinks of the field."""
    box = rng.uniform([-0.2, -0.2], [1.2, 1.2], size=(50, 2))
    if name == "bump":
        return bump_field(Rect(0.25, 0.75, 0.2, 0.9), amplitude=0.7), box, None, None
    if name == "separable":
        field = SeparableField(np.sin, np.cos, bump_field(Rect(0.0, 1.0, 0.0, 1.0)))
        return field, box, None, 0.8
    if name == "scaled-sum":
        field = 2.5 * bump_field(Rect(0.1, 0.9, 0.1, 0.9)) - 0.5 * _plane() + ZeroField()
        return field, box, None, None
    if name == "analytic":
        field = AnalyticField(
            lambda x, y, mu, t: np.exp(x) * np.cos(mu[0] * y),
            lambda x, y, mu, t: (np.exp(x) * np.cos(mu[0] * y), -mu[0] * np.exp(x) * np.sin(mu[0] * y)),
        )
        return field, box, [1.7], None
    poly = l_shaped_domain() if name == "masked-plane" else sawblade_domain()
    pts = sample_polygon(poly, 400, rng)
    pts = pts[boundary_distance(poly, pts) > 1e-3][:50]
    if name == "masked-plane":
        return masked_field(_plane(), build_adf(poly)), pts, None, None
    if name == "masked-mlp":
        return _masked_net(rng, poly), pts, [0.3, 1.2], None
    return _masked_net(rng, poly, space_time=True), pts, [0.3, 1.2], 0.4


@pytest.mark.parametrize("name", [
    "bump", "separable", "scaled-sum", "analytic", "masked-plane", "masked-mlp", "masked-space-time-mlp",
])
def test_gradient_matches_finite_differences(name, rng):
    field, pts, mu, t = _field_case(name, rng)
    assert len(pts) == 50
    exact = field.gradient(pts, mu, t)
    fd = finite_difference_gradient(field, pts, mu, t)
    scale = max(1.0, float(np.max(np.abs(exact))))
    np.testing.assert_allclose(exact, fd, rtol=1e-4, atol=1e-4 * scale)
    if t is not None:
        h = 1e-6
        dt = (field.value(pts, mu, t + h) - field.value(pts, mu, t - h)) / (2.0 * h)
        np.testing.assert_allclose(field.time_derivative(pts, mu, t), dt, rtol=1e-4, atol=1e-4 * scale)


def test_small_tanh_network_by_hand():
    W1 = [[0.5, -1.0], [1.5, 0.25], [-0.75, 0.8], [0.2, 0.3]]
    b1 = [0.1, -0.2, 0.05, 0.0]
    W2 = [0.6, -0.4, 1.1, 0.9]
    b2 = -0.3
    weights = mlp_from_dict({
        "input_dim": 2,
        "activation": "tanh",
        "layers": [{"W": W1, "b": b1}, {"W": [W2], "b": [b2]}],
    })
    x, y = 0.3, 0.7
    value, gx, gy = b2, 0.0, 0.0
    for (wx, wy), b, w in zip(W1, b1, W2):
        a = np.tanh(wx * x + wy * y + b)
        value += w * a
        gx += w * (1.0 - a * a) * wx
        gy += w * (1.0 - a * a) * wy
    assert mlp_eval(weights, np.array([x, y])) == pytest.approx(value, abs=1e-12)
    np.testing.assert_allclose(mlp_input_grad(weights, np.array([x, y])), [gx, gy], atol=1e-12)


def test_masked_network_has_zero_trace(rng):
    poly = sawblade_domain()
    field = _masked_net(rng, poly)
    starts, ends = poly.edges
    which = rng.integers(0, len(starts), size=1000)
    s = rng.random(1000)[:, None]
    pts = starts[which] + s * (ends[which] - starts[which])
    np.testing.assert_allclose(field.value(pts, [0.3, 1.2]), 0.0, atol=1e-12)
