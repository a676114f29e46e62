import math

import numpy as np
import pytest

from approximant import MaskedField, SeparableField, ZeroField
from catalog import (
    CATALOG,
    HEAT_TRUTH,
    FieldSpec,
    build_field,
    custom_entry,
    get_entry,
    transport_entry,
    truth_for,
)
from errors import ConfigurationError, NotCoerciveError
from geometry import Rect, l_shaped_domain
from oracle import P1Field
from residual import SpaceTimeProblem


def _setup(name, mu):
    entry = CATALOG[name]
    mu = np.asarray(mu, dtype=float)
    problem = entry.problem_for(mu)
    return entry, problem, entry.embedding_for(problem), mu


def test_catalog_ids():
    assert set(CATALOG) == {"sawblade", "sawblade-laplace", "notch", "heat-square", "transport"}


def test_unknown_problem_lists_catalog():
    with pytest.raises(ConfigurationError) as excinfo:
        get_entry("annulus")
    assert "sawblade" in str(excinfo.value) and "notch" in str(excinfo.value)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_default_embeddings_are_valid(name):
    entry = CATALOG[name]
    problem = entry.problem_for(np.array(entry.sample_mu))
    embedding = entry.embedding_for(problem)
    assert entry.parameters.check(entry.sample_mu) is not None
    assert isinstance(problem, SpaceTimeProblem) == entry.space_time
    assert embedding.inner.area < embedding.outer.area


def test_default_parameter_grids():
    notch = CATALOG["notch"].default_parameters()
    assert len(notch) == 9
    assert notch[0] == (0.0,) and notch[-1][0] == pytest.approx(0.5 * math.pi)
    saw = CATALOG["sawblade"].default_parameters()
    assert len(saw) == 49
    assert saw[0] == (0.1, 0.05) and saw[-1] == (1.0, 0.1)
    assert CATALOG["sawblade-laplace"].default_parameters() == [()]


def test_notch_domain_depends_on_mu():
    a = CATALOG["notch"].problem_for(np.array([0.0]))
    b = CATALOG["notch"].problem_for(np.array([0.5 * math.pi]))
    assert a.domain.area == pytest.approx(1.0)
    assert b.domain.area == pytest.approx(0.9375)
    assert CATALOG["notch"].problem_for(np.array([0.0])) is a


def test_heat_source_matches_manufactured_solution():
    _, problem, _, mu = _setup("heat-square", [1.5])
    pts = np.array([[0.3, 0.6], [0.5, 0.5]])
    x, y = pts.T
    t = 0.4
    s = HEAT_TRUTH.evaluate(pts, mu, t)
    # f = du/dt - mu Laplace u with Laplace u = -2 pi^2 u
    expected = s.dt + 1.5 * 2.0 * np.pi ** 2 * s.value
    np.testing.assert_allclose(problem.spatial.source(x, y, mu, t), expected)


def test_transport_advection_is_divergence_free():
    _, problem, _, mu = _setup("transport", [4.0])
    spatial = problem.spatial
    h = 1e-6
    pts = np.array([[0.3, 0.2], [1.0, 0.4], [0.2, 0.9]])
    x, y = pts.T
    bx = (spatial.advection(x + h, y, mu)[:, 0] - spatial.advection(x - h, y, mu)[:, 0]) / (2 * h)
    by = (spatial.advection(x, y + h, mu)[:, 1] - spatial.advection(x, y - h, mu)[:, 1]) / (2 * h)
    np.testing.assert_allclose(bx + by, 0.0, atol=1e-6)
    bounds = spatial.bounds(mu)
    assert np.max(np.linalg.norm(spatial.advection(x, y, mu), axis=1)) <= bounds.norm_b


def test_transport_on_user_polygon():
    entry = transport_entry(l_shaped_domain(1.0, 1.0, 0.5), Rect(0.0, 0.5, 0.0, 1.0), Rect(0.0, 1.0, 0.0, 1.0))
    problem = entry.problem_for(np.array([2.0]))
    assert problem.spatial.domain.area == pytest.approx(0.75)
    entry.embedding_for(problem)


def test_custom_entry_checks_coercivity(unit_square, unit_rect):
    inner = Rect(0.25, 0.75, 0.25, 0.75)
    with pytest.raises(NotCoerciveError):
        custom_entry(unit_square, inner, unit_rect, [[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(NotCoerciveError):
        custom_entry(unit_square, inner, unit_rect, [[1.0, 0.0], [0.0, 1.0]], c=-1.0)
    entry = custom_entry(unit_square, inner, unit_rect, [[2.0, 0.0], [0.0, 1.0]], b=[3.0, 4.0], c=0.5)
    bounds = entry.problem_for(np.array([])).bounds(())
    assert bounds.a0 == pytest.approx(1.0)
    assert bounds.norm_A == pytest.approx(2.0)
    assert bounds.norm_b == pytest.approx(5.0)


# ============================================================================
# Fields
# ============================================================================

def test_field_spec_validation():
    with pytest.raises(ConfigurationError):
        FieldSpec(kind="spline")
    with pytest.raises(ConfigurationError):
        FieldSpec(kind="mlp")
    with pytest.raises(ConfigurationError):
        FieldSpec(sigma="cos")


def test_exact_truth_for_heat():
    entry, problem, _, mu = _setup("heat-square", [1.0])
    truth, exact = truth_for(entry, problem, mu, 3)
    assert truth is HEAT_TRUTH and exact


def test_p1_truth_for_notch():
    entry, problem, _, mu = _setup("notch", [0.3])
    truth, exact = truth_for(entry, problem, mu, 2)
    assert isinstance(truth, P1Field) and not exact


def test_transport_has_no_truth():
    entry, problem, _, mu = _setup("transport", [5.0])
    with pytest.raises(ConfigurationError):
        truth_for(entry, problem, mu, 2)


def test_truth_minus_bump_on_heat():
    entry, problem, embedding, mu = _setup("heat-square", [1.0])
    field, exact = build_field(FieldSpec(), entry, problem, embedding, mu)
    assert exact is HEAT_TRUTH
    center = np.array([[0.5, 0.5]])
    diff = exact.value(center, mu, 0.5) - field.value(center, mu, 0.5)
    assert diff[0] > 0
    # the error vanishes outside the inner rectangle
    corner = np.array([[0.1, 0.1]])
    np.testing.assert_allclose(field.value(corner, mu, 0.5), exact.value(corner, mu, 0.5))


def test_perturbed_field_keeps_zero_trace():
    entry, problem, embedding, mu = _setup("sawblade-laplace", [])
    field, exact = build_field(FieldSpec(kind="perturbed", epsilon=0.2), entry, problem, embedding, mu)
    assert isinstance(exact, ZeroField)
    boundary = embedding.domain.vertices
    np.testing.assert_allclose(field.value(boundary), 0.0, atol=1e-14)
    assert abs(field.value(np.array([[1.1, 0.25]]))[0]) > 0


def test_separable_field_needs_space_time():
    entry, problem, embedding, mu = _setup("sawblade-laplace", [])
    with pytest.raises(ConfigurationError):
        build_field(FieldSpec(kind="separable"), entry, problem, embedding, mu)
    entry, problem, embedding, mu = _setup("transport", [3.0])
    field, exact = build_field(FieldSpec(kind="separable", sigma="sin"), entry, problem, embedding, mu)
    assert isinstance(field, SeparableField) and exact is None


def test_mlp_field_is_masked(tmp_path, rng):
    import json

    path = tmp_path / "net.json"
    path.write_text(json.dumps({
        "input_dim": 3,
        "activation": "tanh",
        "layers": [
            {"W": rng.standard_normal((4, 3)).tolist(), "b": [0.0] * 4},
            {"W": rng.standard_normal((1, 4)).tolist(), "b": [0.3]},
        ],
    }))
    entry, problem, embedding, mu = _setup("notch", [0.2])
    field, _ = build_field(FieldSpec(kind="mlp", path=str(path)), entry, problem, embedding, mu)
    assert isinstance(field, MaskedField)
    np.testing.assert_allclose(field.value(embedding.domain.vertices, mu), 0.0, atol=1e-14)
