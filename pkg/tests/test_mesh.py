import math

import numpy as np
import pytest

from common.enums import GeometryFamily, ModelKind
from common.errors import GraphExtractionError, InvalidInputError
from mesh.geometry import (
    apply_drift_laplacian,
    curvature_data,
    laplace_beltrami,
    shrinker_quantity,
)
from mesh.graphs import graph_l2, graph_over_model, make_graph_function, mode_perturbation
from mesh.surfaces import make_ellipse, make_flat_line, make_model_surface, make_round_surface
from schema.surface_state import SurfaceState

SQRT2 = math.sqrt(2.0)


@pytest.mark.parametrize('resolution', [16, 64, 257])
def test_round_circle_curvature_is_exact(resolution):
    s = make_round_surface(ModelKind.CIRCLE, 0.7, resolution)
    geo = curvature_data(s)
    np.testing.assert_allclose(geo.mean_curvature, 1.0 / 0.7, rtol=1e-12)
    # outward normal is radial
    np.testing.assert_allclose(geo.normal, s.nodes / 0.7, atol=1e-12)


def test_shrinker_quantity_vanishes_on_models(circle, cylinder):
    for s in (make_model_surface(circle, 128), make_model_surface(cylinder, 241)):
        phi = shrinker_quantity(s).phi
        assert np.max(np.abs(phi)) < 1e-12


def test_cylinder_principal_curvatures(cylinder):
    geo = curvature_data(make_model_surface(cylinder, 121))
    np.testing.assert_allclose(geo.principal[:, 0], 0.0, atol=1e-12)
    np.testing.assert_allclose(geo.principal[:, 1], 1.0 / SQRT2, rtol=1e-12)
    np.testing.assert_allclose(geo.second_fundamental_sq, 0.5, rtol=1e-12)


def test_ellipse_curvature_matches_closed_form():
    a, b = 2.0, 1.0
    s = make_ellipse(a, b, 1024)
    theta = 2.0 * np.pi * np.arange(1024) / 1024
    exact = a * b / (a ** 2 * np.sin(theta) ** 2 + b ** 2 * np.cos(theta) ** 2) ** 1.5
    np.testing.assert_allclose(curvature_data(s).kappa, exact, rtol=5e-3)


def test_clockwise_curves_are_reoriented():
    ccw = make_round_surface(ModelKind.CIRCLE, 1.0, 32)
    cw = SurfaceState(family=GeometryFamily.CURVE, nodes=ccw.nodes[::-1].copy())
    # node 0 keeps its place, the rest of the order flips back
    np.testing.assert_allclose(cw.nodes[0], ccw.nodes[-1])
    assert np.all(curvature_data(cw).mean_curvature > 0)


@pytest.mark.parametrize('kwargs', [
    dict(family=GeometryFamily.CURVE, nodes=np.zeros((8, 2))),
    dict(family=GeometryFamily.CURVE, nodes=np.zeros((20, 3))),
    dict(family=GeometryFamily.PROFILE, nodes=np.ones(5)),
    dict(family=GeometryFamily.PROFILE, nodes=np.ones(4), z=np.array([0.0, 1.0, 3.0, 4.0])),
    dict(family=GeometryFamily.PROFILE, nodes=np.array([1.0, -1.0, 1.0]), z=np.arange(3.0)),
    dict(family=GeometryFamily.CURVE, nodes=np.full((20, 2), np.nan)),
])
def test_invalid_states_are_rejected(kwargs):
    with pytest.raises(InvalidInputError):
        SurfaceState(**kwargs)


def test_measure_of_round_surfaces():
    circle = make_round_surface(ModelKind.CIRCLE, 1.0, 4096)
    assert circle.measure == pytest.approx(2.0 * np.pi, rel=1e-6)
    line = make_flat_line(3.0, 61)
    assert line.measure == pytest.approx(6.0, rel=1e-12)
    tube = make_round_surface(ModelKind.CYLINDER, 2.0, 101, window=5.0)
    assert tube.measure == pytest.approx(2.0 * np.pi * 2.0 * 10.0, rel=1e-12)


def test_drift_laplacian_of_constants(circle, cylinder):
    for s in (make_model_surface(circle, 64), make_model_surface(cylinder, 121)):
        ops = apply_drift_laplacian(s, np.ones(s.size))
        np.testing.assert_allclose(ops.drift, 0.0, atol=1e-10)
        # L 1 = 1/2 + |A|^2 = 1 on both models
        np.testing.assert_allclose(ops.jacobi, 1.0, atol=1e-10)


def test_laplace_beltrami_eigenfunction_on_circle():
    s = make_round_surface(ModelKind.CIRCLE, 1.0, 512)
    theta = np.arctan2(s.nodes[:, 1], s.nodes[:, 0])
    f = np.cos(2.0 * theta)
    np.testing.assert_allclose(laplace_beltrami(s, f), -4.0 * f, atol=1e-3)


def test_graph_over_circle_recovers_perturbation(circle):
    gf = mode_perturbation(circle, {2: 0.05, 3: -0.02}, 128)
    s = make_model_surface(circle, 128, gf)
    back = graph_over_model(s, circle)
    np.testing.assert_allclose(back.samples, gf.samples, atol=1e-10)
    assert back.norms.c0 == pytest.approx(0.07, rel=1e-6)
    assert graph_l2(back, gf) < 1e-9


def test_graph_over_cylinder_is_radial_offset(cylinder):
    gf = mode_perturbation(cylinder, {1: 0.05}, 241, window=12.0, envelope=4.0)
    s = make_model_surface(cylinder, 241, gf, window=12.0)
    np.testing.assert_allclose(graph_over_model(s, cylinder).samples, gf.samples, atol=1e-12)


def test_norms_are_cumulative(circle):
    norms = mode_perturbation(circle, {4: 0.03}, 64).norms
    assert 0.0 < norms.c0 <= norms.c1 <= norms.c2 <= norms.c2_alpha


@pytest.mark.parametrize('state', [
    make_flat_line(2.0, 33),
    make_ellipse(1.0, 0.5, 64, center=(3.0, 0.0)),
])
def test_non_graphs_over_circle(circle, state):
    with pytest.raises(GraphExtractionError):
        graph_over_model(state, circle)


def test_family_mismatch_is_invalid(circle, cylinder):
    with pytest.raises(InvalidInputError):
        graph_over_model(make_model_surface(cylinder, 41), circle)


def test_large_perturbation_is_rejected(circle):
    gf = make_graph_function(circle, 2.0 * np.pi * np.arange(32) / 32, np.full(32, 0.8), SQRT2)
    with pytest.raises(InvalidInputError):
        make_model_surface(circle, 32, gf)
