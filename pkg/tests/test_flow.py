import math

import numpy as np
import pytest
from pydantic import ValidationError

from common.enums import ForcingKind, GeometryFamily, GRescaling, ModelKind, Picture, Provenance, Scheme
from common.errors import CalibrationError, CoverageError, InvalidInputError, StabilityError
from flow.calibration import DEVIATION_LIMIT, calibrate_offset, flow_deviation, radial_deviation
from flow.forcing_checks import check_forcing
from flow.graphical import graphical_scale
from flow.impl.forcing import RadialField, build_forcing, rescaled_field
from flow.residual import (
    evolution_residual_phi,
    observed_orders,
    residual_by_restepping,
    spatial_refinement,
    temporal_refinement,
)
from flow.stepping import step_mcff, step_rmcff
from flow.trajectory import rescale_map, run_trajectory
from mesh.graphs import graph_over_model, make_graph_function, mode_perturbation
from mesh.surfaces import make_model_surface, make_round_surface
from schema.forcing_spec import ForcingSpec
from schema.shrinker_model import ShrinkerModel

SQRT2 = math.sqrt(2.0)


def test_shrinking_circle_follows_exact_radius():
    start = make_round_surface(ModelKind.CIRCLE, 1.0, 128)
    traj = run_trajectory(start, None, Picture.UNRESCALED, (0.0, 0.25), 2e-4, record_every=250)
    for s in traj.states:
        radius = np.linalg.norm(s.nodes, axis=1)
        np.testing.assert_allclose(radius, math.sqrt(1.0 - 2.0 * s.time), rtol=1e-3)


def test_shrinking_cylinder_follows_exact_radius():
    start = make_round_surface(ModelKind.CYLINDER, 1.0, 81, window=4.0)
    traj = run_trajectory(start, None, Picture.UNRESCALED, (0.0, 0.2), 1e-3, record_every=50)
    for s in traj.states:
        np.testing.assert_allclose(s.nodes, math.sqrt(1.0 - 2.0 * s.time), rtol=1e-3)


@pytest.mark.parametrize('kind,resolution,dt', [
    (ModelKind.CIRCLE, 64, 1e-3),
    (ModelKind.CYLINDER, 241, 1e-2),
])
def test_models_are_static_under_rescaled_flow(kind, resolution, dt):
    model = ShrinkerModel(kind=kind)
    initial = make_model_surface(model, resolution)
    traj = run_trajectory(initial, None, Picture.RESCALED, (0.0, 1000 * dt), dt, record_every=100)
    assert radial_deviation(traj.states[-1], model) == pytest.approx(0.0, abs=1e-6)
    assert traj.step == pytest.approx(100 * dt)
    assert traj.times[-1] == pytest.approx(1000 * dt, rel=1e-12)


def test_explicit_step_above_bound_is_rejected(circle):
    s = make_model_surface(circle, 64)
    with pytest.raises(StabilityError):
        run_trajectory(s, None, Picture.RESCALED, (0.0, 1.0), 0.1)
    with pytest.raises(StabilityError):
        step_mcff(s, None, 0.1)


def test_semi_implicit_circle_accepts_larger_steps(circle):
    s = make_model_surface(circle, 64)
    out = step_rmcff(s, None, 0.0, 0.02, scheme=Scheme.SEMI_IMPLICIT)
    assert out.time == pytest.approx(0.02)
    assert radial_deviation(out, circle) == pytest.approx(0.0, abs=1e-3)


def test_span_must_be_whole_number_of_steps(circle):
    with pytest.raises(InvalidInputError):
        run_trajectory(make_model_surface(circle, 32), None, Picture.RESCALED, (0.0, 1.0), 0.3)
    with pytest.raises(InvalidInputError):
        run_trajectory(make_model_surface(circle, 32), None, Picture.RESCALED, (1.0, 1.0), 0.01)


def test_neck_pinch_truncates(cylinder):
    gf = mode_perturbation(cylinder, {0: -0.7}, 241, window=12.0, envelope=1.5)
    start = make_model_surface(cylinder, 241, gf, time=-1.0)
    traj = run_trajectory(start, None, Picture.UNRESCALED, (-1.0, -0.01), 1e-3, record_every=10)
    assert traj.truncated
    assert -1.0 < traj.truncation.time < -0.01
    assert traj.truncation.steps_completed >= 1


def test_trajectory_lookup(static_circle_traj):
    traj = static_circle_traj
    assert traj.index_of(1.0) == 20
    np.testing.assert_array_equal(traj.window(1.0, 2.0), np.arange(20, 41))
    with pytest.raises(CoverageError):
        traj.index_of(1.01)
    with pytest.raises(CoverageError):
        traj.window(5.0, 7.0)
    frame = traj.to_frame()
    assert list(frame.columns)[0] == "t"
    assert len(frame) == len(traj.states)


def test_rescale_map_round_trip(circle):
    s = make_round_surface(ModelKind.CIRCLE, 1.0, 32, time=-0.25)
    rescaled = rescale_map(s)
    assert rescaled.time == pytest.approx(math.log(4.0))
    np.testing.assert_allclose(np.linalg.norm(rescaled.nodes, axis=1), 2.0)
    back = rescale_map(rescaled, to_rescaled=False)
    assert back.time == pytest.approx(-0.25)
    np.testing.assert_allclose(back.nodes, s.nodes, atol=1e-12)
    with pytest.raises(InvalidInputError):
        rescale_map(make_round_surface(ModelKind.CIRCLE, 1.0, 32, time=0.5))


def test_rescaled_shrinking_circle_is_the_model():
    start = make_round_surface(ModelKind.CIRCLE, SQRT2, 64, time=-1.0)
    traj = run_trajectory(start, None, Picture.UNRESCALED, (-1.0, -0.5), 1e-3, record_every=100)
    mapped = rescale_map(traj)
    assert mapped.picture == Picture.RESCALED and mapped.step is None
    for s in mapped.states:
        np.testing.assert_allclose(np.linalg.norm(s.nodes, axis=1), SQRT2, rtol=1e-3)
    with pytest.raises(InvalidInputError):
        rescale_map(mapped)


def test_pull_back_conventions():
    base = RadialField(0.5, 0.1)
    x = np.array([[1.0, 2.0]])
    derived = rescaled_field(base, 2.0, GRescaling.DERIVED)
    stated = rescaled_field(base, 2.0, GRescaling.STATED)
    np.testing.assert_allclose(derived.value(x), base.value(math.exp(-1.0) * x))
    np.testing.assert_allclose(stated.value(x), base.value(math.e * x))
    np.testing.assert_allclose(derived.jacobian(x), math.exp(-1.0) * base.jacobian(math.exp(-1.0) * x))
    assert rescaled_field(None, 1.0, GRescaling.DERIVED) is None


@pytest.mark.parametrize('spec,family', [
    (ForcingSpec(kind="radial", c=0.05, delta=0.1), GeometryFamily.CURVE),
    (ForcingSpec(kind="constant", c=0.2, direction=(0.0, 1.0)), GeometryFamily.CURVE),
    (ForcingSpec(kind="bump", c=0.05, width=3.0), GeometryFamily.PROFILE),
    (ForcingSpec(kind="radial", c=-0.1, delta=0.5), GeometryFamily.PROFILE),
])
def test_forcing_bound_and_derivatives(spec, family):
    report = check_forcing(spec, 4.0, family)
    assert report.verdict.value == "pass"
    assert report.constants["sampled_sup"].value <= spec.K + 1e-12
    assert report.name == "forcing"
    assert report.constants["C3_norm"].value >= report.constants["sampled_sup"].value


def test_forcing_c3_norm_is_checked_against_declared_bound():
    # |D^3 F| of the mollified radial field grows like c / delta^3 at the origin
    loose = check_forcing(ForcingSpec(kind="radial", c=0.05, delta=0.1, K_c3=1e4), 4.0)
    assert loose.verdict.value == "pass"
    assert loose.constants["C3_norm"].value > 10.0
    assert loose.constants["K_c3"].provenance == Provenance.CONFIGURED

    tight = check_forcing(ForcingSpec(kind="radial", c=0.05, delta=0.1, K_c3=1.0), 4.0)
    assert tight.verdict.value == "fail"
    assert tight.constants["K"].value == pytest.approx(0.05)

    flat = check_forcing(ForcingSpec(kind="constant", c=0.2, direction=(0.0, 1.0)), 4.0)
    assert flat.constants["C3_norm"].value == pytest.approx(0.2)
    assert flat.constants["K_c3"].provenance == Provenance.SAMPLED


def test_zero_forcing_has_no_field():
    spec = ForcingSpec(kind="off", c=1.0)
    assert spec.kind == ForcingKind.NONE and spec.K == 0.0
    assert build_forcing(spec, GeometryFamily.CURVE) is None
    assert check_forcing(spec, 4.0).verdict.value == "pass"


def test_forcing_spec_validation():
    with pytest.raises(ValidationError):
        ForcingSpec(kind="swirl", c=1.0)
    with pytest.raises(ValidationError):
        ForcingSpec(kind="radial", c=1.0, K=0.5)
    with pytest.raises(ValidationError):
        ForcingSpec(kind="radial", c=1.0, K=1.0, K_c3=0.5)
    with pytest.raises(InvalidInputError):
        build_forcing(ForcingSpec(kind="constant", c=1.0, direction=(1.0, 0.0, 0.0)), GeometryFamily.PROFILE)
    assert ForcingSpec(kind="dilation", c=-0.3).K == pytest.approx(0.3)


def test_forced_step_moves_the_circle(circle):
    s = make_model_surface(circle, 64)
    field = build_forcing(ForcingSpec(kind="radial", c=0.1), GeometryFamily.CURVE)
    out = step_rmcff(s, field, 0.0, 1e-3)
    # outward radial forcing on the static model pushes it out by about c dt
    assert radial_deviation(out, circle) == pytest.approx(1e-4, rel=0.05)


@pytest.mark.parametrize('kind,resolution,dt', [
    (ModelKind.CIRCLE, 64, 1e-3),
    (ModelKind.CYLINDER, 121, 1e-2),
])
def test_residual_vanishes_on_static_models(kind, resolution, dt):
    model = ShrinkerModel(kind=kind)
    result = residual_by_restepping(make_model_surface(model, resolution), None, dt)
    assert result.norm < 1e-8


def test_residual_needs_equal_spacing(circle):
    s0 = make_model_surface(circle, 32)
    s1 = s0.with_nodes(s0.nodes, 0.1)
    s2 = s0.with_nodes(s0.nodes, 0.3)
    with pytest.raises(InvalidInputError):
        evolution_residual_phi(s0, s1, s2, None)


def test_spatial_refinement_is_second_order():
    study = spatial_refinement()
    assert len(study.orders) == 2
    assert np.all(study.orders >= 1.8)
    assert np.all(np.diff(study.norms) < 0)


def test_temporal_refinement_is_first_order():
    study = temporal_refinement()
    assert np.all(study.orders >= 0.9)
    np.testing.assert_allclose(study.steps[1:] / study.steps[:-1], 0.5)


def test_observed_orders_need_nonzero_residuals():
    np.testing.assert_allclose(observed_orders([0.1, 0.05], [4e-3, 1e-3]), 2.0)
    with pytest.raises(InvalidInputError):
        observed_orders([0.1, 0.05], [1e-3, 0.0])
    with pytest.raises(InvalidInputError):
        observed_orders([0.1], [1e-3])


def test_graphical_scale_of_circle(circle):
    assert math.isinf(graphical_scale(make_model_surface(circle, 64), circle, 0.5).radius)
    rough = make_model_surface(circle, 64, mode_perturbation(circle, {2: 0.3}, 64))
    readout = graphical_scale(rough, circle, 0.5)
    assert readout.radius == 0.0 and readout.flag == "zero scale"


def test_graphical_scale_of_cylinder(cylinder):
    assert graphical_scale(make_model_surface(cylinder, 241), cylinder, 0.5).radius == pytest.approx(12.0)
    z = np.linspace(-12.0, 12.0, 241)
    far_bump = make_graph_function(cylinder, z, 0.3 * np.exp(-(z - 8.0) ** 2), 12.0)
    s = make_model_surface(cylinder, 241, far_bump)
    radius = graphical_scale(s, cylinder, 0.5).radius
    assert 5.0 < radius < 8.0


def test_calibration_bisects_to_the_root():
    target = SQRT2 + 0.01

    def make_initial(offset):
        return make_round_surface(ModelKind.CIRCLE, SQRT2 * (1.0 + offset), 32)

    def deviation(s):
        return float(np.mean(np.linalg.norm(s.nodes, axis=1))) - target

    result = calibrate_offset(make_initial, deviation)
    assert result.offset == pytest.approx(0.01 / SQRT2, abs=1e-6)
    with pytest.raises(InvalidInputError):
        calibrate_offset(make_initial, lambda s: 1.0)


def test_calibration_runs_through_collapsing_trials(circle):
    # trial offsets near -0.05 shrink the chords below the explicit bound before the run ends
    start = make_model_surface(circle, 96, mode_perturbation(circle, {2: 0.05}, 96))

    def make_initial(offset):
        return start.with_nodes((1.0 + offset) * start.nodes, 0.0)

    deviation = flow_deviation(circle, None, (0.0, 2.0), 1.0 / 800.0)
    assert deviation(make_initial(-0.05)) == pytest.approx(-DEVIATION_LIMIT)
    result = calibrate_offset(make_initial, deviation, limit=DEVIATION_LIMIT)
    assert abs(result.deviation) < 1e-3
    assert -0.05 < result.offset < 0.05


def test_calibration_rejects_a_jump():
    def make_initial(offset):
        return make_round_surface(ModelKind.CIRCLE, SQRT2 * (1.0 + offset), 32)

    def deviation(s):
        above = np.mean(np.linalg.norm(s.nodes, axis=1)) > SQRT2 * 1.01
        return 0.3 if above else -0.3

    with pytest.raises(CalibrationError):
        calibrate_offset(make_initial, deviation, limit=0.3)
    assert calibrate_offset(make_initial, deviation).offset == pytest.approx(0.01, abs=1e-6)


def test_rescaling_commutes_with_integration(circle):
    gf = mode_perturbation(circle, {2: 0.05}, 96)
    start = make_model_surface(circle, 96, gf, time=-1.0)
    s_end = -math.exp(-1.0)
    unrescaled = run_trajectory(start, None, Picture.UNRESCALED, (-1.0, s_end), (s_end + 1.0) / 2000,
                                record_every=2000)
    rescaled = run_trajectory(rescale_map(start), None, Picture.RESCALED, (0.0, 1.0), 1e-3, record_every=1000)

    mapped = rescale_map(unrescaled).states[-1]
    assert mapped.time == pytest.approx(1.0)
    h = float(np.max(np.linalg.norm(np.diff(start.nodes, axis=0), axis=1)))
    U_mapped = graph_over_model(mapped, circle).samples
    U_rescaled = graph_over_model(rescaled.states[-1], circle).samples
    gap = np.max(np.abs(U_mapped - U_rescaled))
    assert gap <= 5.0 * (1e-3 + h ** 2)


def test_forced_rescaling_commutes_only_with_derived_pullback(circle):
    # gaps at N = 96: about 2e-4 with the derived pull-back against 2e-2 with the stated one
    gf = mode_perturbation(circle, {2: 0.05}, 96)
    start = make_model_surface(circle, 96, gf, time=-1.0)
    s_end = -math.exp(-1.0)
    spec = ForcingSpec(kind="bump", c=0.1, width=3.0)
    unrescaled = run_trajectory(start, spec, Picture.UNRESCALED, (-1.0, s_end), (s_end + 1.0) / 2000,
                                record_every=2000)
    mapped = graph_over_model(rescale_map(unrescaled).states[-1], circle).samples
    h = float(np.max(np.linalg.norm(np.diff(start.nodes, axis=0), axis=1)))

    gaps = {}
    for convention in (GRescaling.DERIVED, GRescaling.STATED):
        forced = spec.model_copy(update={"g_rescaling": convention})
        rescaled = run_trajectory(rescale_map(start), forced, Picture.RESCALED, (0.0, 1.0), 1e-3,
                                  record_every=1000)
        gaps[convention] = np.max(np.abs(graph_over_model(rescaled.states[-1], circle).samples - mapped))
    assert gaps[GRescaling.DERIVED] <= 5.0 * (1e-3 + h ** 2)
    assert gaps[GRescaling.STATED] > 10.0 * gaps[GRescaling.DERIVED]
