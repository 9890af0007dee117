import math

import numpy as np
import pytest
from pydantic import ValidationError

from common.enums import K1Exponent, ModelKind, Picture
from common.errors import InvalidInputError, MissingSeriesError
from flow.trajectory import run_trajectory
from gaussian.cutoff import cutoff_value, required_k_psi, smooth_step
from gaussian.entropy import EntropySearch, entropy_estimate
from gaussian.functionals import area_ratio_bound, cutoff_functional, f_functional, phi_norm_sq
from gaussian.modified import (
    compact_weight,
    gaussian_constants,
    localized_constants,
    modified_functional_compact,
    modified_functional_localized,
)
from gaussian.monotone import almost_monotone_J, cutoff_series_for_j, j_correction, k_limit_gap
from gaussian.scales import STATIC_FLOOR, scale_from_integral, shrinker_scale
from mesh.surfaces import make_flat_line, make_model_surface, make_round_surface
from schema.functional_config import FunctionalConfig
from schema.scale_readout import ScaleReadout

F_SHRINKER = math.sqrt(2.0 * math.pi / math.e)


def test_gaussian_area_of_models(circle, cylinder):
    assert f_functional(make_model_surface(circle, 512)) == pytest.approx(F_SHRINKER, abs=1e-4)
    assert f_functional(make_model_surface(cylinder, 241)) == pytest.approx(F_SHRINKER, abs=1e-4)
    assert circle.f_value == pytest.approx(F_SHRINKER, rel=1e-14)


def test_gaussian_area_of_flat_line():
    assert f_functional(make_flat_line(10.0, 2001)) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize('radius', [0.5, 1.0, 3.0])
def test_circle_area_is_scale_covariant(radius):
    # F_{0,sigma} of the circle of radius sqrt(2 sigma) does not depend on sigma
    sigma = radius ** 2 / 2.0
    s = make_round_surface(ModelKind.CIRCLE, radius, 512)
    assert f_functional(s, sigma=sigma) == pytest.approx(F_SHRINKER, abs=1e-4)


def test_off_axis_center_on_profile(cylinder):
    s = make_model_surface(cylinder, 241)
    shifted = f_functional(s, y=(0.5, 0.0, 0.0))
    rotated = f_functional(s, y=(0.0, 0.5, 0.0))
    assert shifted == pytest.approx(rotated, rel=1e-12)
    assert shifted < f_functional(s) + 1e-12


def test_center_dimension_is_checked(circle):
    with pytest.raises(InvalidInputError):
        f_functional(make_model_surface(circle, 32), y=(0.0, 0.0, 0.0))


def test_smooth_step_and_cutoff():
    u = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    np.testing.assert_allclose(smooth_step(u), [1.0, 1.0, 0.5, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(cutoff_value([0.0, 3.0, 4.0, 9.0], 1.0), [1.0, 1.0, 0.0, 0.0], atol=1e-15)
    assert required_k_psi() > 0


def test_cutoff_below_required_bound_is_rejected():
    with pytest.raises(ValidationError):
        FunctionalConfig(K_psi=0.5 * required_k_psi())


def test_cutoff_functional_equals_area_inside_ball(circle, functional_cfg):
    s = make_model_surface(circle, 256)
    assert cutoff_functional(s, functional_cfg) == pytest.approx(f_functional(s), rel=1e-12)
    assert cutoff_functional(s, functional_cfg, power=2, time=1.0) == pytest.approx(f_functional(s), rel=1e-12)
    with pytest.raises(InvalidInputError):
        cutoff_functional(s, functional_cfg, power=3)


def test_cutoff_functional_is_sandwiched():
    cfg = FunctionalConfig(r0=0.4)
    s = make_flat_line(6.0, 1201)
    value = cutoff_functional(s, cfg)
    assert f_functional(s, radius=1.2) <= value + 1e-12
    assert value <= f_functional(s, radius=1.6) + 1e-12


def test_phi_vanishes_on_models_and_not_elsewhere(circle, cylinder):
    assert phi_norm_sq(make_model_surface(circle, 128)) < 1e-20
    assert phi_norm_sq(make_model_surface(cylinder, 241)) < 1e-20
    assert phi_norm_sq(make_round_surface(ModelKind.CIRCLE, 1.0, 128)) > 1e-3


def test_area_ratio_of_circle(circle):
    bound = area_ratio_bound(make_model_surface(circle, 256))
    # small balls see a nearly straight arc; the whole circle gives pi
    assert 1.9 < bound < 3.2


def test_gaussian_constants_closed_form():
    for n in (1, 2):
        gc = gaussian_constants(1.0, n)
        assert gc.C_n == pytest.approx(gc.C_n_closed_form, rel=1e-8)
        assert gc.c > 0
    with pytest.raises(InvalidInputError):
        gaussian_constants(1.0, 3)


def test_localized_constants_formulas():
    C_n = gaussian_constants(1.0, 2).C_n
    loc = localized_constants(K=0.0, K_psi=1.0, r0=1.0, lambda0=4.0, n=2, C_n=C_n)
    assert loc.K1 == pytest.approx(2.0)
    assert loc.K2 == pytest.approx(16.0 * C_n * 12.0 * math.pi)
    assert loc.K3 == pytest.approx(2.0 * loc.K2)

    derivation = localized_constants(0.1, 1.0, 2.0, 4.0, 1, C_n)
    stated = localized_constants(0.1, 1.0, 2.0, 4.0, 1, C_n, K1Exponent.STATED)
    assert derivation.K1 == pytest.approx(0.01 + 2.0 / 4.0 + 0.05)
    assert stated.K1 == pytest.approx(0.01 + 2.0 * 4.0 + 0.05)


def test_modified_functionals(circle, functional_cfg):
    s = make_model_surface(circle, 256)
    cfg = FunctionalConfig(K=0.3)
    compact = modified_functional_compact(2.0, s, cfg)
    assert compact.mu == pytest.approx(compact_weight(0.3, 2.0))
    assert compact.value == pytest.approx(compact.mu * f_functional(s))

    loc = modified_functional_localized(1.0, s, functional_cfg)
    assert loc.value == pytest.approx(loc.mu * loc.F_hat + loc.remainder)
    assert loc.remainder == pytest.approx(loc.constants.K3 * math.exp(-0.5))
    with pytest.raises(InvalidInputError):
        modified_functional_compact(math.inf, s, cfg)


def test_scale_from_integral():
    static = scale_from_integral(4.0, 0.0)
    assert static.flag == "static" and math.isinf(static.R_T)
    assert static.R_star == pytest.approx(2.0, rel=1e-12)

    r = scale_from_integral(4.0, math.exp(-8.0))
    assert r.R_T == pytest.approx(4.0)
    assert r.R_star <= r.R_T and r.R_star <= 2.0
    assert r.R_loc == pytest.approx(2.0 * math.sqrt(5.0))

    undefined = scale_from_integral(1.0, 2.0)
    assert undefined.flag == "undefined" and math.isnan(undefined.R_T) and math.isnan(undefined.R_star)
    assert scale_from_integral(4.0, 0.5 * STATIC_FLOOR).flag == "static"


def test_scale_readout_bounds_are_enforced():
    with pytest.raises(ValidationError):
        ScaleReadout(T=1.0, phi_window_integral=0.1, R_T=1.0, R_loc=2.0, R_star=3.0)


def test_shrinker_scale_on_static_trajectory(static_circle_traj):
    readout = shrinker_scale(static_circle_traj, 2.0)
    assert readout.flag == "static"
    assert readout.R_star == pytest.approx(math.sqrt(2.0), rel=1e-9)


def test_shrinker_scale_needs_series_or_config(circle, functional_cfg):
    traj = run_trajectory(make_model_surface(circle, 32), None, Picture.RESCALED, (0.0, 2.0), 0.01)
    with pytest.raises(MissingSeriesError):
        shrinker_scale(traj, 1.0)
    assert shrinker_scale(traj, 1.0, functional_cfg).flag == "static"


def test_entropy_of_shrinker_circle(circle):
    estimate = entropy_estimate(make_model_surface(circle, 256), EntropySearch(max_workers=2))
    # the grid contains (0, sigma=1); refinement can only raise the value
    assert estimate.value >= estimate.grid_value
    assert estimate.value == pytest.approx(F_SHRINKER, abs=1e-3)
    assert estimate.sigma == pytest.approx(1.0, rel=0.05)


def test_j_correction_limit():
    assert j_correction(0.0, 2.0, 0.3) == pytest.approx(0.6)
    assert k_limit_gap(2.0, 0.3) < 1e-6
    np.testing.assert_allclose(j_correction(1.0, 1.0, [0.0, 1.0]), [0.0, 2.0 * math.expm1(0.5)])


def test_almost_monotone_J_on_shrinking_circle(functional_cfg):
    start = make_round_surface(ModelKind.CIRCLE, math.sqrt(2.0), 64, time=-1.0)
    traj = run_trajectory(start, None, Picture.UNRESCALED, (-1.0, -0.5), 1e-3, record_every=10)
    series = cutoff_series_for_j(traj.states, None, 0.0, functional_cfg)
    report = almost_monotone_J(traj.times, series, None, 0.0, functional_cfg, n=1, h=traj.mesh_size)
    assert report.verdict.value == "pass"
    J = np.array(report.auxiliary["J"])
    assert np.all(np.diff(J) <= report.tolerance)


def test_almost_monotone_J_rejects_bad_inputs(functional_cfg):
    times = np.array([-1.0, -0.5])
    values = np.array([1.0, 1.0])
    with pytest.raises(InvalidInputError):
        almost_monotone_J(times, values, None, -0.5, functional_cfg, n=1)
    with pytest.raises(InvalidInputError):
        almost_monotone_J(times, values, (2.0, 0.0), 0.0, functional_cfg, n=1)
    with pytest.raises(InvalidInputError):
        almost_monotone_J(times[:1], values[:1], None, 0.0, functional_cfg, n=1)
