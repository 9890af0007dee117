import math

import numpy as np
import pytest
from pydantic import ValidationError

from common.enums import Picture, Provenance, Verdict
from common.errors import InvalidInputError
from flow.recorders import standard_recorders
from flow.trajectory import run_trajectory
from loja.certificates import (
    check_discrete_loja,
    check_extension_phi_bound,
    check_l2_control,
    check_mean_value,
    check_monotonicity_compact,
    check_quadratic_bound,
    distance_sup_at,
)
from loja.lemmas import (
    exact_ode_solution,
    fit_tail_exponent,
    hypothesis_violators,
    lemma_consistency,
    verify_discrete_lemma,
    verify_ode_lemma,
    verify_summability,
)
from loja.monitors import (
    check_graph_persistence,
    check_scale_comparison,
    check_uniqueness_series,
    fit_differential_inequality,
    fit_mean_value_constant,
)
from mesh.surfaces import make_model_surface
from schema.check_report import CheckReport, ConstantRecord
from schema.sequence_data import SequenceData
from schema.shrinker_model import ShrinkerModel

LENGTH = 64


def exact_sequence(gamma, with_error=False):
    grid = 1.0 + np.arange(LENGTH, dtype=float)
    E = grid ** (-2.0 * (gamma + 1.0) / gamma) if with_error else None
    return SequenceData(grid=grid, values=exact_ode_solution(gamma, 1.0, LENGTH), error_series=E, gamma=gamma, K=1.0)


@pytest.mark.parametrize('gamma', [0.5, 1.0, 2.0])
@pytest.mark.parametrize('with_error', [False, True])
def test_lemmas_pass_on_exact_solution(gamma, with_error):
    d = exact_sequence(gamma, with_error)
    ode = verify_ode_lemma(d)
    disc = verify_discrete_lemma(d)
    assert ode.verdict == Verdict.PASS
    assert disc.verdict == Verdict.PASS
    assert ode.constants["C"].value >= ode.constants["C_fit"].value
    assert disc.constants["t0"].value > 2.0


@pytest.mark.parametrize('gamma', [0.5, 1.0, 2.0])
def test_lemmas_agree_on_exact_solution(gamma):
    assert lemma_consistency(exact_sequence(gamma)).verdict == Verdict.PASS


@pytest.mark.parametrize('gamma', [0.5, 1.0, 2.0])
def test_violators_are_vacuous(gamma):
    for d in hypothesis_violators(gamma, count=100, seed=7):
        assert verify_ode_lemma(d).verdict == Verdict.VACUOUS
        disc = verify_discrete_lemma(d)
        assert disc.verdict == Verdict.VACUOUS
        assert disc.vacuous_at is not None


def test_discrete_lemma_needs_unit_grid():
    grid = 1.0 + 2.0 * np.arange(10, dtype=float)
    d = SequenceData(grid=grid, values=1.0 / grid, gamma=1.0)
    with pytest.raises(InvalidInputError):
        verify_discrete_lemma(d)


def test_sequence_data_validation():
    with pytest.raises(ValidationError):
        SequenceData(grid=[1.0, 2.0], values=[1.0, -0.5], gamma=1.0)
    with pytest.raises(ValidationError):
        SequenceData(grid=[1.0, 1.0], values=[1.0, 0.5], gamma=1.0)


def test_summability_of_power_tail():
    deltas = np.arange(1, 1001, dtype=float) ** -1.5
    assert fit_tail_exponent(deltas) == pytest.approx(2.0, abs=0.1)
    report = verify_summability(deltas)
    assert report.verdict == Verdict.PASS
    assert report.constants["rho"].provenance == Provenance.FITTED
    lower = 2.0 / (1.0 + report.constants["rho"].value)
    assert lower < report.constants["alpha_bar"].value < 1.0


def test_summability_of_finite_support():
    report = verify_summability([1.0, 0.5, 0.0, 0.0])
    assert report.verdict == Verdict.PASS
    assert "finitely many nonzero terms" in report.notes


def test_summability_without_decay_is_vacuous():
    harmonic = 1.0 / np.arange(1, 1001, dtype=float)
    assert verify_summability(harmonic).verdict == Verdict.VACUOUS
    assert verify_summability(harmonic, rho=0.9).verdict == Verdict.VACUOUS


def test_summability_rejects_bad_inputs():
    deltas = np.arange(1, 101, dtype=float) ** -1.5
    with pytest.raises(InvalidInputError):
        verify_summability(deltas, rho=2.0, alpha_bar=0.5)
    with pytest.raises(InvalidInputError):
        verify_summability([1.0, -0.1, 0.0])


def test_report_verdict_must_match_slacks():
    with pytest.raises(ValidationError):
        CheckReport(name="x", anchor="a", slacks=[-1.0], verdict=Verdict.PASS)
    failed = CheckReport.from_slacks("x", "a", [1.0], 0.0, force_fail=True)
    assert failed.verdict == Verdict.FAIL
    assert len(failed.slacks) == 2


def test_nan_slack_fails_the_report():
    report = CheckReport.from_slacks("x", "a", [float("nan"), 0.0], 0.0)
    assert report.verdict == Verdict.FAIL
    assert math.isnan(report.min_slack)


def test_static_certificates_pass(static_circle_traj, circle, functional_cfg):
    traj = static_circle_traj
    reports = [
        check_monotonicity_compact(traj),
        check_l2_control(traj, 0.0, 2.0),
        check_l2_control(traj, 0.0, 2.0, localized=True),
        check_mean_value(traj, 0.0, 3.0, 1.0, 2.0),
        check_extension_phi_bound(traj, [1.0, 2.0], functional_cfg, circle),
    ]
    for report in reports:
        assert report.verdict == Verdict.PASS, report.name


def test_static_monitors_pass(static_circle_traj, circle, functional_cfg):
    traj = static_circle_traj
    uniqueness = check_uniqueness_series(traj, model=circle)
    assert uniqueness.verdict == Verdict.PASS
    assert "graph_steps" in uniqueness.auxiliary

    assert check_graph_persistence(traj, circle, 0.5).verdict == Verdict.PASS
    assert check_scale_comparison(traj, [1.0, 2.0, 3.0, 4.0, 5.0], functional_cfg, circle).verdict == Verdict.PASS

    fitted = fit_differential_inequality(traj, circle)
    assert fitted.verdict == Verdict.PASS
    # F~ never exceeds the model value by enough to bound C1 from above
    assert fitted.constants["C1"].value == pytest.approx(1.0)
    assert fitted.notes


def test_persistence_horizon_must_be_a_record_multiple(static_circle_traj, circle):
    with pytest.raises(InvalidInputError):
        check_graph_persistence(static_circle_traj, circle, 0.33)


def test_l2_control_window_is_ordered(static_circle_traj):
    with pytest.raises(InvalidInputError):
        check_l2_control(static_circle_traj, 2.0, 1.0)


@pytest.mark.parametrize('model', [ShrinkerModel.circle(), ShrinkerModel.cylinder()])
def test_quadratic_bound_is_second_order(model):
    # the even part in eps drops the cubic term that survives on the cylinder
    report = check_quadratic_bound(model)
    assert report.verdict == Verdict.PASS
    np.testing.assert_allclose(report.auxiliary["ratios"], 4.0, rtol=0.05)


def test_discrete_loja_needs_enough_windows(circle, functional_cfg):
    traj = run_trajectory(make_model_surface(circle, 32), None, Picture.RESCALED, (0.0, 2.0), 0.01,
                          recorders=standard_recorders(circle, functional_cfg), record_every=10)
    assert check_discrete_loja(traj, circle, functional_cfg).verdict == Verdict.VACUOUS


def test_discrete_loja_on_static_model_is_degenerate(static_circle_traj, circle, functional_cfg):
    report = check_discrete_loja(static_circle_traj, circle, functional_cfg)
    assert report.verdict == Verdict.VACUOUS
    assert any("degenerate" in note for note in report.notes)


def test_mean_value_constant_over_a_family():
    def report(c):
        return CheckReport.from_slacks(
            "mean_value", "a", [0.0], 0.0,
            constants={"C_fit": ConstantRecord(value=c, provenance=Provenance.FITTED)})

    record = fit_mean_value_constant([report(0.5), report(2.0), report(1.0)])
    assert record.value == pytest.approx(2.0)
    assert record.provenance == Provenance.FITTED
    with pytest.raises(InvalidInputError):
        fit_mean_value_constant([])


def test_exact_solution_starts_at_one():
    f = exact_ode_solution(1.0, 1.0, 4)
    np.testing.assert_allclose(f, [1.0, 0.5, 1.0 / 3.0, 0.25])
    assert math.isclose(exact_ode_solution(2.0, 1.0, 2)[1], 1.0 / math.sqrt(3.0))


def test_static_model_does_not_move(static_circle_traj, circle):
    distances = distance_sup_at(static_circle_traj, circle, [1.0, 2.0, 4.0])
    np.testing.assert_allclose(distances, 0.0, atol=1e-10)
