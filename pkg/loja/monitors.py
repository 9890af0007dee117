"""
Empirical monitors of the conclusions that are observed rather than
proved here: the fitted differential inequality, the uniqueness series,
short-time graph persistence, the scale comparison and the family-level
mean value constant.
"""
import logging
import math
from typing import Iterable, Optional, Sequence

import numpy as np

from common.enums import Picture, Provenance, Verdict
from common.errors import GraphExtractionError, InvalidInputError
from common.tolerances import differential_tolerance
from flow.graphical import graphical_scale
from gaussian.scales import shrinker_scale
from mesh.graphs import graph_l2, graph_over_model
from schema.check_report import CheckReport, ConstantRecord
from schema.functional_config import FunctionalConfig
from schema.shrinker_model import ShrinkerModel
from schema.trajectory import FlowTrajectory

logger = logging.getLogger(__name__)

DIFFERENTIAL_ANCHOR = "d/dt F~ <= -C1 (F~ - F(Gamma))^{1+gamma} + C1 e^{-(1+gamma) t}"
UNIQUENESS_ANCHOR = "partial sums of delta_j + e^{-j/2}, delta_j = sqrt(F~(j-1) - F~(j+2)), level off"
PERSISTENCE_ANCHOR = "graph norms at t + 1/C0 stay below 2 norms(t) + c/C0"
SCALE_ANCHOR = "R_* <= R_T, R_* <= sqrt(T), graphical scale >= fraction * R_*"

GAMMA_GRID = tuple(np.round(np.arange(0.05, 1.0, 0.05), 2))


def fit_differential_inequality(
    traj: FlowTrajectory,
    model: ShrinkerModel,
    series: str = "F_tilde",
    gamma_grid: Sequence[float] = GAMMA_GRID,
    tolerance: Optional[float] = None,
) -> CheckReport:
    """
    Fits (C1, gamma). For each gamma the admissible C1 form an interval
    [lo, hi]; the gamma with the largest finite admissible C1 is reported.
    The values are fitted, not the constants of the cited inequality.
    """
    name = "differential_inequality"
    if traj.picture != Picture.RESCALED:
        raise InvalidInputError("the differential inequality is fitted on rescaled trajectories")
    F_tilde = traj.series_array(series)
    t = traj.times
    if t.size < 3:
        raise InvalidInputError("need at least three recorded states")
    dF = (F_tilde[2:] - F_tilde[:-2]) / (t[2:] - t[:-2])
    excess = np.maximum(F_tilde[1:-1] - model.f_value, 0.0)
    tm = t[1:-1]
    tol = differential_tolerance(traj.step or float(np.median(np.diff(t))), traj.mesh_size) \
        if tolerance is None else float(tolerance)
    need = -(dF - tol)

    best = None
    for gamma in gamma_grid:
        b = excess ** (1.0 + gamma) - np.exp(-(1.0 + gamma) * tm)
        pos, neg = b > 0, b < 0
        hi = float(np.min(need[pos] / b[pos])) if np.any(pos) else math.inf
        lo = float(np.max(need[neg] / b[neg])) if np.any(neg) else 0.0
        lo = max(lo, 0.0)
        if lo > hi:
            continue
        C1 = hi if math.isfinite(hi) else max(lo, 1.0)
        key = (math.isfinite(hi), C1)
        if best is None or key > best[0]:
            best = (key, float(gamma), C1, b)

    if best is None:
        return CheckReport.from_slacks(
            name, DIFFERENTIAL_ANCHOR, [], tol, force_fail=True,
            notes=["no (C1, gamma) on the grid satisfies the inequality at every sample"])
    _, gamma, C1, b = best
    slacks = -C1 * b - dF
    notes = [] if best[0][0] else ["C1 unbounded above on this trajectory; reported at the lower end"]
    return CheckReport.from_slacks(
        name=name,
        anchor=DIFFERENTIAL_ANCHOR,
        slacks=slacks,
        tolerance=tol,
        sample_times=tm,
        constants={
            "C1": ConstantRecord(value=C1, provenance=Provenance.FITTED, method="largest admissible C1"),
            "gamma": ConstantRecord(value=gamma, provenance=Provenance.FITTED,
                                    method="grid gamma with the largest admissible C1"),
        },
        notes=notes,
    )


def check_uniqueness_series(
    traj: FlowTrajectory,
    series: str = "F_tilde",
    model: Optional[ShrinkerModel] = None,
) -> CheckReport:
    """
    a_j = delta_j + e^{-j/2} on the integers j with [j-1, j+2] recorded.
    Levelling off means a_j does not increase over the second half and the
    last term is at most half the first.
    """
    name = "uniqueness_series"
    F_tilde = traj.series_array(series)
    js = [j for j in range(int(math.ceil(traj.t_start + 1.0)), int(math.floor(traj.t_end - 2.0)) + 1)]
    if len(js) < 3:
        return CheckReport.vacuous(name, UNIQUENESS_ANCHOR, "fewer than three integer windows [j-1, j+2]")

    delta = np.array([
        math.sqrt(max(F_tilde[traj.index_of(j - 1.0)] - F_tilde[traj.index_of(j + 2.0)], 0.0)) for j in js
    ])
    terms = delta + np.exp(-0.5 * np.asarray(js, dtype=float))
    half = len(js) // 2
    slacks = list(terms[half:-1] - terms[half + 1:]) + [0.5 * terms[0] - terms[-1]]
    aux = {"j": [float(j) for j in js], "delta": [float(x) for x in delta],
           "partial_sums": [float(x) for x in np.cumsum(terms)]}

    if model is not None:
        steps = []
        try:
            for j in js:
                g0 = graph_over_model(traj.states[traj.index_of(float(j))], model)
                g1 = graph_over_model(traj.states[traj.index_of(float(j) + 1.0)], model)
                steps.append(graph_l2(g1, g0))
            aux["graph_steps"] = steps
            aux["graph_step_sums"] = [float(x) for x in np.cumsum(steps)]
        except GraphExtractionError as e:
            logger.info(f"{name}: graph steps skipped ({e})")

    return CheckReport.from_slacks(
        name=name,
        anchor=UNIQUENESS_ANCHOR,
        slacks=slacks,
        tolerance=1e-12,
        sample_times=[float(j) for j in js[half + 1:]] + [float(js[-1])],
        notes=["last slack compares the final term with half the first"],
        auxiliary=aux,
    )


def check_graph_persistence(traj: FlowTrajectory, model: ShrinkerModel, horizon: float = 0.5) -> CheckReport:
    """Fits c in norms(t + horizon) <= 2 norms(t) + c horizon, with horizon = 1/C0."""
    name = "graph_persistence"
    if traj.has("graph_c2alpha"):
        norms = traj.series_array("graph_c2alpha")
    else:
        norms = np.array([_c2alpha_or_nan(s, model) for s in traj.states])
    bad = np.nonzero(~np.isfinite(norms))[0]
    if bad.size:
        where = float(traj.times[bad[0]])
        return CheckReport.vacuous(name, PERSISTENCE_ANCHOR, f"graph over the model lost at t={where:.6g}", where)

    step = traj.step or float(np.median(np.diff(traj.times)))
    k = int(round(horizon / step))
    if k < 1 or abs(k * step - horizon) > 1e-9 * max(1.0, horizon) or k >= norms.size:
        raise InvalidInputError(f"horizon {horizon} is not a positive multiple of the record step {step} "
                                "inside the trajectory")
    grow = norms[k:] - 2.0 * norms[:-k]
    c = max(0.0, float(np.max(grow)) / horizon)
    slacks = 2.0 * norms[:-k] + c * horizon - norms[k:]
    return CheckReport.from_slacks(
        name=name,
        anchor=PERSISTENCE_ANCHOR,
        slacks=slacks,
        tolerance=1e-12,
        sample_times=traj.times[:-k],
        constants={
            "c": ConstantRecord(value=c, provenance=Provenance.FITTED, method="max (norms(t+h) - 2 norms(t)) / h"),
            "C0": ConstantRecord(value=1.0 / horizon, provenance=Provenance.CONFIGURED, method="1 / horizon"),
        },
    )


def _c2alpha_or_nan(s, model: ShrinkerModel) -> float:
    try:
        return graph_over_model(s, model).norms.c2_alpha
    except GraphExtractionError:
        return math.nan


def check_scale_comparison(
    traj: FlowTrajectory,
    T_values: Iterable[float],
    cfg: FunctionalConfig,
    model: ShrinkerModel,
    eps: float = 0.5,
) -> CheckReport:
    name = "scale_comparison"
    rows = {"T": [], "R_T": [], "R_star": [], "R_loc": [], "graphical": []}
    slacks, times = [], []
    fraction = math.inf
    for T in T_values:
        readout = shrinker_scale(traj, float(T), cfg)
        gs = graphical_scale(traj.states[traj.index_of(float(T))], model, eps)
        for key, value in (("T", T), ("R_T", readout.R_T), ("R_star", readout.R_star),
                           ("R_loc", readout.R_loc), ("graphical", gs.radius)):
            rows[key].append(float(value))
        if math.isnan(readout.R_star):
            continue
        if math.isfinite(readout.R_T):
            slacks.append(readout.R_T - readout.R_star)
            times.append(float(T))
        slacks.append(math.sqrt(T) - readout.R_star if T > 0 else 0.0)
        times.append(float(T))
        if readout.R_star > 0:
            fraction = min(fraction, gs.radius / readout.R_star)

    if not slacks:
        return CheckReport.vacuous(name, SCALE_ANCHOR, "R_* undefined at every sampled T")
    if math.isnan(fraction):
        fraction = 0.0
    return CheckReport.from_slacks(
        name=name,
        anchor=SCALE_ANCHOR,
        slacks=slacks,
        tolerance=1e-12,
        sample_times=times,
        constants={
            "graphical_fraction": ConstantRecord(value=fraction, provenance=Provenance.FITTED,
                                                 method="min over T of graphical scale / R_*"),
            "eps": ConstantRecord(value=eps, provenance=Provenance.CONFIGURED, method="graphical closeness"),
        },
        auxiliary=rows,
    )


def fit_mean_value_constant(reports: Iterable[CheckReport]) -> ConstantRecord:
    """Smallest C valid across a scenario family: the largest per-scenario fitted C."""
    values = [r.constants["C_fit"].value for r in reports
              if r.verdict != Verdict.VACUOUS and "C_fit" in r.constants]
    if not values:
        raise InvalidInputError("no mean value report with a fitted constant")
    return ConstantRecord(value=max(values), provenance=Provenance.FITTED,
                          method=f"max of C_fit over {len(values)} scenarios")
