import logging
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, List, Mapping, Optional

import numpy as np

from common.enums import ModelKind, Picture, Provenance
from common.tolerances import TOL_FLOOR
from flow.forcing_checks import check_forcing
from flow.interface.base_forcing import BaseForcingField
from flow.residual import residual_by_restepping, spatial_refinement, temporal_refinement
from flow.trajectory import rescale_map, run_trajectory
from gaussian.monotone import almost_monotone_J, cutoff_series_for_j
from loja.certificates import (
    check_discrete_loja,
    check_distance_decay,
    check_extension_phi_bound,
    check_l2_control,
    check_mean_value,
    check_monotonicity_compact,
    check_quadratic_bound,
)
from loja.monitors import (
    check_graph_persistence,
    check_scale_comparison,
    check_uniqueness_series,
    fit_differential_inequality,
)
from runner.anchors import CHECK_ANCHORS, RESIDUAL_ANCHOR
from runner.config import ScenarioConfig
from schema.check_report import CheckReport, ConstantRecord
from schema.shrinker_model import ShrinkerModel
from schema.surface_state import SurfaceState
from schema.trajectory import FlowTrajectory

logger = logging.getLogger(__name__)

# residual at dt/2 may exceed the residual at dt by at most this factor
RESIDUAL_GROWTH = 1.1
RESIDUAL_SAMPLES = 4
# smallest accepted refinement orders of the residual
SPATIAL_ORDER = 1.8
TEMPORAL_ORDER = 0.9
# sampling radius of the forcing spot check
FORCING_RADIUS = 4.0


@dataclass
class ScenarioContext:
    cfg: ScenarioConfig
    model: ShrinkerModel
    initial: SurfaceState
    traj: FlowTrajectory
    field: Optional[BaseForcingField]


Check = Callable[[ScenarioContext], CheckReport]


def interior_times(traj: FlowTrajectory) -> List[float]:
    """Integer T with [T - 1, T + 1] inside the trajectory."""
    lo, hi = math.ceil(traj.t_start + 1.0 - 1e-9), math.floor(traj.t_end - 1.0 + 1e-9)
    return [float(T) for T in range(int(lo), int(hi) + 1)]


def _forcing(ctx: ScenarioContext) -> CheckReport:
    return check_forcing(ctx.cfg.forcing, FORCING_RADIUS, ctx.model.family)


def _monotonicity(ctx: ScenarioContext) -> CheckReport:
    return check_monotonicity_compact(ctx.traj)


def _l2(ctx: ScenarioContext) -> CheckReport:
    return check_l2_control(ctx.traj, ctx.traj.t_start, ctx.traj.t_end)


def _l2_localized(ctx: ScenarioContext) -> CheckReport:
    return check_l2_control(ctx.traj, ctx.traj.t_start, ctx.traj.t_end, localized=True)


def companion_trajectory(ctx: ScenarioContext) -> FlowTrajectory:
    """
    The unrescaled flow through the initial slice, from s0 = -e^{-t_start}
    to s0 / 2, with ds = e^{-t_start} dt.
    """
    if ctx.cfg.picture == Picture.UNRESCALED:
        return ctx.traj
    start = rescale_map(ctx.initial.with_nodes(ctx.initial.nodes, ctx.cfg.t_start), to_rescaled=False)
    s0 = start.time
    return run_trajectory(
        start,
        ctx.cfg.forcing,
        Picture.UNRESCALED,
        (s0, 0.5 * s0),
        ctx.cfg.dt * (-s0),
        record_every=ctx.cfg.record_every,
        scheme=ctx.cfg.scheme,
    )


def _almost_monotone_J(ctx: ScenarioContext) -> CheckReport:
    companion = companion_trajectory(ctx)
    # centre at the origin, sigma_bar at the singular time s = 0
    series = cutoff_series_for_j(companion.states, None, 0.0, ctx.cfg.functional)
    return almost_monotone_J(companion.times, series, None, 0.0, ctx.cfg.functional, ctx.model.n,
                             h=companion.mesh_size)


def _mean_value(ctx: ScenarioContext) -> CheckReport:
    t1 = ctx.traj.t_start
    t2 = min(t1 + 4.0, ctx.traj.t_end)
    R = 2.0 if ctx.model.n == 1 else 3.0
    return check_mean_value(ctx.traj, t1, t2, beta=1.0, R=R)


def _evolution_residual(ctx: ScenarioContext) -> CheckReport:
    """
    Residual norms at dt and dt/2 on a few recorded slices, plus the observed
    orders of two refinements on round circles: in h for the unforced flow,
    in dt under a constant field.
    """
    traj, cfg = ctx.traj, ctx.cfg
    picks = np.unique(np.linspace(0, len(traj.states) - 2, RESIDUAL_SAMPLES).astype(int))
    coarse, fine, times = [], [], []
    for i in picks:
        state = traj.states[int(i)]
        coarse.append(residual_by_restepping(state, ctx.field, cfg.dt, cfg.g_rescaling, cfg.scheme).norm)
        fine.append(residual_by_restepping(state, ctx.field, 0.5 * cfg.dt, cfg.g_rescaling, cfg.scheme).norm)
        times.append(state.time)
    coarse, fine = np.array(coarse), np.array(fine)

    # 收敛阶: the studies run on circles whatever the scenario family
    scheme = cfg.scheme if ctx.model.kind == ModelKind.CIRCLE else None
    spatial = spatial_refinement(scheme=scheme)
    temporal = temporal_refinement(g_rescaling=cfg.g_rescaling, scheme=scheme)
    slacks = np.concatenate([
        RESIDUAL_GROWTH * coarse - fine,
        spatial.orders - SPATIAL_ORDER,
        temporal.orders - TEMPORAL_ORDER,
    ])
    return CheckReport.from_slacks(
        name="evolution_residual",
        anchor=RESIDUAL_ANCHOR,
        slacks=slacks,
        tolerance=TOL_FLOOR,
        sample_times=times,
        constants={
            "growth": ConstantRecord(value=RESIDUAL_GROWTH, provenance=Provenance.CONFIGURED,
                                     method="allowed residual ratio under dt -> dt/2"),
            "order_h": ConstantRecord(value=float(np.min(spatial.orders)), provenance=Provenance.SAMPLED,
                                      method="unforced round circle, N = 32, 64, 128, dt = 0.1 h^2"),
            "order_dt": ConstantRecord(value=float(np.min(temporal.orders)), provenance=Provenance.SAMPLED,
                                       method="round circle under a constant field, N = 64, dt halved twice"),
        },
        notes=[f"slice slacks first, then orders in h against {SPATIAL_ORDER} "
               f"and in dt against {TEMPORAL_ORDER}"],
        auxiliary={
            "residual_dt": [float(x) for x in coarse],
            "residual_half_dt": [float(x) for x in fine],
            "order_h": [float(x) for x in spatial.orders],
            "order_dt": [float(x) for x in temporal.orders],
        },
    )


def _discrete_loja(ctx: ScenarioContext) -> CheckReport:
    return check_discrete_loja(ctx.traj, ctx.model, ctx.cfg.functional)


def _quadratic(ctx: ScenarioContext) -> CheckReport:
    return check_quadratic_bound(ctx.model, window=ctx.cfg.window)


def _distance_decay(ctx: ScenarioContext) -> CheckReport:
    return check_distance_decay(ctx.traj, ctx.model)


def _extension(ctx: ScenarioContext) -> CheckReport:
    T = interior_times(ctx.traj)
    if not T:
        return CheckReport.vacuous("extension_phi_bound", CHECK_ANCHORS["extension_phi_bound"],
                                   "no T with [T-1, T+1] recorded")
    return check_extension_phi_bound(ctx.traj, T, ctx.cfg.functional, ctx.model)


def _differential(ctx: ScenarioContext) -> CheckReport:
    return fit_differential_inequality(ctx.traj, ctx.model)


def _uniqueness(ctx: ScenarioContext) -> CheckReport:
    return check_uniqueness_series(ctx.traj, model=ctx.model)


def _persistence(ctx: ScenarioContext) -> CheckReport:
    return check_graph_persistence(ctx.traj, ctx.model, horizon=0.5)


def _scales(ctx: ScenarioContext) -> CheckReport:
    T = interior_times(ctx.traj)
    if not T:
        return CheckReport.vacuous("scale_comparison", CHECK_ANCHORS["scale_comparison"],
                                   "no T with [T-1, T+1] recorded")
    return check_scale_comparison(ctx.traj, T, ctx.cfg.functional, ctx.model)


CHECKS: Mapping[str, Check] = MappingProxyType({
    "forcing": _forcing,
    "monotonicity_compact": _monotonicity,
    "l2_control": _l2,
    "l2_control_localized": _l2_localized,
    "almost_monotone_J": _almost_monotone_J,
    "mean_value": _mean_value,
    "evolution_residual": _evolution_residual,
    "discrete_lojasiewicz": _discrete_loja,
    "quadratic_bound": _quadratic,
    "distance_decay": _distance_decay,
    "extension_phi_bound": _extension,
    "differential_inequality": _differential,
    "uniqueness_series": _uniqueness,
    "graph_persistence": _persistence,
    "scale_comparison": _scales,
})

assert set(CHECKS) == set(CHECK_ANCHORS), "check registry and anchors disagree"


def run_check(name: str, ctx: ScenarioContext) -> CheckReport:
    """Run one check; an exception becomes a failing report and the caller carries on."""
    try:
        report = CHECKS[name](ctx)
    except Exception as e:
        logger.error(f"[{ctx.cfg.name}] check {name} raised {type(e).__name__}: {e}")
        return CheckReport.from_slacks(
            name, CHECK_ANCHORS[name], [], 0.0, force_fail=True,
            notes=[f"error: {type(e).__name__}: {e}"],
        )
    logger.info(f"[{ctx.cfg.name}] {name}: {report.verdict.value} (min slack {report.min_slack:.3e}, "
                f"tol {report.tolerance:.3e})")
    return report
