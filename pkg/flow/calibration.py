import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from common.enums import GRescaling, ModelKind, Scheme
from common.errors import CalibrationError, InvalidInputError, SingularityReached, StabilityError
from flow.impl.forcing import rescaled_field
from flow.interface.base_forcing import BaseForcingField
from flow.stepping import stepper_for
from schema.shrinker_model import ShrinkerModel
from schema.surface_state import SurfaceState

logger = logging.getLogger(__name__)

MAX_WIDENINGS = 6
# end deviation reported for a trial run that collapses or leaves the model
DEVIATION_LIMIT = 0.3


@dataclass(frozen=True)
class CalibrationResult:
    offset: float
    deviation: float
    iterations: int
    bracket: Tuple[float, float]


def calibrate_offset(
    make_initial: Callable[[float], SurfaceState],
    deviation: Callable[[SurfaceState], float],
    bracket: Tuple[float, float] = (-0.05, 0.05),
    iterations: int = 20,
    limit: Optional[float] = None,
) -> CalibrationResult:
    """
    Bisection on a scalar offset of the initial data.

    ``deviation`` runs the rescaled flow from ``make_initial(offset)`` and
    returns a signed distance from the model at the end of the run (it may
    stop early once the sign is clear). Too small an offset collapses,
    too large expands, so the deviation changes sign across the bracket.
    With ``limit`` set, an end deviation of that size means every trial
    near the sign change left the model, and CalibrationError is raised.
    """
    lo, hi = map(float, bracket)
    d_lo, d_hi = deviation(make_initial(lo)), deviation(make_initial(hi))
    widenings = 0
    while d_lo * d_hi > 0:
        if widenings >= MAX_WIDENINGS:
            raise InvalidInputError(f"no sign change of the deviation on [{lo:.4g}, {hi:.4g}]")
        width = hi - lo
        lo, hi = lo - width, hi + width
        d_lo, d_hi = deviation(make_initial(lo)), deviation(make_initial(hi))
        widenings += 1

    # 二分: keep d_lo and d_hi of opposite signs
    for it in range(1, iterations + 1):
        mid = 0.5 * (lo + hi)
        d_mid = deviation(make_initial(mid))
        logger.debug(f"calibration {it}: offset={mid:.8f}, deviation={d_mid:.3e}")
        if d_mid == 0.0:
            return CalibrationResult(offset=mid, deviation=0.0, iterations=it, bracket=(lo, hi))
        if (d_mid < 0) == (d_lo < 0):
            lo, d_lo = mid, d_mid
        else:
            hi, d_hi = mid, d_mid

    best, d_best = (lo, d_lo) if abs(d_lo) <= abs(d_hi) else (hi, d_hi)
    if limit is not None and abs(d_best) >= limit * (1.0 - 1e-12):
        raise CalibrationError(
            f"deviation {d_best:.3e} at offset {best:.8f} reached the limit {limit:g}: no root in [{lo:.8f}, {hi:.8f}]")
    logger.info(f"calibrated offset {best:.8f} (deviation {d_best:.3e}) after {iterations} bisections")
    return CalibrationResult(offset=best, deviation=d_best, iterations=iterations, bracket=(lo, hi))


def radial_deviation(s: SurfaceState, model: ShrinkerModel, neck_window: float = 2.0) -> float:
    """Mean radius minus sqrt 2: over all nodes of a curve, over |z| <= neck_window of a profile."""
    if model.kind == ModelKind.CIRCLE:
        return float(np.mean(np.linalg.norm(s.nodes, axis=1))) - model.radius
    mask = np.abs(s.z) <= neck_window
    return float(np.mean(s.nodes[mask])) - model.radius


def flow_deviation(
    model: ShrinkerModel,
    forcing: Optional[BaseForcingField],
    t_span: Tuple[float, float],
    dt: float,
    g_rescaling: GRescaling = GRescaling.DERIVED,
    scheme: Optional[Scheme] = None,
    limit: float = DEVIATION_LIMIT,
) -> Callable[[SurfaceState], float]:
    """Deviation objective for ``calibrate_offset``: run the rescaled flow and read the end deviation."""
    t0, t1 = t_span
    n_steps = int(round((t1 - t0) / dt))

    def _deviation(initial: SurfaceState) -> float:
        stepper = stepper_for(initial.family, scheme)
        state = initial.with_nodes(initial.nodes, t0)
        for k in range(n_steps):
            t = t0 + k * dt
            try:
                state = stepper.step(state, rescaled_field(forcing, t, g_rescaling), t, dt, rescaled=True)
            except SingularityReached:
                return -limit
            except StabilityError:
                # chords shrink below the explicit bound only on a collapsing curve
                return math.copysign(limit, radial_deviation(state, model))
            dev = radial_deviation(state, model)
            if abs(dev) > limit:
                return dev
        return radial_deviation(state, model)

    return _deviation
