import logging
import math
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from common.errors import MissingSeriesError
from gaussian.functionals import phi_norm_sq
from schema.functional_config import FunctionalConfig
from schema.scale_readout import ScaleReadout
from schema.trajectory import FlowTrajectory

logger = logging.getLogger(__name__)

# series name of int |phi|^2 rho over Sigma_t cap B_{3 e^{t/2} r0}
PHI_BALL_SERIES = "phi_sq_ball"
# window integrals at round-off level are reported as an exact shrinker
STATIC_FLOOR = 1e-24


def phi_ball_value(state, cfg: FunctionalConfig) -> float:
    """int |phi|^2 rho over the slice cap B_{3 e^{t/2} r0}."""
    return phi_norm_sq(state, radius=3.0 * cfg.r0 * math.exp(0.5 * state.time))


def localisation_scale(T: float) -> float:
    return 2.0 * math.sqrt(T + 1.0)


def scale_from_integral(T: float, integral: float) -> ScaleReadout:
    """Invert e^{-R_T^2/2} = integral and e^{-R_*^2/2} = integral + e^{-T/2}."""
    flag = None
    if integral <= STATIC_FLOOR:
        R_T, flag = math.inf, "static"
    elif integral >= 1.0:
        R_T, flag = math.nan, "undefined"
    else:
        R_T = math.sqrt(-2.0 * math.log(integral))

    combined = integral + math.exp(-T / 2.0)
    R_star = math.sqrt(-2.0 * math.log(combined)) if combined < 1.0 else math.nan
    return ScaleReadout(
        T=T,
        phi_window_integral=integral,
        R_T=R_T,
        R_loc=localisation_scale(T),
        R_star=R_star,
        flag=flag,
    )


def shrinker_scale(traj: FlowTrajectory, T: float, cfg: Optional[FunctionalConfig] = None) -> ScaleReadout:
    """
    Trapezoid rule over [T-1, T+1] of the localized |phi|^2 series. When the
    trajectory did not record it, the series is evaluated from the states on
    the ball of radius 3 e^{t/2} r0 given by ``cfg``.
    """
    idx = traj.window(T - 1.0, T + 1.0)
    if traj.has(PHI_BALL_SERIES):
        values = traj.series_array(PHI_BALL_SERIES)[idx]
    else:
        if cfg is None:
            raise MissingSeriesError(PHI_BALL_SERIES)
        values = np.array([phi_ball_value(traj.states[i], cfg) for i in idx])
    integral = float(trapezoid(values, traj.times[idx]))
    integral = max(integral, 0.0)
    readout = scale_from_integral(T, integral)
    logger.debug(f"shrinker scale at T={T:.4g}: integral={integral:.4e}, R_T={readout.R_T:.4g}")
    return readout
