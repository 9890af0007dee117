import logging
from typing import Optional, Sequence

import numpy as np

from common.enums import Provenance
from common.errors import InvalidInputError
from common.tolerances import differential_tolerance
from gaussian.functionals import cutoff_functional
from gaussian.modified import gaussian_constants
from schema.check_report import CheckReport, ConstantRecord
from schema.functional_config import FunctionalConfig
from schema.surface_state import SurfaceState

logger = logging.getLogger(__name__)

J_ANCHOR = "almost monotonicity of the cutoff Gaussian area along MCF with forcing"


def j_correction(K: float, gamma: float, delta) -> np.ndarray:
    """(2 gamma / K^2)(e^{K^2 delta / 2} - 1), continuous at K = 0 where it is gamma delta."""
    delta = np.asarray(delta, dtype=float)
    if K == 0.0:
        return gamma * delta
    return 2.0 * gamma * np.expm1(0.5 * K ** 2 * delta) / K ** 2


def j_gamma(cfg: FunctionalConfig, n: int) -> float:
    """gamma = lambda0 r0^{-n-2} c(K_psi, n)."""
    return cfg.lambda0 * cfg.r0 ** (-n - 2) * gaussian_constants(cfg.K_psi, n).c


def cutoff_series_for_j(states: Sequence[SurfaceState], y, sigma_bar: float, cfg: FunctionalConfig) -> np.ndarray:
    """F^psi_{y, sigma_bar - s}(M_s) along an unrescaled trajectory."""
    out = np.empty(len(states))
    for k, st in enumerate(states):
        out[k] = cutoff_functional(st, cfg, y=y, sigma=sigma_bar - st.time, power=1)
    return out


def almost_monotone_J(
    times,
    cutoff_series,
    y,
    sigma_bar: float,
    cfg: FunctionalConfig,
    n: int,
    h: float = 0.0,
    tolerance: Optional[float] = None,
) -> CheckReport:
    """
    J(s) = e^{(K^2/2)(sigma_bar - s)} F^psi_{y, sigma_bar - s}(M_s) + (2 gamma/K^2)(e^{(K^2/2)(sigma_bar - s)} - 1)

    J does not increase in s; each step contributes the slack J(s_k) - J(s_{k+1}).
    """
    s = np.asarray(times, dtype=float)
    f = np.asarray(cutoff_series, dtype=float)
    if s.size < 2 or f.shape != s.shape:
        raise InvalidInputError("almost_monotone_J needs at least two matching samples")
    y_arr = np.zeros(1) if y is None else np.asarray(y, dtype=float)
    if float(np.linalg.norm(y_arr)) > cfg.r0:
        raise InvalidInputError(f"center y must lie in B_r0 (r0={cfg.r0})")
    if np.any(s >= sigma_bar):
        raise InvalidInputError(f"sigma_bar={sigma_bar} must exceed every sample time")

    gamma = j_gamma(cfg, n)
    delta = sigma_bar - s
    J = np.exp(0.5 * cfg.K ** 2 * delta) * f + j_correction(cfg.K, gamma, delta)
    slacks = J[:-1] - J[1:]

    step = float(np.max(np.diff(s)))
    tol = differential_tolerance(step, h) if tolerance is None else float(tolerance)
    constants = {
        "gamma": ConstantRecord(value=gamma, provenance=Provenance.FORMULA,
                                method="lambda0 * r0^(-n-2) * c(K_psi, n)"),
        "c": ConstantRecord(value=gaussian_constants(cfg.K_psi, n).c, provenance=Provenance.FORMULA,
                            method="sup_z (4pi)^(-n/2)(1/16 + K_psi/z) z^(-n/2) e^(-1/z)"),
        "K": ConstantRecord(value=cfg.K, provenance=Provenance.CONFIGURED, method="FUNCTIONAL_K"),
        "sigma_bar": ConstantRecord(value=sigma_bar, provenance=Provenance.CONFIGURED, method="caller"),
    }
    logger.debug(f"J series: gamma={gamma:.6g}, min step slack {float(np.min(slacks)):.3e}, tol {tol:.3e}")
    return CheckReport.from_slacks(
        name="almost_monotone_J",
        anchor=J_ANCHOR,
        slacks=slacks,
        tolerance=tol,
        sample_times=s[1:],
        constants=constants,
        notes=[
            "J certified non-increasing in s",
            f"K -> 0 continuity gap of the correction at K=1e-4: {k_limit_gap(gamma, float(delta[0])):.2e}",
        ],
        auxiliary={"J": [float(v) for v in J]},
    )


def k_limit_gap(gamma: float, delta: float, K: float = 1e-4) -> float:
    """Gap between the correction at small K and its K -> 0 limit gamma * delta."""
    return float(abs(j_correction(K, gamma, delta) - gamma * delta))

