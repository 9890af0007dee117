import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize
from tenacity import retry, retry_if_exception_type, stop_after_attempt

from common.enums import GeometryFamily
from common.errors import RefinementError
from gaussian.functionals import f_functional
from schema.surface_state import SurfaceState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntropySearch:
    grid_points: int = 9
    sigma_count: int = 17
    sigma_min: float = 1e-2
    sigma_max: float = 1e2
    refine: bool = True
    max_iter: int = 4000
    max_workers: Optional[int] = None


@dataclass
class EntropyEstimate:
    """``value`` is always an evaluated F, hence a lower bound on the entropy."""
    value: float
    center: np.ndarray
    sigma: float
    grid_value: float
    refined: bool
    evaluations: int
    notes: List[str] = field(default_factory=list)


def _box(s: SurfaceState) -> Tuple[np.ndarray, np.ndarray]:
    """Search box for the (reduced) center coordinates, inflated by 2 diam."""
    pts = s.points
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    diam = float(np.linalg.norm(hi - lo))
    lo, hi = lo - 2.0 * diam, hi + 2.0 * diam
    if s.family == GeometryFamily.PROFILE:
        # (a, z_c) with a the distance of the center from the axis
        lo[0] = 0.0
    return lo, hi


def _center_from(s: SurfaceState, reduced: np.ndarray) -> np.ndarray:
    if s.family == GeometryFamily.CURVE:
        return np.asarray(reduced, dtype=float)
    return np.array([abs(reduced[0]), 0.0, reduced[1]])


def entropy_estimate(s: SurfaceState, search: EntropySearch = EntropySearch()) -> EntropyEstimate:
    """
    Lower-bound estimate of lambda(s) = sup_{y, sigma} F_{y,sigma}(s).

    A coarse scan over the inflated bounding box and log-spaced sigma picks
    seeds for a Nelder-Mead refinement in (y, log sigma).
    """
    lo, hi = _box(s)
    axes = [np.linspace(lo[k], hi[k], search.grid_points) for k in range(2)]
    sigmas = np.geomspace(search.sigma_min, search.sigma_max, search.sigma_count)
    grid = [(np.array([u, v]), sig) for u in axes[0] for v in axes[1] for sig in sigmas]

    def _evaluate(item):
        reduced, sig = item
        return f_functional(s, _center_from(s, reduced), sig)

    # 1. 粗扫描: map keeps the input order so the reduction is deterministic
    with ThreadPoolExecutor(max_workers=search.max_workers) as executor:
        values = np.fromiter(executor.map(_evaluate, grid), dtype=float, count=len(grid))

    order = np.argsort(-values, kind='stable')
    best_idx = int(order[0])
    best_reduced, best_sigma = grid[best_idx]
    estimate = EntropyEstimate(
        value=float(values[best_idx]),
        center=_center_from(s, best_reduced),
        sigma=float(best_sigma),
        grid_value=float(values[best_idx]),
        refined=False,
        evaluations=len(grid),
    )
    if not search.refine:
        return estimate

    # 2. 局部细化, restarting from the next-best seed on failure
    seeds = iter(order[:3])
    counter = {"calls": 0}

    def _objective(p):
        counter["calls"] += 1
        return -f_functional(s, _center_from(s, p[:2]), float(np.exp(p[2])))

    @retry(stop=stop_after_attempt(3), retry=retry_if_exception_type(RefinementError), reraise=True)
    def _refine():
        idx = int(next(seeds))
        reduced, sig = grid[idx]
        start = np.array([reduced[0], reduced[1], np.log(sig)])
        result = minimize(
            _objective, start, method='Nelder-Mead',
            options={'xatol': 1e-9, 'fatol': 1e-13, 'maxiter': search.max_iter, 'maxfev': 2 * search.max_iter},
        )
        if not result.success:
            logger.warning(f"entropy refinement from seed {idx} did not converge: {result.message}")
            raise RefinementError(str(result.message))
        return result

    try:
        result = _refine()
    except RefinementError as e:
        estimate.notes.append(f"refinement failed after retries, grid maximum kept: {e}")
        estimate.evaluations += counter["calls"]
        return estimate

    estimate.evaluations += counter["calls"]
    refined_value = -float(result.fun)
    if refined_value >= estimate.value:
        estimate.value = refined_value
        estimate.center = _center_from(s, result.x[:2])
        estimate.sigma = float(np.exp(result.x[2]))
        estimate.refined = True
    logger.debug(f"entropy estimate {estimate.value:.8f} at sigma={estimate.sigma:.6g}")
    return estimate
