"""
Gaussian-weighted integrals over discrete hypersurfaces.

rho_{y,sigma}(x) = (4 pi sigma)^{-n/2} exp(-|x - y|^2 / (4 sigma)).
Profiles are integrated over the azimuth in closed form, so the center y may
sit off the axis.
"""
import logging
from typing import Optional, Sequence

import numpy as np
from scipy.special import i0e

from common.enums import GeometryFamily
from common.errors import InvalidInputError
from mesh.geometry import shrinker_quantity
from schema.functional_config import FunctionalConfig
from schema.surface_state import SurfaceState

logger = logging.getLogger(__name__)

_SANDWICH_SLACK = 1e-12


def _center(s: SurfaceState, y) -> np.ndarray:
    dim = 2 if s.family == GeometryFamily.CURVE else 3
    if y is None:
        return np.zeros(dim)
    y = np.asarray(y, dtype=float).ravel()
    if y.shape != (dim,):
        raise InvalidInputError(f"center must have {dim} components for a {s.family.value}, got {y.shape}")
    return y


def gaussian_density(s: SurfaceState, y=None, sigma: float = 1.0) -> np.ndarray:
    """Per-node density; for profiles it is the azimuthal average over each parallel circle."""
    if sigma <= 0:
        raise InvalidInputError(f"sigma must be positive, got {sigma}")
    y = _center(s, y)
    if s.family == GeometryFamily.CURVE:
        d2 = np.sum((s.nodes - y) ** 2, axis=1)
        return np.exp(-d2 / (4.0 * sigma)) / np.sqrt(4.0 * np.pi * sigma)
    r, z = s.nodes, s.z
    a = float(np.hypot(y[0], y[1]))
    d2 = (r - a) ** 2 + (z - y[2]) ** 2
    return np.exp(-d2 / (4.0 * sigma)) * i0e(r * a / (2.0 * sigma)) / (4.0 * np.pi * sigma)


def ambient_distance(s: SurfaceState) -> np.ndarray:
    """|x| per node (for profiles every point of a parallel circle has the same |x|)."""
    return np.linalg.norm(s.points, axis=1)


def ball_mask(s: SurfaceState, radius: Optional[float]) -> np.ndarray:
    if radius is None:
        return np.ones(s.size, dtype=bool)
    return ambient_distance(s) <= radius


def f_functional(s: SurfaceState, y=None, sigma: float = 1.0, radius: Optional[float] = None) -> float:
    """F_{y,sigma}(s), optionally restricted to s cap B_radius."""
    rho = gaussian_density(s, y, sigma)
    mask = ball_mask(s, radius)
    return float(np.sum(s.weights[mask] * rho[mask]))


def cutoff_radii(cfg: FunctionalConfig, time: Optional[float] = None):
    """Radii where the (rescaled) cutoff stops being 1 and reaches 0."""
    scale = 1.0 if time is None else float(np.exp(0.5 * time))
    return 3.0 * cfg.r0 * scale, 4.0 * cfg.r0 * scale


def sandwich_bounds(s: SurfaceState, cfg: FunctionalConfig, y=None, sigma: float = 1.0,
                    time: Optional[float] = None):
    inner, outer = cutoff_radii(cfg, time)
    return f_functional(s, y, sigma, radius=inner), f_functional(s, y, sigma, radius=outer)


def cutoff_functional(
    s: SurfaceState,
    cfg: FunctionalConfig,
    y=None,
    sigma: float = 1.0,
    power: int = 1,
    time: Optional[float] = None,
) -> float:
    """
    F^psi_{y,sigma}(s) = int psi^power rho_{y,sigma}.

    Pass ``time`` on rescaled slices so the cutoff is psi(e^{-t/2} x).
    """
    if power not in (1, 2):
        raise InvalidInputError(f"power must be 1 or 2, got {power}")
    psi = cfg.psi(s.points, time)
    value = float(np.sum(s.weights * psi ** power * gaussian_density(s, y, sigma)))

    lower, upper = sandwich_bounds(s, cfg, y, sigma, time)
    slack = _SANDWICH_SLACK * max(1.0, upper)
    assert lower - slack <= value <= upper + slack, (
        f"cutoff sandwich violated: {lower:.15g} <= {value:.15g} <= {upper:.15g}"
    )
    return value


def phi_norm_sq(
    s: SurfaceState,
    radius: Optional[float] = None,
    weighted: bool = True,
    y=None,
    sigma: float = 1.0,
) -> float:
    """int |phi|^2 rho over s cap B_radius (or the plain L^2 norm when ``weighted`` is off)."""
    phi = shrinker_quantity(s).phi
    mask = ball_mask(s, radius)
    w = s.weights * (gaussian_density(s, y, sigma) if weighted else 1.0)
    return float(np.sum(w[mask] * phi[mask] ** 2))


def _ball_fraction_profile(s: SurfaceState, center: np.ndarray, rad: float) -> np.ndarray:
    """Fraction of each parallel circle inside B_rad(center), center = (a, 0, zc)."""
    r, z = s.nodes, s.z
    a, zc = center
    with np.errstate(divide='ignore', invalid='ignore'):
        q = (r ** 2 + a ** 2 + (z - zc) ** 2 - rad ** 2) / (2.0 * r * a)
    if a == 0.0:
        return (r ** 2 + (z - zc) ** 2 <= rad ** 2).astype(float)
    return np.arccos(np.clip(q, -1.0, 1.0)) / np.pi


def area_ratio_bound(
    s: SurfaceState,
    radii: Optional[Sequence[float]] = None,
    max_centers: int = 64,
) -> float:
    """
    Sampled sup over x in s and r of r^{-n} |s cap B_r(x)|.

    Centers are a uniform subsample of the nodes; for profiles the intersection
    of each parallel circle with the ball is measured exactly.
    """
    if radii is None:
        radii = np.geomspace(0.1, 10.0, 21)
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise InvalidInputError("radii must be positive")

    stride = max(1, s.size // max_centers)
    best = 0.0
    for idx in range(0, s.size, stride):
        center = s.points[idx]
        for rad in radii:
            if s.family == GeometryFamily.CURVE:
                inside = np.linalg.norm(s.nodes - center, axis=1) <= rad
                area = float(np.sum(s.weights[inside]))
            else:
                area = float(np.sum(s.weights * _ball_fraction_profile(s, center, rad)))
            best = max(best, area / rad ** s.n)
    logger.debug(f"sampled area ratio bound {best:.6g} over {len(radii)} radii")
    return best
