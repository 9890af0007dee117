"""
Pointwise differential geometry of the two hypersurface families.

Sign conventions: the outward unit normal is nu, the scalar mean curvature h
is positive on convex states, and the mean curvature vector is H = -h nu
(it points inward on a round circle). The shrinker quantity
phi = H + x^perp / 2 is reported as the outward scalar <x, nu>/2 - h.
"""
import logging
from dataclasses import dataclass

import numpy as np

from common.enums import GeometryFamily
from common.errors import GeometryError
from schema.surface_state import SurfaceState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CurvatureData:
    """All arrays are per node; vectors live in the meridian plane."""
    tangent: np.ndarray          # (N, 2) unit tangent (meridian direction for profiles)
    normal: np.ndarray           # (N, 2) outward unit normal
    principal: np.ndarray        # (N, n) principal curvatures, convex positive
    mean_curvature: np.ndarray   # (N,) h = sum of principal curvatures
    mean_curvature_vector: np.ndarray  # (N, 2) H = -h nu
    second_fundamental_sq: np.ndarray  # (N,) |A|^2
    support: np.ndarray          # (N,) <x, nu>
    tangential: np.ndarray       # (N,) <x, tau>

    @property
    def kappa(self) -> np.ndarray:
        """Curvature along the tangent direction (the only one for curves)."""
        return self.principal[:, 0]

    @property
    def max_abs_A(self) -> float:
        return float(np.sqrt(np.max(self.second_fundamental_sq)))


@dataclass(frozen=True)
class ShrinkerQuantity:
    phi: np.ndarray         # (N,) outward scalar
    phi_vector: np.ndarray  # (N, 2) phi * nu

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.phi)


def _neighbours(s: SurfaceState):
    x = s.nodes
    if s.closed:
        return np.roll(x, 1, axis=0), x, np.roll(x, -1, axis=0)
    prv = np.vstack([x[:1], x[:-1]])
    nxt = np.vstack([x[1:], x[-1:]])
    return prv, x, nxt


def _curve_data(s: SurfaceState) -> CurvatureData:
    prv, x, nxt = _neighbours(s)
    fwd = nxt - x
    bwd = x - prv
    h_plus = np.linalg.norm(fwd, axis=1)
    h_minus = np.linalg.norm(bwd, axis=1)
    interior = slice(None) if s.closed else slice(1, -1)
    if np.any(h_plus[interior] <= 0) or np.any(h_minus[interior] <= 0):
        bad = int(np.argmin(np.minimum(h_plus, h_minus)[interior]))
        raise GeometryError(f"consecutive curve nodes coincide near index {bad}")

    with np.errstate(invalid='ignore', divide='ignore'):
        t_plus = fwd / h_plus[:, None]
        t_minus = bwd / h_minus[:, None]
        # turning of chord directions; exact on regular polygons
        k_vec = 2.0 * (t_plus - t_minus) / (h_plus + h_minus)[:, None]
        bisector = t_plus + t_minus
        length = np.linalg.norm(bisector, axis=1)

    if not s.closed:
        for arr in (k_vec, bisector, length):
            arr[0], arr[-1] = arr[1], arr[-2]
    if np.any(length[interior] < 1e-12):
        raise GeometryError("curve folds back onto itself (cusp in the node sequence)")

    tangent = bisector / length[:, None]
    normal = np.column_stack([tangent[:, 1], -tangent[:, 0]])
    kappa = -np.sum(k_vec * normal, axis=1)
    support = np.sum(x * normal, axis=1)
    tangential = np.sum(x * tangent, axis=1)
    return CurvatureData(
        tangent=tangent,
        normal=normal,
        principal=kappa[:, None],
        mean_curvature=kappa,
        mean_curvature_vector=-kappa[:, None] * normal,
        second_fundamental_sq=kappa ** 2,
        support=support,
        tangential=tangential,
    )


def profile_second_derivative(s: SurfaceState) -> np.ndarray:
    """r_zz with mirrored ghost nodes (r_z = 0) at both ends."""
    r = s.nodes
    dz2 = s.dz ** 2
    rzz = np.empty_like(r)
    rzz[1:-1] = (r[2:] - 2.0 * r[1:-1] + r[:-2]) / dz2
    rzz[0] = 2.0 * (r[1] - r[0]) / dz2
    rzz[-1] = 2.0 * (r[-2] - r[-1]) / dz2
    return rzz


def _profile_data(s: SurfaceState) -> CurvatureData:
    r, z = s.nodes, s.z
    rz = s.radius_slope
    rzz = profile_second_derivative(s)
    stretch = np.sqrt(1.0 + rz ** 2)

    meridian = -rzz / stretch ** 3
    parallel = 1.0 / (r * stretch)
    h = meridian + parallel

    normal = np.column_stack([1.0 / stretch, -rz / stretch])
    tangent = np.column_stack([rz / stretch, 1.0 / stretch])
    return CurvatureData(
        tangent=tangent,
        normal=normal,
        principal=np.column_stack([meridian, parallel]),
        mean_curvature=h,
        mean_curvature_vector=-h[:, None] * normal,
        second_fundamental_sq=meridian ** 2 + parallel ** 2,
        support=(r - z * rz) / stretch,
        tangential=(r * rz + z) / stretch,
    )


def curvature_data(s: SurfaceState) -> CurvatureData:
    if s.family == GeometryFamily.CURVE:
        return _curve_data(s)
    return _profile_data(s)


def shrinker_quantity(s: SurfaceState, geometry: CurvatureData = None) -> ShrinkerQuantity:
    """phi = H + x^perp / 2."""
    geometry = geometry or curvature_data(s)
    phi = 0.5 * geometry.support - geometry.mean_curvature
    return ShrinkerQuantity(phi=phi, phi_vector=phi[:, None] * geometry.normal)


# --------------------------------------------------------------------------- #
# Intrinsic derivatives of per-node fields
# --------------------------------------------------------------------------- #
def _curve_spacings(s: SurfaceState):
    h = s.chord_lengths
    if s.closed:
        return h, np.roll(h, 1)
    h_plus = np.append(h, h[-1])
    h_minus = np.insert(h, 0, h[0])
    return h_plus, h_minus


def _field_neighbours(s: SurfaceState, f: np.ndarray):
    if s.closed:
        return np.roll(f, 1), np.roll(f, -1)
    prv = np.insert(f[:-1], 0, f[1])
    nxt = np.append(f[1:], f[-2])
    return prv, nxt


def arclength_derivative(s: SurfaceState, f: np.ndarray) -> np.ndarray:
    """Derivative along the unit tangent (meridian arclength for profiles)."""
    f = np.asarray(f, dtype=float)
    if s.family == GeometryFamily.CURVE:
        hp, hm = _curve_spacings(s)
        prv, nxt = _field_neighbours(s, f)
        # three-point formula, second order on non-uniform spacing
        d = (hm ** 2 * nxt - hp ** 2 * prv + (hp ** 2 - hm ** 2) * f) / (hp * hm * (hp + hm))
        if not s.closed:
            d[0] = (f[1] - f[0]) / hp[0]
            d[-1] = (f[-1] - f[-2]) / hm[-1]
        return d
    fz = np.zeros_like(f)
    fz[1:-1] = (f[2:] - f[:-2]) / (2.0 * s.dz)
    return fz / np.sqrt(1.0 + s.radius_slope ** 2)


def laplace_beltrami(s: SurfaceState, f: np.ndarray) -> np.ndarray:
    """Intrinsic Laplacian of an (axially symmetric) per-node field."""
    f = np.asarray(f, dtype=float)
    if s.family == GeometryFamily.CURVE:
        hp, hm = _curve_spacings(s)
        prv, nxt = _field_neighbours(s, f)
        return 2.0 / (hp + hm) * ((nxt - f) / hp - (f - prv) / hm)

    r, dz = s.nodes, s.dz
    stretch = np.sqrt(1.0 + s.radius_slope ** 2)
    r_half = 0.5 * (r[1:] + r[:-1])
    stretch_half = np.sqrt(1.0 + (np.diff(r) / dz) ** 2)
    flux = r_half * np.diff(f) / dz / stretch_half
    div = np.empty_like(f)
    div[1:-1] = (flux[1:] - flux[:-1]) / dz
    # mirrored ghost values at the Neumann ends
    div[0] = 2.0 * flux[0] / dz
    div[-1] = -2.0 * flux[-1] / dz
    return div / (r * stretch)


@dataclass(frozen=True)
class DriftLaplacian:
    drift: np.ndarray   # Delta f - <x^T, grad f> / 2
    jacobi: np.ndarray  # drift + (1/2 + |A|^2) f


def apply_drift_laplacian(s: SurfaceState, field: np.ndarray, geometry: CurvatureData = None) -> DriftLaplacian:
    """
    The drift Laplacian Delta - (1/2) grad_{x^T} and the stability operator
    L = drift Laplacian + 1/2 + |A|^2 applied to a per-node field.
    """
    field = np.asarray(field, dtype=float)
    if field.shape != (s.size,):
        raise GeometryError(f"field has shape {field.shape}, expected ({s.size},)")
    geometry = geometry or curvature_data(s)
    transport = geometry.tangential * arclength_derivative(s, field)
    drift = laplace_beltrami(s, field) - 0.5 * transport
    jacobi = drift + (0.5 + geometry.second_fundamental_sq) * field
    return DriftLaplacian(drift=drift, jacobi=jacobi)
