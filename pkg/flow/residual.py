"""
Finite-difference residual of the evolution equation of phi along the
rescaled flow with forcing:

    (d_t - L) phi = e^{-t/2} (Delta g + |A|^2 g + g/2 - (shape + transport)/2)

with g = <G, nu>, shape = A(x^T, G^T) = <D_{x^T} nu, G> and
transport = <D_{x^T} G, nu>. d_t phi is taken along the normal lines of the
middle slice, which removes tangential reparametrisation between slices.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from common.enums import ForcingKind, GeometryFamily, GRescaling, ModelKind, Scheme
from common.errors import GraphExtractionError, InvalidInputError
from flow.impl.forcing import build_forcing, rescaled_field
from flow.interface.base_forcing import BaseForcingField
from flow.stepping import step_rmcff
from gaussian.functionals import gaussian_density
from mesh.geometry import (
    CurvatureData,
    apply_drift_laplacian,
    arclength_derivative,
    curvature_data,
    laplace_beltrami,
    shrinker_quantity,
)
from mesh.surfaces import make_round_surface
from schema.forcing_spec import ForcingSpec
from schema.surface_state import SurfaceState

logger = logging.getLogger(__name__)

# neighbouring segments searched for the normal-line intersection
SEARCH_HALF_WIDTH = 8
PROFILE_ITERATIONS = 30


@dataclass(frozen=True)
class ResidualResult:
    time: float
    residual: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    norm: float


def _transport_curve(mid: SurfaceState, geo: CurvatureData, other: SurfaceState, phi_other: np.ndarray) -> np.ndarray:
    """phi of ``other`` where the normal line through each node of ``mid`` crosses it."""
    x, nu = mid.nodes, geo.normal
    n_mid, n_other = mid.size, other.size
    offsets = np.arange(-SEARCH_HALF_WIDTH, SEARCH_HALF_WIDTH + 1)
    base = np.rint(np.arange(n_mid) * n_other / n_mid).astype(int)
    j = (base[:, None] + offsets[None, :]) % n_other
    p = other.nodes[j]
    e = other.nodes[(j + 1) % n_other] - p
    w = p - x[:, None, :]
    nux, nuy = nu[:, 0:1], nu[:, 1:2]
    det = e[..., 0] * nuy - e[..., 1] * nux
    with np.errstate(divide='ignore', invalid='ignore'):
        lam = (e[..., 0] * w[..., 1] - e[..., 1] * w[..., 0]) / det
        mu = (nux * w[..., 1] - nuy * w[..., 0]) / det
    valid = (np.abs(det) > 1e-14) & (mu >= -1e-12) & (mu <= 1.0 + 1e-12)
    dist = np.where(valid, np.abs(lam), np.inf)
    pick = np.argmin(dist, axis=1)
    rows = np.arange(n_mid)
    if not np.all(np.isfinite(dist[rows, pick])):
        bad = int(np.nonzero(~np.isfinite(dist[rows, pick]))[0][0])
        raise GraphExtractionError("neighbouring slice is not a normal graph over the middle slice", bad)
    jj = j[rows, pick]
    m = np.clip(mu[rows, pick], 0.0, 1.0)
    return (1.0 - m) * phi_other[jj] + m * phi_other[(jj + 1) % n_other]


def _transport_profile(mid: SurfaceState, geo: CurvatureData, other: SurfaceState, phi_other: np.ndarray) -> np.ndarray:
    r, z = mid.nodes, mid.z
    nu_r, nu_z = geo.normal[:, 0], geo.normal[:, 1]
    lam = np.interp(z, other.z, other.nodes) - r
    for _ in range(PROFILE_ITERATIONS):
        lam = (np.interp(z + lam * nu_z, other.z, other.nodes) - r) / nu_r
    crossing = z + lam * nu_z
    gap = np.abs(np.interp(crossing, other.z, other.nodes) - (r + lam * nu_r))
    if np.any(gap > 1e-8 * max(1.0, float(np.max(r)))):
        raise GraphExtractionError("normal lines do not settle on the neighbouring profile", int(np.argmax(gap)))
    return np.interp(crossing, other.z, phi_other)


def _forcing_terms(mid: SurfaceState, geo: CurvatureData, field: BaseForcingField) -> np.ndarray:
    """Delta g + |A|^2 g + g/2 - (shape + transport)/2 for the field G at the middle time."""
    pts = mid.ambient_points
    G = field.value(pts)
    J = field.jacobian(pts)
    if mid.family == GeometryFamily.CURVE:
        tau, nu = geo.tangent, geo.normal
    else:
        zeros = np.zeros(mid.size)
        tau = np.column_stack([geo.tangent[:, 0], zeros, geo.tangent[:, 1]])
        nu = np.column_stack([geo.normal[:, 0], zeros, geo.normal[:, 1]])

    g = np.sum(G * nu, axis=1)
    g_tau = np.sum(G * tau, axis=1)
    kappa = geo.kappa
    x_tau = geo.tangential
    x_t = x_tau[:, None] * tau
    transport = np.einsum('nij,nj,ni->n', J, x_t, nu)
    shape = kappa * x_tau * g_tau

    if mid.family == GeometryFamily.CURVE:
        H = field.hessian(pts)
        d2g_tt = np.einsum('nijk,nj,nk,ni->n', H, tau, tau, nu)
        dg_nn = np.einsum('nij,nj,ni->n', J, nu, nu)
        dg_tt = np.einsum('nij,nj,ni->n', J, tau, tau)
        kappa_s = arclength_derivative(mid, kappa)
        lap_g = d2g_tt - kappa * dg_nn + 2.0 * kappa * dg_tt + kappa_s * g_tau - kappa ** 2 * g
    else:
        lap_g = laplace_beltrami(mid, g)

    return lap_g + geo.second_fundamental_sq * g + 0.5 * g - 0.5 * (shape + transport)


def evolution_residual_phi(
    prev: SurfaceState,
    mid: SurfaceState,
    nxt: SurfaceState,
    forcing: Optional[BaseForcingField],
    g_rescaling: GRescaling = GRescaling.DERIVED,
) -> ResidualResult:
    """
    Residual (d_t - L) phi - RHS on the middle of three consecutive rescaled
    slices with equal spacing; ``forcing`` is the ambient field F.
    """
    dt = mid.time - prev.time
    if dt <= 0 or abs((nxt.time - mid.time) - dt) > 1e-9 * max(1.0, dt):
        raise InvalidInputError("residual needs three equally spaced, increasing slices")
    if not (prev.family == mid.family == nxt.family):
        raise InvalidInputError("slices belong to different geometry families")

    geo = curvature_data(mid)
    phi_mid = shrinker_quantity(mid, geo).phi
    phi_prev = shrinker_quantity(prev).phi
    phi_next = shrinker_quantity(nxt).phi

    transport = _transport_curve if mid.family == GeometryFamily.CURVE else _transport_profile
    d_phi = (transport(mid, geo, nxt, phi_next) - transport(mid, geo, prev, phi_prev)) / (2.0 * dt)
    lhs = d_phi - apply_drift_laplacian(mid, phi_mid, geo).jacobi

    field = rescaled_field(forcing, mid.time, g_rescaling)
    if field is None:
        rhs = np.zeros(mid.size)
    else:
        rhs = math.exp(-0.5 * mid.time) * _forcing_terms(mid, geo, field)

    residual = lhs - rhs
    weight = mid.weights * gaussian_density(mid)
    norm = float(np.sqrt(np.sum(weight * residual ** 2)))
    return ResidualResult(time=mid.time, residual=residual, lhs=lhs, rhs=rhs, norm=norm)


def residual_by_restepping(
    state: SurfaceState,
    forcing: Optional[BaseForcingField],
    dt: float,
    g_rescaling: GRescaling = GRescaling.DERIVED,
    scheme: Optional[Scheme] = None,
) -> ResidualResult:
    """Step ``state`` twice by ``dt`` and evaluate the residual on the middle slice."""
    mid = step_rmcff(state, forcing, state.time, dt, g_rescaling, scheme)
    nxt = step_rmcff(mid, forcing, mid.time, dt, g_rescaling, scheme)
    return evolution_residual_phi(state, mid, nxt, forcing, g_rescaling)


# --------------------------------------------------------------------------- #
@dataclass(frozen=True)
class RefinementStudy:
    steps: np.ndarray      # h for the spatial study, dt for the temporal one
    norms: np.ndarray
    orders: np.ndarray


def observed_orders(steps, norms) -> np.ndarray:
    """log(n_k / n_{k+1}) / log(s_k / s_{k+1}) over successive refinements."""
    steps, norms = np.asarray(steps, dtype=float), np.asarray(norms, dtype=float)
    if steps.size < 2 or steps.shape != norms.shape:
        raise InvalidInputError("an order needs at least two refinements of matching length")
    if np.any(norms <= 0.0):
        raise InvalidInputError("residual vanishes at some refinement; no order to observe")
    return np.log(norms[:-1] / norms[1:]) / np.log(steps[:-1] / steps[1:])


def spatial_refinement(
    radius: float = 1.0,
    resolutions: Sequence[int] = (32, 64, 128),
    dt_factor: float = 0.1,
    scheme: Optional[Scheme] = None,
) -> RefinementStudy:
    """Unforced residual on round circles of ``radius`` with dt = dt_factor h^2, so the error is O(h^2)."""
    steps, norms = [], []
    for n in resolutions:
        s = make_round_surface(ModelKind.CIRCLE, radius, int(n))
        h = s.mesh_size
        steps.append(h)
        norms.append(residual_by_restepping(s, None, dt_factor * h ** 2, scheme=scheme).norm)
    return RefinementStudy(steps=np.array(steps), norms=np.array(norms), orders=observed_orders(steps, norms))


def temporal_refinement(
    radius: float = 1.0,
    c: float = 0.1,
    resolution: int = 64,
    dts: Optional[Sequence[float]] = None,
    g_rescaling: GRescaling = GRescaling.DERIVED,
    scheme: Optional[Scheme] = None,
) -> RefinementStudy:
    """Residual on a round circle under the constant field c e_y at fixed h, dt halved twice."""
    s = make_round_surface(ModelKind.CIRCLE, radius, resolution)
    if dts is None:
        dt0 = 0.1 * s.mesh_size ** 2
        dts = (dt0, 0.5 * dt0, 0.25 * dt0)
    field = build_forcing(ForcingSpec(kind=ForcingKind.CONSTANT, c=c, direction=(0.0, 1.0)), GeometryFamily.CURVE)
    norms = [residual_by_restepping(s, field, float(dt), g_rescaling, scheme).norm for dt in dts]
    return RefinementStudy(steps=np.array(dts, dtype=float), norms=np.array(norms), orders=observed_orders(dts, norms))
