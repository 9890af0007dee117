import logging
import math
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from common.enums import ModelKind
from common.errors import GraphExtractionError, InvalidInputError
from schema.graph_function import GraphFunction, GraphNorms
from schema.shrinker_model import ShrinkerModel
from schema.surface_state import SurfaceState

logger = logging.getLogger(__name__)

HOLDER_ALPHA = 0.5
# nodes closer to the model centre than this (relative to the radius) are not graphical
_MIN_RADIAL_FRACTION = 1e-9


def model_spacing(model: ShrinkerModel, parameter: np.ndarray) -> float:
    """Arclength spacing of the model parametrization."""
    step = float(parameter[1] - parameter[0])
    return model.radius * step if model.kind == ModelKind.CIRCLE else step


def domain_mask(model: ShrinkerModel, parameter: np.ndarray, R: float) -> np.ndarray:
    """
    Model nodes inside B_R. The circle is compact: either all of it or none.
    The cylinder uses the axial window |z| <= R.
    """
    if model.kind == ModelKind.CIRCLE:
        return np.full(parameter.shape, R >= model.radius * (1.0 - 1e-12))
    return np.abs(parameter) <= R + 1e-12


def _derivatives(model: ShrinkerModel, parameter: np.ndarray, U: np.ndarray):
    ds = model_spacing(model, parameter)
    if model.kind == ModelKind.CIRCLE:
        nxt, prv = np.roll(U, -1), np.roll(U, 1)
        d1 = (nxt - prv) / (2.0 * ds)
        d2 = (nxt - 2.0 * U + prv) / ds ** 2
        return d1, d2, ds
    d1 = np.gradient(U, ds, edge_order=2)
    d2 = np.empty_like(U)
    d2[1:-1] = (U[2:] - 2.0 * U[1:-1] + U[:-2]) / ds ** 2
    d2[0], d2[-1] = d2[1], d2[-2]
    return d1, d2, ds


def graph_norms(model: ShrinkerModel, parameter: np.ndarray, U: np.ndarray, R: float) -> GraphNorms:
    mask = domain_mask(model, parameter, R)
    if not np.any(mask):
        return GraphNorms()
    d1, d2, ds = _derivatives(model, parameter, U)
    c0 = float(np.max(np.abs(U[mask])))
    c1 = c0 + float(np.max(np.abs(d1[mask])))
    c2 = c1 + float(np.max(np.abs(d2[mask])))

    if model.kind == ModelKind.CIRCLE:
        pair = mask & np.roll(mask, -1)
        jumps = np.abs(np.roll(d2, -1) - d2)
    else:
        pair = mask[:-1] & mask[1:]
        jumps = np.abs(np.diff(d2))
    holder = float(np.max(jumps[pair])) / ds ** HOLDER_ALPHA if np.any(pair) else 0.0
    return GraphNorms(c0=c0, c1=c1, c2=c2, holder=holder)


def make_graph_function(model: ShrinkerModel, parameter, samples, R: float) -> GraphFunction:
    parameter = np.asarray(parameter, dtype=float)
    samples = np.asarray(samples, dtype=float)
    return GraphFunction(
        base=model,
        parameter=parameter,
        samples=samples,
        domain_radius=R,
        norms=graph_norms(model, parameter, samples, R),
    )


def model_parameter(model: ShrinkerModel, resolution: int, window: Optional[float] = None) -> np.ndarray:
    if model.kind == ModelKind.CIRCLE:
        return 2.0 * np.pi * np.arange(resolution) / resolution
    if window is None:
        raise InvalidInputError("cylinder graphs need an axial window")
    return np.linspace(-window, window, resolution)


def mode_perturbation(
    model: ShrinkerModel,
    modes: dict,
    resolution: int,
    window: Optional[float] = None,
    envelope: Optional[float] = None,
) -> GraphFunction:
    """
    U = sum_k a_k cos(k theta) over the circle, or
    U = sum_k a_k cos(k z) exp(-z^2/envelope^2) over the cylinder.
    """
    parameter = model_parameter(model, resolution, window)
    U = np.zeros_like(parameter)
    for k, amplitude in sorted(modes.items()):
        U += float(amplitude) * np.cos(int(k) * parameter)
    if model.kind == ModelKind.CYLINDER and envelope is not None:
        U *= np.exp(-(parameter / envelope) ** 2)
    R = model.radius if model.kind == ModelKind.CIRCLE else float(window)
    return make_graph_function(model, parameter, U, R)


def full_window(model: ShrinkerModel, s: SurfaceState) -> float:
    if model.kind == ModelKind.CIRCLE:
        return max(model.radius, float(np.max(np.linalg.norm(s.points, axis=1))))
    return float(np.max(np.abs(s.z)))


def graph_over_model(s: SurfaceState, model: ShrinkerModel, R: Optional[float] = None) -> GraphFunction:
    """
    Normal offset U of ``s`` over ``model`` with discrete norms on B_R.

    Circle: U(theta) = r(theta) - sqrt 2 on the uniform angle grid of the same
    resolution. Cylinder: U(z) = r(z) - sqrt 2 on the profile grid.
    """
    if s.family != model.family:
        raise InvalidInputError(f"{s.family.value} state cannot be a graph over the {model.kind.value} model")
    if R is None:
        R = full_window(model, s)

    if model.kind == ModelKind.CYLINDER:
        return make_graph_function(model, s.z, s.nodes - model.radius, R)

    if not s.closed:
        raise GraphExtractionError("open curves are not graphs over the circle")
    x = s.nodes
    radius = np.linalg.norm(x, axis=1)
    small = np.nonzero(radius <= _MIN_RADIAL_FRACTION * model.radius)[0]
    if small.size:
        raise GraphExtractionError("curve passes through the model centre", int(small[0]))

    theta = np.unwrap(np.arctan2(x[:, 1], x[:, 0]))
    steps = np.diff(np.append(theta, theta[0] + 2.0 * np.pi))
    closing = np.arctan2(x[0, 1], x[0, 0]) - np.arctan2(x[-1, 1], x[-1, 0])
    steps[-1] = (closing % (2.0 * np.pi))
    bad = np.nonzero(steps <= 0.0)[0]
    if bad.size:
        raise GraphExtractionError("radial offset is multivalued", int(bad[0]) + 1)
    if abs(np.sum(steps) - 2.0 * np.pi) > 1e-6:
        raise GraphExtractionError("curve does not wind once around the model centre", 0)

    knots = np.append(theta, theta[0] + 2.0 * np.pi)
    spline = CubicSpline(knots, np.append(radius, radius[0]), bc_type='periodic')
    grid = model_parameter(model, s.size)
    shifted = theta[0] + np.mod(grid - theta[0], 2.0 * np.pi)
    U = spline(shifted) - model.radius
    return make_graph_function(model, grid, U, R)


def model_l2_weights(model: ShrinkerModel, parameter: np.ndarray) -> np.ndarray:
    """Quadrature weights of the Gaussian-weighted L^2 norm over the model."""
    ds = model_spacing(model, parameter)
    if model.kind == ModelKind.CIRCLE:
        rho = math.exp(-model.radius ** 2 / 4.0) / math.sqrt(4.0 * math.pi)
        return np.full(parameter.shape, ds * rho)
    w = 2.0 * np.pi * model.radius * ds * np.exp(-(model.radius ** 2 + parameter ** 2) / 4.0) / (4.0 * np.pi)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def graph_l2(gf: GraphFunction, other: Optional[GraphFunction] = None) -> float:
    """Gaussian-weighted L^2 norm of U, or of U - U_other on the same grid."""
    diff = gf.samples if other is None else gf.samples - other.samples
    w = model_l2_weights(gf.base, gf.parameter)
    return float(np.sqrt(np.sum(w * diff ** 2)))
