import logging
from typing import Optional

import numpy as np

from common.enums import GeometryFamily, ModelKind
from common.errors import InvalidInputError
from schema.graph_function import GraphFunction
from schema.shrinker_model import ShrinkerModel
from schema.surface_state import MIN_CURVE_NODES, SurfaceState

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 12.0


def _offset_on(grid: np.ndarray, perturbation: GraphFunction, periodic: bool) -> np.ndarray:
    if periodic:
        return np.interp(grid, perturbation.parameter, perturbation.samples, period=2.0 * np.pi)
    return np.interp(grid, perturbation.parameter, perturbation.samples)


def make_model_surface(
    model: ShrinkerModel,
    resolution: int,
    perturbation: Optional[GraphFunction] = None,
    time: float = 0.0,
    window: float = DEFAULT_WINDOW,
) -> SurfaceState:
    """
    Sample the model (or the normal graph of ``perturbation`` over it).

    The circle uses the uniform angle grid theta_i = 2 pi i / N, the cylinder
    the uniform axial grid on [-window, window].
    """
    if resolution < MIN_CURVE_NODES:
        raise InvalidInputError(f"resolution must be at least {MIN_CURVE_NODES}, got {resolution}")
    if perturbation is not None:
        if perturbation.base.kind != model.kind:
            raise InvalidInputError("perturbation is a graph over a different model")
        c0 = float(np.max(np.abs(perturbation.samples)))
        if c0 >= model.radius / 2.0:
            raise InvalidInputError(
                f"perturbation C0 norm {c0:.4g} is not below radius/2 = {model.radius / 2.0:.4g}"
            )

    if model.kind == ModelKind.CIRCLE:
        theta = 2.0 * np.pi * np.arange(resolution) / resolution
        radius = np.full(resolution, model.radius)
        if perturbation is not None:
            radius = radius + _offset_on(theta, perturbation, periodic=True)
        nodes = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
        return SurfaceState(family=GeometryFamily.CURVE, nodes=nodes, time=time)

    z = np.linspace(-window, window, resolution)
    radius = np.full(resolution, model.radius)
    if perturbation is not None:
        radius = radius + _offset_on(z, perturbation, periodic=False)
    return SurfaceState(family=GeometryFamily.PROFILE, nodes=radius, z=z, time=time)


def make_round_surface(
    kind: ModelKind,
    radius: float,
    resolution: int,
    time: float = 0.0,
    window: float = DEFAULT_WINDOW,
) -> SurfaceState:
    """Round circle or cylinder of arbitrary radius centred on the origin."""
    if radius <= 0:
        raise InvalidInputError(f"radius must be positive, got {radius}")
    if kind == ModelKind.CIRCLE:
        theta = 2.0 * np.pi * np.arange(resolution) / resolution
        nodes = radius * np.column_stack([np.cos(theta), np.sin(theta)])
        return SurfaceState(family=GeometryFamily.CURVE, nodes=nodes, time=time)
    z = np.linspace(-window, window, resolution)
    return SurfaceState(family=GeometryFamily.PROFILE, nodes=np.full(resolution, float(radius)), z=z, time=time)


def make_flat_line(half_length: float, resolution: int, time: float = 0.0) -> SurfaceState:
    """Open straight segment on the x axis, symmetric about the origin."""
    if half_length <= 0:
        raise InvalidInputError("half_length must be positive")
    x = np.linspace(-half_length, half_length, resolution)
    return SurfaceState(
        family=GeometryFamily.CURVE,
        nodes=np.column_stack([x, np.zeros_like(x)]),
        time=time,
        closed=False,
    )


def make_ellipse(a: float, b: float, resolution: int, center=(0.0, 0.0)) -> SurfaceState:
    """x = a cos theta, y = b sin theta on the uniform theta grid."""
    theta = 2.0 * np.pi * np.arange(resolution) / resolution
    nodes = np.column_stack([center[0] + a * np.cos(theta), center[1] + b * np.sin(theta)])
    return SurfaceState(family=GeometryFamily.CURVE, nodes=nodes)
