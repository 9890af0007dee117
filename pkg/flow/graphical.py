import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from common.enums import ModelKind
from common.errors import GraphExtractionError
from mesh.graphs import full_window, graph_norms, graph_over_model
from schema.shrinker_model import ShrinkerModel
from schema.surface_state import SurfaceState

logger = logging.getLogger(__name__)

# the slice must be graphical with small norm at least on this ball
MIN_GRAPHICAL_RADIUS = 1.0


@dataclass(frozen=True)
class GraphicalScale:
    radius: float
    norm: float
    flag: Optional[str] = None


def graphical_scale(s: SurfaceState, model: ShrinkerModel, eps: float) -> GraphicalScale:
    """
    Largest R with C^{2,alpha} proxy of the graph over ``model`` on B_R at most eps.

    The circle is compact, so R is either infinite (a graph over all of
    it) or zero. Over the cylinder the norm is monotone in the axial
    window |z| <= R and the crossing is found by bisection over the sorted
    grid radii.
    """
    try:
        gf = graph_over_model(s, model)
    except GraphExtractionError as e:
        logger.debug(f"graphical scale: not graphical ({e})")
        return GraphicalScale(radius=0.0, norm=float("inf"), flag="not graphical")

    window = full_window(model, s)
    if model.kind == ModelKind.CIRCLE:
        norm = gf.norms.c2_alpha
        if norm <= eps:
            return GraphicalScale(radius=math.inf, norm=norm)
        return GraphicalScale(radius=0.0, norm=norm, flag="zero scale")

    def norm_at(R: float) -> float:
        return graph_norms(model, gf.parameter, gf.samples, R).c2_alpha

    if norm_at(MIN_GRAPHICAL_RADIUS) > eps:
        return GraphicalScale(radius=0.0, norm=norm_at(MIN_GRAPHICAL_RADIUS), flag="zero scale")

    radii = np.unique(np.abs(gf.parameter))
    radii = radii[radii >= MIN_GRAPHICAL_RADIUS]
    if radii.size == 0 or norm_at(radii[-1]) <= eps:
        return GraphicalScale(radius=window, norm=norm_at(window))

    # norm_at(lo) <= eps < norm_at(hi)
    lo, hi = -1, radii.size - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if norm_at(radii[mid]) <= eps:
            lo = mid
        else:
            hi = mid
    if lo < 0:
        return GraphicalScale(radius=MIN_GRAPHICAL_RADIUS, norm=norm_at(MIN_GRAPHICAL_RADIUS))
    return GraphicalScale(radius=float(radii[lo]), norm=norm_at(radii[lo]))
