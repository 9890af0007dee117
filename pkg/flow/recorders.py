import logging
import math
from typing import Dict

import numpy as np

from common.errors import GraphExtractionError
from flow.trajectory import Recorder
from gaussian.functionals import cutoff_functional, f_functional, phi_norm_sq
from gaussian.modified import constants_for, modified_functional_compact, modified_functional_localized
from gaussian.scales import PHI_BALL_SERIES, phi_ball_value
from mesh.geometry import curvature_data
from mesh.graphs import graph_l2, graph_over_model
from schema.functional_config import FunctionalConfig
from schema.shrinker_model import ShrinkerModel
from schema.surface_state import SurfaceState

logger = logging.getLogger(__name__)

# anchor of every recorded column, written into the time-series header
SERIES_ANCHORS = {
    "F": "Gaussian area F_{0,1}",
    "mu": "compact weight mu(t) = exp(K^2 e^{-t})",
    "F_tilde": "compact modified functional mu(t) F",
    "F_hat": "cutoff Gaussian area int psi_t^2 rho",
    "F_tilde_loc": "localized modified functional mu(t) F_hat + K3 e^{-nt/2}",
    "phi_sq": "int |phi|^2 rho",
    PHI_BALL_SERIES: "int |phi|^2 rho over the ball of radius 3 e^{t/2} r0",
    "max_A": "sup |A|",
    "graph_c0": "C^0 norm of the graph over the model",
    "graph_c2alpha": "C^{2,alpha} proxy of the graph over the model",
    "graph_l2": "Gaussian L^2 norm of the graph over the model",
}


def _graph_quantity(model: ShrinkerModel, what: str):
    def _record(s: SurfaceState) -> float:
        try:
            gf = graph_over_model(s, model)
        except GraphExtractionError:
            return math.nan
        if what == "c0":
            return gf.norms.c0
        if what == "c2alpha":
            return gf.norms.c2_alpha
        return graph_l2(gf)
    return _record


def standard_recorders(model: ShrinkerModel, cfg: FunctionalConfig) -> Dict[str, Recorder]:
    """Recorders for a rescaled trajectory near ``model``; slice time enters the cutoff and the weights."""
    constants = constants_for(cfg, model.n)
    return {
        "F": lambda s: f_functional(s),
        "mu": lambda s: modified_functional_compact(s.time, s, cfg).mu,
        "F_tilde": lambda s: modified_functional_compact(s.time, s, cfg).value,
        "F_hat": lambda s: cutoff_functional(s, cfg, power=2, time=s.time),
        "F_tilde_loc": lambda s: modified_functional_localized(s.time, s, cfg, constants).value,
        "phi_sq": lambda s: phi_norm_sq(s),
        PHI_BALL_SERIES: lambda s: phi_ball_value(s, cfg),
        "max_A": lambda s: float(np.sqrt(np.max(curvature_data(s).second_fundamental_sq))),
        "graph_c0": _graph_quantity(model, "c0"),
        "graph_c2alpha": _graph_quantity(model, "c2alpha"),
        "graph_l2": _graph_quantity(model, "l2"),
    }


def unrescaled_recorders() -> Dict[str, Recorder]:
    return {
        "F": lambda s: f_functional(s),
        "max_A": lambda s: float(np.sqrt(np.max(curvature_data(s).second_fundamental_sq))),
    }
