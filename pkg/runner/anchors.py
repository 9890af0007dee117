"""
Statement each runner check certifies, and the header written above every
time-series table.
"""
from types import MappingProxyType
from typing import Iterable, Mapping

from flow.forcing_checks import FORCING_ANCHOR
from flow.recorders import SERIES_ANCHORS
from gaussian.monotone import J_ANCHOR
from loja.certificates import (
    DISTANCE_ANCHOR,
    EXTENSION_ANCHOR,
    L2_ANCHOR,
    L2_LOCAL_ANCHOR,
    LOJA_ANCHOR,
    MEAN_VALUE_ANCHOR,
    MONOTONICITY_ANCHOR,
    QUADRATIC_ANCHOR,
)
from loja.monitors import DIFFERENTIAL_ANCHOR, PERSISTENCE_ANCHOR, SCALE_ANCHOR, UNIQUENESS_ANCHOR

RESIDUAL_ANCHOR = "(d_t - L) phi = e^{-t/2} L<G, nu>, residual not growing when dt is halved, order >= 1.8 in h and >= 0.9 in dt"

CHECK_ANCHORS: Mapping[str, str] = MappingProxyType({
    "forcing": FORCING_ANCHOR,
    "monotonicity_compact": MONOTONICITY_ANCHOR,
    "l2_control": L2_ANCHOR,
    "l2_control_localized": L2_LOCAL_ANCHOR,
    "almost_monotone_J": J_ANCHOR,
    "mean_value": MEAN_VALUE_ANCHOR,
    "evolution_residual": RESIDUAL_ANCHOR,
    "discrete_lojasiewicz": LOJA_ANCHOR,
    "quadratic_bound": QUADRATIC_ANCHOR,
    "distance_decay": DISTANCE_ANCHOR,
    "extension_phi_bound": EXTENSION_ANCHOR,
    "differential_inequality": DIFFERENTIAL_ANCHOR,
    "uniqueness_series": UNIQUENESS_ANCHOR,
    "graph_persistence": PERSISTENCE_ANCHOR,
    "scale_comparison": SCALE_ANCHOR,
})


def series_header(columns: Iterable[str]) -> str:
    """One comment line naming the anchor of every column; unknown columns are named as themselves."""
    parts = ["t: slice time"]
    parts += [f"{c}: {SERIES_ANCHORS.get(c, c)}" for c in columns if c != "t"]
    return "# " + " | ".join(parts)
