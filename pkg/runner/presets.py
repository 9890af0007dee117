"""
Built-in scenarios. Record steps divide 1 so that the T - 1, T + 1 and
j + 2 lookups of the monitors land on recorded states.
"""
from types import MappingProxyType
from typing import Any, Dict, List, Mapping

from common.errors import InvalidInputError
from runner.config import ScenarioConfig, build_scenario

STATIC_CHECKS = (
    "forcing",
    "monotonicity_compact",
    "l2_control",
    "l2_control_localized",
    "almost_monotone_J",
    "mean_value",
    "evolution_residual",
    "quadratic_bound",
)

PERTURBED_CHECKS = STATIC_CHECKS + (
    "discrete_lojasiewicz",
    "distance_decay",
    "extension_phi_bound",
    "differential_inequality",
    "uniqueness_series",
    "graph_persistence",
    "scale_comparison",
)

_CIRCLE_PERTURBED: Dict[str, Any] = {
    "model": "circle",
    "resolution": 96,
    "modes": {2: 0.05},
    "calibrate": True,
    "t_start": 0.0,
    "t_end": 8.0,
    "dt": 1.0 / 800.0,
    "record_every": 20,
    "checks": list(PERTURBED_CHECKS),
}

_CYLINDER_PERTURBED: Dict[str, Any] = {
    "model": "cylinder",
    "resolution": 241,
    "window": 12.0,
    # neck at z = 0: after calibration the z^2 - 2 component is positive and
    # the far profile flattens; the opposite sign thins it until the window ends pinch
    "modes": {1: -0.04},
    "envelope": 4.0,
    "calibrate": True,
    "t_start": 0.0,
    "t_end": 8.0,
    "dt": 0.01,
    "record_every": 10,
    "checks": list(PERTURBED_CHECKS),
}

PRESETS: Mapping[str, Mapping[str, Any]] = MappingProxyType({
    "circle-shrinker-static": MappingProxyType({
        "model": "circle",
        "resolution": 64,
        "t_start": 0.0,
        "t_end": 3.0,
        "dt": 1e-3,
        "record_every": 10,
        "checks": list(STATIC_CHECKS),
    }),
    "circle-perturbed": MappingProxyType(dict(_CIRCLE_PERTURBED)),
    "circle-perturbed-forced": MappingProxyType({
        **_CIRCLE_PERTURBED,
        "forcing": {"kind": "radial", "c": 0.05, "delta": 0.1},
    }),
    "cylinder-shrinker-static": MappingProxyType({
        "model": "cylinder",
        "resolution": 241,
        "window": 12.0,
        "t_start": 0.0,
        "t_end": 4.0,
        "dt": 0.01,
        "record_every": 10,
        "checks": list(STATIC_CHECKS),
    }),
    "cylinder-perturbed": MappingProxyType(dict(_CYLINDER_PERTURBED)),
    "cylinder-perturbed-forced": MappingProxyType({
        **_CYLINDER_PERTURBED,
        "forcing": {"kind": "bump", "c": 0.05, "width": 3.0},
    }),
    # neck of radius about 0.71 on the sqrt 2 cylinder, pinches near s = -0.75
    "cylinder-pinch": MappingProxyType({
        "model": "cylinder",
        "picture": "unrescaled",
        "resolution": 241,
        "window": 12.0,
        "modes": {0: -0.7},
        "envelope": 1.5,
        "t_start": -1.0,
        "t_end": -0.01,
        "dt": 1e-3,
        "record_every": 10,
        "expect_truncation": True,
        "checks": ["forcing", "almost_monotone_J"],
    }),
})


def list_presets() -> List[str]:
    return sorted(PRESETS)


def preset(name: str, **overrides) -> ScenarioConfig:
    if name not in PRESETS:
        raise InvalidInputError(f"unknown preset {name!r}; known: {list_presets()}")
    values = {k: (list(v) if isinstance(v, list) else v) for k, v in PRESETS[name].items()}
    values["name"] = name
    return build_scenario(values, **overrides)
