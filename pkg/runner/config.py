import logging
import os
from pathlib import Path
from types import MappingProxyType
from typing import Any, ClassVar, Dict, List, Optional, Tuple, Union

from dotenv import dotenv_values
from pydantic import BaseModel, Field, ValidationError, model_validator

from common.enums import GRescaling, K1Exponent, ModelKind, Picture, Scheme
from common.errors import InvalidInputError
from mesh.surfaces import DEFAULT_WINDOW
from runner.anchors import CHECK_ANCHORS
from schema.forcing_spec import ForcingSpec
from schema.functional_config import FunctionalConfig
from schema.surface_state import MIN_CURVE_NODES

logger = logging.getLogger(__name__)

# process-level overrides
ENV_OUTPUT_DIR = "MCFF_LAB_OUTPUT_DIR"
ENV_LOG_LEVEL = "MCFF_LAB_LOG_LEVEL"
ENV_MAX_WORKERS = "MCFF_LAB_MAX_WORKERS"

# checks that read rescaled-only series
RESCALED_CHECKS = frozenset(CHECK_ANCHORS) - {"forcing", "almost_monotone_J", "quadratic_bound"}


class ScenarioConfig(BaseModel):
    """
    One flow run and the checks evaluated on it.

    Flat files use prefixed keys for the nested groups: FORCING_KIND,
    FORCING_C, FUNCTIONAL_R0, ... ; MODES is a list of ``mode:amplitude``
    pairs and CHECKS a comma separated list.
    """
    name: str = Field(..., description="Scenario name, also the output sub-directory")
    model: ModelKind
    picture: Picture = Picture.RESCALED
    resolution: int = Field(..., ge=MIN_CURVE_NODES, description="Nodes of the curve or profile")
    window: float = Field(DEFAULT_WINDOW, gt=0, description="Axial half-window of a profile")
    modes: Dict[int, float] = Field(default_factory=dict, description="Graph perturbation: mode -> amplitude")
    envelope: Optional[float] = Field(None, gt=0, description="Gaussian envelope width of a profile perturbation")
    offset: float = Field(0.0, description="Radial offset of the initial data; replaced when calibrating")
    calibrate: bool = Field(False, description="Bisect the offset so the rescaled flow stays near the model")
    t_start: float = 0.0
    t_end: float
    dt: float = Field(..., gt=0)
    record_every: int = Field(1, ge=1)
    scheme: Optional[Scheme] = None
    forcing: ForcingSpec = Field(default_factory=ForcingSpec)
    functional: FunctionalConfig = Field(default_factory=FunctionalConfig)
    g_rescaling: GRescaling = GRescaling.DERIVED
    k1_exponent: K1Exponent = K1Exponent.DERIVATION
    checks: List[str] = Field(default_factory=list)
    output_dir: str = Field("outputs", description="Root of the per-scenario output directories")
    seed: int = Field(0, description="Recorded in every output; seeds the randomized suites")
    expect_truncation: bool = Field(False, description="A singularity before t_end is the intended outcome")
    progress: bool = False

    # --- 前缀分组 ---
    _GROUPS: ClassVar[Dict[str, str]] = MappingProxyType({
        "forcing_": "forcing",
        "functional_": "functional",
    })

    @model_validator(mode='before')
    @classmethod
    def unflatten(cls, data: Any):
        if not isinstance(data, dict):
            return data
        items = {str(k).lower().strip(): v for k, v in data.items()}
        out: Dict[str, Any] = {}
        # nested groups first so that prefixed keys override them
        for group in cls._GROUPS.values():
            value = items.pop(group, None)
            if isinstance(value, dict):
                out[group] = dict(value)
            elif value is not None:
                out[group] = value
        for key, value in items.items():
            for prefix, group in cls._GROUPS.items():
                if key.startswith(prefix):
                    if not isinstance(out.setdefault(group, {}), dict):
                        raise ValueError(f"{key} given together with a non-dict {group}")
                    out[group][_field_name(group, key[len(prefix):])] = value
                    break
            else:
                out[key] = value

        if isinstance(out.get("modes"), str):
            out["modes"] = _parse_modes(out["modes"])
        if isinstance(out.get("checks"), str):
            out["checks"] = [c.strip() for c in out["checks"].split(",") if c.strip()]
        for key in ("envelope", "scheme"):
            if out.get(key) in ("", "none", "None"):
                out[key] = None
        return out

    @model_validator(mode='after')
    def consistent(self):
        unknown = [c for c in self.checks if c not in CHECK_ANCHORS]
        if unknown:
            raise ValueError(f"unknown checks {unknown}; known: {sorted(CHECK_ANCHORS)}")
        if self.picture == Picture.UNRESCALED:
            rescaled_only = [c for c in self.checks if c in RESCALED_CHECKS]
            if rescaled_only:
                raise ValueError(f"checks {rescaled_only} need the rescaled picture")
            if self.calibrate:
                raise ValueError("calibration runs the rescaled flow; set PICTURE=rescaled")
        if self.t_end <= self.t_start:
            raise ValueError(f"empty time span [{self.t_start}, {self.t_end}]")

        # the switches live on the scenario and are pushed into the groups
        self.forcing = self.forcing.model_copy(update={"g_rescaling": self.g_rescaling})
        K = max(self.functional.K, self.forcing.K or 0.0)
        self.functional = self.functional.model_copy(update={"k1_exponent": self.k1_exponent, "K": K})
        return self

    @property
    def record_step(self) -> float:
        return self.dt * self.record_every

    @property
    def t_span(self) -> Tuple[float, float]:
        return self.t_start, self.t_end

    @property
    def scenario_dir(self) -> Path:
        return Path(self.output_dir) / self.name

    def conventions(self) -> Dict[str, str]:
        return {"g_rescaling": self.g_rescaling.value, "k1_exponent": self.k1_exponent.value}


_GROUP_MODELS = MappingProxyType({"forcing": ForcingSpec, "functional": FunctionalConfig})


def _field_name(group: str, key: str) -> str:
    """Case-insensitive match of a flat key onto the field names of the group model (K, K_psi, ...)."""
    for name in _GROUP_MODELS[group].model_fields:
        if name.lower() == key.lower():
            return name
    raise ValueError(f"unknown key {key!r} in group {group}")


def _parse_modes(text: str) -> Dict[int, float]:
    modes: Dict[int, float] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        mode, _, amplitude = item.partition(":")
        if not amplitude:
            raise ValueError(f"mode entry {item!r} is not 'mode:amplitude'")
        modes[int(mode)] = float(amplitude)
    return modes


def load_scenario(path: Union[str, Path], **overrides) -> ScenarioConfig:
    """Read a KEY=value scenario file; ``overrides`` win over the file, None values are ignored."""
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"scenario file {path} not found")
    values: Dict[str, Any] = {k: v for k, v in dotenv_values(path).items() if v is not None}
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ScenarioConfig(**values)
    except ValidationError as e:
        raise InvalidInputError(f"{path}: {e}") from e


def build_scenario(values: Dict[str, Any], **overrides) -> ScenarioConfig:
    merged = dict(values)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ScenarioConfig(**merged)
    except ValidationError as e:
        raise InvalidInputError(str(e)) from e


def environment_overrides() -> Dict[str, Any]:
    """Scenario overrides taken from the process environment."""
    out = {}
    if os.getenv(ENV_OUTPUT_DIR):
        out["output_dir"] = os.getenv(ENV_OUTPUT_DIR)
    return out


def log_level() -> str:
    return os.getenv(ENV_LOG_LEVEL, "INFO").upper()


def max_workers(default: int = 4) -> int:
    raw = os.getenv(ENV_MAX_WORKERS)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise InvalidInputError(f"{ENV_MAX_WORKERS}={raw!r} is not an integer")
    if value < 1:
        raise InvalidInputError(f"{ENV_MAX_WORKERS} must be at least 1")
    return value
