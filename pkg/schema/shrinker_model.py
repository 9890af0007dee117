import math
from typing import ClassVar, Dict, Optional, Tuple
from types import MappingProxyType

from pydantic import BaseModel, Field, model_validator

from common.enums import GeometryFamily, ModelKind

SHRINKER_RADIUS = math.sqrt(2.0)


class ShrinkerModel(BaseModel):
    """
    Reference critical point of the Gaussian area: the round circle of radius
    sqrt(2) in the plane (n=1) or the round cylinder S^1_{sqrt 2} x R (n=2).
    """
    kind: ModelKind
    radius: float = Field(SHRINKER_RADIUS, description="Radius of the model, the positive root of 1/r = r/2")
    axis: Optional[Tuple[float, float, float]] = Field(None, description="Unit axis of the cylinder")
    f_value: float = Field(0.0, description="Exact Gaussian area F_{0,1} of the model")

    _FAMILY: ClassVar[Dict[ModelKind, GeometryFamily]] = MappingProxyType({
        ModelKind.CIRCLE: GeometryFamily.CURVE,
        ModelKind.CYLINDER: GeometryFamily.PROFILE,
    })

    @model_validator(mode='before')
    @classmethod
    def fill_closed_forms(cls, data: dict):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        kind = ModelKind(data.get("kind"))
        radius = float(data.get("radius", SHRINKER_RADIUS))
        if abs(radius - SHRINKER_RADIUS) > 1e-12:
            raise ValueError(f"model radius must be sqrt(2), got {radius!r}")
        data["radius"] = SHRINKER_RADIUS

        if kind == ModelKind.CYLINDER:
            # profiles are always axially symmetric about e_z
            data["axis"] = (0.0, 0.0, 1.0)
        else:
            data["axis"] = None

        # circle: sqrt(pi) r e^{-r^2/4}; cylinder: the same circle factor times the unit line factor
        data["f_value"] = math.sqrt(math.pi) * SHRINKER_RADIUS * math.exp(-SHRINKER_RADIUS ** 2 / 4.0)
        return data

    @classmethod
    def circle(cls) -> "ShrinkerModel":
        return cls(kind=ModelKind.CIRCLE)

    @classmethod
    def cylinder(cls) -> "ShrinkerModel":
        return cls(kind=ModelKind.CYLINDER)

    @property
    def family(self) -> GeometryFamily:
        return self._FAMILY[self.kind]

    @property
    def n(self) -> int:
        return 1 if self.kind == ModelKind.CIRCLE else 2
