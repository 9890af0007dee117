from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from schema.shrinker_model import ShrinkerModel


class GraphNorms(BaseModel):
    """Cumulative discrete norms: C1 includes C0, C2 includes C1."""
    c0: float = Field(0.0, ge=0)
    c1: float = Field(0.0, ge=0)
    c2: float = Field(0.0, ge=0)
    holder: float = Field(0.0, ge=0, description="Second-difference Hoelder quotient, alpha = 1/2")

    @model_validator(mode='after')
    def cumulative_order(self):
        if not (self.c0 <= self.c1 <= self.c2):
            raise ValueError(f"norms must satisfy C0 <= C1 <= C2, got {self.c0}, {self.c1}, {self.c2}")
        return self

    @property
    def c2_alpha(self) -> float:
        """The C^{2,alpha} closeness proxy."""
        return self.c2 + self.holder


class GraphFunction(BaseModel):
    """
    Normal offset U over a model, sampled on the model parametrization
    (angle for the circle, axial coordinate for the cylinder).
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    base: ShrinkerModel
    parameter: np.ndarray = Field(..., description="theta grid (circle) or z grid (cylinder)")
    samples: np.ndarray = Field(..., description="Normal offset U at each parameter value")
    domain_radius: float = Field(..., gt=0, description="Ball radius R the norms refer to")
    norms: GraphNorms = Field(default_factory=GraphNorms)

    @field_validator('parameter', 'samples', mode='before')
    @classmethod
    def as_array(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v, dtype=float)
        if arr.ndim != 1:
            raise ValueError("graph samples must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("graph samples must be finite")
        return arr

    @model_validator(mode='after')
    def matching_lengths(self):
        if self.parameter.shape != self.samples.shape:
            raise ValueError("parameter grid and samples differ in length")
        return self
