from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


class SequenceData(BaseModel):
    """Samples of a non-negative function f with an error series E on a grid."""
    grid: List[float]
    values: List[float]
    error_series: Optional[List[float]] = Field(None, description="E(t) >= 0; zero when omitted")
    gamma: float = Field(..., gt=0)
    K: float = Field(1.0, gt=0, description="K of the recurrence, or K0 of the differential inequality")

    @field_validator('grid', 'values', 'error_series', mode='before')
    @classmethod
    def to_list(cls, v):
        if v is None:
            return v
        return [float(x) for x in np.asarray(v, dtype=float).ravel()]

    @model_validator(mode='after')
    def consistent(self):
        if len(self.grid) < 2:
            raise ValueError("need at least two samples")
        if len(self.values) != len(self.grid):
            raise ValueError("values and grid differ in length")
        if self.error_series is None:
            self.error_series = [0.0] * len(self.grid)
        if len(self.error_series) != len(self.grid):
            raise ValueError("error_series and grid differ in length")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if min(self.values) < 0 or min(self.error_series) < 0:
            raise ValueError("f and E must be non-negative")
        return self

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.grid)

    @property
    def f(self) -> np.ndarray:
        return np.asarray(self.values)

    @property
    def E(self) -> np.ndarray:
        return np.asarray(self.error_series)

    @property
    def is_unit_grid(self) -> bool:
        return bool(np.allclose(np.diff(self.grid), 1.0, atol=1e-12))
