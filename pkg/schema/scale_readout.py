import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ScaleReadout(BaseModel):
    """Shrinker scale R_T, localisation scale R^loc_T and combined scale R_* at time T."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    T: float
    phi_window_integral: float = Field(..., ge=0, description="int_{T-1}^{T+1} ||phi||^2_{L^2(B_{3e^{t/2}r0})} dt")
    R_T: float = Field(..., description="e^{-R_T^2/2} = phi_window_integral; inf when the integral vanishes")
    R_loc: float = Field(..., description="2 sqrt(T+1)")
    R_star: float = Field(..., description="e^{-R_*^2/2} = e^{-R_T^2/2} + e^{-T/2}")
    flag: Optional[str] = Field(None, description="'static' when the integral is 0, 'undefined' when it is >= 1")

    @model_validator(mode='after')
    def definitional_bounds(self):
        if not math.isnan(self.R_star):
            if not math.isnan(self.R_T) and self.R_star > self.R_T + 1e-12:
                raise ValueError("R_star must not exceed R_T")
            if self.T > 0 and self.R_star > math.sqrt(self.T) + 1e-12:
                raise ValueError("R_star must not exceed sqrt(T)")
        return self
