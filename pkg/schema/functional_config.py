from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from common.enums import K1Exponent
from gaussian.cutoff import cutoff_value, required_k_psi


class FunctionalConfig(BaseModel):
    """
    Constants of the localized Gaussian functionals.

    The cutoff profile is fixed: psi(x) = chi((|x| - 3 r0) / r0) with chi the
    exp(-1/u) smooth step, so psi = 1 on B_{3 r0} and psi = 0 outside B_{4 r0}.
    """
    r0: float = Field(1.0, gt=0, description="Localisation radius r0")
    K: float = Field(0.0, ge=0, description="Forcing bound, sup of the C^k norm of F")
    K_psi: Optional[float] = Field(None, description="Cutoff derivative bound; defaults to the sampled requirement")
    lambda0: float = Field(4.0, gt=0, description="Area-ratio bound r^{-n}|Sigma cap B_r(x)|, at least pi for surfaces")
    k1_exponent: K1Exponent = Field(K1Exponent.DERIVATION, description="Power of r0 in the K_psi^2 term of K1")

    @model_validator(mode='after')
    def certify_cutoff(self):
        required = required_k_psi()
        if self.K_psi is None:
            self.K_psi = required
        elif self.K_psi < required * (1.0 - 1e-9):
            raise ValueError(
                f"K_psi={self.K_psi:.6g} is below the sampled bound {required:.6g} of the cutoff profile"
            )
        return self

    def psi(self, points: np.ndarray, time: Optional[float] = None) -> np.ndarray:
        """Cutoff at ambient points; on a rescaled slice at time t it is psi(e^{-t/2} x)."""
        distance = np.linalg.norm(np.atleast_2d(points), axis=1)
        if time is not None:
            distance = distance * np.exp(-0.5 * time)
        return cutoff_value(distance, self.r0)
