import logging
import math
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from common.enums import Scheme
from common.errors import SingularityReached, StabilityError
from flow.interface.base_forcing import BaseForcingField
from flow.interface.base_stepper import BaseStepper
from mesh.geometry import curvature_data, profile_second_derivative
from schema.surface_state import SurfaceState

logger = logging.getLogger(__name__)

R_MIN = 1e-3
EXPLICIT_FACTOR = 0.2
SEMI_IMPLICIT_BOUND = 0.1


class ProfileStepper(BaseStepper):
    """
    Radial graph r(z) of an axially symmetric surface, Neumann ends (r_z = 0).

        unrescaled: r_s = r_zz/(1+r_z^2) - 1/r + sqrt(1+r_z^2) <F, nu>
        rescaled:   r_t = r_zz/(1+r_z^2) - 1/r + r/2 - (z/2) r_z + e^{-t/2} sqrt(1+r_z^2) <G, nu>

    semi_implicit treats a(r_z) r_zz implicitly with a frozen at the old step,
    the rest explicitly; the tridiagonal system goes through solve_banded.
    """

    def __init__(self, scheme: Scheme = Scheme.SEMI_IMPLICIT):
        self.scheme = scheme

    def stability_bound(self, s: SurfaceState, rescaled: bool = True) -> float:
        if self.scheme == Scheme.SEMI_IMPLICIT:
            bound = SEMI_IMPLICIT_BOUND
        else:
            bound = EXPLICIT_FACTOR * s.dz ** 2
        # explicit advection (z/2) r_z of the rescaled picture
        half_length = float(np.max(np.abs(s.z)))
        if rescaled and half_length > 0:
            bound = min(bound, 2.0 * s.dz / half_length)
        return bound

    def _reaction(self, s: SurfaceState, forcing, t: float, rescaled: bool) -> np.ndarray:
        r, z = s.nodes, s.z
        rz = s.radius_slope
        stretch = np.sqrt(1.0 + rz ** 2)
        out = -1.0 / r
        if rescaled:
            out = out + 0.5 * r - 0.5 * z * rz
        if forcing is not None:
            geo = curvature_data(s)
            field = forcing.value(s.ambient_points)
            # outward normal (nu_r, nu_z) sits in the meridian plane y = 0
            g = field[:, 0] * geo.normal[:, 0] + field[:, 2] * geo.normal[:, 1]
            if rescaled:
                prefactor = math.exp(-0.5 * t)
                assert np.all(np.abs(prefactor * g) <= prefactor * forcing.sup_bound * (1.0 + 1e-9) + 1e-15)
                g = prefactor * g
            out = out + stretch * g
        return out

    def _implicit_solve(self, s: SurfaceState, rhs: np.ndarray, dt: float) -> np.ndarray:
        n = s.size
        alpha = dt / (1.0 + s.radius_slope ** 2) / s.dz ** 2
        ab = np.zeros((3, n))
        ab[1] = 1.0 + 2.0 * alpha
        ab[0, 1:] = -alpha[:-1]
        ab[2, :-1] = -alpha[1:]
        # mirrored ghosts: row 0 couples to r_1 twice, the last row to r_{n-2} twice
        ab[0, 1] = -2.0 * alpha[0]
        ab[2, n - 2] = -2.0 * alpha[-1]
        return solve_banded((1, 1), ab, rhs)

    def step(self, s, forcing: Optional[BaseForcingField], t: float, dt: float, rescaled: bool) -> SurfaceState:
        bound = self.stability_bound(s, rescaled)
        if dt > bound * (1.0 + 1e-12):
            raise StabilityError(f"dt={dt:.3e} exceeds the {self.scheme.value} profile bound {bound:.3e}")

        reaction = self._reaction(s, forcing, t, rescaled)
        if self.scheme == Scheme.EXPLICIT:
            diffusion = profile_second_derivative(s) / (1.0 + s.radius_slope ** 2)
            r_new = s.nodes + dt * (diffusion + reaction)
        else:
            r_new = self._implicit_solve(s, s.nodes + dt * reaction, dt)

        t_new = t + dt
        if not np.all(np.isfinite(r_new)):
            raise SingularityReached("non-finite radius", t_new)
        if float(np.min(r_new)) <= R_MIN:
            raise SingularityReached(f"r_min breach at z={float(s.z[np.argmin(r_new)]):.4g}", t_new)
        return s.with_nodes(r_new, t_new)
