import logging
from typing import Optional

from common.enums import GeometryFamily, GRescaling, Scheme
from flow.impl.curve_stepper import CurveStepper
from flow.impl.forcing import rescaled_field
from flow.impl.profile_stepper import ProfileStepper
from flow.interface.base_forcing import BaseForcingField
from flow.interface.base_stepper import BaseStepper
from schema.surface_state import SurfaceState

logger = logging.getLogger(__name__)

DEFAULT_SCHEME = {
    GeometryFamily.CURVE: Scheme.EXPLICIT,
    GeometryFamily.PROFILE: Scheme.SEMI_IMPLICIT,
}


def stepper_for(family: GeometryFamily, scheme: Optional[Scheme] = None) -> BaseStepper:
    scheme = scheme or DEFAULT_SCHEME[family]
    if family == GeometryFamily.CURVE:
        return CurveStepper(scheme)
    return ProfileStepper(scheme)


def step_mcff(
    s: SurfaceState,
    forcing: Optional[BaseForcingField],
    ds: float,
    scheme: Optional[Scheme] = None,
) -> SurfaceState:
    """One step of dx/ds = H + F^perp from s.time to s.time + ds."""
    return stepper_for(s.family, scheme).step(s, forcing, s.time, ds, rescaled=False)


def step_rmcff(
    s: SurfaceState,
    forcing: Optional[BaseForcingField],
    t: float,
    dt: float,
    g_rescaling: GRescaling = GRescaling.DERIVED,
    scheme: Optional[Scheme] = None,
) -> SurfaceState:
    """One step of dx/dt = phi + e^{-t/2} G^perp, with G pulled back from the ambient F."""
    field = rescaled_field(forcing, t, g_rescaling)
    return stepper_for(s.family, scheme).step(s, field, t, dt, rescaled=True)
