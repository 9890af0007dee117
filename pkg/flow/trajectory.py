import logging
import math
from typing import Callable, Dict, Optional, Tuple, Union

from tqdm import tqdm

from common.enums import Picture, Scheme
from common.errors import InvalidInputError, SingularityReached, StabilityError
from flow.impl.forcing import build_forcing, rescaled_field
from flow.stepping import stepper_for
from schema.forcing_spec import ForcingSpec
from schema.surface_state import SurfaceState
from schema.trajectory import FlowTrajectory, TruncationRecord

logger = logging.getLogger(__name__)

Recorder = Callable[[SurfaceState], float]


def run_trajectory(
    initial: SurfaceState,
    forcing: Optional[ForcingSpec],
    picture: Picture,
    t_span: Tuple[float, float],
    dt: float,
    recorders: Optional[Dict[str, Recorder]] = None,
    record_every: int = 1,
    scheme: Optional[Scheme] = None,
    progress: bool = False,
) -> FlowTrajectory:
    """
    Advance ``initial`` from t_span[0] to t_span[1] in steps of ``dt`` and keep
    every ``record_every``-th state. Step k sits at t0 + k dt exactly.

    A singularity (or a stability loss after the first step) ends the run with a
    truncation record; a step above the bound at the start is a StabilityError.
    """
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise InvalidInputError(f"empty time span {t_span}")
    if dt <= 0 or record_every < 1:
        raise InvalidInputError("dt must be positive and record_every at least 1")
    n_steps = int(round((t1 - t0) / dt))
    if abs(n_steps * dt - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
        raise InvalidInputError(f"time span {t1 - t0} is not a whole number of steps {dt}")

    forcing = forcing or ForcingSpec()
    field = build_forcing(forcing, initial.family)
    stepper = stepper_for(initial.family, scheme)
    rescaled = picture == Picture.RESCALED

    bound = stepper.stability_bound(initial, rescaled)
    if dt > bound * (1.0 + 1e-12):
        raise StabilityError(f"dt={dt:.3e} exceeds the stability bound {bound:.3e} of the initial state")

    state = initial.with_nodes(initial.nodes, t0)
    states = [state]
    truncation = None
    steps = tqdm(range(1, n_steps + 1), desc=f"{picture.value} flow", disable=not progress, leave=False)
    for k in steps:
        t = t0 + (k - 1) * dt
        g = rescaled_field(field, t, forcing.g_rescaling) if rescaled else field
        try:
            state = stepper.step(state, g, t, dt, rescaled)
        except (SingularityReached, StabilityError) as e:
            reason = e.reason if isinstance(e, SingularityReached) else f"stability: {e}"
            truncation = TruncationRecord(reason=reason, time=t0 + k * dt, steps_completed=k - 1)
            logger.warning(f"trajectory truncated at t={truncation.time:.6g}: {reason}")
            break
        # pin the clock to t0 + k dt
        state = state.with_nodes(state.nodes, t0 + k * dt)
        if k % record_every == 0:
            states.append(state)

    traj = FlowTrajectory(
        picture=picture,
        states=states,
        step=dt * record_every,
        dt=dt,
        forcing=forcing,
        truncation=truncation,
    )
    for name, recorder in (recorders or {}).items():
        traj.record(name, [recorder(s) for s in states])
    return traj


def _map_state(s: SurfaceState, to_rescaled: bool) -> SurfaceState:
    if to_rescaled:
        if s.time >= 0:
            raise InvalidInputError(f"unrescaled time must be negative, got s={s.time}")
        return s.scaled((-s.time) ** -0.5, -math.log(-s.time))
    return s.scaled(math.exp(-0.5 * s.time), -math.exp(-s.time))


def rescale_map(obj: Union[SurfaceState, FlowTrajectory], to_rescaled: bool = True):
    """
    Sigma_t = e^{t/2} M_s with t = -ln(-s). Mapped trajectories keep their
    series but carry step=None, since the time change is not affine.
    """
    if isinstance(obj, SurfaceState):
        return _map_state(obj, to_rescaled)
    expected = Picture.UNRESCALED if to_rescaled else Picture.RESCALED
    if obj.picture != expected:
        raise InvalidInputError(f"trajectory is already in the {obj.picture.value} picture")
    return FlowTrajectory(
        picture=Picture.RESCALED if to_rescaled else Picture.UNRESCALED,
        states=[_map_state(s, to_rescaled) for s in obj.states],
        step=None,
        dt=obj.dt,
        forcing=obj.forcing,
        series={k: list(v) for k, v in obj.series.items()},
        truncation=obj.truncation,
    )

