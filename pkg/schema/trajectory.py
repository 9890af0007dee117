from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from common.enums import Picture
from common.errors import CoverageError, InvalidInputError, MissingSeriesError
from schema.forcing_spec import ForcingSpec
from schema.surface_state import SurfaceState

# relative slack when matching requested times against recorded ones
_TIME_MATCH = 1e-9


@dataclass(frozen=True)
class TruncationRecord:
    reason: str
    time: float
    steps_completed: int


@dataclass
class FlowTrajectory:
    """
    Recorded states of one flow run, spaced by ``step`` (a multiple of the
    integrator step ``dt``), with one entry per state in every series.
    ``step`` is None for trajectories mapped between pictures.
    """
    picture: Picture
    states: List[SurfaceState]
    step: Optional[float]
    dt: float
    forcing: ForcingSpec = field(default_factory=ForcingSpec)
    series: Dict[str, List[float]] = field(default_factory=dict)
    truncation: Optional[TruncationRecord] = None

    def __post_init__(self):
        if not self.states:
            raise InvalidInputError("a trajectory needs at least one state")
        t = self.times
        if t.size > 1:
            gaps = np.diff(t)
            if np.any(gaps <= 0):
                raise InvalidInputError("trajectory time stamps must increase strictly")
            if self.step is not None and np.max(np.abs(gaps - self.step)) > 1e-8 * max(1.0, self.step):
                raise InvalidInputError("trajectory time stamps must have a uniform step")
        for name, values in self.series.items():
            self._check_length(name, values)

    def _check_length(self, name: str, values) -> None:
        if len(values) != len(self.states):
            raise InvalidInputError(f"series '{name}' has {len(values)} entries for {len(self.states)} states")

    # ------------------------------------------------------------------ #
    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    @property
    def t_start(self) -> float:
        return float(self.states[0].time)

    @property
    def t_end(self) -> float:
        return float(self.states[-1].time)

    @property
    def truncated(self) -> bool:
        return self.truncation is not None

    @property
    def mesh_size(self) -> float:
        return max(s.mesh_size for s in self.states)

    def record(self, name: str, values) -> None:
        values = [float(v) for v in values]
        self._check_length(name, values)
        self.series[name] = values

    def has(self, name: str) -> bool:
        return name in self.series

    def series_array(self, name: str) -> np.ndarray:
        if name not in self.series:
            raise MissingSeriesError(name)
        return np.asarray(self.series[name], dtype=float)

    def index_of(self, t: float) -> int:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > _TIME_MATCH * max(1.0, abs(t)) + 1e-6 * (self.step or 0.0):
            raise CoverageError(f"t={t:.6g} is not a recorded time in [{self.t_start:.6g}, {self.t_end:.6g}]")
        return idx

    def covers(self, t1: float, t2: float) -> bool:
        slack = 1e-6 * (self.step or 0.0) + 1e-12
        return self.t_start <= t1 + slack and t2 - slack <= self.t_end

    def window(self, t1: float, t2: float) -> np.ndarray:
        """Indices of the states with t1 <= t <= t2; both ends must be recorded."""
        if not self.covers(t1, t2):
            raise CoverageError(
                f"window [{t1:.6g}, {t2:.6g}] not covered by [{self.t_start:.6g}, {self.t_end:.6g}]"
            )
        i1, i2 = self.index_of(t1), self.index_of(t2)
        return np.arange(i1, i2 + 1)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"t": self.times})
        for name in sorted(self.series):
            frame[name] = self.series_array(name)
        return frame
