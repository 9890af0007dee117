from abc import ABC, abstractmethod
from typing import Optional

from flow.interface.base_forcing import BaseForcingField
from schema.surface_state import SurfaceState


class BaseStepper(ABC):
    """
    单步时间推进器: 一个几何族 (曲线或旋转剖面) 对应一个实现
    """

    @abstractmethod
    def stability_bound(self, s: SurfaceState, rescaled: bool = True) -> float:
        """Largest admissible time step for ``s``."""
        pass

    @abstractmethod
    def step(
        self,
        s: SurfaceState,
        forcing: Optional[BaseForcingField],
        t: float,
        dt: float,
        rescaled: bool,
    ) -> SurfaceState:
        """
        推进一步: 未缩放 (dx/ds = H + F^perp) 或缩放 (dx/dt = phi + e^{-t/2} G^perp)
        Raises SingularityReached or StabilityError.
        """
        pass
