from typing import ClassVar, Dict, Optional, Tuple
from types import MappingProxyType

from pydantic import BaseModel, Field, model_validator

from common.enums import ForcingKind, GRescaling


class ForcingSpec(BaseModel):
    """
    Declarative description of the ambient forcing field F.

    constant: F = c * direction
    radial:   F = c * x / sqrt(|x|^2 + delta^2)
    bump:     F = c * beta(|x - center|^2 / width^2) * (x - center) / width,
              beta(u) = exp(1 - 1/(1 - u)) for u < 1 and 0 otherwise
    """
    kind: ForcingKind = ForcingKind.NONE
    c: float = Field(0.0, description="Amplitude")
    direction: Optional[Tuple[float, ...]] = Field(None, description="Unit direction of a constant field")
    delta: float = Field(0.1, gt=0, description="Mollification length of the radial field at the origin")
    center: Optional[Tuple[float, ...]] = Field(None, description="Center of the bump")
    width: float = Field(1.0, gt=0, description="Support radius of the bump")
    K: Optional[float] = Field(None, ge=0, description="Declared sup bound of |F| used by the monotone quantities; defaults to |c|")
    K_c3: Optional[float] = Field(None, ge=0, description="Declared bound of max(|F|, |DF|, |D^2F|, |D^3F|); checked against sampled norms when set")
    g_rescaling: GRescaling = Field(GRescaling.DERIVED, description="How G is pulled back to the rescaled picture")

    # --- 别名归一化 ---
    _KIND_ALIASES: ClassVar[Dict[str, ForcingKind]] = MappingProxyType({
        "none": ForcingKind.NONE, "off": ForcingKind.NONE, "zero": ForcingKind.NONE, "": ForcingKind.NONE,
        "constant": ForcingKind.CONSTANT, "const": ForcingKind.CONSTANT, "uniform": ForcingKind.CONSTANT,
        "radial": ForcingKind.RADIAL, "dilation": ForcingKind.RADIAL,
        "bump": ForcingKind.BUMP, "compact": ForcingKind.BUMP,
    })

    @model_validator(mode='before')
    @classmethod
    def normalise(cls, data):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        raw = data.get("kind", ForcingKind.NONE)
        if not isinstance(raw, ForcingKind):
            key = str(raw).lower().strip()
            if key not in cls._KIND_ALIASES:
                raise ValueError(f"unknown forcing kind {raw!r}")
            data["kind"] = cls._KIND_ALIASES[key]
        for name in ("direction", "center"):
            value = data.get(name)
            if isinstance(value, str):
                data[name] = tuple(float(v) for v in value.split(",") if v.strip())
        return data

    @model_validator(mode='after')
    def fill_bound(self):
        if self.kind == ForcingKind.NONE:
            self.c = 0.0
        if self.K is None:
            self.K = abs(self.c)
        elif self.K + 1e-15 < abs(self.c):
            raise ValueError(f"declared bound K={self.K} is below the field amplitude |c|={abs(self.c)}")
        if self.K_c3 is not None and self.K_c3 + 1e-15 < self.K:
            raise ValueError(f"declared C^3 bound K_c3={self.K_c3} is below the sup bound K={self.K}")
        return self

    @property
    def is_zero(self) -> bool:
        return self.kind == ForcingKind.NONE or self.c == 0.0
