from enum import Enum


class GeometryFamily(str, Enum):
    CURVE = "curve"
    PROFILE = "profile"


class ModelKind(str, Enum):
    CIRCLE = "circle"
    CYLINDER = "cylinder"


class Picture(str, Enum):
    UNRESCALED = "unrescaled"
    RESCALED = "rescaled"


class Scheme(str, Enum):
    EXPLICIT = "explicit"
    SEMI_IMPLICIT = "semi_implicit"


class ForcingKind(str, Enum):
    NONE = "none"
    CONSTANT = "constant"
    RADIAL = "radial"
    BUMP = "bump"


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    VACUOUS = "vacuous"


class Provenance(str, Enum):
    FORMULA = "formula"
    FITTED = "fitted"
    CONFIGURED = "configured"
    SAMPLED = "sampled"


class GRescaling(str, Enum):
    """How the ambient forcing is pulled back to the rescaled picture."""
    # G(x, t) = F(e^{-t/2} x, s), chain rule of x -> e^{t/2} x
    DERIVED = "derived"
    # G(x, t) = F(e^{t/2} x, s), the stated alternative
    STATED = "stated"


class K1Exponent(str, Enum):
    """Which power of r0 multiplies 2 K_psi^2 in K1."""
    DERIVATION = "derivation"   # r0^{-2}
    STATED = "stated"           # r0^{2}
