"""
Modified monotone functionals.

compact:   F~(t) = mu(t) F(Sigma_t),                 mu = exp(K^2 e^{-t})
localized: F~(t) = mu(t) F^hat(t) + K3 e^{-n t/2},   mu = exp(K1 e^{-t}),
           F^hat(t) = int psi_t^2 rho over Sigma_t.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from scipy.optimize import minimize_scalar

from common.enums import K1Exponent
from common.errors import InvalidInputError
from gaussian.functionals import cutoff_functional, f_functional
from schema.functional_config import FunctionalConfig
from schema.surface_state import SurfaceState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianConstants:
    n: int
    K_psi: float
    c: float               # sup_z (4 pi)^{-n/2} (1/16 + K_psi/z) z^{-n/2} e^{-1/z}
    c_argmax: float
    C_n: float             # sup_z (4 pi z)^{-n/2} e^{-1/z}
    C_n_closed_form: float


def _maximise_log(fn) -> tuple:
    """Maximise fn(z) over z > 0 by a bounded search in log z."""
    res = minimize_scalar(lambda u: -fn(math.exp(u)), bounds=(-8.0, 12.0), method='bounded',
                          options={'xatol': 1e-12})
    return -float(res.fun), math.exp(float(res.x))


@lru_cache(maxsize=32)
def gaussian_constants(K_psi: float, n: int) -> GaussianConstants:
    if n not in (1, 2):
        raise InvalidInputError(f"intrinsic dimension must be 1 or 2, got {n}")
    norm = (4.0 * math.pi) ** (-n / 2.0)

    def c_integrand(z):
        return norm * (1.0 / 16.0 + K_psi / z) * z ** (-n / 2.0) * math.exp(-1.0 / z)

    def kernel(z):
        return (4.0 * math.pi * z) ** (-n / 2.0) * math.exp(-1.0 / z)

    c, c_at = _maximise_log(c_integrand)
    C_n, _ = _maximise_log(kernel)
    closed = (8.0 * math.pi / n) ** (-n / 2.0) * math.exp(-n / 2.0)
    if abs(C_n - closed) > 1e-8 * closed:
        logger.warning(f"C_{n} maximisation {C_n:.12g} differs from closed form {closed:.12g}")
    logger.info(f"gaussian constants n={n}, K_psi={K_psi:.6g}: c={c:.8g} (z*={c_at:.6g}), C_n={C_n:.8g}")
    return GaussianConstants(n=n, K_psi=K_psi, c=c, c_argmax=c_at, C_n=C_n, C_n_closed_form=closed)


# --------------------------------------------------------------------------- #
@dataclass(frozen=True)
class CompactModified:
    value: float
    F: float
    mu: float


def compact_weight(K: float, t: float) -> float:
    return math.exp(K ** 2 * math.exp(-t))


def modified_functional_compact(t: float, s: SurfaceState, cfg: FunctionalConfig) -> CompactModified:
    if not math.isfinite(t):
        raise InvalidInputError("time must be finite")
    F = f_functional(s)
    mu = compact_weight(cfg.K, t)
    return CompactModified(value=mu * F, F=F, mu=mu)


# --------------------------------------------------------------------------- #
@dataclass(frozen=True)
class LocalizedConstants:
    K1: float
    K2: float
    K3: float
    C_n: float
    n: int
    k1_exponent: K1Exponent

    def as_dict(self) -> dict:
        return {"K1": self.K1, "K2": self.K2, "K3": self.K3, "C_n": self.C_n}


def localized_constants(
    K: float,
    K_psi: float,
    r0: float,
    lambda0: float,
    n: int,
    C_n: float,
    k1_exponent: K1Exponent = K1Exponent.DERIVATION,
) -> LocalizedConstants:
    """
    K1 = K^2 + 2 K_psi^2 r0^{-2} + K K_psi / r0   (r0^{+2} under the ``stated`` switch)
    K2 = 4 K_psi C_n lambda0 (12 pi r0)^{n/2}
    K3 = 4 K2 / n
    """
    power = -2.0 if k1_exponent == K1Exponent.DERIVATION else 2.0
    K1 = K ** 2 + 2.0 * K_psi ** 2 * r0 ** power + K * K_psi / r0
    K2 = 4.0 * K_psi * C_n * lambda0 * (12.0 * math.pi * r0) ** (n / 2.0)
    K3 = 4.0 * K2 / n
    return LocalizedConstants(K1=K1, K2=K2, K3=K3, C_n=C_n, n=n, k1_exponent=k1_exponent)


def constants_for(cfg: FunctionalConfig, n: int) -> LocalizedConstants:
    C_n = gaussian_constants(cfg.K_psi, n).C_n
    return localized_constants(cfg.K, cfg.K_psi, cfg.r0, cfg.lambda0, n, C_n, cfg.k1_exponent)


@dataclass(frozen=True)
class LocalizedModified:
    value: float
    F_hat: float
    mu: float
    remainder: float    # K3 e^{-n t/2}
    constants: LocalizedConstants


def modified_functional_localized(
    t: float,
    s: SurfaceState,
    cfg: FunctionalConfig,
    constants: Optional[LocalizedConstants] = None,
) -> LocalizedModified:
    if not math.isfinite(t):
        raise InvalidInputError("time must be finite")
    constants = constants or constants_for(cfg, s.n)
    F_hat = cutoff_functional(s, cfg, power=2, time=t)
    mu = math.exp(constants.K1 * math.exp(-t))
    remainder = constants.K3 * math.exp(-s.n * t / 2.0)
    return LocalizedModified(value=mu * F_hat + remainder, F_hat=F_hat, mu=mu,
                             remainder=remainder, constants=constants)
