import numpy as np

# sampling grid used to certify the derivative bound of the cutoff profile
_CERT_SAMPLES = 20001


def _flat(u: np.ndarray) -> np.ndarray:
    """exp(-1/u) for u > 0, 0 otherwise."""
    out = np.zeros_like(u, dtype=float)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def _flat_prime(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u, dtype=float)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos]) / u[pos] ** 2
    return out


def smooth_step(u) -> np.ndarray:
    """
    C^infinity transition: 1 for u <= 0, 0 for u >= 1.
    """
    u = np.asarray(u, dtype=float)
    a = _flat(1.0 - u)
    b = _flat(u)
    return a / (a + b)


def smooth_step_prime(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    a = _flat(1.0 - u)
    b = _flat(u)
    da = -_flat_prime(1.0 - u)
    db = _flat_prime(u)
    return (da * b - a * db) / (a + b) ** 2


def cutoff_value(distance, r0: float) -> np.ndarray:
    """psi(x) as a function of |x|: 1 on B_{3 r0}, 0 outside B_{4 r0}."""
    return smooth_step((np.asarray(distance, dtype=float) - 3.0 * r0) / r0)


def required_k_psi() -> float:
    """
    Sampled value of sup (r0|D psi| + r0^2 |D^2 psi|), which is scale free.

    The radial second derivative is chi''/r0^2; the tangential eigenvalues of
    D^2 psi are chi'/(r0 |x|) with |x| >= 3 r0 on the transition annulus.
    """
    u = np.linspace(0.0, 1.0, _CERT_SAMPLES)
    d1 = smooth_step_prime(u)
    d2 = np.gradient(d1, u)
    hessian_norm = np.maximum(np.abs(d2), np.abs(d1) / 3.0)
    return float(np.max(np.abs(d1) + hessian_norm))
