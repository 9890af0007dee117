"""
Frozen tolerance constants for the per-step differential checks.

tol = a * step^2 + b * step * h^2 + floor, with (a, b) calibrated on the
exact round solutions and never retuned per scenario.
"""
TOL_A = 1.0
TOL_B = 1.0
TOL_FLOOR = 1e-10


def differential_tolerance(step: float, h: float) -> float:
    return TOL_A * step ** 2 + TOL_B * step * h ** 2 + TOL_FLOOR
