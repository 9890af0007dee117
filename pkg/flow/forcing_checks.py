import logging

import numpy as np

from common.enums import GeometryFamily, Provenance
from flow.impl.forcing import ambient_dimension, build_forcing
from schema.check_report import CheckReport, ConstantRecord
from schema.forcing_spec import ForcingSpec

logger = logging.getLogger(__name__)

FORCING_ANCHOR = "bounded forcing: sup |F| <= K, sampled C^3 norm within K_c3, consistent derivative evaluators"


def _sample_ball(dim: int, radius: float, per_axis: int) -> np.ndarray:
    axis = np.linspace(-radius, radius, per_axis)
    grid = np.stack(np.meshgrid(*([axis] * dim), indexing='ij'), axis=-1).reshape(-1, dim)
    return grid[np.linalg.norm(grid, axis=1) <= radius]


def _fd_error(fn, deriv, pts: np.ndarray, h: float) -> float:
    """max |central difference of fn - deriv| over the sample, one direction at a time."""
    dim = pts.shape[1]
    exact = deriv(pts)
    worst = 0.0
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = h
        fd = (fn(pts + e) - fn(pts - e)) / (2.0 * h)
        worst = max(worst, float(np.max(np.abs(fd - exact[..., j]))))
    return worst


def _sample_ray(dim: int, center, radius: float, count: int) -> np.ndarray:
    """Fine samples along e_1 from the field centre; the families are radial about it."""
    origin = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    r = np.linspace(0.0, radius, count)
    return origin[None, :] + r[:, None] * np.eye(dim)[0][None, :]


def derivative_norms(field, pts: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """
    Sampled sup over ``pts`` of |F|, |DF|, |D^2F| and |D^3F| (Frobenius norms);
    the third derivative is a central difference of the hessian.
    """
    dim = pts.shape[1]
    value = np.linalg.norm(field.value(pts), axis=1)
    jac = np.sqrt(np.sum(field.jacobian(pts) ** 2, axis=(1, 2)))
    hess = np.sqrt(np.sum(field.hessian(pts) ** 2, axis=(1, 2, 3)))
    third = np.zeros(len(pts))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = h
        d = (field.hessian(pts + e) - field.hessian(pts - e)) / (2.0 * h)
        third += np.sum(d ** 2, axis=(1, 2, 3))
    return np.array([value.max(), jac.max(), hess.max(), np.sqrt(third.max())])


def check_forcing(spec: ForcingSpec, radius: float, family: GeometryFamily = GeometryFamily.CURVE,
                  per_axis: int = 21, h: float = 1e-3) -> CheckReport:
    """
    Spot check of the declared bound on a grid over B_radius, and a
    finite-difference self-test of the derivative evaluators at steps h and h/2.
    Halving h must cut the error by about 4; the slack allows a factor 3.
    The sampled C^3 norm is always reported and checked against K_c3 when one
    is declared; K itself stays a sup bound of |F|.
    """
    field = build_forcing(spec, family)
    if field is None:
        return CheckReport.from_slacks("forcing", FORCING_ANCHOR, [0.0], 0.0,
                                       notes=["zero forcing"])
    dim = ambient_dimension(family)
    pts = _sample_ball(dim, radius, per_axis)

    sup = float(np.max(np.linalg.norm(field.value(pts), axis=1)))
    slacks = [spec.K - sup]

    # 1. jacobian against differences of value
    e1, e2 = _fd_error(field.value, field.jacobian, pts, h), _fd_error(field.value, field.jacobian, pts, h / 2)
    slacks.append(e1 / 3.0 + 1e-9 - e2)
    # 2. hessian against differences of jacobian
    h1 = _fd_error(field.jacobian, field.hessian, pts, h)
    h2 = _fd_error(field.jacobian, field.hessian, pts, h / 2)
    slacks.append(h1 / 3.0 + 1e-9 - h2)
    # 3. sampled C^3 norm, on the grid and a fine ray through the centre
    norms = derivative_norms(field, np.vstack([pts, _sample_ray(dim, spec.center, radius, 801)]), h)
    c3 = float(norms.max())
    if spec.K_c3 is not None:
        slacks.append(spec.K_c3 - c3)

    logger.info(f"forcing {spec.kind.value}: sup|F|={sup:.4g} (K={spec.K:.4g}), "
                f"fd errors J {e1:.2e}->{e2:.2e}, H {h1:.2e}->{h2:.2e}, C3 norm {c3:.4g}")
    return CheckReport.from_slacks(
        name="forcing",
        anchor=FORCING_ANCHOR,
        slacks=slacks,
        tolerance=0.0,
        constants={
            "K": ConstantRecord(value=spec.K, provenance=Provenance.CONFIGURED, method="FORCING_K"),
            "sampled_sup": ConstantRecord(value=sup, provenance=Provenance.SAMPLED, method=f"grid {per_axis}^{dim}"),
            "C3_norm": ConstantRecord(value=c3, provenance=Provenance.SAMPLED, method="max of |D^k F| for k <= 3"),
            "K_c3": (ConstantRecord(value=spec.K_c3, provenance=Provenance.CONFIGURED, method="FORCING_K_C3")
                     if spec.K_c3 is not None else
                     ConstantRecord(value=c3, provenance=Provenance.SAMPLED, method="sampled C^3 norm")),
        },
        auxiliary={"fd_jacobian": [e1, e2], "fd_hessian": [h1, h2], "derivative_norms": norms.tolist()},
    )
