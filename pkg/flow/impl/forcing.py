import logging
import math
from typing import Optional

import numpy as np

from common.enums import ForcingKind, GeometryFamily, GRescaling
from common.errors import InvalidInputError
from flow.interface.base_forcing import BaseForcingField
from schema.forcing_spec import ForcingSpec

logger = logging.getLogger(__name__)


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise InvalidInputError(f"points must have shape (N, d), got {pts.shape}")
    return pts


class ConstantField(BaseForcingField):
    def __init__(self, vector):
        self.vector = np.asarray(vector, dtype=float)
        self.sup_bound = float(np.linalg.norm(self.vector))

    def value(self, points):
        pts = _as_points(points)
        return np.broadcast_to(self.vector, pts.shape).copy()

    def jacobian(self, points):
        n, d = _as_points(points).shape
        return np.zeros((n, d, d))

    def hessian(self, points):
        n, d = _as_points(points).shape
        return np.zeros((n, d, d, d))


class RadialField(BaseForcingField):
    """c x / sqrt(|x|^2 + delta^2)"""

    def __init__(self, c: float, delta: float):
        self.c = float(c)
        self.delta = float(delta)
        self.sup_bound = abs(self.c)

    def _q(self, pts):
        return np.sum(pts ** 2, axis=1) + self.delta ** 2

    def value(self, points):
        pts = _as_points(points)
        return self.c * pts / np.sqrt(self._q(pts))[:, None]

    def jacobian(self, points):
        pts = _as_points(points)
        q = self._q(pts)
        d = pts.shape[1]
        eye = np.eye(d)[None, :, :]
        outer = pts[:, :, None] * pts[:, None, :]
        return self.c * (eye * q[:, None, None] ** -0.5 - outer * q[:, None, None] ** -1.5)

    def hessian(self, points):
        pts = _as_points(points)
        q = self._q(pts)
        d = pts.shape[1]
        eye = np.eye(d)
        # -(delta_ij x_k + delta_ik x_j + delta_jk x_i) q^{-3/2} + 3 x_i x_j x_k q^{-5/2}
        sym = (np.einsum('ij,nk->nijk', eye, pts)
               + np.einsum('ik,nj->nijk', eye, pts)
               + np.einsum('jk,ni->nijk', eye, pts))
        triple = np.einsum('ni,nj,nk->nijk', pts, pts, pts)
        return self.c * (-sym * q[:, None, None, None] ** -1.5 + 3.0 * triple * q[:, None, None, None] ** -2.5)


class BumpField(BaseForcingField):
    """c beta(|x - x0|^2 / w^2) (x - x0) / w with beta(u) = exp(1 - 1/(1 - u)), supported in B_w(x0)."""

    def __init__(self, c: float, center, width: float):
        self.c = float(c)
        self.center = np.asarray(center, dtype=float)
        self.width = float(width)
        self.sup_bound = abs(self.c)

    def _profile(self, pts):
        d = pts - self.center
        u = np.sum(d ** 2, axis=1) / self.width ** 2
        inside = u < 1.0
        beta = np.zeros_like(u)
        b1 = np.zeros_like(u)
        b2 = np.zeros_like(u)
        v = 1.0 / (1.0 - u[inside])
        beta[inside] = np.exp(1.0 - v)
        b1[inside] = -beta[inside] * v ** 2
        b2[inside] = beta[inside] * (v ** 4 - 2.0 * v ** 3)
        return d, beta, b1, b2

    def value(self, points):
        pts = _as_points(points)
        d, beta, _, _ = self._profile(pts)
        return self.c / self.width * beta[:, None] * d

    def jacobian(self, points):
        pts = _as_points(points)
        d, beta, b1, _ = self._profile(pts)
        w2 = self.width ** 2
        eye = np.eye(pts.shape[1])[None, :, :]
        outer = d[:, :, None] * d[:, None, :]
        return self.c / self.width * (2.0 * b1[:, None, None] * outer / w2 + beta[:, None, None] * eye)

    def hessian(self, points):
        pts = _as_points(points)
        d, beta, b1, b2 = self._profile(pts)
        w2 = self.width ** 2
        eye = np.eye(pts.shape[1])
        triple = np.einsum('ni,nj,nk->nijk', d, d, d)
        sym = (np.einsum('jk,ni->nijk', eye, d)
               + np.einsum('ik,nj->nijk', eye, d)
               + np.einsum('ij,nk->nijk', eye, d))
        return self.c / self.width * (
            4.0 * b2[:, None, None, None] * triple / w2 ** 2
            + 2.0 * b1[:, None, None, None] * sym / w2
        )


class PulledBackField(BaseForcingField):
    """x -> F(a x), with the chain-rule derivatives a DF(a x) and a^2 D^2F(a x)."""

    def __init__(self, base: BaseForcingField, scale: float):
        self.base = base
        self.scale = float(scale)
        self.sup_bound = base.sup_bound

    def value(self, points):
        return self.base.value(self.scale * _as_points(points))

    def jacobian(self, points):
        return self.scale * self.base.jacobian(self.scale * _as_points(points))

    def hessian(self, points):
        return self.scale ** 2 * self.base.hessian(self.scale * _as_points(points))


def rescaled_field(base: Optional[BaseForcingField], t: float, g_rescaling: GRescaling) -> Optional[BaseForcingField]:
    """G(., t) for the rescaled picture: F(e^{-t/2} x) (derived) or F(e^{t/2} x) (stated)."""
    if base is None:
        return None
    exponent = -0.5 if g_rescaling == GRescaling.DERIVED else 0.5
    return PulledBackField(base, math.exp(exponent * t))


def ambient_dimension(family: GeometryFamily) -> int:
    return 2 if family == GeometryFamily.CURVE else 3


def build_forcing(spec: ForcingSpec, family: GeometryFamily) -> Optional[BaseForcingField]:
    """
    Evaluator for ``spec`` in the ambient space of ``family``. Profiles need
    fields that commute with rotations about the z axis.
    """
    if spec.is_zero:
        return None
    dim = ambient_dimension(family)

    if spec.kind == ForcingKind.CONSTANT:
        direction = np.asarray(spec.direction if spec.direction is not None else _default_direction(dim), dtype=float)
        if direction.shape != (dim,):
            raise InvalidInputError(f"constant forcing direction needs {dim} components")
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            raise InvalidInputError("constant forcing direction must be non-zero")
        direction = direction / norm
        if family == GeometryFamily.PROFILE and np.linalg.norm(direction[:2]) > 1e-12:
            raise InvalidInputError("constant forcing on a profile must point along the z axis")
        return ConstantField(spec.c * direction)

    if spec.kind == ForcingKind.RADIAL:
        return RadialField(spec.c, spec.delta)

    center = np.asarray(spec.center if spec.center is not None else np.zeros(dim), dtype=float)
    if center.shape != (dim,):
        raise InvalidInputError(f"bump center needs {dim} components")
    if family == GeometryFamily.PROFILE and np.linalg.norm(center[:2]) > 1e-12:
        raise InvalidInputError("bump forcing on a profile must be centred on the z axis")
    return BumpField(spec.c, center, spec.width)


def _default_direction(dim: int) -> np.ndarray:
    e = np.zeros(dim)
    e[-1] = 1.0
    return e
