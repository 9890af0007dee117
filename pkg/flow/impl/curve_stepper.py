import logging
import math
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import splu

from common.enums import Scheme
from common.errors import InvalidInputError, SingularityReached, StabilityError
from flow.interface.base_forcing import BaseForcingField
from flow.interface.base_stepper import BaseStepper
from mesh.geometry import curvature_data
from schema.surface_state import SurfaceState

logger = logging.getLogger(__name__)

EXPLICIT_FACTOR = 0.2
SEMI_IMPLICIT_BOUND = 0.1
# chord ratio above which nodes are moved back to uniform arclength
REDISTRIBUTE_RATIO = 1.25
SPACING_COLLAPSE = 10.0
MIN_LENGTH = 1e-3


def redistribute(nodes: np.ndarray) -> np.ndarray:
    """Resample a closed polygon at uniform arclength with a periodic cubic spline; node 0 stays."""
    closed = np.vstack([nodes, nodes[:1]])
    chords = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    arclength = np.concatenate([[0.0], np.cumsum(chords)])
    spline = CubicSpline(arclength, closed, axis=0, bc_type='periodic')
    target = arclength[-1] * np.arange(nodes.shape[0]) / nodes.shape[0]
    return spline(target)


class CurveStepper(BaseStepper):
    """
    Normal-velocity update of closed planar curves.

    explicit:      x += dt v nu
    semi_implicit: (I - dt D_ss) x^{n+1} = x^n + dt (v - H-part) nu, with the
                   periodic arclength Laplacian D_ss frozen at x^n
    """

    def __init__(self, scheme: Scheme = Scheme.EXPLICIT):
        self.scheme = scheme

    def stability_bound(self, s: SurfaceState, rescaled: bool = True) -> float:
        if self.scheme == Scheme.SEMI_IMPLICIT:
            return SEMI_IMPLICIT_BOUND
        return EXPLICIT_FACTOR * float(np.min(s.chord_lengths)) ** 2

    def _normal_forcing(self, s, geo, forcing, t, rescaled):
        if forcing is None:
            return np.zeros(s.size)
        g = np.sum(forcing.value(s.nodes) * geo.normal, axis=1)
        if rescaled:
            prefactor = math.exp(-0.5 * t)
            # forcing moves each node by at most K e^{-t/2} dt
            assert np.all(np.abs(prefactor * g) <= prefactor * forcing.sup_bound * (1.0 + 1e-9) + 1e-15)
            return prefactor * g
        return g

    def _laplacian(self, s: SurfaceState) -> sparse.csc_matrix:
        hp = s.chord_lengths
        hm = np.roll(hp, 1)
        n = s.size
        lower = 2.0 / ((hp + hm) * hm)
        upper = 2.0 / ((hp + hm) * hp)
        rows = np.arange(n)
        data = np.concatenate([-(lower + upper), lower, upper])
        cols = np.concatenate([rows, (rows - 1) % n, (rows + 1) % n])
        return sparse.csc_matrix((data, (np.tile(rows, 3), cols)), shape=(n, n))

    def _check_singular(self, nodes: np.ndarray, t: float) -> None:
        if not np.all(np.isfinite(nodes)):
            raise SingularityReached("non-finite node positions", t)
        chords = np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)
        if float(np.sum(chords)) < MIN_LENGTH:
            raise SingularityReached("curve shrank to a point", t)
        if float(np.min(chords)) < float(np.mean(chords)) / SPACING_COLLAPSE:
            raise SingularityReached("local spacing collapse", t)

    def step(self, s, forcing: Optional[BaseForcingField], t: float, dt: float, rescaled: bool) -> SurfaceState:
        if not s.closed:
            raise InvalidInputError("only closed curves can be evolved")
        bound = self.stability_bound(s, rescaled)
        if dt > bound * (1.0 + 1e-12):
            raise StabilityError(f"dt={dt:.3e} exceeds the {self.scheme.value} curve bound {bound:.3e}")

        geo = curvature_data(s)
        g = self._normal_forcing(s, geo, forcing, t, rescaled)
        drift = 0.5 * geo.support if rescaled else 0.0

        if self.scheme == Scheme.EXPLICIT:
            speed = -geo.mean_curvature + drift + g
            nodes = s.nodes + dt * speed[:, None] * geo.normal
        else:
            rhs = s.nodes + dt * ((drift + g)[:, None] * geo.normal)
            system = sparse.identity(s.size, format='csc') - dt * self._laplacian(s)
            lu = splu(system)
            nodes = np.column_stack([lu.solve(rhs[:, 0]), lu.solve(rhs[:, 1])])

        t_new = t + dt
        self._check_singular(nodes, t_new)
        chords = np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)
        if float(np.max(chords)) > REDISTRIBUTE_RATIO * float(np.min(chords)):
            nodes = redistribute(nodes)
        return s.with_nodes(nodes, t_new)
