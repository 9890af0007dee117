from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional

import numpy as np

from common.enums import GeometryFamily
from common.errors import GeometryError, InvalidInputError

MIN_CURVE_NODES = 16


@dataclass(frozen=True, eq=False)
class SurfaceState:
    """
    A discrete hypersurface in one of the two families.

    curve:   ``nodes`` has shape (N, 2), planar points, periodic when ``closed``.
    profile: ``nodes`` has shape (N,), radii r(z_i) over the uniform grid ``z``;
             the surface is the revolution of (r, z) about the z axis.
    """
    family: GeometryFamily
    nodes: np.ndarray
    time: float = 0.0
    z: Optional[np.ndarray] = None
    closed: bool = True

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)

        if not np.all(np.isfinite(nodes)):
            raise InvalidInputError("surface nodes must be finite")

        if self.family == GeometryFamily.CURVE:
            if nodes.ndim != 2 or nodes.shape[1] != 2:
                raise InvalidInputError(f"curve nodes must have shape (N, 2), got {nodes.shape}")
            if self.closed and nodes.shape[0] < MIN_CURVE_NODES:
                raise InvalidInputError(f"closed curves need at least {MIN_CURVE_NODES} nodes, got {nodes.shape[0]}")
            if not self.closed and nodes.shape[0] < 3:
                raise InvalidInputError("open curves need at least 3 nodes")
            if self.closed:
                x, y = nodes[:, 0], nodes[:, 1]
                signed_area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
                if signed_area < 0:
                    # closed curves are stored counter-clockwise, node 0 kept first
                    object.__setattr__(self, "nodes", np.concatenate([nodes[:1], nodes[:0:-1]]))
        else:
            if self.z is None:
                raise InvalidInputError("profile states need a z grid")
            z = np.asarray(self.z, dtype=float)
            object.__setattr__(self, "z", z)
            if nodes.ndim != 1 or z.shape != nodes.shape:
                raise InvalidInputError("profile radii and z grid must be 1-d arrays of equal length")
            if nodes.size < 3:
                raise InvalidInputError("profile needs at least 3 grid points")
            dz = np.diff(z)
            if np.any(dz <= 0) or np.ptp(dz) > 1e-9 * max(1.0, abs(dz[0])):
                raise InvalidInputError("profile z grid must be uniform and increasing")
            if np.any(nodes <= 0):
                raise InvalidInputError("profile radius must be strictly positive")

    # ------------------------------------------------------------------ #
    @property
    def n(self) -> int:
        """Intrinsic dimension."""
        return 1 if self.family == GeometryFamily.CURVE else 2

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def dz(self) -> float:
        return float(self.z[1] - self.z[0])

    @cached_property
    def points(self) -> np.ndarray:
        """Meridian-plane positions (N, 2): (x, y) for curves, (r, z) for profiles."""
        if self.family == GeometryFamily.CURVE:
            return self.nodes
        return np.column_stack([self.nodes, self.z])

    @cached_property
    def ambient_points(self) -> np.ndarray:
        """Positions in the ambient space: R^2 for curves, (r, 0, z) in R^3 for profiles."""
        if self.family == GeometryFamily.CURVE:
            return self.nodes
        return np.column_stack([self.nodes, np.zeros_like(self.nodes), self.z])

    @cached_property
    def chord_lengths(self) -> np.ndarray:
        """Curve: |x_{i+1} - x_i| (length N when closed, N-1 when open)."""
        if self.family != GeometryFamily.CURVE:
            raise GeometryError("chord lengths are defined for curves only")
        nxt = np.roll(self.nodes, -1, axis=0) if self.closed else self.nodes[1:]
        cur = self.nodes if self.closed else self.nodes[:-1]
        h = np.linalg.norm(nxt - cur, axis=1)
        if np.any(h <= 0):
            raise GeometryError(f"consecutive curve nodes coincide at index {int(np.argmin(h))}")
        return h

    @cached_property
    def radius_slope(self) -> np.ndarray:
        """Profile: r_z by centered differences with r_z = 0 at both ends."""
        r = self.nodes
        rz = np.empty_like(r)
        rz[1:-1] = (r[2:] - r[:-2]) / (2.0 * self.dz)
        rz[0] = 0.0
        rz[-1] = 0.0
        return rz

    @cached_property
    def weights(self) -> np.ndarray:
        """Per-node surface measure (trapezoid rule)."""
        if self.family == GeometryFamily.CURVE:
            h = self.chord_lengths
            if self.closed:
                return 0.5 * (h + np.roll(h, 1))
            w = np.zeros(self.size)
            w[:-1] += 0.5 * h
            w[1:] += 0.5 * h
            return w
        element = 2.0 * np.pi * self.nodes * np.sqrt(1.0 + self.radius_slope ** 2) * self.dz
        element[0] *= 0.5
        element[-1] *= 0.5
        return element

    @property
    def measure(self) -> float:
        return float(np.sum(self.weights))

    @property
    def mesh_size(self) -> float:
        """Largest parameter spacing h."""
        if self.family == GeometryFamily.CURVE:
            return float(np.max(self.chord_lengths))
        return self.dz

    # ------------------------------------------------------------------ #
    def with_nodes(self, nodes: np.ndarray, time: float) -> "SurfaceState":
        return replace(self, nodes=np.asarray(nodes, dtype=float), time=float(time))

    def scaled(self, factor: float, time: float) -> "SurfaceState":
        """Dilate about the origin."""
        if self.family == GeometryFamily.CURVE:
            return replace(self, nodes=self.nodes * factor, time=float(time))
        return replace(self, nodes=self.nodes * factor, z=self.z * factor, time=float(time))
