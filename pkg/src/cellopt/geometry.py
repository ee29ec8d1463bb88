"""Convex polygon kernels used by the layout constraints."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError
from .model import Resource


@dataclass(frozen=True, eq=False)
class WorldPolygon:
    """Counter-clockwise convex polygon in world coordinates."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 2)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @property
    def normals(self) -> np.ndarray:
        """Un-normalized edge normals (-dy, dx)."""
        e = self.edges
        return np.column_stack((-e[:, 1], e[:, 0]))

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def translated(self, offset) -> "WorldPolygon":
        return WorldPolygon(self.vertices + np.asarray(offset, dtype=float))


@dataclass(frozen=True)
class SeparationResult:
    separated: bool
    axis: Optional[tuple[float, float]] = None

    def __bool__(self):
        return self.separated


def place(resource: Resource, coords) -> WorldPolygon:
    """Instantiate a resource footprint at ``coords`` (fixed resources ignore them)."""
    coords = np.asarray(coords, dtype=float).reshape(-1)
    if coords.size != resource.dofs:
        raise DimensionError(f"{resource.label}: got {coords.size} coordinates, expected {resource.dofs}")
    if not resource.movable:
        coords = np.asarray(resource.coords, dtype=float)
    return WorldPolygon(np.asarray(resource.footprint, dtype=float) + coords[:2])


def separated(a: WorldPolygon, b: WorldPolygon) -> SeparationResult:
    """Separating-axis test with strict inequalities: touching polygons overlap."""
    for n in np.vstack((a.normals, b.normals)):
        norm = np.hypot(n[0], n[1])
        if norm == 0.0:
            continue
        axis = n / norm
        pa = a.vertices @ axis
        pb = b.vertices @ axis
        if pa.max() < pb.min() or pb.max() < pa.min():
            return SeparationResult(True, (float(axis[0]), float(axis[1])))
    return SeparationResult(False)


def projection_gap(a: WorldPolygon, b: WorldPolygon) -> float:
    """Largest gap between the projections over all candidate axes (negative when overlapping)."""
    best = -np.inf
    for n in np.vstack((a.normals, b.normals)):
        norm = np.hypot(n[0], n[1])
        if norm == 0.0:
            continue
        axis = n / norm
        pa = a.vertices @ axis
        pb = b.vertices @ axis
        best = max(best, pb.min() - pa.max(), pa.min() - pb.max())
    return float(best)


def in_annulus(point, center, d_min: float, d_max: float) -> bool:
    d = float(np.hypot(point[0] - center[0], point[1] - center[1]))
    return d_min <= d <= d_max


def in_bounds(coords: Sequence[float], bounds: Sequence[tuple[float, float]]) -> bool:
    if len(coords) != len(bounds):
        raise DimensionError(f"{len(coords)} coordinates against {len(bounds)} bounds")
    return all(lo <= c <= hi for c, (lo, hi) in zip(coords, bounds))


def contains(poly: WorldPolygon, points: np.ndarray) -> np.ndarray:
    """Vectorized closed point-in-convex-polygon test."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    v = poly.vertices
    e = poly.edges
    rel = pts[:, None, :] - v[None, :, :]
    cross = e[None, :, 0] * rel[:, :, 1] - e[None, :, 1] * rel[:, :, 0]
    return np.all(cross >= 0, axis=1)
