"""Disk-chain agent footprints and the collision geometry built on them.

A footprint is an ordered chain of disks in a local frame whose x-axis is
the agent's forward direction. Consecutive disks span convex hull pieces;
the shape is the union of those pieces. Minkowski sums, containment,
signed distances and overlap tests all reduce to signed distances from the
origin to hulls of at most four disks (see the kernel modules).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

EPS = 1e-9  # absolute tolerance for geometric predicates, meters


class ViewpointInsideShape(ValueError):
    """Tangent angles were requested from a point contained in the shape."""


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


def _as_disk_array(disks) -> np.ndarray:
    arr = np.asarray(disks, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 1:
        raise ValueError("disks must be an (n, 3) array of [x, y, r] rows")
    if not np.all(np.isfinite(arr)):
        raise ValueError("disk entries must be finite")
    if np.any(arr[:, 2] < 0.0):
        raise ValueError("disk radii must be nonnegative")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class Disk:
    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class ConvexPiece:
    """Convex hull of two disks; both rows equal for a single-disk shape."""

    disks: np.ndarray  # (2, 3)


class CtmatShape:
    """Chain of medial disks. Immutable by convention.

    `width` is the lateral extent in the authoring frame,
    max_i(y_i + r_i) - min_i(y_i - r_i); it is carried unchanged through
    rigid placement. `reference_offset` locates the agent reference point
    (front axle for vehicles, chain middle for pedestrians) in the same
    frame; for a placed shape it holds the world-frame reference point.
    """

    __slots__ = ("disks", "reference_offset", "width")

    def __init__(self, disks, reference_offset=(0.0, 0.0), width=None):
        self.disks = _as_disk_array(disks)
        ref = np.asarray(reference_offset, dtype=np.float64).reshape(2)
        if not np.all(np.isfinite(ref)):
            raise ValueError("reference_offset must be finite")
        self.reference_offset = ref
        if width is None:
            d = self.disks
            width = float(np.max(d[:, 1] + d[:, 2]) - np.min(d[:, 1] - d[:, 2]))
        self.width = float(width)

    @property
    def pieces(self) -> list[ConvexPiece]:
        n = len(self.disks)
        if n == 1:
            return []
        return [ConvexPiece(self.disks[i : i + 2].copy()) for i in range(n - 1)]

    def piece_index_pairs(self) -> list[tuple[int, int]]:
        """Index pairs of the pieces collision queries iterate over.

        A single-disk shape yields one degenerate (0, 0) pair so it still
        participates in sums and overlap tests.
        """
        n = len(self.disks)
        if n == 1:
            return [(0, 0)]
        return [(i, i + 1) for i in range(n - 1)]

    def disk_objects(self) -> list[Disk]:
        return [Disk(row[:2].copy(), float(row[2])) for row in self.disks]

    def __repr__(self):
        return f"CtmatShape({len(self.disks)} disks, width={self.width:.3f})"


@dataclass(frozen=True)
class MinkowskiSumShape:
    """Union of per-piece-pair hulls; each piece is (<=4, 3) summed disks."""

    pieces: list


@dataclass(frozen=True)
class TangentInterval:
    """Minimal angular interval at a viewpoint covering a shape.

    lo <= hi; hi - lo is the subtended extent (may exceed pi for close,
    wrapping chains). point_lo/point_hi are the extreme tangent points.
    """

    lo: float
    hi: float
    point_lo: np.ndarray
    point_hi: np.ndarray

    @property
    def extent(self) -> float:
        return self.hi - self.lo

    def contains_bearing(self, bearing: float) -> bool:
        return (bearing - self.lo) % (2.0 * math.pi) <= self.extent + 1e-12


def place_shape(shape: CtmatShape, position, theta: float) -> CtmatShape:
    """Rigidly transform a shape's local frame to the given world pose."""
    if not math.isfinite(theta):
        raise ValueError("pose orientation must be finite")
    pos = np.asarray(position, dtype=np.float64).reshape(2)
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    disks = shape.disks.copy()
    disks[:, :2] = disks[:, :2] @ rot.T + pos
    ref = rot @ shape.reference_offset + pos
    return CtmatShape(disks, reference_offset=ref, width=shape.width)


def minkowski_sum(a: CtmatShape, b: CtmatShape, reflect_a: bool = False) -> MinkowskiSumShape:
    """Piecewise Minkowski sum of two shapes.

    Each output piece is the hull of the four pairwise disk sums of one
    piece of A (optionally reflected through the origin) with one piece of
    B; the sum shape is the implicit union of those hulls.
    """
    sign = -1.0 if reflect_a else 1.0
    pieces = []
    for i0, i1 in a.piece_index_pairs():
        for j0, j1 in b.piece_index_pairs():
            rows = np.empty((4, 3))
            m = 0
            for ai in (i0, i1):
                for bj in (j0, j1):
                    rows[m, 0] = sign * a.disks[ai, 0] + b.disks[bj, 0]
                    rows[m, 1] = sign * a.disks[ai, 1] + b.disks[bj, 1]
                    rows[m, 2] = a.disks[ai, 2] + b.disks[bj, 2]
                    m += 1
            pieces.append(rows)
    return MinkowskiSumShape(pieces)


def signed_distance_origin(s: MinkowskiSumShape) -> float:
    """Signed distance from the origin to the sum shape.

    Positive outside (Euclidean clearance), negative inside (penetration
    depth of the deepest containing piece).
    """
    return min(_kernels.hull_signed_dist(p) for p in s.pieces)


def contains_origin(s: MinkowskiSumShape) -> bool:
    """Closed-set origin membership: boundary points count as inside."""
    return any(_kernels.hull_signed_dist(p) <= EPS for p in s.pieces)


def shapes_overlap(a: CtmatShape, b: CtmatShape) -> bool:
    """Closed-set overlap test between two placed shapes."""
    return _kernels.pair_signed_dist(a.disks, b.disks) <= EPS


def shape_pair_distance(a: CtmatShape, b: CtmatShape) -> float:
    """Signed separation between two placed shapes (negative = penetration)."""
    return float(_kernels.pair_signed_dist(a.disks, b.disks))


def point_to_shape_distance(point, shape: CtmatShape) -> float:
    """Signed distance from a world point to a placed shape."""
    p = np.asarray(point, dtype=np.float64).reshape(2)
    return float(_kernels.point_shape_dist(p[0], p[1], shape.disks))


def tangent_angles(viewpoint, shape: CtmatShape) -> TangentInterval:
    """Minimal angular interval at `viewpoint` covering a placed shape.

    Per disk the occluded interval is bearing +- asin(r / dist); the chain
    is connected, so sequentially unwrapped per-disk intervals union into
    one interval. Raises ViewpointInsideShape when the viewpoint is not
    strictly outside.
    """
    v = np.asarray(viewpoint, dtype=np.float64).reshape(2)
    if point_to_shape_distance(v, shape) <= EPS:
        raise ViewpointInsideShape("viewpoint is contained in the shape")

    rel = shape.disks[:, :2] - v
    dist = np.hypot(rel[:, 0], rel[:, 1])
    half = np.arcsin(np.clip(shape.disks[:, 2] / dist, 0.0, 1.0))

    raw = np.arctan2(rel[:, 1], rel[:, 0])
    bear = np.empty_like(raw)
    bear[0] = raw[0]
    for i in range(1, len(raw)):
        bear[i] = bear[i - 1] + wrap_angle(raw[i] - bear[i - 1])

    lo_all = bear - half
    hi_all = bear + half
    ilo = int(np.argmin(lo_all))
    ihi = int(np.argmax(hi_all))

    def tangent_point(i, ang):
        t = math.sqrt(max(dist[i] ** 2 - shape.disks[i, 2] ** 2, 0.0))
        return v + t * np.array([math.cos(ang), math.sin(ang)])

    return TangentInterval(
        lo=float(lo_all[ilo]),
        hi=float(hi_all[ihi]),
        point_lo=tangent_point(ilo, lo_all[ilo]),
        point_hi=tangent_point(ihi, hi_all[ihi]),
    )
