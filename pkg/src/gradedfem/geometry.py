"""Planar primitives: orientation, segment clipping against triangles.

All predicates use a symmetric tolerance band so that nearly collinear
configurations are treated as collinear; coordinates are assumed to be
O(1) domain units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# |cross| <= COLLINEAR_REL_TOL * scale^2 counts as collinear.
COLLINEAR_REL_TOL = 1e-14

# Parameter intervals (relative to the segment) shorter than this clip to empty.
MIN_CLIP_FRACTION = 1e-12


@dataclass(frozen=True)
class Point2:
    """A point in the plane.  Coordinates must be finite."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")


@dataclass(frozen=True)
class Segment2:
    """A non-degenerate line segment between two points."""

    a: Point2
    b: Point2

    def __post_init__(self) -> None:
        a, b = as_point(self.a), as_point(self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if a.x == b.x and a.y == b.y:
            raise ValueError(f"degenerate segment at ({a.x}, {a.y})")

    @property
    def length(self) -> float:
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)


def as_point(p) -> Point2:
    """Coerce a Point2 or (x, y) pair into a Point2."""
    if isinstance(p, Point2):
        return p
    x, y = p
    return Point2(float(x), float(y))


def orient2d(a, b, c) -> int:
    """Sign of the signed area of (a, b, c): +1 CCW, -1 CW, 0 collinear.

    The zero band is symmetric: |(b-a) x (c-a)| <= tol * scale^2 where
    scale is the largest coordinate magnitude among the three points.
    """
    a, b, c = as_point(a), as_point(b), as_point(c)
    cross = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)
    scale = max(abs(a.x), abs(a.y), abs(b.x), abs(b.y), abs(c.x), abs(c.y), 1.0)
    if abs(cross) <= COLLINEAR_REL_TOL * scale * scale:
        return 0
    return 1 if cross > 0 else -1


def clip_segment_to_triangle(seg, tri) -> Segment2 | None:
    """Intersect a segment with a closed triangle.

    Returns the sub-segment of `seg` inside the triangle, or None when the
    intersection is empty, a single point, or shorter than
    MIN_CLIP_FRACTION times the segment length.  The result's endpoints lie
    on the input segment.
    """
    seg = Segment2(as_point(seg[0]), as_point(seg[1])) if not isinstance(seg, Segment2) else seg
    pa = np.array([seg.a.x, seg.a.y])
    pb = np.array([seg.b.x, seg.b.y])
    coords = np.array([[as_point(v).x, as_point(v).y] for v in tri], dtype=float)[None, :, :]
    lo, hi, ok = clip_segments_to_triangles(pa, pb, coords)
    if not ok[0]:
        return None
    p = pa + lo[0] * (pb - pa)
    q = pa + hi[0] * (pb - pa)
    return Segment2(Point2(float(p[0]), float(p[1])), Point2(float(q[0]), float(q[1])))


def clip_segments_to_triangles(p, q, tri_coords):
    """Clip one segment against many triangles at once.

    Parameters
    ----------
    p, q : (2,) arrays, the segment endpoints.
    tri_coords : (T, 3, 2) array of CCW triangle vertex coordinates.

    Returns
    -------
    (lo, hi, nonempty) where [lo[t], hi[t]] is the parameter interval of
    the clipped sub-segment inside triangle t (parameters along p + t(q-p))
    and nonempty[t] says whether it has positive length.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = q - p
    ntri = tri_coords.shape[0]
    lo = np.zeros(ntri)
    hi = np.ones(ntri)
    ok = np.ones(ntri, dtype=bool)
    scale = max(np.abs(tri_coords).max(initial=1.0), np.abs(p).max(initial=1.0),
                np.abs(q).max(initial=1.0))
    tol = COLLINEAR_REL_TOL * scale * scale
    for k in range(3):
        a = tri_coords[:, k, :]
        e = tri_coords[:, (k + 1) % 3, :] - a
        # inside condition for edge k: c0 + t*c1 >= 0
        c0 = e[:, 0] * (p[1] - a[:, 1]) - e[:, 1] * (p[0] - a[:, 0])
        c1 = e[:, 0] * d[1] - e[:, 1] * d[0]
        parallel = np.abs(c1) <= tol
        ok &= ~parallel | (c0 >= -tol)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = -c0 / np.where(parallel, 1.0, c1)
        lo = np.where(~parallel & (c1 > 0), np.maximum(lo, t), lo)
        hi = np.where(~parallel & (c1 < 0), np.minimum(hi, t), hi)
    ok &= hi - lo > MIN_CLIP_FRACTION
    return lo, hi, ok
