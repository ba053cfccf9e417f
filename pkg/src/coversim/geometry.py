"""Planar geometry primitives shared by the planner and the flight simulator.

World frame: x east, y north, metres.  Polygons are stored clockwise (seen
with y up) starting from the top-left-most vertex, which matches how survey
fields are handed to the planner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePolygon


@dataclass(frozen=True)
class Point2:
    """A point (or free vector) in the world frame, metres."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")

    def __add__(self, other: "Point2") -> "Point2":
        return Point2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point2") -> "Point2":
        return Point2(self.x - other.x, self.y - other.y)

    def scaled(self, k: float) -> "Point2":
        return Point2(self.x * k, self.y * k)

    def dot(self, other: "Point2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Point2") -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def distance_to(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def unit(self) -> "Point2":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalise the zero vector")
        return Point2(self.x / n, self.y / n)

    def perp(self) -> "Point2":
        """Rotate by +90 degrees."""
        return Point2(-self.y, self.x)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


def angle_of(v: Point2) -> float:
    return math.atan2(v.y, v.x)


def from_angle(theta: float, length: float = 1.0) -> Point2:
    return Point2(length * math.cos(theta), length * math.sin(theta))


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    return math.atan2(math.sin(theta), math.cos(theta))


class Polygon:
    """Simple convex polygon, vertices clockwise from the top-left-most one.

    Raises DegeneratePolygon when the vertex list has fewer than three
    points, is not strictly convex, runs counter-clockwise, or does not
    start at the top-left-most vertex (max y, ties broken by min x).
    """

    def __init__(self, vertices):
        verts = tuple(
            v if isinstance(v, Point2) else Point2(float(v[0]), float(v[1]))
            for v in vertices
        )
        if len(verts) < 3:
            raise DegeneratePolygon(f"need at least 3 vertices, got {len(verts)}")
        self.vertices = verts
        self._validate()

    def _validate(self):
        n = len(self.vertices)
        scale = self.diameter()
        tol = 1e-9 * max(scale, 1.0)
        for i in range(n):
            a = self.vertices[i]
            b = self.vertices[(i + 1) % n]
            c = self.vertices[(i + 2) % n]
            turn = (b - a).cross(c - b)
            # clockwise, strictly convex: every turn is a right turn
            if turn > -tol * max((b - a).norm(), 1.0):
                raise DegeneratePolygon(
                    f"vertices {i}..{i + 2} are collinear or turn counter-clockwise"
                )
        top_left = min(range(n), key=lambda i: (-self.vertices[i].y, self.vertices[i].x))
        if top_left != 0:
            raise DegeneratePolygon(
                f"vertex 0 must be the top-left-most vertex (found index {top_left})"
            )

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def edges(self):
        n = len(self.vertices)
        for i in range(n):
            yield self.vertices[i], self.vertices[(i + 1) % n]

    def diameter(self) -> float:
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        return math.hypot(max(xs) - min(xs), max(ys) - min(ys))

    def centroid(self) -> Point2:
        n = len(self.vertices)
        return Point2(
            sum(v.x for v in self.vertices) / n, sum(v.y for v in self.vertices) / n
        )

    def contains(self, p: Point2, tol: float = 0.0) -> bool:
        """True when p is inside (or within tol of) the polygon."""
        for a, b in self.edges():
            if (b - a).cross(p - a) > tol:
                return False
        return True

    def strictly_inside(self, p: Point2, margin: float) -> bool:
        for a, b in self.edges():
            edge = b - a
            if edge.cross(p - a) > -margin * edge.norm():
                return False
        return True

    def contains_mask(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Vectorised containment test for sample grids."""
        mask = np.ones(xs.shape, dtype=bool)
        for a, b in self.edges():
            ex, ey = b.x - a.x, b.y - a.y
            mask &= ex * (ys - a.y) - ey * (xs - a.x) <= 0.0
        return mask


def line_polygon_chord(polygon: Polygon, point: Point2, direction: Point2, tol: float = 1e-9):
    """Intersect an infinite line with the polygon boundary.

    Returns the chord endpoints (lowest and highest line parameter) or None
    when the line misses the interior.  A line that merely grazes an edge or
    runs along the boundary counts as a miss.
    """
    d = direction.unit()
    scale = max(polygon.diameter(), 1.0)
    hits = []
    for a, b in polygon.edges():
        e = b - a
        denom = d.cross(e)
        if abs(denom) < tol:
            continue  # parallel edge; collinear overlap handled by midpoint test
        rel = a - point
        s = rel.cross(e) / denom
        u = rel.cross(d) / denom
        if -tol <= u <= 1.0 + tol:
            hits.append(s)
    if not hits:
        return None
    lo, hi = min(hits), max(hits)
    if hi - lo < 1e-6 * scale:
        return None
    p_lo = point + d.scaled(lo)
    p_hi = point + d.scaled(hi)
    mid = point + d.scaled(0.5 * (lo + hi))
    if not polygon.strictly_inside(mid, 1e-7 * scale):
        return None
    return p_lo, p_hi


def circle_polygon_hits(polygon: Polygon, center: Point2, radius: float, tol: float = 1e-9):
    """All intersection points of a circle with the polygon boundary."""
    pts: list[Point2] = []
    for a, b in polygon.edges():
        e = b - a
        f = a - center
        qa = e.dot(e)
        qb = 2.0 * f.dot(e)
        qc = f.dot(f) - radius * radius
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0.0 or qa == 0.0:
            continue
        root = math.sqrt(disc)
        for u in ((-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)):
            if -tol <= u <= 1.0 + tol:
                pts.append(a + e.scaled(u))
    # dedupe vertex doubles and tangency twins
    dedup: list[Point2] = []
    eps = 1e-6 * max(radius, 1.0)
    for p in pts:
        if all(p.distance_to(q) > eps for q in dedup):
            dedup.append(p)
    return dedup
