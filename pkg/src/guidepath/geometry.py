"""Exact 2D primitives: projections, oriented angles, segment crossing and
halfspace polytopes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TOL = 1e-9


class GeometryError(ValueError):
    pass


def as_point(p) -> np.ndarray:
    q = np.asarray(p, dtype=float).reshape(2)
    if not (math.isfinite(q[0]) and math.isfinite(q[1])):
        raise GeometryError(f"non-finite point {p!r}")
    return q


def cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def scalar_projection(a, b, p) -> float:
    """Position of the foot of the perpendicular from ``p`` onto line a-b,
    as a fraction of the segment (0 at ``a``, 1 at ``b``)."""
    a, b, p = as_point(a), as_point(b), as_point(p)
    d = b - a
    dd = float(d @ d)
    if dd == 0.0:
        raise GeometryError("degenerate segment: a == b")
    return float((p - a) @ d) / dd


def oriented_angle(base, other) -> float:
    """Signed angle in (-pi, pi] from direction ``base`` to ``other``;
    positive when ``other`` is counterclockwise of ``base``."""
    base, other = as_point(base), as_point(other)
    if not base.any() or not other.any():
        raise GeometryError("zero-length direction")
    ang = math.atan2(cross2(base, other), float(base @ other))
    if ang == -math.pi:
        ang = math.pi
    return ang


def _orient(a, b, c) -> float:
    return cross2(b - a, c - a)


def segment_intersection(p1, p2, q1, q2, tol: float = TOL):
    """Interior point where segments p1-p2 and q1-q2 cross properly.

    Returns None for disjoint segments, touches at an endpoint (including
    T-junctions) and collinear overlaps.
    """
    p1, p2, q1, q2 = as_point(p1), as_point(p2), as_point(q1), as_point(q2)
    # scale-aware tolerance on the orientation determinants
    xs = (p1[0], p2[0], q1[0], q2[0])
    ys = (p1[1], p2[1], q1[1], q2[1])
    scale = max(max(xs) - min(xs), max(ys) - min(ys), 1.0)
    eps = tol * scale
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if abs(d1) <= eps or abs(d2) <= eps or abs(d3) <= eps or abs(d4) <= eps:
        return None
    if (d1 > 0) == (d2 > 0) or (d3 > 0) == (d4 > 0):
        return None
    t = d1 / (d1 - d2)
    return p1 + t * (p2 - p1)


def point_segment_distance(p, a, b) -> float:
    p, a, b = as_point(p), as_point(a), as_point(b)
    d = b - a
    dd = float(d @ d)
    if dd == 0.0:
        return float(np.linalg.norm(p - a))
    t = min(1.0, max(0.0, float((p - a) @ d) / dd))
    return float(np.linalg.norm(p - (a + t * d)))


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Halfspace:
    """The set {x : normal . x <= offset} with a unit normal."""

    normal: np.ndarray
    offset: float

    @staticmethod
    def make(normal, offset) -> "Halfspace":
        n = as_point(normal)
        norm = float(np.linalg.norm(n))
        if norm == 0.0:
            raise GeometryError("zero halfspace normal")
        return Halfspace(n / norm, float(offset) / norm)

    def contains(self, p, tol: float = TOL) -> bool:
        return float(self.normal @ as_point(p)) <= self.offset + tol


@dataclass(frozen=True)
class Polytope2:
    """Intersection of halfspaces, stored as ``A x <= b`` with unit rows."""

    A: np.ndarray
    b: np.ndarray
    labels: tuple = field(default=(), compare=False)

    @staticmethod
    def from_rows(A, b, labels=()) -> "Polytope2":
        A = np.asarray(A, dtype=float).reshape(-1, 2)
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise GeometryError("row count mismatch")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms == 0.0):
            raise GeometryError("zero halfspace normal")
        return Polytope2(A / norms[:, None], b / norms, tuple(labels))

    @staticmethod
    def from_halfspaces(hs) -> "Polytope2":
        hs = list(hs)
        return Polytope2.from_rows([h.normal for h in hs], [h.offset for h in hs])

    @staticmethod
    def box(xmin, xmax, ymin, ymax) -> "Polytope2":
        return Polytope2.from_rows(
            [[1, 0], [-1, 0], [0, 1], [0, -1]], [xmax, -xmin, ymax, -ymin]
        )

    @property
    def halfspaces(self) -> list:
        return [Halfspace(a.copy(), float(c)) for a, c in zip(self.A, self.b)]

    def __len__(self) -> int:
        return self.A.shape[0]

    def slack(self, p) -> np.ndarray:
        return self.b - self.A @ as_point(p)

    def contains(self, p, tol: float = TOL) -> bool:
        return bool(np.all(self.slack(p) >= -tol))

    def contains_many(self, pts, tol: float = TOL) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        return np.all(pts @ self.A.T <= self.b + tol, axis=1)

    def vertices(self) -> np.ndarray:
        return polytope_vertices(self)

    def bounding_box(self):
        v = self.vertices()
        return v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max()

    def area(self) -> float:
        return polygon_area(self.vertices())


def polygon_area(verts) -> float:
    v = np.asarray(verts, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _line_meet(n1, c1, n2, c2):
    det = n1[0] * n2[1] - n1[1] * n2[0]
    if abs(det) < 1e-14:
        return None
    return np.array([(c1 * n2[1] - c2 * n1[1]) / det, (n1[0] * c2 - n2[0] * c1) / det])


def polytope_vertices(poly: Polytope2, tol: float = TOL) -> np.ndarray:
    """Vertices of a bounded, nonempty polytope in counterclockwise order.

    The polygon is obtained by clipping a large square against each
    halfspace in turn. Every edge remembers the constraint it lies on so the
    final vertices are recomputed as exact two-line intersections; an edge
    still carried by the starting square means the set is unbounded.
    """
    A, b = poly.A, poly.b
    if len(b) == 0:
        raise GeometryError("unbounded polytope (no halfspaces)")
    big = 1e6 * (1.0 + float(np.abs(b).max()))
    lines = [(A[k], float(b[k])) for k in range(len(b))]
    square = [
        (np.array([1.0, 0.0]), big),
        (np.array([0.0, 1.0]), big),
        (np.array([-1.0, 0.0]), big),
        (np.array([0.0, -1.0]), big),
    ]
    lines += square
    nlab = len(b)
    # polygon: list of (vertex, label of edge leaving the vertex)
    poly_pts = [
        (np.array([big, -big]), nlab + 0),
        (np.array([big, big]), nlab + 1),
        (np.array([-big, big]), nlab + 2),
        (np.array([-big, -big]), nlab + 3),
    ]
    for k in range(len(b)):
        n, c = lines[k]
        if max(float(n @ p) for p, _ in poly_pts) <= c:
            continue  # halfspace contains the whole current polygon
        out = []
        m = len(poly_pts)
        for idx in range(m):
            p, lab = poly_pts[idx]
            q, _ = poly_pts[(idx + 1) % m]
            sp = float(n @ p) - c
            sq = float(n @ q) - c
            if sp <= 0:
                # leaving p toward an outside q means walking along line k
                out.append((p, k if (sp == 0 and sq > 0) else lab))
            if (sp < 0 < sq) or (sq < 0 < sp):
                t = sp / (sp - sq)
                x = p + t * (q - p)
                out.append((x, k if sp < 0 else lab))
        poly_pts = out
        if len(poly_pts) < 3:
            raise GeometryError("empty polytope")
    labs = [lab for _, lab in poly_pts]
    m = len(labs)
    verts = []
    for idx in range(m):
        l_in = labs[idx - 1]
        l_out = labs[idx]
        if l_in == l_out:
            continue
        x = _line_meet(lines[l_in][0], lines[l_in][1], lines[l_out][0], lines[l_out][1])
        if x is None:
            x = poly_pts[idx][0]
        verts.append((x, l_in, l_out))
    if any(l_in >= nlab or l_out >= nlab for _, l_in, l_out in verts):
        raise GeometryError("unbounded polytope")
    pts = []
    for x, _, _ in verts:
        if not pts or np.linalg.norm(x - pts[-1]) > tol:
            pts.append(x)
    if len(pts) > 1 and np.linalg.norm(pts[0] - pts[-1]) <= tol:
        pts.pop()
    if len(pts) < 3:
        raise GeometryError("empty polytope (degenerate)")
    out = np.array(pts)
    if polygon_area(out) <= tol * tol:
        raise GeometryError("empty polytope (zero area)")
    # start from the lowest-then-leftmost vertex for a canonical order
    start = min(range(len(out)), key=lambda i: (round(out[i, 1], 9), round(out[i, 0], 9)))
    return np.roll(out, -start, axis=0)


def facet_rows(poly: Polytope2, tol: float = TOL) -> list:
    """Indices of the rows that support an edge of the (bounded) polytope,
    in ascending order. The remaining rows are redundant."""
    verts = polytope_vertices(poly, tol)
    slack = poly.b[:, None] - poly.A @ verts.T  # rows x vertices
    scale = max(1.0, float(np.abs(verts).max()))
    tight = slack <= 1e-9 * scale
    keep = []
    seen = set()
    for k in range(len(poly.b)):
        if np.count_nonzero(tight[k]) >= 2:
            key = (round(float(poly.A[k, 0]), 12), round(float(poly.A[k, 1]), 12), round(float(poly.b[k]), 12))
            if key not in seen:
                seen.add(key)
                keep.append(k)
    return keep


def point_in_convex_polygon(p, verts, tol: float = TOL) -> bool:
    p = as_point(p)
    v = np.asarray(verts, dtype=float)
    m = len(v)
    for k in range(m):
        a, b = v[k], v[(k + 1) % m]
        e = b - a
        if cross2(e, p - a) < -tol * max(1.0, float(np.linalg.norm(e))):
            return False
    return True
