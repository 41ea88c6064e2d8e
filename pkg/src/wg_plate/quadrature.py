"""Exact-degree quadrature on triangles, edges and simple (possibly non-convex) polygons.

Polygons are ear-clipped into triangles and a reference-triangle rule is mapped
onto each piece, so a rule of degree ``d`` integrates every polynomial of
total degree ``<= d`` exactly on any simple polygon.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import InvalidArgumentError, UnsupportedDegreeError

MAX_TRIANGLE_DEGREE = 20


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on a reference element, exact up to ``exact_degree``."""

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def __len__(self):
        return self.weights.size


def _orbit3(a, w):
    b = 1.0 - 2.0 * a
    return [(a, a, w), (b, a, w), (a, b, w)]


# Symmetric low-order rules on the reference triangle (0,0),(1,0),(0,1);
# weights below are normalised to sum to 1 and scaled by the area 1/2 on use.
_SYMMETRIC = {
    1: [(1 / 3, 1 / 3, 1.0)],
    2: [(1 / 6, 1 / 6, 1 / 3), (2 / 3, 1 / 6, 1 / 3), (1 / 6, 2 / 3, 1 / 3)],
    4: _orbit3(0.445948490915965, 0.223381589678011)
    + _orbit3(0.091576213509771, 0.109951743655322),
    5: [(1 / 3, 1 / 3, 0.225)]
    + _orbit3(0.470142064105115, 0.132394152788506)
    + _orbit3(0.101286507323456, 0.125939180544827),
}


def _collapsed_rule(d):
    # Duffy map (u, v) -> (u (1 - v), v); the Jacobian (1 - v) is absorbed
    # into a Gauss-Jacobi(1, 0) rule in v.
    n = max(1, (d + 2) // 2)
    xu, wu = np.polynomial.legendre.leggauss(n)
    xv, wv = roots_jacobi(n, 1.0, 0.0)
    u = 0.5 * (xu + 1.0)
    v = 0.5 * (xv + 1.0)
    wu = 0.5 * wu
    wv = 0.25 * wv
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    pts = np.column_stack([(U * (1.0 - V)).ravel(), V.ravel()])
    return pts, W.ravel()


@lru_cache(maxsize=None)
def triangle_rule(d):
    """Quadrature rule on the reference triangle exact for total degree ``d``.

    Degrees 0-5 use classical symmetric rules (centroid, 3-point, 6-point,
    7-point); higher degrees use a collapsed Gauss-Jacobi product rule.
    """
    d = int(d)
    if d < 0 or d > MAX_TRIANGLE_DEGREE:
        raise UnsupportedDegreeError(
            f"triangle rule degree {d} outside [0, {MAX_TRIANGLE_DEGREE}]"
        )
    key = {0: 1, 3: 4}.get(d, d)
    if key in _SYMMETRIC:
        arr = np.array(_SYMMETRIC[key])
        pts, w = arr[:, :2], 0.5 * arr[:, 2]
    else:
        pts, w = _collapsed_rule(d)
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(pts, w, d)


@lru_cache(maxsize=None)
def line_rule(d):
    """Gauss-Legendre rule on ``[0, 1]`` with ``ceil((d+1)/2)`` points, exact to degree ``d``."""
    if d < 0:
        raise UnsupportedDegreeError(f"negative line rule degree {d}")
    n = max(1, (d + 2) // 2)
    x, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    s.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(s, w, 2 * n - 1)


def polygon_area(coords):
    """Signed shoelace area; positive for counterclockwise vertex order."""
    x, y = np.asarray(coords, dtype=float).T
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_cross(p1, p2, p3, p4):
    d1 = _cross(p3, p4, p1)
    d2 = _cross(p3, p4, p2)
    d3 = _cross(p1, p2, p3)
    d4 = _cross(p1, p2, p4)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True

    def on_seg(p, q, r):
        return (min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
                and min(p[1], q[1]) <= r[1] <= max(p[1], q[1]))

    return ((d1 == 0 and on_seg(p3, p4, p1)) or (d2 == 0 and on_seg(p3, p4, p2))
            or (d3 == 0 and on_seg(p1, p2, p3)) or (d4 == 0 and on_seg(p1, p2, p4)))


def is_simple_polygon(coords):
    """True when no two non-adjacent edges of the closed loop touch."""
    P = np.asarray(coords, dtype=float)
    n = len(P)
    if n < 3:
        return False
    for i in range(n):
        a, b = P[i], P[(i + 1) % n]
        if np.array_equal(a, b):
            return False
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(a, b, P[j], P[(j + 1) % n]):
                return False
    return True


def _in_triangle(p, a, b, c):
    # Closed test: boundary points block an ear as well.
    return _cross(a, b, p) >= 0 and _cross(b, c, p) >= 0 and _cross(c, a, p) >= 0


def triangulate_polygon(coords):
    """Ear-clip a simple CCW polygon into ``N - 2`` triangles.

    Returns an ``(N-2, 3)`` integer array of vertex indices, each triangle
    counterclockwise.  Raises :class:`InvalidArgumentError` for
    self-intersecting or clockwise input.
    """
    P = np.asarray(coords, dtype=float)
    n = len(P)
    if n < 3:
        raise InvalidArgumentError("polygon needs at least 3 vertices")
    if n == 3:
        if polygon_area(P) <= 0:
            raise InvalidArgumentError("triangle is clockwise or degenerate")
        return np.array([[0, 1, 2]])
    if not is_simple_polygon(P):
        raise InvalidArgumentError("polygon is self-intersecting")
    if polygon_area(P) <= 0:
        raise InvalidArgumentError("polygon is clockwise or degenerate")

    idx = list(range(n))
    tris = []
    while len(idx) > 3:
        m = len(idx)
        for t in range(m):
            i0, i1, i2 = idx[t - 1], idx[t], idx[(t + 1) % m]
            a, b, c = P[i0], P[i1], P[i2]
            if _cross(a, b, c) <= 0:
                continue
            if any(_in_triangle(P[j], a, b, c) for j in idx if j not in (i0, i1, i2)):
                continue
            tris.append((i0, i1, i2))
            del idx[t]
            break
        else:  # pragma: no cover - unreachable for simple polygons
            raise InvalidArgumentError("ear clipping failed; polygon not simple")
    tris.append(tuple(idx))
    return np.array(tris, dtype=np.int64)


def map_triangle_rule(tri_coords, rule):
    """Map a reference rule onto triangles ``(..., 3, 2)``; returns points ``(..., nq, 2)`` and weights ``(..., nq)``."""
    T = np.asarray(tri_coords, dtype=float)
    a, b, c = T[..., 0, :], T[..., 1, :], T[..., 2, :]
    e1, e2 = b - a, c - a
    det = e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]
    L = rule.points
    pts = (a[..., None, :] + L[:, 0, None] * e1[..., None, :]
           + L[:, 1, None] * e2[..., None, :])
    wts = np.abs(det)[..., None] * rule.weights
    return pts, wts


def cell_rule(coords, d, triangles=None):
    """Composite rule on a polygon: ``(points (P, 2), weights (P,))`` exact to degree ``d``."""
    P = np.asarray(coords, dtype=float)
    if triangles is None:
        triangles = triangulate_polygon(P)
    pts, wts = map_triangle_rule(P[triangles], triangle_rule(d))
    return pts.reshape(-1, 2), wts.reshape(-1)


def cell_rule_batch(coords, triangles, d):
    """Batched :func:`cell_rule` for ``coords (nc, N, 2)`` and ``triangles (nc, N-2, 3)``."""
    coords = np.asarray(coords, dtype=float)
    nc = coords.shape[0]
    tri = coords[np.arange(nc)[:, None, None], triangles]
    pts, wts = map_triangle_rule(tri, triangle_rule(d))
    return pts.reshape(nc, -1, 2), wts.reshape(nc, -1)


def _as_coords(cell):
    return np.asarray(getattr(cell, "coords", cell), dtype=float)


def integrate_cell(cell, f, d):
    """Integrate ``f(x, y)`` (vectorised over arrays) over a polygonal cell with a degree-``d`` rule."""
    pts, wts = cell_rule(_as_coords(cell), d)
    return float(np.dot(wts, f(pts[:, 0], pts[:, 1])))


def integrate_edge(p0, p1, f, d):
    """Integrate ``f(x, y)`` along the segment ``p0 -> p1`` with a degree-``d`` Gauss rule."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    rule = line_rule(d)
    L = float(np.hypot(*(p1 - p0)))
    pts = p0 + rule.points[:, None] * (p1 - p0)
    return L * float(np.dot(rule.weights, f(pts[:, 0], pts[:, 1])))
