"""Polygonal meshes: data model, generators, validation and plain-text I/O.

Cells are simple polygons listed counterclockwise; convexity is not required.
Each edge is stored once with its endpoints sorted so that the global tangent
runs from the lower to the higher vertex index; cells record the orientation
sign of every edge they traverse.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidArgumentError
from .quadrature import is_simple_polygon, polygon_area, triangulate_polygon

FAMILIES = ("tri", "polyA", "polyB", "disk")


@dataclass(frozen=True, eq=False)
class Cell:
    vertex_indices: tuple
    coords: np.ndarray
    centroid: np.ndarray
    diameter: float
    area: float  # signed; positive for a counterclockwise cell

    @property
    def n_edges(self):
        return len(self.vertex_indices)

    @classmethod
    def from_coords(cls, coords, vertex_indices=None):
        P = np.array(coords, dtype=float)
        P.setflags(write=False)
        if vertex_indices is None:
            vertex_indices = tuple(range(len(P)))
        area = polygon_area(P)
        x, y = P[:, 0], P[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        if area != 0.0:
            centroid = np.array([np.sum((x + xn) * cr), np.sum((y + yn) * cr)]) / (6.0 * area)
        else:
            centroid = P.mean(axis=0)
        diff = P[:, None, :] - P[None, :, :]
        diameter = float(np.sqrt((diff ** 2).sum(-1)).max())
        return cls(tuple(int(v) for v in vertex_indices), P, centroid, diameter, area)


@dataclass(frozen=True, eq=False)
class Edge:
    endpoints: tuple  # (lo, hi) vertex indices, lo < hi
    length: float
    tangent: np.ndarray  # unit vector from lo to hi
    cells: tuple  # incident cell indices
    normals: tuple  # outward unit normal for each incident cell, same order

    @property
    def is_boundary(self):
        return len(self.cells) == 1


@dataclass(frozen=True)
class CellGroup:
    """Cells sharing a vertex count, packed as arrays for batched kernels."""

    n_vertices: int
    cells: np.ndarray  # (nc,) cell indices
    coords: np.ndarray  # (nc, N, 2)
    edge_ids: np.ndarray  # (nc, N) edge i joins local vertices i and i+1
    signs: np.ndarray  # (nc, N) +1 when the local traversal matches the global tangent
    centroids: np.ndarray  # (nc, 2)
    diameters: np.ndarray  # (nc,)
    triangles: np.ndarray  # (nc, N-2, 3) ear-clipped local vertex triples


class Mesh:
    """Immutable polygonal mesh.

    Parameters
    ----------
    vertices : array_like, shape (NV, 2)
    polygons : sequence of sequences of vertex indices, counterclockwise
    domain_area : float, optional
        Exact area of the meshed domain, used by :func:`validate` for the
        tiling check.
    """

    def __init__(self, vertices, polygons, domain_area=None, name=""):
        V = np.array(vertices, dtype=float)
        V.setflags(write=False)
        self.vertices = V
        self.name = name
        self.domain_area = domain_area
        self.cells = [Cell.from_coords(V[list(p)], p) for p in polygons]

        edge_index = {}
        incident = []
        normals = []
        cell_edges = []
        for c, cell in enumerate(self.cells):
            vids = cell.vertex_indices
            loop = []
            for i, a in enumerate(vids):
                b = vids[(i + 1) % len(vids)]
                key = (a, b) if a < b else (b, a)
                e = edge_index.get(key)
                if e is None:
                    e = edge_index[key] = len(incident)
                    incident.append([])
                    normals.append([])
                d = V[b] - V[a]
                L = np.hypot(*d)
                incident[e].append(c)
                normals[e].append(np.array([d[1], -d[0]]) / L if L > 0 else np.zeros(2))
                loop.append((e, 1 if a < b else -1))
            cell_edges.append(tuple(loop))

        self.edges = []
        for (lo, hi), e in edge_index.items():
            d = V[hi] - V[lo]
            L = float(np.hypot(*d))
            t = d / L if L > 0 else np.zeros(2)
            self.edges.append(Edge((lo, hi), L, t, tuple(incident[e]), tuple(normals[e])))
        self.cell_edges = tuple(cell_edges)
        self.boundary_edges = frozenset(e for e, ed in enumerate(self.edges) if len(ed.cells) == 1)
        self.h_max = max(c.diameter for c in self.cells) if self.cells else 0.0

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @cached_property
    def edge_vertices(self):
        return np.array([e.endpoints for e in self.edges], dtype=np.int64).reshape(-1, 2)

    @cached_property
    def boundary_edge_array(self):
        return np.array(sorted(self.boundary_edges), dtype=np.int64)

    @cached_property
    def groups(self):
        by_n = {}
        for c, cell in enumerate(self.cells):
            by_n.setdefault(cell.n_edges, []).append(c)
        out = []
        for N in sorted(by_n):
            idx = np.array(by_n[N], dtype=np.int64)
            coords = np.stack([self.cells[c].coords for c in idx])
            loops = [self.cell_edges[c] for c in idx]
            edge_ids = np.array([[e for e, _ in lp] for lp in loops], dtype=np.int64)
            signs = np.array([[s for _, s in lp] for lp in loops], dtype=np.int64)
            if N == 3:
                tris = np.zeros((len(idx), 1, 3), dtype=np.int64)
                tris[:, 0] = (0, 1, 2)
            else:
                tris = np.stack([triangulate_polygon(P) for P in coords])
            out.append(CellGroup(
                N, idx, coords, edge_ids, signs,
                np.stack([self.cells[c].centroid for c in idx]),
                np.array([self.cells[c].diameter for c in idx]),
                tris,
            ))
        return tuple(out)

    def permuted(self, order):
        """Same mesh with cells listed in ``order`` (vertices untouched)."""
        return Mesh(self.vertices, [self.cells[c].vertex_indices for c in order],
                    self.domain_area, self.name)


# ---------------------------------------------------------------- geometry helpers


def reflex_vertices(coords):
    """Indices of vertices whose interior angle exceeds pi (CCW polygon)."""
    P = np.asarray(coords, dtype=float)
    prev = P - np.roll(P, 1, axis=0)
    nxt = np.roll(P, -1, axis=0) - P
    cross = prev[:, 0] * nxt[:, 1] - prev[:, 1] * nxt[:, 0]
    return np.flatnonzero(cross < 0)


# ---------------------------------------------------------------- generators


def _check_n(n):
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"subdivision count must be a positive integer, got {n!r}")
    return int(n)


def generate_triangular_mesh(n):
    """Unit square, ``n x n`` squares each cut along the (0,0)-(1,1) diagonal."""
    n = _check_n(n)
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    polys = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            polys.append((a, b, c))
            polys.append((a, c, d))
    return Mesh(verts, polys, domain_area=1.0, name=f"tri-{n}")


# Zigzag cut through the middle of a unit macro-square, left to right.
# Family A: two zigzag vertices -> hexagons with one reflex vertex each.
# Family B: four zigzag vertices -> octagons with two reflex vertices each.
_ZIGZAG = {
    "A": [(1 / 3, 0.7), (2 / 3, 0.3)],
    "B": [(0.2, 0.7), (0.4, 0.3), (0.6, 0.7), (0.8, 0.3)],
}


def generate_nonconvex_polygonal_mesh(n, family):
    """Unit square, ``n x n`` macro-squares each split by a zigzag into two congruent non-convex cells."""
    n = _check_n(n)
    fam = str(family)
    if fam.startswith("poly"):
        fam = fam[4:]
    if fam not in _ZIGZAG:
        raise InvalidArgumentError(f"unknown non-convex family {family!r}; expected 'A' or 'B'")
    zig = _ZIGZAG[fam]
    a = 1.0 / n
    verts = []
    index = {}

    def vid(key, xy):
        v = index.get(key)
        if v is None:
            v = index[key] = len(verts)
            verts.append(xy)
        return v

    polys = []
    for j in range(n):
        for i in range(n):
            x0, y0 = i * a, j * a
            c00 = vid(("c", i, j), (x0, y0))
            c10 = vid(("c", i + 1, j), (x0 + a, y0))
            c11 = vid(("c", i + 1, j + 1), (x0 + a, y0 + a))
            c01 = vid(("c", i, j + 1), (x0, y0 + a))
            mL = vid(("m", i, j), (x0, y0 + 0.5 * a))
            mR = vid(("m", i + 1, j), (x0 + a, y0 + 0.5 * a))
            zz = [vid(("z", i, j, s), (x0 + zx * a, y0 + zy * a)) for s, (zx, zy) in enumerate(zig)]
            polys.append((c00, c10, mR, *reversed(zz), mL))
            polys.append((mL, *zz, mR, c11, c01))
    return Mesh(np.array(verts), polys, domain_area=1.0, name=f"poly{fam}-{n}")


def generate_disk_mesh(n):
    """Unit disk with ``n`` concentric rings; ring ``j`` carries ``6j`` vertices at radius ``j/n``.

    All outer-ring vertices lie exactly on the unit circle; the mesh area is
    the inscribed ``6n``-gon area ``3 n sin(pi / (3n))``.
    """
    n = _check_n(n)
    verts = [(0.0, 0.0)]
    ring_start = [0]
    for j in range(1, n + 1):
        ring_start.append(len(verts))
        r = j / n
        for i in range(6 * j):
            phi = 2.0 * np.pi * i / (6 * j)
            if j == n:
                verts.append((np.cos(phi), np.sin(phi)))
            else:
                verts.append((r * np.cos(phi), r * np.sin(phi)))

    def ring(j, i):
        if j == 0:
            return 0
        return ring_start[j] + (i % (6 * j))

    polys = []
    for j in range(1, n + 1):
        for s in range(6):
            # inner ring j-1 carries j-1 steps per sector, outer ring j carries j
            ii, oo = 0, 0
            while ii < j - 1 or oo < j:
                if j == 1:
                    polys.append((0, ring(1, s + oo), ring(1, s + oo + 1)))
                    oo += 1
                    continue
                inner_next = (ii + 1) / (j - 1) if ii < j - 1 else np.inf
                outer_next = (oo + 1) / j if oo < j else np.inf
                a = ring(j - 1, s * (j - 1) + ii)
                if outer_next <= inner_next:
                    polys.append((a, ring(j, s * j + oo), ring(j, s * j + oo + 1)))
                    oo += 1
                else:
                    polys.append((a, ring(j, s * j + oo), ring(j - 1, s * (j - 1) + ii + 1)))
                    ii += 1
    area = 3.0 * n * np.sin(np.pi / (3.0 * n))
    return Mesh(np.array(verts), polys, domain_area=area, name=f"disk-{n}")


def generate_mesh(family, n):
    """Dispatch on the family name: ``tri``, ``polyA``, ``polyB`` or ``disk``."""
    if family == "tri":
        return generate_triangular_mesh(n)
    if family in ("polyA", "polyB"):
        return generate_nonconvex_polygonal_mesh(n, family[4:])
    if family == "disk":
        return generate_disk_mesh(n)
    raise InvalidArgumentError(f"unknown mesh family {family!r}; expected one of {FAMILIES}")


# ---------------------------------------------------------------- validation


@dataclass
class ValidationFailure:
    check: str
    indices: list
    message: str


@dataclass
class ValidationReport:
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def add(self, check, indices, message):
        if len(indices):
            self.failures.append(ValidationFailure(check, [int(i) for i in indices], message))

    def checks(self):
        return {f.check for f in self.failures}


def validate(mesh, tol=1e-12):
    """Check the structural invariants of a mesh and report offenders."""
    rep = ValidationReport()
    rep.add("min_vertices", [c for c, cell in enumerate(mesh.cells) if cell.n_edges < 3],
            "cells with fewer than 3 vertices")
    rep.add("orientation", [c for c, cell in enumerate(mesh.cells) if cell.area <= 0],
            "cells not counterclockwise (non-positive signed area)")
    rep.add("simple", [c for c, cell in enumerate(mesh.cells)
                       if cell.n_edges >= 3 and not is_simple_polygon(cell.coords)],
            "self-intersecting or degenerate cells")
    rep.add("manifold", [e for e, ed in enumerate(mesh.edges) if len(ed.cells) not in (1, 2)],
            "edges not shared by exactly one or two cells")
    bad_orient = []
    bad_normals = []
    for e, ed in enumerate(mesh.edges):
        if len(ed.cells) == 2:
            n0, n1 = ed.normals
            if np.abs(n0 + n1).max() > 1e-14:
                bad_normals.append(e)
    for e, ed in enumerate(mesh.edges):
        if len(ed.cells) == 2:
            s = [sg for c in ed.cells for ee, sg in mesh.cell_edges[c] if ee == e]
            if len(s) != 2 or s[0] == s[1]:
                bad_orient.append(e)
    rep.add("loop_orientation", bad_orient, "interior edges traversed in the same direction by both cells")
    rep.add("normals", bad_normals, "interior edge normals not antiparallel")
    rep.add("edge_length", [e for e, ed in enumerate(mesh.edges) if ed.length <= 0], "zero-length edges")
    if mesh.domain_area is not None:
        total = sum(c.area for c in mesh.cells)
        if abs(total - mesh.domain_area) > tol * abs(mesh.domain_area):
            rep.failures.append(ValidationFailure(
                "tiling", [], f"cell areas sum to {total!r}, domain area {mesh.domain_area!r}"))
    return rep


# ---------------------------------------------------------------- text I/O


def write_mesh(mesh, path):
    """Write ``NV NC NE`` then vertex lines then ``k v1 .. vk`` cell lines."""
    lines = [f"{mesh.n_vertices} {mesh.n_cells} {mesh.n_edges}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [" ".join(map(str, (c.n_edges, *c.vertex_indices))) for c in mesh.cells]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path):
    with open(path) as fh:
        tokens = [ln.split() for ln in fh if ln.strip()]
    nv, nc, ne = (int(t) for t in tokens[0])
    verts = [(float(a), float(b)) for a, b in tokens[1:1 + nv]]
    polys = []
    for row in tokens[1 + nv:1 + nv + nc]:
        k = int(row[0])
        if len(row) != k + 1:
            raise InvalidArgumentError(f"cell line {row!r} does not list {k} vertices")
        polys.append(tuple(int(v) for v in row[1:]))
    mesh = Mesh(verts, polys)
    if mesh.n_edges != ne:
        raise InvalidArgumentError(f"header declares {ne} edges, cells define {mesh.n_edges}")
    return mesh
