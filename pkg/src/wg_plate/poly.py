"""Polynomial bases on cells and edges, mass matrices and L2 projections.

Cell spaces ``P_r(T)`` use scaled monomials ``((x - xc)/h)^a ((y - yc)/h)^b``
in graded order, centred at the cell centroid and scaled by the cell diameter.
Edge spaces ``P_p(e)`` use shifted Legendre polynomials in the arc parameter
``s in [0, 1]`` running along the global edge tangent, so their Gram matrix is
``diag(L / (2a + 1))``.

Vector fields are stored componentwise over the scalar basis and symmetric
tensors in Voigt order ``(11, 22, 12)``; the 12 entry carries weight 2 in
inner products (:data:`VOIGT_WEIGHTS`).
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConditioningError
from .quadrature import cell_rule, line_rule

VOIGT_WEIGHTS = np.array([1.0, 1.0, 2.0])
COND_LIMIT = 1e14


def poly_dim(r):
    return (r + 1) * (r + 2) // 2 if r >= 0 else 0


def monomial_exponents(r):
    return _kernels.monomial_exponents(r)


@dataclass(frozen=True)
class CellBasis:
    """Scaled monomial basis of ``P_r`` on one cell."""

    centroid: np.ndarray
    h: float
    degree: int

    @classmethod
    def on(cls, cell, degree):
        return cls(np.asarray(cell.centroid, dtype=float), float(cell.diameter), int(degree))

    @property
    def dim(self):
        return poly_dim(self.degree)

    def eval(self, x, y):
        x = np.asarray(x, dtype=float)
        xh = (x - self.centroid[0]) / self.h
        yh = (np.asarray(y, dtype=float) - self.centroid[1]) / self.h
        vals, _ = _kernels.monomials(xh, yh, self.degree)
        return vals.reshape(*x.shape, self.dim)

    def grad(self, x, y):
        x = np.asarray(x, dtype=float)
        xh = (x - self.centroid[0]) / self.h
        yh = (np.asarray(y, dtype=float) - self.centroid[1]) / self.h
        _, g = _kernels.monomials(xh, yh, self.degree, grad=True)
        return g.reshape(*x.shape, self.dim, 2) / self.h

    def evaluate(self, coeffs, x, y):
        return self.eval(x, y) @ np.asarray(coeffs)


@dataclass(frozen=True)
class EdgeBasis:
    """Shifted Legendre basis of ``P_p`` on the segment ``start -> end``."""

    start: np.ndarray
    end: np.ndarray
    degree: int

    @property
    def dim(self):
        return self.degree + 1

    @property
    def length(self):
        return float(np.hypot(*(np.asarray(self.end) - np.asarray(self.start))))

    def eval_param(self, s):
        s = np.asarray(s, dtype=float)
        return _kernels.legendre01(s, self.degree).reshape(*s.shape, self.dim)

    def gram(self):
        return np.diag(self.length / (2.0 * np.arange(self.dim) + 1.0))


def edge_basis(mesh, e, degree):
    lo, hi = mesh.edges[e].endpoints
    return EdgeBasis(mesh.vertices[lo], mesh.vertices[hi], degree)


def basis_batch(points, centroids, h, r, grad=False):
    """Evaluate ``P_r`` bases of many cells: points ``(nc, P, 2)`` -> ``(nc, P, dim)`` [and ``(nc, P, dim, 2)``]."""
    nc, P, _ = points.shape
    xh = (points[..., 0] - centroids[:, None, 0]) / h[:, None]
    yh = (points[..., 1] - centroids[:, None, 1]) / h[:, None]
    vals, g = _kernels.monomials(xh, yh, r, grad=grad)
    dim = poly_dim(r)
    vals = vals.reshape(nc, P, dim)
    if not grad:
        return vals
    return vals, g.reshape(nc, P, dim, 2) / h[:, None, None, None]


def scaled_condition(M):
    """2-norm condition number of ``D^-1/2 M D^-1/2`` with ``D = diag(M)``, for a stack of SPD matrices.

    Scaled monomials of high degree have small diagonal entries; the
    equilibrated number is what bounds the accuracy of the local solves.
    """
    M = np.asarray(M, dtype=float)
    d = np.diagonal(M, axis1=-2, axis2=-1)
    if np.any(~(d > 0)):
        return np.full(M.shape[:-2], np.inf)
    s = 1.0 / np.sqrt(d)
    return np.linalg.cond(M * s[..., :, None] * s[..., None, :])


def check_conditioning(M, cells=None, what="mass matrix"):
    """Raise :class:`ConditioningError` when any matrix in the stack has scaled condition number above 1e14."""
    M = np.asarray(M)
    stack = M.reshape(-1, *M.shape[-2:])
    cond = scaled_condition(stack)
    bad = np.flatnonzero(~(cond <= COND_LIMIT))
    if bad.size:
        ids = bad if cells is None else np.asarray(cells)[bad]
        raise ConditioningError(
            f"{what} condition number {cond[bad[0]]:.3e} exceeds {COND_LIMIT:.0e} on cell(s) {ids.tolist()}",
            cells=ids.tolist())
    return cond


def solve_checked(M, R, tol=1e-12, cells=None):
    """Batched solve of ``M X = R`` asserting the normwise relative residual is below ``tol``."""
    X = _kernels.batched_solve(M, R)
    res = np.linalg.norm(np.matmul(M, X) - R, axis=(-2, -1))
    scale = np.linalg.norm(M, axis=(-2, -1)) * np.linalg.norm(X, axis=(-2, -1))
    rel = res / np.where(scale > 0, scale, 1.0)
    if np.any(rel > tol):
        worst = int(np.argmax(rel))
        cid = worst if cells is None else int(np.asarray(cells)[worst])
        raise ConditioningError(f"local solve residual {rel[worst]:.2e} > {tol:g} on cell {cid}", [cid])
    return X


def _cell_rule_for(cell, degree):
    return cell_rule(getattr(cell, "coords", cell), degree)


def mass_matrix(cell, r, degree=None):
    """Mass matrix ``M_ij = int_T phi_i phi_j`` of the scaled monomial basis."""
    pts, wts = _cell_rule_for(cell, 2 * r if degree is None else degree)
    phi = CellBasis.on(cell, r).eval(pts[:, 0], pts[:, 1])
    M = (phi * wts[:, None]).T @ phi
    return np.triu(M) + np.triu(M, 1).T


def l2_project_cell(cell, f, r, degree=None):
    """Coefficients of the L2 projection of ``f(x, y)`` onto ``P_r(T)``.

    ``f`` may return shape ``(P,)`` or ``(P, ncomp)`` for componentwise projection.
    """
    degree = min(20, 2 * r + 10) if degree is None else degree
    pts, wts = _cell_rule_for(cell, degree)
    phi = CellBasis.on(cell, r).eval(pts[:, 0], pts[:, 1])
    M = (phi * wts[:, None]).T @ phi
    check_conditioning(M)
    vals = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float)
    b = phi.T @ (wts[:, None] * vals.reshape(len(wts), -1))
    c = solve_checked(M[None], b[None])[0]
    return c.reshape(-1) if vals.ndim == 1 else c


def l2_project_edge(edge, f, p, degree=None):
    """Legendre coefficients of the L2 projection of ``f(x, y)`` onto ``P_p(e)``.

    ``edge`` is an :class:`EdgeBasis` or a ``(start, end)`` pair; the arc
    parameter runs from ``start`` to ``end``.
    """
    if not isinstance(edge, EdgeBasis):
        start, end = edge
        edge = EdgeBasis(np.asarray(start, dtype=float), np.asarray(end, dtype=float), p)
    degree = 2 * p + 10 if degree is None else degree
    rule = line_rule(degree)
    s = rule.points
    pts = edge.start + s[:, None] * (edge.end - edge.start)
    ell = _kernels.legendre01(s, p)
    vals = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float).reshape(len(s), -1)
    c = (2.0 * np.arange(p + 1) + 1.0)[:, None] * (ell.T @ (rule.weights[:, None] * vals))
    return c.reshape(-1) if c.shape[1] == 1 else c


def l2_project_edges(starts, ends, f, p, degree=None):
    """Batched :func:`l2_project_edge` over segments ``starts[i] -> ends[i]``: ``(ne, p+1[, ncomp])``."""
    starts = np.asarray(starts, dtype=float)
    ends = np.asarray(ends, dtype=float)
    degree = 2 * p + 10 if degree is None else degree
    rule = line_rule(degree)
    s = rule.points
    pts = starts[:, None, :] + s[None, :, None] * (ends - starts)[:, None, :]
    ell = _kernels.legendre01(s, p)
    vals = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float)
    scalar = vals.ndim == 2
    vals = vals.reshape(len(starts), len(s), -1)
    c = np.einsum("g,ga,egn->ean", rule.weights, ell, vals) * (2.0 * np.arange(p + 1) + 1.0)[:, None]
    return c[..., 0] if scalar else c
