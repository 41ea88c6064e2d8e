"""Global DOF numbering, local stiffness blocks and the sparse SPD system.

Global ordering: all ``w`` DOFs (cell interiors in cell order, then edges in
edge order), followed by all ``theta`` DOFs (cell interiors, then edges).
Edge coefficients live in the global edge orientation, so an interior edge
has a single set of DOFs shared by both neighbours.

Scatter is a deterministic reduction: per chunk, COO keys are sorted and values
are summed in input order with ``np.bincount``, so symmetric entries receive
bit-identical sums and the result does not depend on the worker count.
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import InvalidArgumentError, NotSPDError
from .poly import basis_batch, l2_project_edges, poly_dim
from .quadrature import cell_rule_batch
from .rm_model import bending_voigt_matrix
from .solver import cholesky_factor
from .weakops import build_local_operators

log = logging.getLogger(__name__)

CHUNK = 512


def worker_count(threads=None):
    """Worker cap from the argument or ``WG_PLATE_THREADS`` (default 1)."""
    if threads is None:
        threads = os.environ.get("WG_PLATE_THREADS", "1")
    try:
        n = int(threads)
    except ValueError:
        raise InvalidArgumentError(f"WG_PLATE_THREADS must be an integer, got {threads!r}") from None
    return max(1, n)


@dataclass(frozen=True)
class DofMap:
    n_cells: int
    n_edges: int
    dk: int  # dim P_k
    nbw: int  # p + 1
    dq: int  # dim P_q
    nbt: int  # m + 1
    boundary_edges: np.ndarray

    @classmethod
    def build(cls, mesh, config):
        return cls(mesh.n_cells, mesh.n_edges, poly_dim(config.k), config.p + 1,
                   poly_dim(config.q), config.m + 1, mesh.boundary_edge_array)

    @property
    def n_w(self):
        return self.n_cells * self.dk + self.n_edges * self.nbw

    @property
    def n_theta(self):
        return 2 * (self.n_cells * self.dq + self.n_edges * self.nbt)

    @property
    def total(self):
        return self.n_w + self.n_theta

    def w_interior(self, c):
        return c * self.dk + np.arange(self.dk)

    def w_edge(self, e):
        return self.n_cells * self.dk + e * self.nbw + np.arange(self.nbw)

    def theta_interior(self, c):
        return self.n_w + c * 2 * self.dq + np.arange(2 * self.dq)

    def theta_edge(self, e):
        return self.n_w + self.n_cells * 2 * self.dq + e * 2 * self.nbt + np.arange(2 * self.nbt)

    @cached_property
    def constrained(self):
        b = self.boundary_edges
        if b.size == 0:
            return np.zeros(0, dtype=np.int64)
        w = (self.n_cells * self.dk + b[:, None] * self.nbw + np.arange(self.nbw)).ravel()
        t = (self.n_w + self.n_cells * 2 * self.dq + b[:, None] * 2 * self.nbt
             + np.arange(2 * self.nbt)).ravel()
        return np.sort(np.concatenate([w, t]))

    @cached_property
    def free(self):
        mask = np.ones(self.total, dtype=bool)
        mask[self.constrained] = False
        return np.flatnonzero(mask)

    def local_dofs(self, cells, edge_ids):
        """Global indices ``(nc, n_w + n_theta)`` in local layout order for a batch of cells."""
        cells = np.asarray(cells)
        edge_ids = np.asarray(edge_ids)
        nc, N = edge_ids.shape
        w0 = cells[:, None] * self.dk + np.arange(self.dk)
        wb = (self.n_cells * self.dk + edge_ids[:, :, None] * self.nbw + np.arange(self.nbw)).reshape(nc, -1)
        t0 = self.n_w + cells[:, None] * 2 * self.dq + np.arange(2 * self.dq)
        tb = (self.n_w + self.n_cells * 2 * self.dq + edge_ids[:, :, None] * 2 * self.nbt
              + np.arange(2 * self.nbt)).reshape(nc, -1)
        return np.concatenate([w0, wb, t0, tb], axis=1).astype(np.int64)


def build_dof_map(mesh, config):
    return DofMap.build(mesh, config)


@dataclass
class OperatorSet:
    """Local operators of a whole mesh, chunked; independent of thickness and load."""

    mesh: object
    config: object
    dofmap: DofMap
    chunks: list  # LocalOperators
    chunk_dofs: list  # (nc, n) global indices per chunk
    chunk_groups: list  # (group, slice) per chunk

    def __iter__(self):
        return iter(zip(self.chunks, self.chunk_dofs, self.chunk_groups))


def _tasks(mesh, chunk=CHUNK):
    out = []
    for grp in mesh.groups:
        n = len(grp.cells)
        for s in range(0, n, chunk):
            out.append((grp, slice(s, min(n, s + chunk))))
    return out


def build_operators(mesh, config, threads=None, chunk=CHUNK):
    """Build all local operators; chunks are fixed by ``chunk`` so results do not depend on ``threads``."""
    dm = DofMap.build(mesh, config)
    tasks = _tasks(mesh, chunk)

    def work(task):
        grp, sl = task
        return build_local_operators(grp, config, sl)

    nworkers = worker_count(threads)
    if nworkers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            ops = list(pool.map(work, tasks))
    else:
        ops = [work(t) for t in tasks]
    dofs = [dm.local_dofs(grp.cells[sl], grp.edge_ids[sl]) for grp, sl in tasks]
    return OperatorSet(mesh, config, dm, ops, dofs, tasks)


def local_stiffness(ops, params):
    """Dense local blocks ``(nc, n_w + n_theta, n_w + n_theta)`` of the bilinear form.

    Bending ``E^T M_C E`` on theta-theta, shear ``lam t^-2 B^T M B`` with
    ``B = [G | -Pint]`` coupling w and theta, and the stabiliser on w-w.
    """
    lay = ops.layout
    nw, nt = lay.n_w, lay.n_theta
    nc = len(ops)
    if ops.G.shape[2] != nw or ops.E.shape[2] != nt or ops.Pint.shape[2] != nt:
        raise RuntimeError("local operator dimensions do not match the DOF layout")
    d1 = ops.M1.shape[1]
    d2 = ops.M2.shape[1]
    B = np.concatenate([ops.G, -ops.Pint], axis=2)  # (nc, 2 d1, n)
    MB = np.concatenate([ops.M1 @ B[:, :d1], ops.M1 @ B[:, d1:]], axis=1)
    K = params.shear_weight * np.matmul(np.swapaxes(B, 1, 2), MB)

    Cv = bending_voigt_matrix(params) * np.array([1.0, 1.0, 2.0])[:, None]
    Ecomp = [ops.E[:, i * d2:(i + 1) * d2] for i in range(3)]
    ME = [ops.M2 @ Ec for Ec in Ecomp]
    bend = np.zeros((nc, nt, nt))
    for i in range(3):
        Y = sum(Cv[i, j] * ME[j] for j in range(3) if Cv[i, j] != 0.0)
        bend += np.matmul(np.swapaxes(Ecomp[i], 1, 2), Y)
    K[:, nw:, nw:] += bend
    K[:, :nw, :nw] += ops.S
    iu = np.triu_indices(nw + nt, 1)
    K[:, iu[1], iu[0]] = K[:, iu[0], iu[1]]
    return K


def _reduce_coo(rows, cols, vals, n):
    keys = rows.astype(np.int64) * n + cols.astype(np.int64)
    uniq, inv = np.unique(keys, return_inverse=True)
    data = np.bincount(inv.ravel(), weights=vals, minlength=uniq.size)
    r = uniq // n
    c = uniq % n
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=n), out=indptr[1:])
    return sp.csr_matrix((data, c, indptr), shape=(n, n))


def _load_vector(opset, problem, degree=None):
    dm = opset.dofmap
    k = opset.config.k
    deg = min(20, k + 12) if degree is None else degree
    F = np.zeros(dm.total)
    for (grp, sl), dofs in zip(opset.chunk_groups, opset.chunk_dofs):
        pts, wts = cell_rule_batch(grp.coords[sl], grp.triangles[sl], deg)
        phi = basis_batch(pts, grp.centroids[sl], grp.diameters[sl], k)
        gval = problem.g(pts[..., 0], pts[..., 1])
        F[dofs[:, :dm.dk]] += np.einsum("cq,cqi->ci", wts * gval, phi)
    return F


@dataclass
class GlobalSystem:
    A: sp.csr_matrix
    F: np.ndarray
    dofmap: DofMap
    operators: OperatorSet = field(repr=False)
    params: object = None


def assemble_system(mesh, config, problem, params=None, operators=None, threads=None):
    """Scatter local blocks into ``A`` and integrate ``(g, v0)`` into ``F``."""
    params = problem.params if params is None else params
    opset = build_operators(mesh, config, threads) if operators is None else operators
    dm = opset.dofmap
    A = sp.csr_matrix((dm.total, dm.total))
    for ops, dofs in zip(opset.chunks, opset.chunk_dofs):
        # each chunk is reduced on its own and added in chunk order; entrywise
        # addition of exactly symmetric matrices keeps the sum exactly symmetric
        rows, cols, vals = _kernels.scatter_coo(local_stiffness(ops, params), dofs)
        A = A + _reduce_coo(rows, cols, vals, dm.total)
    A.sort_indices()
    F = _load_vector(opset, problem)
    return GlobalSystem(A, F, dm, opset, params)


@dataclass
class ReducedSystem:
    A: sp.csr_matrix
    F: np.ndarray
    free: np.ndarray
    constrained: np.ndarray
    values: np.ndarray  # prescribed values on constrained DOFs
    parent: GlobalSystem = field(repr=False)

    def expand(self, x_free):
        x = np.zeros(self.parent.dofmap.total)
        x[self.free] = x_free
        x[self.constrained] = self.values
        return x


def boundary_values(mesh, dofmap, problem, homogeneous=False):
    """L2 edge projections of the exact ``w`` and ``theta`` traces on every boundary edge."""
    vals = np.zeros(dofmap.total)
    if homogeneous:
        return vals
    p, m = dofmap.nbw - 1, dofmap.nbt - 1
    b = dofmap.boundary_edges
    if b.size == 0:
        return vals
    ev = mesh.edge_vertices[b]
    s, e = mesh.vertices[ev[:, 0]], mesh.vertices[ev[:, 1]]
    vals[dofmap.n_cells * dofmap.dk + b[:, None] * dofmap.nbw + np.arange(dofmap.nbw)] = \
        l2_project_edges(s, e, problem.w, p)
    th = l2_project_edges(s, e, problem.theta, m)  # (nb, m+1, 2)
    base = dofmap.n_w + dofmap.n_cells * 2 * dofmap.dq + b[:, None] * 2 * dofmap.nbt
    vals[base + np.arange(dofmap.nbt)] = th[..., 0]
    vals[base + dofmap.nbt + np.arange(dofmap.nbt)] = th[..., 1]
    return vals


def apply_essential_bc(system, problem, homogeneous=False, check_spd=True):
    """Fix boundary-edge DOFs to the projected exact traces and eliminate them symmetrically."""
    dm = system.dofmap
    mesh = system.operators.mesh
    allvals = boundary_values(mesh, dm, problem, homogeneous)
    fixed = dm.constrained
    free = dm.free
    ub = allvals[fixed]
    A = system.A
    Aff = A[free][:, free].tocsr()
    Ffree = system.F[free] - A[free][:, fixed] @ ub
    if check_spd and Aff.shape[0] and Aff.shape[0] <= 4000:
        try:
            cholesky_factor(Aff)
        except NotSPDError as exc:
            raise NotSPDError(f"reduced system is not SPD: {exc}") from None
    return ReducedSystem(Aff, Ffree, free, fixed, ub, system)
